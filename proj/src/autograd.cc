// Copyright 2026 The RNNT Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rnnt/autograd.h"

#include <cassert>
#include <utility>

#include "rnnt/errors.h"

namespace rnnt::ag {

const Mat &Var::value() const { return tape_->value(id_); }

Var Tape::Constant(Mat value) { return Push(std::move(value), false, {}); }

Var Tape::Param(const double *values, double *grad_out, int rows, int cols) {
  auto it = param_ids_.find(values);
  if (it != param_ids_.end()) return Var(this, it->second);
  Mat value = Eigen::Map<const Mat>(values, rows, cols);
  const bool trainable = record_ && grad_out != nullptr;
  Var v = Push(std::move(value), trainable, {});
  param_ids_.emplace(values, v.id());
  if (trainable) params_.push_back({v.id(), grad_out});
  return v;
}

Var Tape::Push(Mat value, bool requires_grad, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = record_ && requires_grad;
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Mat &Tape::grad(int id) {
  Node &n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::Backward(const Var &scalar) {
  if (scalar.rows() != 1 || scalar.cols() != 1) {
    Fail(ErrorKind::kInput, "Backward(scalar) called on a ",
         scalar.rows(), "x", scalar.cols(), " value");
  }
  Backward(scalar, Mat::Ones(1, 1));
}

void Tape::Backward(const Var &out, const Mat &seed) {
  if (!record_) Fail(ErrorKind::kInput, "Backward on a non-recording tape");
  grad(out.id()) += seed;
  for (int id = out.id(); id >= 0; --id) {
    Node &n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, id);
  }
  for (const ParamLeaf &leaf : params_) {
    Node &n = nodes_[leaf.id];
    if (!n.has_grad) continue;
    Eigen::Map<Mat>(leaf.grad_out, n.value.rows(), n.value.cols()) += n.grad;
  }
}

namespace {

Tape &TapeOf(const Var &a) {
  assert(a.valid());
  return *a.tape();
}

bool NeedsGrad(const Var &a) { return a.tape()->requires_grad(a.id()); }

}  // namespace

Var MatMul(const Var &a, const Var &b) {
  Tape &tape = TapeOf(a);
  Mat value = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return tape.Push(std::move(value), NeedsGrad(a) || NeedsGrad(b),
                   [ia, ib](Tape &t, int self) {
                     const Mat &g = t.grad(self);
                     if (t.requires_grad(ia)) {
                       t.grad(ia).noalias() += g * t.value(ib).transpose();
                     }
                     if (t.requires_grad(ib)) {
                       t.grad(ib).noalias() += t.value(ia).transpose() * g;
                     }
                   });
}

Var MatMulTransposed(const Var &a, const Var &b) {
  Tape &tape = TapeOf(a);
  Mat value = a.value() * b.value().transpose();
  const int ia = a.id(), ib = b.id();
  return tape.Push(std::move(value), NeedsGrad(a) || NeedsGrad(b),
                   [ia, ib](Tape &t, int self) {
                     const Mat &g = t.grad(self);
                     if (t.requires_grad(ia)) {
                       t.grad(ia).noalias() += g * t.value(ib);
                     }
                     if (t.requires_grad(ib)) {
                       t.grad(ib).noalias() += g.transpose() * t.value(ia);
                     }
                   });
}

Var Add(const Var &a, const Var &b) {
  Tape &tape = TapeOf(a);
  const int ia = a.id(), ib = b.id();
  return tape.Push(a.value() + b.value(), NeedsGrad(a) || NeedsGrad(b),
                   [ia, ib](Tape &t, int self) {
                     const Mat &g = t.grad(self);
                     if (t.requires_grad(ia)) t.grad(ia) += g;
                     if (t.requires_grad(ib)) t.grad(ib) += g;
                   });
}

Var Sub(const Var &a, const Var &b) {
  Tape &tape = TapeOf(a);
  const int ia = a.id(), ib = b.id();
  return tape.Push(a.value() - b.value(), NeedsGrad(a) || NeedsGrad(b),
                   [ia, ib](Tape &t, int self) {
                     const Mat &g = t.grad(self);
                     if (t.requires_grad(ia)) t.grad(ia) += g;
                     if (t.requires_grad(ib)) t.grad(ib) -= g;
                   });
}

Var Mul(const Var &a, const Var &b) {
  Tape &tape = TapeOf(a);
  const int ia = a.id(), ib = b.id();
  return tape.Push(a.value().cwiseProduct(b.value()),
                   NeedsGrad(a) || NeedsGrad(b), [ia, ib](Tape &t, int self) {
                     const Mat &g = t.grad(self);
                     if (t.requires_grad(ia)) {
                       t.grad(ia) += g.cwiseProduct(t.value(ib));
                     }
                     if (t.requires_grad(ib)) {
                       t.grad(ib) += g.cwiseProduct(t.value(ia));
                     }
                   });
}

Var AddRow(const Var &a, const Var &row) {
  Tape &tape = TapeOf(a);
  Mat value = a.value().rowwise() + row.value().row(0);
  const int ia = a.id(), ir = row.id();
  return tape.Push(std::move(value), NeedsGrad(a) || NeedsGrad(row),
                   [ia, ir](Tape &t, int self) {
                     const Mat &g = t.grad(self);
                     if (t.requires_grad(ia)) t.grad(ia) += g;
                     if (t.requires_grad(ir)) t.grad(ir) += g.colwise().sum();
                   });
}

Var AddConstant(const Var &a, const Mat &c) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  return tape.Push(a.value() + c, NeedsGrad(a), [ia](Tape &t, int self) {
    t.grad(ia) += t.grad(self);
  });
}

Var Scale(const Var &a, double s) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  return tape.Push(a.value() * s, NeedsGrad(a), [ia, s](Tape &t, int self) {
    t.grad(ia) += t.grad(self) * s;
  });
}

Var Tanh(const Var &a) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  return tape.Push(a.value().array().tanh().matrix(), NeedsGrad(a),
                   [ia](Tape &t, int self) {
                     const Mat &y = t.value(self);
                     t.grad(ia).array() +=
                         t.grad(self).array() * (1.0 - y.array().square());
                   });
}

Var Sigmoid(const Var &a) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  Mat value = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return tape.Push(std::move(value), NeedsGrad(a), [ia](Tape &t, int self) {
    const Mat &y = t.value(self);
    t.grad(ia).array() +=
        t.grad(self).array() * y.array() * (1.0 - y.array());
  });
}

Var Relu(const Var &a) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  return tape.Push(a.value().cwiseMax(0.0), NeedsGrad(a),
                   [ia](Tape &t, int self) {
                     const Mat &x = t.value(ia);
                     t.grad(ia).array() +=
                         (x.array() > 0.0).select(t.grad(self).array(), 0.0);
                   });
}

Var SoftmaxRows(const Var &a) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  Mat value = a.value();
  for (Eigen::Index r = 0; r < value.rows(); ++r) {
    const double m = value.row(r).maxCoeff();
    value.row(r) = (value.row(r).array() - m).exp().matrix();
    value.row(r) /= value.row(r).sum();
  }
  return tape.Push(std::move(value), NeedsGrad(a), [ia](Tape &t, int self) {
    const Mat &y = t.value(self);
    const Mat &g = t.grad(self);
    Eigen::VectorXd dot = (g.cwiseProduct(y)).rowwise().sum();
    Mat &ga = t.grad(ia);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      ga.row(r).array() += y.row(r).array() * (g.row(r).array() - dot(r));
    }
  });
}

Var ConcatCols(std::span<const Var> parts) {
  Tape &tape = TapeOf(parts.front());
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  bool needs = false;
  for (const Var &p : parts) {
    cols += p.cols();
    needs = needs || NeedsGrad(p);
  }
  Mat value(rows, cols);
  std::vector<int> ids;
  Eigen::Index c = 0;
  for (const Var &p : parts) {
    value.middleCols(c, p.cols()) = p.value();
    c += p.cols();
    ids.push_back(p.id());
  }
  return tape.Push(std::move(value), needs, [ids](Tape &t, int self) {
    const Mat &g = t.grad(self);
    Eigen::Index c = 0;
    for (int id : ids) {
      const Eigen::Index w = t.value(id).cols();
      if (t.requires_grad(id)) t.grad(id) += g.middleCols(c, w);
      c += w;
    }
  });
}

Var ConcatRows(std::span<const Var> parts) {
  Tape &tape = TapeOf(parts.front());
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  bool needs = false;
  for (const Var &p : parts) {
    rows += p.rows();
    needs = needs || NeedsGrad(p);
  }
  Mat value(rows, cols);
  std::vector<int> ids;
  Eigen::Index r = 0;
  for (const Var &p : parts) {
    value.middleRows(r, p.rows()) = p.value();
    r += p.rows();
    ids.push_back(p.id());
  }
  return tape.Push(std::move(value), needs, [ids](Tape &t, int self) {
    const Mat &g = t.grad(self);
    Eigen::Index r = 0;
    for (int id : ids) {
      const Eigen::Index h = t.value(id).rows();
      if (t.requires_grad(id)) t.grad(id) += g.middleRows(r, h);
      r += h;
    }
  });
}

Var SliceRows(const Var &a, Eigen::Index start, Eigen::Index count) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  return tape.Push(a.value().middleRows(start, count), NeedsGrad(a),
                   [ia, start, count](Tape &t, int self) {
                     t.grad(ia).middleRows(start, count) += t.grad(self);
                   });
}

Var SliceCols(const Var &a, Eigen::Index start, Eigen::Index count) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  return tape.Push(a.value().middleCols(start, count), NeedsGrad(a),
                   [ia, start, count](Tape &t, int self) {
                     t.grad(ia).middleCols(start, count) += t.grad(self);
                   });
}

Var GatherRows(const Var &a, std::span<const int> index) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  Mat value = Mat::Zero(static_cast<Eigen::Index>(index.size()), a.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= 0) value.row(i) = a.value().row(index[i]);
  }
  std::vector<int> idx(index.begin(), index.end());
  return tape.Push(std::move(value), NeedsGrad(a),
                   [ia, idx = std::move(idx)](Tape &t, int self) {
                     const Mat &g = t.grad(self);
                     Mat &ga = t.grad(ia);
                     for (std::size_t i = 0; i < idx.size(); ++i) {
                       if (idx[i] >= 0) ga.row(idx[i]) += g.row(i);
                     }
                   });
}

Var Sum(const Var &a) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  Mat value(1, 1);
  value(0, 0) = a.value().sum();
  return tape.Push(std::move(value), NeedsGrad(a), [ia](Tape &t, int self) {
    t.grad(ia).array() += t.grad(self)(0, 0);
  });
}

Var ReverseRows(const Var &a) {
  Tape &tape = TapeOf(a);
  const int ia = a.id();
  Mat value = a.value().colwise().reverse();
  return tape.Push(std::move(value), NeedsGrad(a), [ia](Tape &t, int self) {
    t.grad(ia) += t.grad(self).colwise().reverse();
  });
}

namespace {

struct GruParts {
  Mat hp;  // h * w_hh + b_hh
  Mat z, r, n;
};

GruParts GruForward(const Mat &x, const Mat &h, const Mat &w_hh,
                    const Mat &b_hh) {
  const Eigen::Index H = h.cols();
  GruParts p;
  p.hp = h * w_hh + b_hh;
  auto sigmoid = [](const Mat &v) {
    return Mat((1.0 / (1.0 + (-v.array()).exp())).matrix());
  };
  p.z = sigmoid(x.leftCols(H) + p.hp.leftCols(H));
  p.r = sigmoid(x.middleCols(H, H) + p.hp.middleCols(H, H));
  p.n = (x.rightCols(H) + p.r.cwiseProduct(p.hp.rightCols(H)))
            .array()
            .tanh()
            .matrix();
  return p;
}

}  // namespace

Mat GruCellValue(const Mat &x_proj, const Mat &h, const Mat &w_hh,
                 const Mat &b_hh) {
  GruParts p = GruForward(x_proj, h, w_hh, b_hh);
  return p.n + p.z.cwiseProduct(h - p.n);
}

Var GruCell(const Var &x_proj, const Var &h, const Var &w_hh,
            const Var &b_hh) {
  Tape &tape = TapeOf(h);
  Mat value = GruCellValue(x_proj.value(), h.value(), w_hh.value(),
                           b_hh.value());
  const int ix = x_proj.id(), ih = h.id(), iw = w_hh.id(), ib = b_hh.id();
  const bool needs = NeedsGrad(x_proj) || NeedsGrad(h) || NeedsGrad(w_hh) ||
                     NeedsGrad(b_hh);
  return tape.Push(
      std::move(value), needs, [ix, ih, iw, ib](Tape &t, int self) {
        const Mat &hv = t.value(ih);
        const Eigen::Index H = hv.cols();
        GruParts p = GruForward(t.value(ix), hv, t.value(iw), t.value(ib));
        const Mat &g = t.grad(self);
        Mat dz = g.cwiseProduct(hv - p.n);
        Mat dn = g.cwiseProduct((1.0 - p.z.array()).matrix());
        Mat dn_pre =
            dn.cwiseProduct((1.0 - p.n.array().square()).matrix());
        Mat dr = dn_pre.cwiseProduct(p.hp.rightCols(H));
        Mat dr_pre = dr.cwiseProduct(
            (p.r.array() * (1.0 - p.r.array())).matrix());
        Mat dz_pre = dz.cwiseProduct(
            (p.z.array() * (1.0 - p.z.array())).matrix());
        Mat dhp(1, 3 * H);
        dhp << dz_pre, dr_pre, dn_pre.cwiseProduct(p.r);
        if (t.requires_grad(ix)) {
          Mat &gx = t.grad(ix);
          gx.leftCols(H) += dz_pre;
          gx.middleCols(H, H) += dr_pre;
          gx.rightCols(H) += dn_pre;
        }
        if (t.requires_grad(ih)) {
          t.grad(ih) += g.cwiseProduct(p.z) + dhp * t.value(iw).transpose();
        }
        if (t.requires_grad(iw)) t.grad(iw).noalias() += hv.transpose() * dhp;
        if (t.requires_grad(ib)) t.grad(ib) += dhp;
      });
}

}  // namespace rnnt::ag
