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

// Minimal reverse-mode differentiation over dense double matrices.
//
// A Tape records every operation as a node holding its value; Backward() walks
// the nodes in reverse creation order. Parameter leaves are bound to slices of
// a flat parameter vector and flush their gradients into a flat gradient
// vector at the end of Backward(). A tape created with record = false keeps
// values only and is used for inference.

#ifndef RNNT_AUTOGRAD_H_
#define RNNT_AUTOGRAD_H_

#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace rnnt::ag {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::RowMajor>;

class Tape;

class Var {
 public:
  Var() = default;

  const Mat &value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape *tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape *tape, int id) : tape_(tape), id_(id) {}

  Tape *tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape &, int self)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  bool recording() const { return record_; }

  Var Constant(Mat value);
  // Leaf view of rows x cols parameters starting at `values`. When
  // `grad_out` is non-null the accumulated gradient is added there by
  // Backward(). Repeated calls with the same `values` return the same leaf.
  Var Param(const double *values, double *grad_out, int rows, int cols);

  // Records a node. `backward` may be empty for nodes without inputs that
  // need gradients.
  Var Push(Mat value, bool requires_grad, BackwardFn backward);

  const Mat &value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  // Gradient buffer for node `id`, zero-initialized on first access.
  Mat &grad(int id);

  void Backward(const Var &scalar);
  void Backward(const Var &out, const Mat &seed);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };
  struct ParamLeaf {
    int id;
    double *grad_out;
  };

  bool record_;
  std::deque<Node> nodes_;
  std::vector<ParamLeaf> params_;
  std::unordered_map<const double *, int> param_ids_;
};

// Elementwise and linear-algebra operations. All inputs must live on the same
// tape.
Var MatMul(const Var &a, const Var &b);
Var MatMulTransposed(const Var &a, const Var &b);  // a * b^T
Var Add(const Var &a, const Var &b);
Var Sub(const Var &a, const Var &b);
Var Mul(const Var &a, const Var &b);
Var AddRow(const Var &a, const Var &row);  // broadcast a 1 x n row
Var AddConstant(const Var &a, const Mat &c);
Var Scale(const Var &a, double s);
Var Tanh(const Var &a);
Var Sigmoid(const Var &a);
Var Relu(const Var &a);
Var SoftmaxRows(const Var &a);
Var ConcatCols(std::span<const Var> parts);
Var ConcatRows(std::span<const Var> parts);
Var SliceRows(const Var &a, Eigen::Index start, Eigen::Index count);
Var SliceCols(const Var &a, Eigen::Index start, Eigen::Index count);
// out.row(i) = a.row(index[i]); negative indices produce zero rows.
Var GatherRows(const Var &a, std::span<const int> index);
Var Sum(const Var &a);
// Reverses the row order.
Var ReverseRows(const Var &a);

// Fused GRU cell. `x_proj` is the 1 x 3H input projection (bias included) in
// [update | reset | candidate] order, `h` the 1 x H previous state, `w_hh` the
// H x 3H recurrent weights and `b_hh` their 1 x 3H bias.
Var GruCell(const Var &x_proj, const Var &h, const Var &w_hh, const Var &b_hh);

// Forward-only GRU cell on plain matrices, numerically identical to GruCell.
Mat GruCellValue(const Mat &x_proj, const Mat &h, const Mat &w_hh,
                 const Mat &b_hh);

}  // namespace rnnt::ag

#endif  // RNNT_AUTOGRAD_H_
