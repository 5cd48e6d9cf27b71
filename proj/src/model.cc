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

#include "rnnt/model.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <thread>

#include "rnnt/errors.h"
#include "rnnt/log_math.h"

namespace rnnt {

using ag::Mat;
using ag::Tape;
using ag::Var;

namespace {

constexpr double kMaskedScore = -1e9;
constexpr std::string_view kMagic("RNNTMDL\0", 8);

std::string LayerName(int layer, std::string_view suffix) {
  return "enc" + std::to_string(layer) + "." + std::string(suffix);
}

}  // namespace

std::string_view EncoderKindName(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kRecurrentUni: return "recurrent-uni";
    case EncoderKind::kRecurrentBi: return "recurrent-bi";
    case EncoderKind::kWindowedAttention: return "windowed-attention";
  }
  return "?";
}

EncoderKind ParseEncoderKind(std::string_view name) {
  for (EncoderKind k : {EncoderKind::kRecurrentUni, EncoderKind::kRecurrentBi,
                        EncoderKind::kWindowedAttention}) {
    if (EncoderKindName(k) == name) return k;
  }
  Fail(ErrorKind::kConfig, "unknown encoder kind '", name, "'");
}

std::string_view EncodeModeName(EncodeMode mode) {
  return mode == EncodeMode::kStreaming ? "streaming" : "non-streaming";
}

EncodeMode ParseEncodeMode(std::string_view name) {
  if (name == "streaming") return EncodeMode::kStreaming;
  if (name == "non-streaming") return EncodeMode::kNonStreaming;
  Fail(ErrorKind::kConfig, "unknown mode '", name, "'");
}

std::string_view ObjectiveName(Objective objective) {
  return objective == Objective::kMarginal ? "marginal" : "fixed";
}

Objective ParseObjective(std::string_view name) {
  if (name == "marginal") return Objective::kMarginal;
  if (name == "fixed" || name == "fixed-alignment") {
    return Objective::kFixedAlignment;
  }
  Fail(ErrorKind::kConfig, "unknown objective '", name, "'");
}

nlohmann::json ModelConfigToJson(const ModelConfig &c) {
  return {{"input_dim", c.input_dim},
          {"enc_kind", EncoderKindName(c.enc_kind)},
          {"enc_layers", c.enc_layers},
          {"enc_dim", c.enc_dim},
          {"attention_window", c.attention_window},
          {"subsample_factor", c.subsample_factor},
          {"pred_dim", c.pred_dim},
          {"joint_dim", c.joint_dim},
          {"vocab", c.vocab},
          {"seed", c.seed}};
}

ModelConfig ModelConfigFromJson(const nlohmann::json &j) {
  if (!j.is_object()) Fail(ErrorKind::kConfig, "model config must be an object");
  ModelConfig c;
  const nlohmann::json known = ModelConfigToJson(c);
  for (const auto &[key, value] : j.items()) {
    if (!known.contains(key)) {
      Fail(ErrorKind::kConfig, "unknown model config key '", key, "'");
    }
  }
  try {
    c.input_dim = j.value("input_dim", c.input_dim);
    c.enc_kind = ParseEncoderKind(
        j.value("enc_kind", std::string(EncoderKindName(c.enc_kind))));
    c.enc_layers = j.value("enc_layers", c.enc_layers);
    c.enc_dim = j.value("enc_dim", c.enc_dim);
    c.attention_window = j.value("attention_window", c.attention_window);
    c.subsample_factor = j.value("subsample_factor", c.subsample_factor);
    c.pred_dim = j.value("pred_dim", c.pred_dim);
    c.joint_dim = j.value("joint_dim", c.joint_dim);
    c.vocab = j.value("vocab", c.vocab);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kConfig, "bad model config: ", e.what());
  }
  return c;
}

void ValidateModelConfig(const ModelConfig &c) {
  auto require = [](bool ok, const char *field, const char *what) {
    if (!ok) Fail(ErrorKind::kConfig, field, " ", what);
  };
  require(c.input_dim >= 1, "input_dim", "must be >= 1");
  require(c.enc_layers >= 1, "enc_layers", "must be >= 1");
  require(c.enc_dim >= 1, "enc_dim", "must be >= 1");
  require(c.enc_kind != EncoderKind::kRecurrentBi || c.enc_dim % 2 == 0,
          "enc_dim", "must be even for the bidirectional encoder");
  require(c.attention_window >= 1, "attention_window", "must be >= 1");
  require(c.subsample_factor >= 1, "subsample_factor", "must be >= 1");
  require(c.pred_dim >= 1, "pred_dim", "must be >= 1");
  require(c.joint_dim >= 1, "joint_dim", "must be >= 1");
  require(c.vocab.size() >= 2, "vocab", "needs a label and blank");
  require(c.vocab.back() == "<blank>", "vocab", "must end with <blank>");
  std::set<std::string> unique(c.vocab.begin(), c.vocab.end());
  require(unique.size() == c.vocab.size(), "vocab", "has duplicate tokens");
}

EncoderState InitialEncoderState(const ModelConfig &c) {
  EncoderState s;
  s.pending = Mat::Zero(c.subsample_factor - 1, c.input_dim);
  if (c.enc_kind == EncoderKind::kRecurrentBi) return s;
  for (int l = 0; l < c.enc_layers; ++l) {
    if (c.enc_kind == EncoderKind::kRecurrentUni) {
      s.carry.push_back(Mat::Zero(1, c.enc_dim));
    } else {
      s.carry.push_back(Mat::Zero(c.attention_window - 1, c.enc_dim));
      s.valid.push_back(0);
    }
  }
  return s;
}

namespace {

nlohmann::json MatToJson(const Mat &m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Mat MatFromJson(const nlohmann::json &j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto &data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows) {
    Fail(ErrorKind::kState, "matrix shape does not match its data");
  }
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = data[r].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      Fail(ErrorKind::kState, "ragged matrix row ", r);
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

}  // namespace

nlohmann::json EncoderStateToJson(const EncoderState &s) {
  nlohmann::json carry = nlohmann::json::array();
  for (const Mat &m : s.carry) carry.push_back(MatToJson(m));
  return {{"frames_seen", s.frames_seen},
          {"pending", MatToJson(s.pending)},
          {"carry", carry},
          {"valid", s.valid}};
}

EncoderState EncoderStateFromJson(const nlohmann::json &j) {
  try {
    EncoderState s;
    s.frames_seen = j.at("frames_seen").get<std::int64_t>();
    s.pending = MatFromJson(j.at("pending"));
    for (const auto &m : j.at("carry")) s.carry.push_back(MatFromJson(m));
    s.valid = j.at("valid").get<std::vector<int>>();
    return s;
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kState, "bad encoder state: ", e.what());
  }
}

void CheckEncoderState(const ModelConfig &c, const EncoderState &s) {
  const EncoderState ref = InitialEncoderState(c);
  auto same_shape = [](const Mat &a, const Mat &b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
  };
  if (s.frames_seen < 0) Fail(ErrorKind::kState, "negative frame counter");
  if (!same_shape(s.pending, ref.pending)) {
    Fail(ErrorKind::kState, "pending frames are ", s.pending.rows(), "x",
         s.pending.cols(), ", expected ", ref.pending.rows(), "x",
         ref.pending.cols());
  }
  if (s.carry.size() != ref.carry.size() || s.valid.size() != ref.valid.size()) {
    Fail(ErrorKind::kState, "state has ", s.carry.size(),
         " layers, config expects ", ref.carry.size());
  }
  for (std::size_t l = 0; l < s.carry.size(); ++l) {
    if (!same_shape(s.carry[l], ref.carry[l])) {
      Fail(ErrorKind::kState, "layer ", l, " carry is ", s.carry[l].rows(),
           "x", s.carry[l].cols(), ", expected ", ref.carry[l].rows(), "x",
           ref.carry[l].cols());
    }
  }
  for (int v : s.valid) {
    if (v < 0 || v > c.attention_window - 1) {
      Fail(ErrorKind::kState, "attention context count ", v, " out of range");
    }
  }
}

ParamLayout ModelLayout(const ModelConfig &c) {
  ValidateModelConfig(c);
  ParamLayout layout;
  auto add_gru = [&](const std::string &prefix, int in, int h) {
    layout.Add(prefix + "w_ih", in, 3 * h);
    layout.Add(prefix + "b_ih", 1, 3 * h, ParamInit::kZero);
    layout.Add(prefix + "w_hh", h, 3 * h);
    layout.Add(prefix + "b_hh", 1, 3 * h, ParamInit::kZero);
  };
  const int stacked = c.subsample_factor * c.input_dim;
  const int D = c.enc_dim;
  switch (c.enc_kind) {
    case EncoderKind::kRecurrentUni:
      for (int l = 0; l < c.enc_layers; ++l) {
        add_gru(LayerName(l, ""), l == 0 ? stacked : D, D);
      }
      break;
    case EncoderKind::kRecurrentBi:
      for (int l = 0; l < c.enc_layers; ++l) {
        add_gru(LayerName(l, "fwd."), l == 0 ? stacked : D, D / 2);
        add_gru(LayerName(l, "bwd."), l == 0 ? stacked : D, D / 2);
      }
      break;
    case EncoderKind::kWindowedAttention:
      layout.Add("enc.in.w", stacked, D);
      layout.Add("enc.in.b", 1, D, ParamInit::kZero);
      for (int l = 0; l < c.enc_layers; ++l) {
        for (const char *w : {"wq", "wk", "wv", "wo"}) {
          layout.Add(LayerName(l, w), D, D);
        }
        layout.Add(LayerName(l, "rel"), 1, 2 * c.attention_window - 1,
                   ParamInit::kZero);
        layout.Add(LayerName(l, "w1"), D, 2 * D);
        layout.Add(LayerName(l, "b1"), 1, 2 * D, ParamInit::kZero);
        layout.Add(LayerName(l, "w2"), 2 * D, D);
        layout.Add(LayerName(l, "b2"), 1, D, ParamInit::kZero);
      }
      break;
  }
  const int S = c.num_symbols();
  layout.Add("pred.embed", S, c.pred_dim, ParamInit::kUniform, 1.0);
  add_gru("pred.", c.pred_dim, c.pred_dim);
  layout.Add("joint.enc", D, c.joint_dim);
  layout.Add("joint.pred", c.pred_dim, c.joint_dim);
  layout.Add("joint.b", 1, c.joint_dim, ParamInit::kZero);
  layout.Add("joint.out", c.joint_dim, S);
  layout.Add("joint.out_b", 1, S, ParamInit::kZero);
  return layout;
}

Parameters InitModel(const ModelConfig &config) {
  Parameters p;
  p.config = config;
  p.layout = ModelLayout(config);
  p.values = InitializeParams(p.layout, config.seed);
  return p;
}

int EncodedLength(const ModelConfig &config, int frames) {
  return (frames + config.subsample_factor - 1) / config.subsample_factor;
}

namespace {

// Binds named parameters of one model to one tape.
class Binder {
 public:
  Binder(Tape &tape, const Parameters &params, std::span<double> grads)
      : tape_(tape), params_(params), grads_(grads) {}

  Var operator()(std::string_view name) const {
    return BindParam(tape_, params_.layout, params_.values, grads_, name);
  }
  Tape &tape() const { return tape_; }
  const ModelConfig &config() const { return params_.config; }

 private:
  Tape &tape_;
  const Parameters &params_;
  std::span<double> grads_;
};

// Runs a GRU over the rows of `x`, starting from `h0`.
Var GruLayer(const Binder &bind, const std::string &prefix, const Var &x,
             const Mat &h0, Mat *h_last) {
  Var xp = AddRow(MatMul(x, bind(prefix + "w_ih")), bind(prefix + "b_ih"));
  Var w_hh = bind(prefix + "w_hh");
  Var b_hh = bind(prefix + "b_hh");
  Var h = bind.tape().Constant(h0);
  std::vector<Var> rows;
  rows.reserve(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    h = GruCell(SliceRows(xp, i, 1), h, w_hh, b_hh);
    rows.push_back(h);
  }
  if (h_last) *h_last = h.value();
  return ConcatRows(rows);
}

// Bias matrix gathered from a relative-position table; index -1 is masked.
Var RelativeBias(const Var &table, std::vector<int> index, Eigen::Index rows,
                 Eigen::Index cols) {
  Tape &tape = *table.tape();
  Mat value(rows, cols);
  const Mat &t = table.value();
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    value.data()[i] = index[i] >= 0 ? t(0, index[i]) : kMaskedScore;
  }
  const int it = table.id();
  return tape.Push(std::move(value), tape.requires_grad(it),
                   [it, index = std::move(index)](Tape &tp, int self) {
                     const Mat &g = tp.grad(self);
                     Mat &gt = tp.grad(it);
                     for (Eigen::Index i = 0; i < g.size(); ++i) {
                       if (index[i] >= 0) gt(0, index[i]) += g.data()[i];
                     }
                   });
}

// One windowed self-attention block. `ctx` holds the preceding inputs of this
// layer, of which the last `valid` rows are real.
Var AttentionLayer(const Binder &bind, int layer, const Var &h,
                   const Mat &ctx, int valid, EncodeMode mode, Mat *ctx_out,
                   int *valid_out) {
  Tape &tape = bind.tape();
  const int W = bind.config().attention_window;
  const int D = bind.config().enc_dim;
  const Eigen::Index n = h.rows();
  const Eigen::Index m0 = ctx.rows();
  Var keys = h;
  if (m0 > 0) {
    const Var parts[] = {tape.Constant(ctx), h};
    keys = ConcatRows(parts);
  }
  const Eigen::Index m = m0 + n;
  std::vector<int> index(static_cast<std::size_t>(n * m), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j < m0 - valid) continue;
      const Eigen::Index offset = (i + m0) - j;  // query minus key position
      const bool allowed = mode == EncodeMode::kStreaming
                               ? offset >= 0 && offset < W
                               : offset > -W && offset < W;
      if (allowed) index[i * m + j] = static_cast<int>(offset + W - 1);
    }
  }
  Var q = MatMul(h, bind(LayerName(layer, "wq")));
  Var k = MatMul(keys, bind(LayerName(layer, "wk")));
  Var v = MatMul(keys, bind(LayerName(layer, "wv")));
  Var scores = Scale(MatMulTransposed(q, k), 1.0 / std::sqrt(double(D)));
  Var bias = RelativeBias(bind(LayerName(layer, "rel")), std::move(index), n, m);
  Var attn = SoftmaxRows(Add(scores, bias));
  Var h1 = Add(h, MatMul(MatMul(attn, v), bind(LayerName(layer, "wo"))));
  Var ff = Relu(AddRow(MatMul(h1, bind(LayerName(layer, "w1"))),
                       bind(LayerName(layer, "b1"))));
  Var h2 = Add(h1, AddRow(MatMul(ff, bind(LayerName(layer, "w2"))),
                          bind(LayerName(layer, "b2"))));
  if (ctx_out) {
    const Mat &all = keys.value();
    const Eigen::Index keep = W - 1;
    Mat next = Mat::Zero(keep, D);
    const Eigen::Index take = std::min<Eigen::Index>(keep, m);
    if (take > 0) next.bottomRows(take) = all.bottomRows(take);
    *ctx_out = std::move(next);
    *valid_out = static_cast<int>(std::min<Eigen::Index>(keep, valid + n));
  }
  return h2;
}

// Causal frame stacking; see the header comment.
Mat StackFrames(const ModelConfig &c, const Mat &frames, EncoderState &state) {
  const int s = c.subsample_factor;
  const std::int64_t seen = state.frames_seen;
  const Eigen::Index T = frames.rows();
  Mat x(s - 1 + T, c.input_dim);
  if (s > 1) x.topRows(s - 1) = state.pending;
  if (T > 0) x.bottomRows(T) = frames;
  std::vector<std::int64_t> outputs;
  for (std::int64_t t = (seen + s - 1) / s * s; t < seen + T; t += s) {
    outputs.push_back(t);
  }
  Mat stacked(static_cast<Eigen::Index>(outputs.size()), s * c.input_dim);
  for (std::size_t o = 0; o < outputs.size(); ++o) {
    const Eigen::Index r0 = outputs[o] - seen;
    for (int k = 0; k < s; ++k) {
      stacked.block(o, k * c.input_dim, 1, c.input_dim) = x.row(r0 + k);
    }
  }
  if (s > 1) state.pending = x.bottomRows(s - 1);
  state.frames_seen = seen + T;
  return stacked;
}

Var EncodeOnTape(const Binder &bind, const Mat &frames, EncodeMode mode,
                 EncoderState &state) {
  const ModelConfig &c = bind.config();
  Tape &tape = bind.tape();
  if (frames.cols() != c.input_dim) {
    Fail(ErrorKind::kInput, "frames have dimension ", frames.cols(),
         ", model expects ", c.input_dim);
  }
  if (!frames.allFinite()) Fail(ErrorKind::kInput, "non-finite input frames");
  Mat stacked = StackFrames(c, frames, state);
  if (stacked.rows() == 0) return tape.Constant(Mat::Zero(0, c.enc_dim));
  Var x = tape.Constant(std::move(stacked));
  switch (c.enc_kind) {
    case EncoderKind::kRecurrentUni:
      for (int l = 0; l < c.enc_layers; ++l) {
        x = GruLayer(bind, LayerName(l, ""), x, state.carry[l], &state.carry[l]);
      }
      return x;
    case EncoderKind::kRecurrentBi: {
      const Mat zero = Mat::Zero(1, c.enc_dim / 2);
      for (int l = 0; l < c.enc_layers; ++l) {
        Var fwd = GruLayer(bind, LayerName(l, "fwd."), x, zero, nullptr);
        Var bwd = ReverseRows(
            GruLayer(bind, LayerName(l, "bwd."), ReverseRows(x), zero, nullptr));
        const Var parts[] = {fwd, bwd};
        x = ConcatCols(parts);
      }
      return x;
    }
    case EncoderKind::kWindowedAttention: {
      x = AddRow(MatMul(x, bind("enc.in.w")), bind("enc.in.b"));
      for (int l = 0; l < c.enc_layers; ++l) {
        const bool carry = mode == EncodeMode::kStreaming;
        Mat ctx = carry ? state.carry[l] : Mat::Zero(0, c.enc_dim);
        const int valid = carry ? state.valid[l] : 0;
        Mat ctx_out;
        int valid_out = 0;
        x = AttentionLayer(bind, l, x, ctx, valid, mode, &ctx_out, &valid_out);
        if (carry) {
          state.carry[l] = std::move(ctx_out);
          state.valid[l] = valid_out;
        }
      }
      return x;
    }
  }
  return x;
}

Var PredictionOnTape(const Binder &bind, const std::vector<int> &target) {
  const ModelConfig &c = bind.config();
  std::vector<int> inputs;
  inputs.reserve(target.size() + 1);
  inputs.push_back(c.blank());
  for (int y : target) {
    if (y < 0 || y >= c.blank()) {
      Fail(ErrorKind::kVocab, "target symbol ", y, " outside [0, ", c.blank(),
           ")");
    }
    inputs.push_back(y);
  }
  Var emb = GatherRows(bind("pred.embed"), inputs);
  return GruLayer(bind, "pred.", emb, Mat::Zero(1, c.pred_dim), nullptr);
}

// Everything needed to form joint logits: Z = tanh(ep_t + pp_u) for all
// nodes, then logits = Z * W + b.
Mat JointHidden(const Mat &ep, const Mat &pp) {
  const Eigen::Index T = ep.rows(), U1 = pp.rows(), J = ep.cols();
  Mat z(T * U1, J);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index u = 0; u < U1; ++u) {
      z.row(t * U1 + u) = (ep.row(t) + pp.row(u)).array().tanh();
    }
  }
  return z;
}

Mat JointLogits(const Mat &z, const Mat &w, const Mat &b) {
  Mat logits = z * w;
  logits.rowwise() += b.row(0);
  return logits;
}

// Fused joint + transducer loss. Returns a 1x1 node holding the loss.
Var JointLoss(const Var &ep, const Var &pp, const Var &w, const Var &b,
              const std::vector<int> &target, Objective objective,
              const AlignmentPath &path) {
  Tape &tape = *ep.tape();
  const Eigen::Index T = ep.rows();
  const Eigen::Index U1 = pp.rows();
  const int S = static_cast<int>(w.cols());
  auto z = std::make_shared<Mat>(JointHidden(ep.value(), pp.value()));
  Mat logits = JointLogits(*z, w.value(), b.value());
  if (!logits.allFinite()) {
    Fail(ErrorKind::kDivergence, "non-finite joint logits (max |logit| ",
         logits.cwiseAbs().maxCoeff(), ")");
  }
  LogitLattice lattice(static_cast<int>(T), target, S - 1,
                       std::vector<double>(logits.data(),
                                           logits.data() + logits.size()));
  auto result = std::make_shared<LossResult>(
      objective == Objective::kMarginal
          ? MarginalLossAndGrad(lattice, static_cast<int>(target.size()))
          : FixedAlignmentLossAndGrad(lattice, path));
  if (!std::isfinite(result->loss)) {
    Fail(ErrorKind::kDivergence, "non-finite loss ", result->loss);
  }
  Mat value(1, 1);
  value(0, 0) = result->loss;
  const int ie = ep.id(), ip = pp.id(), iw = w.id(), ib = b.id();
  const bool needs = tape.requires_grad(ie) || tape.requires_grad(ip) ||
                     tape.requires_grad(iw) || tape.requires_grad(ib);
  return tape.Push(
      std::move(value), needs,
      [=](Tape &t, int self) {
        const double scale = t.grad(self)(0, 0);
        Eigen::Map<const Mat> g_raw(result->grad.data(), T * U1, S);
        const Mat g = scale * g_raw;
        if (t.requires_grad(iw)) t.grad(iw).noalias() += z->transpose() * g;
        if (t.requires_grad(ib)) t.grad(ib) += g.colwise().sum();
        Mat dz = (g * t.value(iw).transpose()).array() *
                 (1.0 - z->array().square());
        if (t.requires_grad(ie)) {
          Mat &ge = t.grad(ie);
          for (Eigen::Index tt = 0; tt < T; ++tt) {
            ge.row(tt) += dz.middleRows(tt * U1, U1).colwise().sum();
          }
        }
        if (t.requires_grad(ip)) {
          Mat &gp = t.grad(ip);
          for (Eigen::Index tt = 0; tt < T; ++tt) {
            gp += dz.middleRows(tt * U1, U1);
          }
        }
      });
}

Var EncoderProjectionOnTape(const Binder &bind, const Var &enc) {
  return AddRow(MatMul(enc, bind("joint.enc")), bind("joint.b"));
}

double ExampleLossAndGrad(const Parameters &params, const TrainExample &ex,
                          Objective objective, EncodeMode mode,
                          std::span<double> grad) {
  Tape tape(!grad.empty());
  Binder bind(tape, params, grad);
  EncoderState state = InitialEncoderState(params.config);
  Var enc = EncodeOnTape(bind, *ex.frames, mode, state);
  if (enc.rows() == 0) Fail(ErrorKind::kInput, "example has no frames");
  Var ep = EncoderProjectionOnTape(bind, enc);
  Var pp = MatMul(PredictionOnTape(bind, ex.target), bind("joint.pred"));
  Var loss = JointLoss(ep, pp, bind("joint.out"), bind("joint.out_b"),
                       ex.target, objective, ex.path);
  if (!grad.empty()) tape.Backward(loss);
  return loss.value()(0, 0);
}

void CheckMode(const ModelConfig &c, EncodeMode mode) {
  if (mode == EncodeMode::kStreaming &&
      c.enc_kind == EncoderKind::kRecurrentBi) {
    Fail(ErrorKind::kMode,
         "the recurrent-bi encoder cannot run in streaming mode");
  }
}

}  // namespace

EncodeResult Encode(const Parameters &params, const Mat &frames,
                    EncodeMode mode, const std::optional<EncoderState> &state) {
  const ModelConfig &c = params.config;
  CheckMode(c, mode);
  if (state && mode == EncodeMode::kNonStreaming) {
    Fail(ErrorKind::kMode, "non-streaming encoding does not take a state");
  }
  EncodeResult out;
  if (state) {
    CheckEncoderState(c, *state);
    out.state = *state;
  } else {
    out.state = InitialEncoderState(c);
  }
  Tape tape(false);
  Binder bind(tape, params, {});
  out.encodings = EncodeOnTape(bind, frames, mode, out.state).value();
  return out;
}

Mat PredictionOutputs(const Parameters &params, const std::vector<int> &target) {
  Tape tape(false);
  Binder bind(tape, params, {});
  return PredictionOnTape(bind, target).value();
}

namespace {

Mat PredictionCell(const Parameters &p, const Mat &hidden, int symbol) {
  const Mat emb = ParamValue(p.layout, p.values, "pred.embed").row(symbol);
  const Mat xp = emb * ParamValue(p.layout, p.values, "pred.w_ih") +
                 ParamValue(p.layout, p.values, "pred.b_ih");
  return ag::GruCellValue(xp, hidden, ParamValue(p.layout, p.values, "pred.w_hh"),
                          ParamValue(p.layout, p.values, "pred.b_hh"));
}

}  // namespace

Mat PredictionStart(const Parameters &params) {
  return PredictionCell(params, Mat::Zero(1, params.config.pred_dim),
                        params.config.blank());
}

Mat PredictionStep(const Parameters &params, const Mat &hidden, int symbol) {
  if (symbol < 0 || symbol >= params.config.blank()) {
    Fail(ErrorKind::kVocab, "cannot feed symbol ", symbol,
         " to the prediction network");
  }
  return PredictionCell(params, hidden, symbol);
}

Mat EncoderProjection(const Parameters &params, const Mat &encodings) {
  Mat out = encodings * ParamValue(params.layout, params.values, "joint.enc");
  out.rowwise() += ParamValue(params.layout, params.values, "joint.b").row(0);
  return out;
}

Mat PredictionProjection(const Parameters &params, const Mat &hidden) {
  return hidden * ParamValue(params.layout, params.values, "joint.pred");
}

void JointLogProbs(const Parameters &params, std::span<const double> enc_proj,
                   std::span<const double> pred_proj, std::span<double> out) {
  const ParamInfo &w = params.layout.Get("joint.out");
  const ParamInfo &b = params.layout.Get("joint.out_b");
  const int J = w.rows, S = w.cols;
  Eigen::Map<const Eigen::RowVectorXd> e(enc_proj.data(), J);
  Eigen::Map<const Eigen::RowVectorXd> p(pred_proj.data(), J);
  Eigen::Map<const Mat> wm(params.values.data() + w.offset, J, S);
  Eigen::Map<const Eigen::RowVectorXd> bm(params.values.data() + b.offset, S);
  const Eigen::RowVectorXd z = (e + p).array().tanh();
  const Eigen::RowVectorXd logits = z * wm + bm;
  LogSoftmaxInto<double>({logits.data(), static_cast<std::size_t>(S)}, out);
}

LogitLattice JointLattice(const Parameters &params, const Mat &encodings,
                          const std::vector<int> &target) {
  const ModelConfig &c = params.config;
  for (int y : target) {
    if (y < 0 || y >= c.blank()) {
      Fail(ErrorKind::kVocab, "target symbol ", y, " outside [0, ", c.blank(),
           ")");
    }
  }
  const Mat ep = EncoderProjection(params, encodings);
  const Mat pp = PredictionProjection(params, PredictionOutputs(params, target));
  const Mat logits =
      JointLogits(JointHidden(ep, pp),
                  ParamValue(params.layout, params.values, "joint.out"),
                  ParamValue(params.layout, params.values, "joint.out_b"));
  return LogitLattice(static_cast<int>(encodings.rows()), target,
                      c.num_symbols() - 1,
                      std::vector<double>(logits.data(),
                                          logits.data() + logits.size()));
}

double BatchLossAndGrad(const Parameters &params,
                        std::span<const TrainExample> batch,
                        Objective objective, EncodeMode mode,
                        std::vector<double> *grad, int threads) {
  CheckMode(params.config, mode);
  if (batch.empty()) Fail(ErrorKind::kInput, "empty batch");
  const std::size_t P = params.values.size();
  const std::size_t n = batch.size();
  std::vector<double> losses(n, 0.0);
  std::vector<std::vector<double>> grads(grad ? n : 0);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t i) {
    try {
      std::span<double> g;
      if (grad) {
        grads[i].assign(P, 0.0);
        g = grads[i];
      }
      losses[i] = ExampleLossAndGrad(params, batch[i], objective, mode, g);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) work(i);
      });
    }
    for (auto &th : pool) th.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error &e) {
      if (e.kind() == ErrorKind::kDivergence) {
        Fail(ErrorKind::kDivergence, "batch example ", i, " (",
             batch[i].frames->rows(), " frames, ", batch[i].target.size(),
             " labels): ", e.what());
      }
      throw;
    }
  }
  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= static_cast<double>(n);
  if (grad) {
    grad->assign(P, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < P; ++k) (*grad)[k] += grads[i][k];
    }
    for (double &g : *grad) g /= static_cast<double>(n);
  }
  return mean;
}

double TrainStep(Parameters &params, std::span<const TrainExample> batch,
                 const TrainOptions &options, AdamState &optimizer) {
  std::vector<double> grad;
  const double loss = BatchLossAndGrad(params, batch, options.objective,
                                       options.mode, &grad, options.threads);
  try {
    AdamUpdate(options.adam, optimizer, params.values, grad);
  } catch (const Error &e) {
    Fail(ErrorKind::kDivergence, "at optimizer step ", optimizer.step,
         " with batch loss ", loss, ": ", e.what());
  }
  return loss;
}

void SaveModel(const Parameters &params, const std::string &path,
               const nlohmann::json &run_config) {
  nlohmann::json header = {{"format", "rnnt-model"},
                           {"version", kModelFormatVersion},
                           {"config", ModelConfigToJson(params.config)},
                           {"param_count", params.values.size()}};
  if (!run_config.is_null()) header["run_config"] = run_config;
  WriteParamFile(path, kMagic, kModelFormatVersion, header, params.values);
}

Parameters LoadModel(const std::string &path) {
  ParamFile file = ReadParamFile(path, kMagic, kModelFormatVersion, "model");
  Parameters p;
  try {
    p.config = ModelConfigFromJson(file.header.at("config"));
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kLoad, "corrupt model header: ", e.what());
  } catch (const Error &e) {
    Fail(ErrorKind::kLoad, "corrupt model config: ", e.what());
  }
  p.layout = ModelLayout(p.config);
  if (file.values.size() != p.layout.size()) {
    Fail(ErrorKind::kLoad, "model file holds ", file.values.size(),
         " parameters, config implies ", p.layout.size());
  }
  p.values = std::move(file.values);
  return p;
}

}  // namespace rnnt
