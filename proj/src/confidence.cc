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

#include "rnnt/confidence.h"

#include <cmath>
#include <memory>

#include "rnnt/errors.h"
#include "rnnt/log_math.h"
#include "rnnt/metrics.h"

namespace rnnt {

using ag::Mat;
using ag::Tape;
using ag::Var;

namespace {

constexpr std::string_view kHeadMagic("RNNTCNF\0", 8);
constexpr std::uint32_t kHeadFormatVersion = 1;

std::string LayerName(int l, const char *what) {
  return "conf" + std::to_string(l) + "." + what;
}

}  // namespace

std::string_view ConfidenceWindowName(ConfidenceWindow window) {
  return window == ConfidenceWindow::kCentered ? "centered" : "streaming";
}

ConfidenceWindow ParseConfidenceWindow(std::string_view name) {
  if (name == "centered") return ConfidenceWindow::kCentered;
  if (name == "streaming") return ConfidenceWindow::kStreaming;
  Fail(ErrorKind::kConfig, "unknown confidence window '", name, "'");
}

nlohmann::json ConfidenceConfigToJson(const ConfidenceConfig &c) {
  return {{"enc_dim", c.enc_dim},
          {"num_symbols", c.num_symbols},
          {"embed_dim", c.embed_dim},
          {"model_dim", c.model_dim},
          {"layers", c.layers},
          {"window", c.window},
          {"window_kind", std::string(ConfidenceWindowName(c.window_kind))},
          {"seed", c.seed}};
}

ConfidenceConfig ConfidenceConfigFromJson(const nlohmann::json &j) {
  if (!j.is_object()) {
    Fail(ErrorKind::kConfig, "confidence config must be an object");
  }
  ConfidenceConfig c;
  const nlohmann::json known = ConfidenceConfigToJson(c);
  for (const auto &[key, value] : j.items()) {
    if (!known.contains(key)) {
      Fail(ErrorKind::kConfig, "unknown confidence config key '", key, "'");
    }
  }
  try {
    c.enc_dim = j.value("enc_dim", c.enc_dim);
    c.num_symbols = j.value("num_symbols", c.num_symbols);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.model_dim = j.value("model_dim", c.model_dim);
    c.layers = j.value("layers", c.layers);
    c.window = j.value("window", c.window);
    c.window_kind = ParseConfidenceWindow(j.value(
        "window_kind", std::string(ConfidenceWindowName(c.window_kind))));
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kConfig, "bad confidence config: ", e.what());
  }
  return c;
}

void ValidateConfidenceConfig(const ConfidenceConfig &c) {
  auto require = [](bool ok, const char *what) {
    if (!ok) Fail(ErrorKind::kConfig, "confidence config: ", what);
  };
  require(c.enc_dim >= 1, "enc_dim must be >= 1");
  require(c.num_symbols >= 1, "num_symbols must be >= 1");
  require(c.embed_dim >= 1, "embed_dim must be >= 1");
  require(c.model_dim >= 1, "model_dim must be >= 1");
  require(c.layers >= 0, "layers must be >= 0");
  require(c.window >= 1, "window must be >= 1");
}

namespace {

ParamLayout HeadLayout(const ConfidenceConfig &c) {
  ParamLayout layout;
  const int d = c.model_dim;
  layout.Add("conf.embed", c.num_symbols, c.embed_dim, ParamInit::kUniform,
             0.5);
  layout.Add("conf.in.w", c.feature_dim(), d);
  layout.Add("conf.in.b", 1, d, ParamInit::kZero);
  layout.Add("conf.pos", c.window, d, ParamInit::kUniform, 0.1);
  for (int l = 0; l < c.layers; ++l) {
    for (const char *w : {"wq", "wk", "wv", "wo"}) {
      layout.Add(LayerName(l, w), d, d);
    }
    layout.Add(LayerName(l, "w1"), d, 2 * d);
    layout.Add(LayerName(l, "b1"), 1, 2 * d, ParamInit::kZero);
    layout.Add(LayerName(l, "w2"), 2 * d, d);
    layout.Add(LayerName(l, "b2"), 1, d, ParamInit::kZero);
  }
  layout.Add("conf.out.w", d, 1, ParamInit::kUniform, 0.05);
  layout.Add("conf.out.b", 1, 1, ParamInit::kZero);
  return layout;
}

}  // namespace

ConfidenceHead InitConfidenceHead(const ConfidenceConfig &config) {
  ValidateConfidenceConfig(config);
  ConfidenceHead head;
  head.config = config;
  head.layout = HeadLayout(config);
  head.values = InitializeParams(head.layout, config.seed);
  return head;
}

void SaveConfidenceHead(const ConfidenceHead &head, const std::string &path,
                        const nlohmann::json &run_config) {
  nlohmann::json header = {{"format", "rnnt-confidence-head"},
                           {"version", kHeadFormatVersion},
                           {"config", ConfidenceConfigToJson(head.config)},
                           {"param_count", head.values.size()}};
  if (!run_config.is_null()) header["run_config"] = run_config;
  WriteParamFile(path, kHeadMagic, kHeadFormatVersion, header, head.values);
}

ConfidenceHead LoadConfidenceHead(const std::string &path) {
  ParamFile file =
      ReadParamFile(path, kHeadMagic, kHeadFormatVersion, "confidence head");
  ConfidenceHead head;
  try {
    head.config = ConfidenceConfigFromJson(file.header.at("config"));
    ValidateConfidenceConfig(head.config);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kLoad, "corrupt confidence head header: ", e.what());
  } catch (const Error &e) {
    Fail(ErrorKind::kLoad, "corrupt confidence head config: ", e.what());
  }
  head.layout = HeadLayout(head.config);
  if (file.values.size() != head.layout.size()) {
    Fail(ErrorKind::kLoad, "confidence head file holds ", file.values.size(),
         " parameters, config implies ", head.layout.size());
  }
  head.values = std::move(file.values);
  return head;
}

std::vector<ConfidenceExample> ExtractFeatures(const Mat &encodings,
                                               const Hypothesis &hyp,
                                               const RichVocab &vocab) {
  if (hyp.emit_times.size() != hyp.symbols.size()) {
    Fail(ErrorKind::kIndex, "hypothesis has ", hyp.symbols.size(),
         " symbols but ", hyp.emit_times.size(), " emission times");
  }
  std::vector<int> word_of_symbol;
  FromSymbolsLenient(hyp.symbols, vocab, &word_of_symbol);
  const Eigen::Index frames = encodings.rows();
  const Eigen::Index dim = encodings.cols();
  std::vector<ConfidenceExample> out;
  for (std::size_t i = 0; i < hyp.symbols.size(); ++i) {
    const int s = hyp.symbols[i];
    if (s < 0 || s >= vocab.size()) {
      Fail(ErrorKind::kIndex, "symbol ", s, " outside the vocabulary");
    }
    if (!vocab.IsUnit(s)) continue;
    const int t = hyp.emit_times[i];
    if (t < 0 || t >= frames) {
      Fail(ErrorKind::kIndex, "emission time ", t, " outside [0, ", frames,
           ")");
    }
    ConfidenceExample ex;
    ex.context = Mat::Zero(1, (2 * kContextFrames + 1) * dim);
    for (int k = -kContextFrames; k <= kContextFrames; ++k) {
      const Eigen::Index f = t + k;
      if (f < 0 || f >= frames) continue;
      ex.context.middleCols((k + kContextFrames) * dim, dim) = encodings.row(f);
    }
    ex.symbol = s;
    ex.position = static_cast<int>(i);
    ex.word_index = word_of_symbol[i];
    out.push_back(std::move(ex));
  }
  return out;
}

Mat FeatureVector(const ConfidenceHead &head, const ConfidenceExample &ex) {
  const Mat embed = ParamValue(head.layout, head.values, "conf.embed");
  Mat out(1, head.config.feature_dim());
  out << ex.context, embed.row(ex.symbol);
  return out;
}

std::vector<bool> MakeWordLabels(const DecoratedTranscript &hyp,
                                 const DecoratedTranscript &ref) {
  std::vector<bool> correct(hyp.words.size(), false);
  for (const AlignedPair &p :
       AlignWords(PlainWords(ref), PlainWords(hyp)).ops) {
    if (p.op == EditOp::kMatch) correct[p.hyp] = true;
  }
  return correct;
}

void AssignLabels(std::span<ConfidenceExample> examples,
                  const std::vector<bool> &word_correct) {
  for (ConfidenceExample &ex : examples) {
    if (ex.word_index < 0 ||
        ex.word_index >= static_cast<int>(word_correct.size())) {
      Fail(ErrorKind::kIndex, "example word index ", ex.word_index,
           " outside [0, ", word_correct.size(), ")");
    }
    ex.correct = word_correct[ex.word_index];
  }
}

namespace {

// Self-attention restricted to consecutive blocks of `block` rows; keys whose
// `valid` flag is 0 are ignored.
Var BlockAttention(const Var &q, const Var &k, const Var &v,
                   std::shared_ptr<const std::vector<char>> valid, int block) {
  Tape &tape = *q.tape();
  const Eigen::Index n = q.rows();
  const Eigen::Index blocks = n / block;
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  auto probs = std::make_shared<Mat>(n, block);
  Mat out(n, v.cols());
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index r0 = b * block;
    Mat s = q.value().middleRows(r0, block) *
            k.value().middleRows(r0, block).transpose() * scale;
    for (int j = 0; j < block; ++j) {
      if (!(*valid)[r0 + j]) s.col(j).setConstant(-1e30);
    }
    for (int i = 0; i < block; ++i) {
      const double m = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - m).exp().matrix();
      s.row(i) /= s.row(i).sum();
    }
    probs->middleRows(r0, block) = s;
    out.middleRows(r0, block).noalias() = s * v.value().middleRows(r0, block);
  }
  const int iq = q.id(), ik = k.id(), iv = v.id();
  const bool needs = tape.requires_grad(iq) || tape.requires_grad(ik) ||
                     tape.requires_grad(iv);
  return tape.Push(
      std::move(out), needs,
      [iq, ik, iv, probs, block, blocks, scale](Tape &t, int self) {
        const Mat &g = t.grad(self);
        for (Eigen::Index b = 0; b < blocks; ++b) {
          const Eigen::Index r0 = b * block;
          const auto p = probs->middleRows(r0, block);
          const auto gb = g.middleRows(r0, block);
          if (t.requires_grad(iv)) {
            t.grad(iv).middleRows(r0, block).noalias() += p.transpose() * gb;
          }
          Mat dp = gb * t.value(iv).middleRows(r0, block).transpose();
          const Eigen::VectorXd dot = (dp.array() * p.array()).rowwise().sum();
          Mat ds = p.array() * (dp.colwise() - dot).array();
          ds *= scale;
          if (t.requires_grad(iq)) {
            t.grad(iq).middleRows(r0, block).noalias() +=
                ds * t.value(ik).middleRows(r0, block);
          }
          if (t.requires_grad(ik)) {
            t.grad(ik).middleRows(r0, block).noalias() +=
                ds.transpose() * t.value(iq).middleRows(r0, block);
          }
        }
      });
}

// Sum over rows of softplus(z) - y z, the cross-entropy of sigmoid(z).
Var BinaryCrossEntropy(const Var &z, std::vector<double> targets) {
  Tape &tape = *z.tape();
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double x = z.value()(i, 0);
    total += std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) -
             targets[i] * x;
  }
  Mat value(1, 1);
  value(0, 0) = total;
  const int iz = z.id();
  return tape.Push(std::move(value), tape.requires_grad(iz),
                   [iz, targets = std::move(targets)](Tape &t, int self) {
                     const double g = t.grad(self)(0, 0);
                     Mat &gz = t.grad(iz);
                     for (Eigen::Index i = 0; i < gz.rows(); ++i) {
                       const double x = t.value(iz)(i, 0);
                       gz(i, 0) += g * (1.0 / (1.0 + std::exp(-x)) - targets[i]);
                     }
                   });
}

// Logits (N x 1) for the concatenation of `sequences`, in order.
Var HeadLogits(Tape &tape, const ConfidenceHead &head,
               std::span<const std::vector<ConfidenceExample>> sequences,
               std::span<double> grads) {
  const ConfidenceConfig &c = head.config;
  auto param = [&](const std::string &name) {
    return BindParam(tape, head.layout, head.values, grads, name);
  };
  std::size_t total = 0;
  for (const auto &seq : sequences) total += seq.size();
  const int ctx_dim = (2 * kContextFrames + 1) * c.enc_dim;
  Mat context(static_cast<Eigen::Index>(total), ctx_dim);
  std::vector<int> symbols;
  symbols.reserve(total);
  {
    Eigen::Index r = 0;
    for (const auto &seq : sequences) {
      for (const ConfidenceExample &ex : seq) {
        if (ex.context.cols() != ctx_dim) {
          Fail(ErrorKind::kInput, "confidence example has ", ex.context.cols(),
               " context features, head expects ", ctx_dim);
        }
        if (ex.symbol < 0 || ex.symbol >= c.num_symbols) {
          Fail(ErrorKind::kIndex, "symbol ", ex.symbol, " outside [0, ",
               c.num_symbols, ")");
        }
        context.row(r++) = ex.context;
        symbols.push_back(ex.symbol);
      }
    }
  }
  const Var embed = GatherRows(param("conf.embed"), symbols);
  const Var ctx = tape.Constant(std::move(context));
  const Var features = ConcatCols(std::vector<Var>{ctx, embed});
  const Var h0 = AddRow(MatMul(features, param("conf.in.w")),
                        param("conf.in.b"));

  // One block of `window` rows per example, holding its window's inputs.
  const int w = c.window;
  const int back = c.window_kind == ConfidenceWindow::kCentered ? w / 2 : w - 1;
  std::vector<int> index, offset, center;
  auto valid = std::make_shared<std::vector<char>>();
  int base = 0;
  for (const auto &seq : sequences) {
    const int u = static_cast<int>(seq.size());
    for (int i = 0; i < u; ++i) {
      center.push_back(static_cast<int>(index.size()) + back);
      for (int k = 0; k < w; ++k) {
        const int pos = i - back + k;
        const bool ok = pos >= 0 && pos < u;
        index.push_back(ok ? base + pos : -1);
        offset.push_back(k);
        valid->push_back(ok);
      }
    }
    base += u;
  }
  Var x = Add(GatherRows(h0, index), GatherRows(param("conf.pos"), offset));
  for (int l = 0; l < c.layers; ++l) {
    const Var q = MatMul(x, param(LayerName(l, "wq")));
    const Var k = MatMul(x, param(LayerName(l, "wk")));
    const Var v = MatMul(x, param(LayerName(l, "wv")));
    x = Add(x, MatMul(BlockAttention(q, k, v, valid, w),
                      param(LayerName(l, "wo"))));
    const Var hidden = Relu(
        AddRow(MatMul(x, param(LayerName(l, "w1"))), param(LayerName(l, "b1"))));
    x = Add(x, AddRow(MatMul(hidden, param(LayerName(l, "w2"))),
                      param(LayerName(l, "b2"))));
  }
  return AddRow(MatMul(GatherRows(x, center), param("conf.out.w")),
                param("conf.out.b"));
}

}  // namespace

std::vector<double> ScoreUnits(const ConfidenceHead &head,
                               std::span<const ConfidenceExample> examples) {
  if (examples.empty()) return {};
  Tape tape(/*record=*/false);
  const std::vector<std::vector<ConfidenceExample>> one = {
      {examples.begin(), examples.end()}};
  const Var z = HeadLogits(tape, head, one, {});
  std::vector<double> out(examples.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = 1.0 / (1.0 + std::exp(-z.value()(static_cast<Eigen::Index>(i), 0)));
  }
  return out;
}

std::vector<double> ScoreWords(std::span<const double> unit_scores,
                               std::span<const int> word_index,
                               int num_words) {
  if (unit_scores.size() != word_index.size()) {
    Fail(ErrorKind::kGrouping, unit_scores.size(), " scores but ",
         word_index.size(), " word indices");
  }
  std::vector<double> sum(num_words, 0.0);
  std::vector<int> count(num_words, 0);
  int previous = -1;
  for (std::size_t i = 0; i < word_index.size(); ++i) {
    const int w = word_index[i];
    if (w < 0 || w >= num_words) {
      Fail(ErrorKind::kGrouping, "word index ", w, " outside [0, ", num_words,
           ")");
    }
    if (w < previous) {
      Fail(ErrorKind::kGrouping, "units of word ", w, " are not contiguous");
    }
    previous = w;
    sum[w] += unit_scores[i];
    ++count[w];
  }
  for (int w = 0; w < num_words; ++w) {
    if (count[w] == 0) Fail(ErrorKind::kGrouping, "word ", w, " has no units");
    sum[w] /= count[w];
  }
  return sum;
}

std::vector<int> WordIndices(std::span<const ConfidenceExample> examples) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const ConfidenceExample &ex : examples) out.push_back(ex.word_index);
  return out;
}

std::vector<double> PosteriorBaseline(
    const Hypothesis &hyp, std::span<const ConfidenceExample> examples,
    int num_words) {
  std::vector<double> unit(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const int p = examples[i].position;
    if (p < 0 || p >= static_cast<int>(hyp.per_symbol_logprob.size())) {
      Fail(ErrorKind::kIndex, "example position ", p,
           " outside the hypothesis log-probabilities");
    }
    unit[i] = std::exp(hyp.per_symbol_logprob[p]);
  }
  return ScoreWords(unit, WordIndices(examples), num_words);
}

Mat TemperatureScale(const Mat &logits, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    Fail(ErrorKind::kParameter, "temperature must be positive, got ", tau);
  }
  return logits / tau;
}

TemperatureScorer::TemperatureScorer(const Scorer &base, double tau)
    : base_(base), tau_(tau) {
  if (!(tau > 0.0)) {
    Fail(ErrorKind::kParameter, "temperature must be positive, got ", tau);
  }
}

void TemperatureScorer::LogProbs(int t, std::span<const double> frame,
                                 const PredictionState &state,
                                 std::span<double> out) const {
  base_.LogProbs(t, frame, state, out);
  // Log-probabilities differ from logits by a per-row constant, which the
  // renormalization removes.
  double norm = kLogZero;
  for (double &v : out) {
    v = std::isfinite(tau_) ? v / tau_ : 0.0;
    norm = LogAdd(norm, v);
  }
  for (double &v : out) v -= norm;
}

std::vector<double> RescoreSymbols(const Scorer &scorer, const Mat &encodings,
                                   const Hypothesis &hyp) {
  const Mat frames = scorer.Prepare(encodings);
  std::vector<double> lp(scorer.num_symbols());
  std::vector<double> out;
  out.reserve(hyp.symbols.size());
  PredictionState state = scorer.Start();
  for (std::size_t i = 0; i < hyp.symbols.size(); ++i) {
    const int t = hyp.emit_times.at(i);
    if (t < 0 || t >= frames.rows()) {
      Fail(ErrorKind::kIndex, "emission time ", t, " outside [0, ",
           frames.rows(), ")");
    }
    scorer.LogProbs(t, {frames.row(t).data(), static_cast<std::size_t>(frames.cols())},
                    state, lp);
    out.push_back(lp[hyp.symbols[i]]);
    state = scorer.Extend(state, hyp.symbols[i]);
  }
  return out;
}

double ConfidenceLossAndGrad(
    const ConfidenceHead &head,
    std::span<const std::vector<ConfidenceExample>> sequences,
    std::vector<double> *grad) {
  std::vector<double> targets;
  for (const auto &seq : sequences) {
    for (const ConfidenceExample &ex : seq) targets.push_back(ex.correct);
  }
  if (targets.empty()) return 0.0;
  const double n = static_cast<double>(targets.size());
  std::vector<double> local;
  if (grad) local.assign(head.values.size(), 0.0);
  Tape tape(/*record=*/grad != nullptr);
  const Var z = HeadLogits(tape, head, sequences, local);
  const Var loss = Scale(BinaryCrossEntropy(z, std::move(targets)), 1.0 / n);
  const double value = loss.value()(0, 0);
  if (!std::isfinite(value)) {
    Fail(ErrorKind::kDivergence, "confidence loss is ", value, " over ", n,
         " units");
  }
  if (grad) {
    tape.Backward(loss);
    grad->resize(head.values.size(), 0.0);
    for (std::size_t i = 0; i < local.size(); ++i) (*grad)[i] += local[i];
  }
  return value;
}

double TrainConfidenceStep(
    ConfidenceHead &head,
    std::span<const std::vector<ConfidenceExample>> sequences,
    const AdamConfig &adam, AdamState &state) {
  std::vector<double> grad(head.values.size(), 0.0);
  const double loss = ConfidenceLossAndGrad(head, sequences, &grad);
  AdamUpdate(adam, state, head.values, grad);
  return loss;
}

}  // namespace rnnt
