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

#include "rnnt/decoder.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "rnnt/errors.h"
#include "rnnt/log_math.h"

namespace rnnt {

using ag::Mat;

void ValidateBeamConfig(const BeamConfig &config) {
  if (config.beam_width < 1) {
    Fail(ErrorKind::kParameter, "beam_width must be >= 1, got ",
         config.beam_width);
  }
  if (config.max_symbols_per_frame < 1) {
    Fail(ErrorKind::kParameter, "max_symbols_per_frame must be >= 1, got ",
         config.max_symbols_per_frame);
  }
}

Mat ModelScorer::Prepare(const Mat &encodings) const {
  return EncoderProjection(params_, encodings);
}

PredictionState ModelScorer::Start() const {
  PredictionState s;
  s.hidden = PredictionStart(params_);
  s.projection = PredictionProjection(params_, s.hidden);
  return s;
}

PredictionState ModelScorer::Extend(const PredictionState &state,
                                    int symbol) const {
  PredictionState s;
  s.hidden = PredictionStep(params_, state.hidden, symbol);
  s.projection = PredictionProjection(params_, s.hidden);
  s.length = state.length + 1;
  s.last_symbol = symbol;
  return s;
}

void ModelScorer::LogProbs(int, std::span<const double> frame,
                           const PredictionState &state,
                           std::span<double> out) const {
  JointLogProbs(params_, frame,
                {state.projection.data(),
                 static_cast<std::size_t>(state.projection.size())},
                out);
}

namespace {

std::span<const double> Row(const Mat &m, Eigen::Index t) {
  return {m.data() + t * m.cols(), static_cast<std::size_t>(m.cols())};
}

// Best-first order: score, then label sequence, then length.
bool Better(double score_a, const std::vector<int> &a, double score_b,
            const std::vector<int> &b) {
  if (score_a != score_b) return score_a > score_b;
  if (a != b) return a < b;
  return a.size() < b.size();
}

}  // namespace

Hypothesis GreedyDecode(const Scorer &scorer, const Mat &encodings,
                        int max_symbols_per_frame) {
  ValidateBeamConfig({1, max_symbols_per_frame});
  const Mat frames = scorer.Prepare(encodings);
  const int S = scorer.num_symbols();
  const int blank = scorer.blank();
  std::vector<double> lp(S);
  Hypothesis hyp;
  PredictionState state = scorer.Start();
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (int emitted = 0;; ++emitted) {
      scorer.LogProbs(static_cast<int>(t), Row(frames, t), state, lp);
      int best = blank;
      if (emitted < max_symbols_per_frame) {
        for (int k = 0; k < blank; ++k) {
          if (lp[k] > lp[best]) best = k;
        }
      }
      hyp.score += lp[best];
      if (best == blank) break;
      hyp.symbols.push_back(best);
      hyp.emit_times.push_back(static_cast<int>(t));
      hyp.per_symbol_logprob.push_back(lp[best]);
      state = scorer.Extend(state, best);
    }
  }
  hyp.path_score = hyp.score;
  return hyp;
}

BeamSearch::BeamSearch(const Scorer &scorer, BeamConfig config)
    : scorer_(scorer), config_(config) {
  ValidateBeamConfig(config);
  beam_.push_back({Hypothesis{}, scorer.Start()});
}

void BeamSearch::Advance(const Mat &encodings) {
  const Mat frames = scorer_.Prepare(encodings);
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    Step(Row(frames, t));
    ++frames_;
  }
}

void BeamSearch::Step(std::span<const double> frame) {
  const int S = scorer_.num_symbols();
  const int blank = scorer_.blank();
  const int t = frames_;
  const std::size_t width = static_cast<std::size_t>(config_.beam_width);

  std::vector<Entry> finished;
  std::map<std::vector<int>, std::size_t> finished_index;
  auto add_finished = [&](Entry e) {
    auto it = finished_index.find(e.hyp.symbols);
    if (it == finished_index.end()) {
      finished_index.emplace(e.hyp.symbols, finished.size());
      finished.push_back(std::move(e));
      return;
    }
    Entry &old = finished[it->second];
    old.hyp.score = LogAdd(old.hyp.score, e.hyp.score);
    if (e.hyp.path_score > old.hyp.path_score) {
      old.hyp.path_score = e.hyp.path_score;
      old.hyp.emit_times = std::move(e.hyp.emit_times);
      old.hyp.per_symbol_logprob = std::move(e.hyp.per_symbol_logprob);
    }
  };

  struct Candidate {
    std::size_t parent;
    int symbol;
    double score;
    double path_score;
    double logprob;
    std::vector<int> symbols;
  };

  std::vector<Entry> active = std::move(beam_);
  std::vector<double> lp(S);
  for (int step = 0; !active.empty(); ++step) {
    std::vector<Candidate> labels;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const Entry &a = active[i];
      scorer_.LogProbs(t, frame, a.pred, lp);
      Entry done = a;
      done.hyp.score += lp[blank];
      done.hyp.path_score += lp[blank];
      add_finished(std::move(done));
      if (step >= config_.max_symbols_per_frame) continue;
      for (int k = 0; k < blank; ++k) {
        Candidate c{i, k, a.hyp.score + lp[k], a.hyp.path_score + lp[k], lp[k],
                    a.hyp.symbols};
        c.symbols.push_back(k);
        labels.push_back(std::move(c));
      }
    }
    // Joint ranking of finished entries and label extensions.
    struct Ref {
      bool is_label;
      std::size_t index;
    };
    std::vector<Ref> pool;
    pool.reserve(finished.size() + labels.size());
    for (std::size_t i = 0; i < finished.size(); ++i) pool.push_back({false, i});
    for (std::size_t i = 0; i < labels.size(); ++i) pool.push_back({true, i});
    auto score_of = [&](const Ref &r) {
      return r.is_label ? labels[r.index].score : finished[r.index].hyp.score;
    };
    auto symbols_of = [&](const Ref &r) -> const std::vector<int> & {
      return r.is_label ? labels[r.index].symbols
                        : finished[r.index].hyp.symbols;
    };
    auto before = [&](const Ref &a, const Ref &b) {
      return Better(score_of(a), symbols_of(a), score_of(b), symbols_of(b));
    };
    if (pool.size() > width) {
      std::nth_element(pool.begin(), pool.begin() + width, pool.end(), before);
      pool.resize(width);
    }
    std::vector<Entry> kept_finished;
    std::vector<Entry> next_active;
    std::sort(pool.begin(), pool.end(), [](const Ref &a, const Ref &b) {
      return a.is_label != b.is_label ? !a.is_label : a.index < b.index;
    });
    for (const Ref &r : pool) {
      if (!r.is_label) {
        kept_finished.push_back(std::move(finished[r.index]));
        continue;
      }
      Candidate &c = labels[r.index];
      const Entry &parent = active[c.parent];
      Entry e;
      e.hyp.symbols = std::move(c.symbols);
      e.hyp.score = c.score;
      e.hyp.path_score = c.path_score;
      e.hyp.emit_times = parent.hyp.emit_times;
      e.hyp.emit_times.push_back(t);
      e.hyp.per_symbol_logprob = parent.hyp.per_symbol_logprob;
      e.hyp.per_symbol_logprob.push_back(c.logprob);
      e.pred = scorer_.Extend(parent.pred, c.symbol);
      next_active.push_back(std::move(e));
    }
    finished = std::move(kept_finished);
    finished_index.clear();
    for (std::size_t i = 0; i < finished.size(); ++i) {
      finished_index.emplace(finished[i].hyp.symbols, i);
    }
    active = std::move(next_active);
  }
  std::sort(finished.begin(), finished.end(), [](const Entry &a, const Entry &b) {
    return Better(a.hyp.score, a.hyp.symbols, b.hyp.score, b.hyp.symbols);
  });
  if (finished.size() > width) finished.resize(width);
  beam_ = std::move(finished);
}

std::vector<Hypothesis> BeamSearch::Hypotheses() const {
  std::vector<Hypothesis> out;
  out.reserve(beam_.size());
  for (const Entry &e : beam_) out.push_back(e.hyp);
  return out;
}

std::vector<Hypothesis> BeamDecode(const Scorer &scorer, const Mat &encodings,
                                   const BeamConfig &config) {
  BeamSearch search(scorer, config);
  search.Advance(encodings);
  return search.Hypotheses();
}

double ScorePath(const Scorer &scorer, const Mat &encodings,
                 const std::vector<int> &symbols,
                 const std::vector<int> &emit_times) {
  if (symbols.size() != emit_times.size()) {
    Fail(ErrorKind::kPath, symbols.size(), " symbols but ", emit_times.size(),
         " emission times");
  }
  const Mat frames = scorer.Prepare(encodings);
  std::vector<double> lp(scorer.num_symbols());
  PredictionState state = scorer.Start();
  double total = 0.0;
  std::size_t next = 0;
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    while (true) {
      scorer.LogProbs(static_cast<int>(t), Row(frames, t), state, lp);
      if (next < symbols.size() && emit_times[next] == t) {
        total += lp[symbols[next]];
        state = scorer.Extend(state, symbols[next]);
        ++next;
      } else {
        total += lp[scorer.blank()];
        break;
      }
    }
  }
  if (next != symbols.size()) {
    Fail(ErrorKind::kPath, "emission times are not non-decreasing within [0, ",
         frames.rows(), ")");
  }
  return total;
}

std::vector<std::pair<std::vector<int>, double>> EnumerateLabelSequences(
    const Scorer &scorer, const Mat &encodings, int max_symbols_per_frame) {
  const Mat frames = scorer.Prepare(encodings);
  const int blank = scorer.blank();
  double per_frame = 0.0;
  for (int k = 0; k <= max_symbols_per_frame; ++k) {
    per_frame += std::pow(static_cast<double>(blank), k);
  }
  if (std::pow(per_frame, static_cast<double>(frames.rows())) > 2e6) {
    Fail(ErrorKind::kRefusal, "exhaustive decode over ", frames.rows(),
         " frames and ", blank, " labels is too large");
  }
  std::map<std::vector<int>, double> totals;
  std::vector<int> symbols;
  std::vector<double> lp(scorer.num_symbols());
  std::function<void(Eigen::Index, const PredictionState &, double, int)> walk =
      [&](Eigen::Index t, const PredictionState &state, double logp,
          int emitted) {
        if (t == frames.rows()) {
          auto [it, fresh] = totals.emplace(symbols, logp);
          if (!fresh) it->second = LogAdd(it->second, logp);
          return;
        }
        std::vector<double> local(scorer.num_symbols());
        scorer.LogProbs(static_cast<int>(t), Row(frames, t), state, local);
        walk(t + 1, state, logp + local[blank], 0);
        if (emitted >= max_symbols_per_frame) return;
        for (int k = 0; k < blank; ++k) {
          symbols.push_back(k);
          walk(t, scorer.Extend(state, k), logp + local[k], emitted + 1);
          symbols.pop_back();
        }
      };
  walk(0, scorer.Start(), 0.0, 0);
  std::vector<std::pair<std::vector<int>, double>> out(totals.begin(),
                                                       totals.end());
  std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
    return Better(a.second, a.first, b.second, b.first);
  });
  return out;
}

namespace {

void CheckStreamingCapable(const Parameters &params) {
  if (params.config.enc_kind == EncoderKind::kRecurrentBi) {
    Fail(ErrorKind::kMode,
         "streaming decode needs a streaming encoder, model has ",
         EncoderKindName(params.config.enc_kind));
  }
}

Mat StackRows(const std::vector<Mat> &parts, Eigen::Index cols) {
  Eigen::Index rows = 0;
  for (const Mat &m : parts) rows += m.rows();
  Mat out(rows, cols);
  Eigen::Index r = 0;
  for (const Mat &m : parts) {
    if (m.rows() == 0) continue;
    out.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  return out;
}

void Render(DecodeOutput &out, const RichVocab &vocab) {
  out.transcript =
      FromSymbolsLenient(out.best.symbols, vocab, &out.word_of_symbol);
}

}  // namespace

DecodeOutput StreamingDecode(const Parameters &params,
                             const std::vector<Mat> &segments,
                             bool carry_state, const BeamConfig &config,
                             const RichVocab &vocab) {
  CheckStreamingCapable(params);
  ValidateBeamConfig(config);
  ModelScorer scorer(params);
  DecodeOutput out;
  std::vector<Mat> encoded;
  if (carry_state) {
    BeamSearch search(scorer, config);
    EncoderState state = InitialEncoderState(params.config);
    for (const Mat &segment : segments) {
      EncodeResult r = Encode(params, segment, EncodeMode::kStreaming, state);
      state = std::move(r.state);
      search.Advance(r.encodings);
      encoded.push_back(std::move(r.encodings));
    }
    out.best = search.Hypotheses().front();
    out.encodings = StackRows(encoded, params.config.enc_dim);
    Render(out, vocab);
    return out;
  }
  int offset = 0;
  for (const Mat &segment : segments) {
    EncodeResult r = Encode(params, segment, EncodeMode::kStreaming);
    const Hypothesis best = BeamDecode(scorer, r.encodings, config).front();
    std::vector<int> word_of_symbol;
    const DecoratedTranscript words =
        FromSymbolsLenient(best.symbols, vocab, &word_of_symbol);
    const int word_offset = static_cast<int>(out.transcript.words.size());
    for (std::size_t i = 0; i < best.symbols.size(); ++i) {
      out.best.symbols.push_back(best.symbols[i]);
      out.best.emit_times.push_back(best.emit_times[i] + offset);
      out.best.per_symbol_logprob.push_back(best.per_symbol_logprob[i]);
      out.word_of_symbol.push_back(
          word_of_symbol[i] < 0 ? -1 : word_of_symbol[i] + word_offset);
    }
    out.best.score += best.score;
    out.best.path_score += best.path_score;
    out.transcript.words.insert(out.transcript.words.end(), words.words.begin(),
                                words.words.end());
    offset += static_cast<int>(r.encodings.rows());
    encoded.push_back(std::move(r.encodings));
  }
  out.encodings = StackRows(encoded, params.config.enc_dim);
  return out;
}

DecodeOutput DecodeUtterance(const Parameters &params, const Mat &frames,
                             EncodeMode mode, const BeamConfig &config,
                             const RichVocab &vocab) {
  if (mode == EncodeMode::kStreaming) {
    return StreamingDecode(params, {frames}, true, config, vocab);
  }
  ModelScorer scorer(params);
  DecodeOutput out;
  out.encodings = Encode(params, frames, mode).encodings;
  out.best = BeamDecode(scorer, out.encodings, config).front();
  Render(out, vocab);
  return out;
}

}  // namespace rnnt
