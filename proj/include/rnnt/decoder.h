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

// Frame-synchronous greedy and beam decoding.
//
// Within a frame a hypothesis either emits blank (and waits for the next
// frame) or a label (and stays). Blank-terminated and still-expanding
// hypotheses compete for the same beam_width slots; blank-terminated ones
// with equal label sequences are merged by summing probabilities.
//
// Ranking is by score, then lexicographic label sequence (a proper prefix
// ranks first), so equal inputs always give equal outputs.

#ifndef RNNT_DECODER_H_
#define RNNT_DECODER_H_

#include <span>
#include <utility>
#include <vector>

#include "rnnt/model.h"
#include "rnnt/textio.h"

namespace rnnt {

struct Hypothesis {
  std::vector<int> symbols;
  double score = 0.0;       // log P(symbols), summed over merged paths
  double path_score = 0.0;  // log-probability of the best single path
  std::vector<int> emit_times;  // encoder frame per symbol
  std::vector<double> per_symbol_logprob;
};

struct BeamConfig {
  int beam_width = 4;
  int max_symbols_per_frame = 4;
};

void ValidateBeamConfig(const BeamConfig &config);  // throws kParameter

struct PredictionState {
  ag::Mat hidden;
  ag::Mat projection;
  int length = 0;       // labels consumed
  int last_symbol = -1;
};

// The decoder's view of a transducer. Blank is the last symbol.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual int num_symbols() const = 0;
  int blank() const { return num_symbols() - 1; }
  // Turns encoder rows into whatever LogProbs consumes per frame.
  virtual ag::Mat Prepare(const ag::Mat &encodings) const { return encodings; }
  virtual PredictionState Start() const = 0;
  virtual PredictionState Extend(const PredictionState &state,
                                 int symbol) const = 0;
  virtual void LogProbs(int t, std::span<const double> frame,
                        const PredictionState &state,
                        std::span<double> out) const = 0;
};

class ModelScorer : public Scorer {
 public:
  explicit ModelScorer(const Parameters &params) : params_(params) {}
  int num_symbols() const override { return params_.config.num_symbols(); }
  ag::Mat Prepare(const ag::Mat &encodings) const override;
  PredictionState Start() const override;
  PredictionState Extend(const PredictionState &state,
                         int symbol) const override;
  void LogProbs(int t, std::span<const double> frame,
                const PredictionState &state,
                std::span<double> out) const override;

 private:
  const Parameters &params_;
};

// Argmax per step; ties go to blank, then to the lowest label.
Hypothesis GreedyDecode(const Scorer &scorer, const ag::Mat &encodings,
                        int max_symbols_per_frame = 4);

// Incremental beam search: frames can be fed in pieces.
class BeamSearch {
 public:
  BeamSearch(const Scorer &scorer, BeamConfig config);

  void Advance(const ag::Mat &encodings);
  int frames() const { return frames_; }
  // Sorted best first; never empty.
  std::vector<Hypothesis> Hypotheses() const;

  struct Entry {
    Hypothesis hyp;
    PredictionState pred;
  };

 private:
  void Step(std::span<const double> frame);

  const Scorer &scorer_;
  BeamConfig config_;
  int frames_ = 0;
  std::vector<Entry> beam_;
};

std::vector<Hypothesis> BeamDecode(const Scorer &scorer,
                                   const ag::Mat &encodings,
                                   const BeamConfig &config);

// Log-probability of the path that emits `symbols` at `emit_times` and blank
// everywhere else.
double ScorePath(const Scorer &scorer, const ag::Mat &encodings,
                 const std::vector<int> &symbols,
                 const std::vector<int> &emit_times);

// Every label sequence reachable under the per-frame emission cap, with its
// total log-probability, best first. Refuses (kRefusal) above 2e6 paths.
std::vector<std::pair<std::vector<int>, double>> EnumerateLabelSequences(
    const Scorer &scorer, const ag::Mat &encodings, int max_symbols_per_frame);

struct DecodeOutput {
  Hypothesis best;     // over all segments; emit_times count encoder frames
  ag::Mat encodings;   // every encoder frame in order
  DecoratedTranscript transcript;
  std::vector<int> word_of_symbol;  // per symbol of best.symbols, or -1
};

// Decodes the segments in order. With carry_state the encoder state and the
// beam continue across segment boundaries, which reproduces an unsplit
// decode. Without it every segment starts from scratch and is rendered on its
// own, so words before a segment's first speaker token get role OTHER.
// Requires a streaming-capable encoder (kMode otherwise).
DecodeOutput StreamingDecode(const Parameters &params,
                             const std::vector<ag::Mat> &segments,
                             bool carry_state, const BeamConfig &config,
                             const RichVocab &vocab);

// Whole-utterance decode in the given mode.
DecodeOutput DecodeUtterance(const Parameters &params, const ag::Mat &frames,
                             EncodeMode mode, const BeamConfig &config,
                             const RichVocab &vocab);

}  // namespace rnnt

#endif  // RNNT_DECODER_H_
