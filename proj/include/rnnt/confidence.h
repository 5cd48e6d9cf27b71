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

// Word confidence from emission-time features.
//
// Every emitted base unit becomes one example: the encoder frames around its
// emission time (3 left, center, 3 right) and the unit's label embedding. A
// small attention head scores each unit; a word's confidence is the mean of
// its units' scores.
//
// The head computes output i from the examples of its own window only:
// [i-10, i+9] when centered, [i-19, i] when streaming. Both attention layers
// run inside that window.

#ifndef RNNT_CONFIDENCE_H_
#define RNNT_CONFIDENCE_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rnnt/autograd.h"
#include "rnnt/decoder.h"
#include "rnnt/optimizer.h"
#include "rnnt/params.h"
#include "rnnt/textio.h"

namespace rnnt {

inline constexpr int kContextFrames = 3;  // on each side

enum class ConfidenceWindow { kCentered, kStreaming };
std::string_view ConfidenceWindowName(ConfidenceWindow window);
ConfidenceWindow ParseConfidenceWindow(std::string_view name);  // kConfig

struct ConfidenceConfig {
  int enc_dim = 32;
  int num_symbols = 2;  // label embedding rows
  int embed_dim = 8;
  int model_dim = 32;
  int layers = 2;
  int window = 20;
  ConfidenceWindow window_kind = ConfidenceWindow::kCentered;
  std::uint64_t seed = 1;

  int feature_dim() const {
    return (2 * kContextFrames + 1) * enc_dim + embed_dim;
  }
};

nlohmann::json ConfidenceConfigToJson(const ConfidenceConfig &config);
ConfidenceConfig ConfidenceConfigFromJson(const nlohmann::json &j);
void ValidateConfidenceConfig(const ConfidenceConfig &config);  // kConfig

struct ConfidenceHead {
  ConfidenceConfig config;
  ParamLayout layout;
  std::vector<double> values;
};

ConfidenceHead InitConfidenceHead(const ConfidenceConfig &config);
void SaveConfidenceHead(const ConfidenceHead &head, const std::string &path,
                        const nlohmann::json &run_config = nullptr);
ConfidenceHead LoadConfidenceHead(const std::string &path);

struct ConfidenceExample {
  ag::Mat context;   // 1 x 7*enc_dim stacked frames
  int symbol = 0;
  int position = 0;  // index into the hypothesis symbols
  int word_index = -1;
  bool correct = false;
};

// One example per emitted unit symbol; rich tokens are skipped. Throws kIndex
// when an emit time falls outside the encodings.
std::vector<ConfidenceExample> ExtractFeatures(const ag::Mat &encodings,
                                               const Hypothesis &hyp,
                                               const RichVocab &vocab);

// Full feature vector (context plus label embedding) for one example.
ag::Mat FeatureVector(const ConfidenceHead &head,
                      const ConfidenceExample &example);

// Per hypothesis word: true iff it aligns to the reference as an exact match.
std::vector<bool> MakeWordLabels(const DecoratedTranscript &hyp,
                                 const DecoratedTranscript &ref);
// Copies word labels onto the examples' units.
void AssignLabels(std::span<ConfidenceExample> examples,
                  const std::vector<bool> &word_correct);

// Sigmoid score per example, in order.
std::vector<double> ScoreUnits(const ConfidenceHead &head,
                               std::span<const ConfidenceExample> examples);

// Mean of unit scores per word. `word_index` must be non-decreasing and cover
// every word in [0, num_words); kGrouping otherwise.
std::vector<double> ScoreWords(std::span<const double> unit_scores,
                               std::span<const int> word_index, int num_words);

std::vector<int> WordIndices(std::span<const ConfidenceExample> examples);

// Mean unit posterior per word, from hyp.per_symbol_logprob.
std::vector<double> PosteriorBaseline(
    const Hypothesis &hyp, std::span<const ConfidenceExample> examples,
    int num_words);

// logits / tau; kParameter unless tau > 0.
ag::Mat TemperatureScale(const ag::Mat &logits, double tau);

// Wraps a scorer with temperature-scaled output distributions.
class TemperatureScorer : public Scorer {
 public:
  TemperatureScorer(const Scorer &base, double tau);
  int num_symbols() const override { return base_.num_symbols(); }
  ag::Mat Prepare(const ag::Mat &encodings) const override {
    return base_.Prepare(encodings);
  }
  PredictionState Start() const override { return base_.Start(); }
  PredictionState Extend(const PredictionState &state,
                         int symbol) const override {
    return base_.Extend(state, symbol);
  }
  void LogProbs(int t, std::span<const double> frame,
                const PredictionState &state,
                std::span<double> out) const override;

 private:
  const Scorer &base_;
  double tau_;
};

// Per-symbol log-probabilities of the hypothesis' own path under `scorer`.
std::vector<double> RescoreSymbols(const Scorer &scorer,
                                   const ag::Mat &encodings,
                                   const Hypothesis &hyp);

// Mean binary cross-entropy per unit over the sequences; adds its gradient to
// `grad` when non-null. Throws kDivergence on a non-finite loss.
double ConfidenceLossAndGrad(
    const ConfidenceHead &head,
    std::span<const std::vector<ConfidenceExample>> sequences,
    std::vector<double> *grad);

double TrainConfidenceStep(
    ConfidenceHead &head,
    std::span<const std::vector<ConfidenceExample>> sequences,
    const AdamConfig &adam, AdamState &state);

}  // namespace rnnt

#endif  // RNNT_CONFIDENCE_H_
