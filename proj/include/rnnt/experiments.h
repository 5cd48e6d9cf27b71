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

// Recipe-driven runs shared by the command-line tool and the acceptance
// suite: rich transcription, confidence and tagging.

#ifndef RNNT_EXPERIMENTS_H_
#define RNNT_EXPERIMENTS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rnnt/confidence.h"
#include "rnnt/decoder.h"
#include "rnnt/metrics.h"
#include "rnnt/model.h"
#include "rnnt/synth.h"
#include "rnnt/tagger.h"

namespace rnnt {

nlohmann::json ReadJsonFile(const std::string &path);  // kData

// Called every `interval` training steps.
struct Progress {
  int interval = 100;
  std::function<void(int step, double loss)> report;
};

// ---- Rich transcription ----

struct RichRecipe {
  std::uint64_t seed = 17;  // data, initialization and batch order
  SynthSpec data;           // training conversations; data.seed is ignored
  int eval_conversations = 40;
  std::string units = "grapheme";  // or "merged"
  int merges = 50;
  ModelConfig model;  // vocab and enc_kind are filled per run
  EncoderKind streaming_encoder = EncoderKind::kRecurrentUni;
  EncoderKind non_streaming_encoder = EncoderKind::kRecurrentBi;
  Objective objective = Objective::kMarginal;
  int steps = 600;
  int batch_size = 8;
  AdamConfig adam;
  BeamConfig beam;
};

nlohmann::json RichRecipeToJson(const RichRecipe &recipe);
RichRecipe RichRecipeFromJson(const nlohmann::json &j);  // kConfig, kSpec

SynthSpec TrainSpec(const RichRecipe &recipe);
// Held out: the conversations right after the training range.
SynthSpec EvalSpec(const RichRecipe &recipe);

RichVocab RecipeVocab(const RichRecipe &recipe,
                      const std::vector<Utterance> &train);
ModelConfig RecipeModel(const RichRecipe &recipe, EncodeMode mode,
                        const RichVocab &vocab);

// Path emitting each grapheme symbol at the encoder frame holding its last
// input frame. Grapheme units only.
AlignmentPath LastFramePath(const Utterance &utt, int subsample_factor,
                            int encoded_frames);

Parameters TrainRich(const RichRecipe &recipe, EncodeMode mode,
                     const std::vector<Utterance> &train,
                     const RichVocab &vocab, int jobs,
                     const Progress &progress = {},
                     double *final_loss = nullptr);

// Unsplit decodes, one per utterance, spread over `jobs` threads.
std::vector<DecodeOutput> DecodeAll(const Parameters &params,
                                    const std::vector<Utterance> &utts,
                                    EncodeMode mode, const BeamConfig &beam,
                                    const RichVocab &vocab, int jobs);

// Segment-wise streaming decodes.
std::vector<DecodeOutput> DecodeSegmented(const Parameters &params,
                                          const std::vector<Utterance> &utts,
                                          bool carry_state,
                                          const BeamConfig &beam,
                                          const RichVocab &vocab, int jobs);

struct RichScores {
  RateCounts words;  // WER counts
  RateCounts speakers;
  std::map<SlotFamily, SlotCounts> slots;

  double wer() const { return words.rate(); }
  double wder() const;  // 0 when nothing aligned
  double ser(SlotFamily family) const;  // 0 when no reference slots and no errors
  void Add(const DecoratedTranscript &ref, const DecoratedTranscript &hyp);
  nlohmann::json ToJson() const;
};

RichScores ScoreAll(const std::vector<DecoratedTranscript> &refs,
                    const std::vector<DecoratedTranscript> &hyps);

// ---- Confidence ----

struct ConfidenceRecipe {
  RichRecipe recognizer;
  EncodeMode mode = EncodeMode::kStreaming;
  // Data condition for confidence training and evaluation.
  double noise_sigma = 1.0;
  int train_conversations = 150;
  int eval_conversations = 60;
  int train_first_index = 100000;
  int eval_first_index = 200000;
  ConfidenceConfig head;  // enc_dim and num_symbols are filled per run
  int steps = 300;
  int batch_size = 8;
  AdamConfig adam;
  int calibration_bins = 10;
};

// `base_dir` resolves a recognizer recipe given by path.
nlohmann::json ConfidenceRecipeToJson(const ConfidenceRecipe &recipe);
ConfidenceRecipe ConfidenceRecipeFromJson(const nlohmann::json &j,
                                          const std::string &base_dir = ".");

std::vector<Utterance> ConfidenceData(const ConfidenceRecipe &recipe,
                                      bool eval);

struct ConfidenceUtterance {
  std::string id;
  DecoratedTranscript hyp;
  std::vector<ConfidenceExample> examples;  // labeled
  std::vector<double> baseline;             // per hyp word
  std::vector<bool> word_correct;
  int emitted_units = 0;
};

std::vector<ConfidenceUtterance> PrepareConfidence(
    const Parameters &params, const std::vector<Utterance> &utts,
    EncodeMode mode, const BeamConfig &beam, const RichVocab &vocab, int jobs);

ConfidenceConfig RecipeHead(const ConfidenceRecipe &recipe,
                            const Parameters &params);

ConfidenceHead TrainConfidence(const ConfidenceRecipe &recipe,
                               const ConfidenceHead &init,
                               const std::vector<ConfidenceUtterance> &data,
                               const Progress &progress = {},
                               double *final_loss = nullptr);

// Per utterance, per hyp word.
std::vector<std::vector<double>> ScoreConfidenceWords(
    const ConfidenceHead &head, const std::vector<ConfidenceUtterance> &data);

struct ConfidenceEvaluation {
  // Empty when every word has the same label.
  std::optional<CalibrationReport> head;
  std::optional<CalibrationReport> baseline;
  long words = 0;
  long incorrect_words = 0;
  long examples = 0;
  long emitted_units = 0;
  nlohmann::json ToJson() const;
};

ConfidenceEvaluation EvaluateConfidence(
    const ConfidenceHead &head, const std::vector<ConfidenceUtterance> &data,
    int bins);

// ---- Tagging ----

struct TaggingRecipe {
  TaggingTaskSpec task;  // seq_len is set per run
  int train_sentences = 300;
  int eval_words = 8000;  // eval sentences = eval_words / seq_len
  int eval_first_index = 100000;
  ModelConfig model;      // vocab is filled per run
  TaggerOptions options;  // objective is set per run
  std::vector<int> seq_lens = {50, 200};
};

nlohmann::json TaggingRecipeToJson(const TaggingRecipe &recipe);
TaggingRecipe TaggingRecipeFromJson(const nlohmann::json &j);

std::vector<TagSentence> TaggingData(const TaggingRecipe &recipe, int seq_len,
                                     bool eval);

Parameters TrainTaggingRun(const TaggingRecipe &recipe, Objective objective,
                           int seq_len, double *final_loss = nullptr);

struct TaggingRun {
  Objective objective = Objective::kFixedAlignment;
  int seq_len = 0;
  double final_loss = 0.0;
  TaggerEvaluation eval;
  double seconds = 0.0;
};

nlohmann::json TaggingRunToJson(const TaggingRun &run);

// Every (objective, seq_len) pair, fixed alignment first.
std::vector<TaggingRun> RunTaggingGrid(
    const TaggingRecipe &recipe,
    const std::function<void(const TaggingRun &)> &on_run = {});

}  // namespace rnnt

#endif  // RNNT_EXPERIMENTS_H_
