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

// Span tagging as transduction.
//
// The input is one encoder step per word; the target holds only begin and end
// tags, B:L and END:L, emitted at the steps of the span's first and last
// words. Within one step, tags closing earlier spans come first, then begin
// tags, then the end tags of one-word spans; ties go by label.

#ifndef RNNT_TAGGER_H_
#define RNNT_TAGGER_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rnnt/decoder.h"
#include "rnnt/metrics.h"
#include "rnnt/model.h"
#include "rnnt/trellis.h"

namespace rnnt {

class TagVocab {
 public:
  TagVocab() = default;
  // Labels are sorted and deduplicated. Token order: B:L, END:L per label,
  // then blank.
  static TagVocab FromLabels(std::vector<std::string> labels);
  // Rebuilds from a token list such as a model's vocab.
  static TagVocab FromTokens(const std::vector<std::string> &tokens);

  const std::vector<std::string> &labels() const { return labels_; }
  std::vector<std::string> tokens() const;
  int size() const { return 2 * static_cast<int>(labels_.size()) + 1; }
  int blank() const { return size() - 1; }
  int BeginId(std::string_view label) const;  // throws kVocab
  int EndId(std::string_view label) const;
  bool IsBegin(int id) const { return id < blank() && id % 2 == 0; }
  bool IsEnd(int id) const { return id < blank() && id % 2 == 1; }
  const std::string &LabelOf(int id) const { return labels_.at(id / 2); }

 private:
  int LabelIndex(std::string_view label) const;
  std::vector<std::string> labels_;
};

// Throws kAnnotation for out-of-range or same-label overlapping spans and
// kVocab for unknown labels.
void ValidateSpans(int words, const std::vector<TagSpan> &spans,
                   const TagVocab &vocab);

struct TagTarget {
  std::vector<int> symbols;
  AlignmentPath path;
  std::vector<int> emit_times;  // word step per symbol
};

TagTarget AnnotationToPath(int words, const std::vector<TagSpan> &spans,
                           const TagVocab &vocab);

struct DecodedSpans {
  std::vector<TagSpan> spans;  // sorted
  int dropped = 0;             // unpaired tags
};

// Pairs each B:L with the next END:L; emission steps are word indices.
DecodedSpans DecodeSpans(const Hypothesis &hyp, const TagVocab &vocab);

struct TagSentence {
  std::string id;
  std::vector<std::string> words;
  std::vector<TagSpan> spans;
};

// Annotation JSONL: {"id", "words", "spans": [{"label", "start", "end"}]}.
std::string TagSentenceToJsonLine(const TagSentence &s);
TagSentence TagSentenceFromJsonLine(std::string_view line);  // kData
void WriteTagCorpus(const std::string &path,
                    const std::vector<TagSentence> &corpus);
std::vector<TagSentence> ReadTagCorpus(const std::string &path);

// Synthetic task. Each span opens with a marker word right after a context
// word; the marker fixes the span length, and the (context, marker) pair
// fixes the label.
struct TaggingTaskSpec {
  std::uint64_t seed = 5;
  int n_sentences = 200;
  int first_index = 0;
  int seq_len = 50;         // words per sentence
  int filler_words = 60;
  int markers = 4;
  int contexts = 3;
  double span_rate = 0.08;  // chance of starting a span at each free word
  int max_span_len = 3;
};

nlohmann::json TaggingTaskSpecToJson(const TaggingTaskSpec &spec);
TaggingTaskSpec TaggingTaskSpecFromJson(const nlohmann::json &j);
void ValidateTaggingTaskSpec(const TaggingTaskSpec &spec);  // kSpec

std::vector<std::string> TaggingLabels();
std::vector<TagSentence> GenerateTaggingTask(const TaggingTaskSpec &spec);

// Deterministic pseudo-random word vectors; the text front-end.
ag::Mat EmbedWords(const std::vector<std::string> &words, int dim,
                   std::uint64_t seed);

struct TaggerOptions {
  Objective objective = Objective::kFixedAlignment;
  EncodeMode mode = EncodeMode::kNonStreaming;
  int steps = 200;
  int batch_size = 8;
  AdamConfig adam;
  int threads = 1;
  std::uint64_t seed = 1;     // batch order
  std::uint64_t embed_seed = 7;
};

// Requires subsample_factor == 1 and a vocab equal to `vocab.tokens()`.
// Returns the mean loss of the last step.
double TrainTagger(Parameters &params, const TagVocab &vocab,
                   const std::vector<TagSentence> &corpus,
                   const TaggerOptions &options);

std::vector<TagSpan> TagWords(const Parameters &params, const TagVocab &vocab,
                              const std::vector<std::string> &words,
                              const TaggerOptions &options,
                              int *dropped = nullptr);

struct TaggerEvaluation {
  F1Counts exact;
  std::map<std::string, F1Counts> per_ontology;
  int dropped = 0;
};

TaggerEvaluation EvaluateTagger(const Parameters &params,
                                const TagVocab &vocab,
                                const std::vector<TagSentence> &corpus,
                                const TaggerOptions &options);

}  // namespace rnnt

#endif  // RNNT_TAGGER_H_
