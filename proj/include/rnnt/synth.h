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

// Deterministic synthetic conversations.
//
// A conversation is a sequence of speaker turns; a turn is a sequence of
// clauses; each clause ends with punctuation drawn from the configured
// probabilities. The first word of the conversation and every word following
// '.' or '?' is capitalized. Every symbol of the grapheme stream except <cap>
// produces 2-4 frames drawn around a per-symbol mean plus a per-role offset:
//
//   frame = mu[symbol] + nu[role] + N(0, noise_sigma^2 I)
//
// Speaker tokens share a turn-change mean, so the role itself is only visible
// through the per-role offset.

#ifndef RNNT_SYNTH_H_
#define RNNT_SYNTH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "rnnt/textio.h"

namespace rnnt {

struct SynthSpec {
  std::uint64_t seed = 17;
  int n_conversations = 100;
  int first_index = 0;  // conversations [first_index, first_index + n)
  int vocab_size = 10;  // number of base letters
  int speakers = 4;     // roles in use, 2..4
  int feature_dim = 16;
  double noise_sigma = 0.5;
  int clause_len_min = 2;
  int clause_len_max = 4;
  double punct_period = 0.4;
  double punct_comma = 0.25;
  double punct_question = 0.15;
  // Probability that a turn ends after each clause.
  double turn_len_geometric_p = 0.5;
  int max_clauses_per_turn = 4;
  int frames_per_symbol_min = 2;
  int frames_per_symbol_max = 4;
  int turns_min = 2;
  int turns_max = 4;
  int lexicon_size = 40;
  int word_len_min = 2;
  int word_len_max = 4;
  double speaker_offset = 0.3;
  int segments_min = 2;
  int segments_max = 4;
};

nlohmann::json SynthSpecToJson(const SynthSpec &spec);
// Missing keys keep their defaults; unknown keys are rejected.
SynthSpec SynthSpecFromJson(const nlohmann::json &j);

// Throws kSpec for invalid specs (vocab_size < 2, empty ranges, ...).
void ValidateSynthSpec(const SynthSpec &spec);

std::vector<Utterance> GenerateSynthetic(const SynthSpec &spec);
// Conversation number `index`; independent of every other index.
Utterance GenerateConversation(const SynthSpec &spec, int index);

// The word list shared by every conversation of a given seed.
std::vector<std::string> SynthLexicon(const SynthSpec &spec);

RichVocab SynthGraphemeVocab(const SynthSpec &spec);
// Graphemes plus the `merges` most frequent within-word bigrams of the given
// transcripts (ties broken lexicographically).
RichVocab SynthMergedVocab(const SynthSpec &spec,
                           const std::vector<Utterance> &utterances,
                           int merges = 50);

}  // namespace rnnt

#endif  // RNNT_SYNTH_H_
