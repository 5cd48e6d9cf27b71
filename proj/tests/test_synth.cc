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

#include "rnnt/synth.h"

#include <cmath>
#include <map>
#include <tuple>

#include "doctest.h"
#include "rnnt/errors.h"
#include "rnnt/trellis.h"

namespace rnnt {
namespace {

SynthSpec Small() {
  SynthSpec s;
  s.seed = 3;
  s.n_conversations = 20;
  s.feature_dim = 6;
  return s;
}

TEST_CASE("generation is deterministic and per-index independent") {
  const SynthSpec s = Small();
  const auto a = GenerateSynthetic(s);
  const auto b = GenerateSynthetic(s);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(UtteranceToJsonLine(a[i]) == UtteranceToJsonLine(b[i]));
  }
  SynthSpec later = s;
  later.first_index = 7;
  later.n_conversations = 3;
  const auto c = GenerateSynthetic(later);
  CHECK(UtteranceToJsonLine(c[0]) == UtteranceToJsonLine(a[7]));

  SynthSpec other = s;
  other.seed = 4;
  CHECK(UtteranceToJsonLine(GenerateConversation(other, 0)) !=
        UtteranceToJsonLine(a[0]));
}

TEST_CASE("noise-free frames depend only on symbol and role") {
  SynthSpec s = Small();
  s.noise_sigma = 0.0;
  const RichVocab v = SynthGraphemeVocab(s);
  std::map<std::pair<int, int>, ag::Mat> seen;
  int compared = 0;
  for (const auto &u : GenerateSynthetic(s)) {
    const auto symbols = ToSymbols(u.reference, v);
    REQUIRE(symbols.size() == u.symbol_frames.size());
    int word = 0;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      // The boundary still carries the previous word's speaker.
      const int role = static_cast<int>(u.reference.words[word].role);
      if (v.Classify(symbols[i]) == SymbolClass::kWordBoundary) ++word;
      const auto [b, e] = u.symbol_frames[i];
      if (b == e) continue;
      for (int t = b; t < e; ++t) {
        const ag::Mat row = u.frames.row(t);
        auto [it, inserted] =
            seen.emplace(std::make_pair(symbols[i], role), row);
        if (!inserted) {
          CHECK(it->second == row);
          ++compared;
        }
      }
    }
  }
  CHECK(compared > 100);
}

TEST_CASE("punctuation frequencies match the configured probabilities") {
  // Fixed clause length makes the clause count recoverable from the words.
  SynthSpec s = Small();
  s.clause_len_min = s.clause_len_max = 3;
  s.n_conversations = 400;
  std::map<Punct, int> count;
  int clauses = 0;
  for (int i = 0; clauses < 1000; ++i) {
    const auto u = GenerateConversation(s, i);
    REQUIRE(u.reference.words.size() % 3 == 0);
    for (std::size_t w = 2; w < u.reference.words.size(); w += 3) {
      ++count[u.reference.words[w].punct];
      ++clauses;
      CHECK(u.reference.words[w - 1].punct == Punct::kNone);
      CHECK(u.reference.words[w - 2].punct == Punct::kNone);
    }
  }
  const double none = 1.0 - s.punct_period - s.punct_comma - s.punct_question;
  for (auto [p, prob] : {std::pair{Punct::kPeriod, s.punct_period},
                         std::pair{Punct::kComma, s.punct_comma},
                         std::pair{Punct::kQuestion, s.punct_question},
                         std::pair{Punct::kNone, none}}) {
    const double mean = clauses * prob;
    const double sigma = std::sqrt(clauses * prob * (1.0 - prob));
    CHECK(std::abs(count[p] - mean) <= 3.0 * sigma);
  }
}

TEST_CASE("capitalization follows sentence ends") {
  for (const auto &u : GenerateSynthetic(Small())) {
    const auto &w = u.reference.words;
    REQUIRE(!w.empty());
    CHECK(w[0].capitalized);
    for (std::size_t i = 1; i < w.size(); ++i) {
      const bool after_end =
          w[i - 1].punct == Punct::kPeriod || w[i - 1].punct == Punct::kQuestion;
      CHECK(w[i].capitalized == after_end);
    }
  }
}

TEST_CASE("alignments, segments and frame counts are consistent") {
  SynthSpec s = Small();
  const RichVocab v = SynthGraphemeVocab(s);
  for (const auto &u : GenerateSynthetic(s)) {
    const int T = static_cast<int>(u.frames.rows());
    CHECK(u.frames.cols() == s.feature_dim);
    CHECK(SegmentsPartition(u.segments, T));
    const auto symbols = ToSymbols(u.reference, v);
    int cursor = 0;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      const auto [b, e] = u.symbol_frames[i];
      CHECK(b == cursor);
      const int n = e - b;
      if (v.Classify(symbols[i]) == SymbolClass::kCap) {
        CHECK(n == 0);
      } else {
        CHECK(n >= s.frames_per_symbol_min);
        CHECK(n <= s.frames_per_symbol_max);
      }
      cursor = e;
    }
    CHECK(cursor == T);

    // Emitting every symbol at its last frame is a valid alignment path.
    AlignmentPath path;
    int frame = 0;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      const int at = std::max(u.symbol_frames[i].second - 1, 0);
      while (frame < at) {
        path.push_back(Move::Blank());
        ++frame;
      }
      path.push_back(Move::Label(static_cast<int>(i)));
    }
    while (frame < T) {
      path.push_back(Move::Blank());
      ++frame;
    }
    CHECK(ValidatePath(path, T, static_cast<int>(symbols.size())));
  }
}

TEST_CASE("spec validation and json") {
  SynthSpec s = Small();
  s.vocab_size = 1;
  CHECK_THROWS_AS(GenerateSynthetic(s), Error);
  try {
    ValidateSynthSpec(s);
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kSpec);
  }
  s = Small();
  s.punct_period = 0.9;
  CHECK_THROWS_AS(ValidateSynthSpec(s), Error);

  const SynthSpec back = SynthSpecFromJson(SynthSpecToJson(Small()));
  CHECK(SynthSpecToJson(back) == SynthSpecToJson(Small()));
  CHECK_THROWS_AS(SynthSpecFromJson(nlohmann::json{{"bogus", 1}}), Error);
}

TEST_CASE("merged vocabulary adds frequent bigrams") {
  const SynthSpec s = Small();
  const auto data = GenerateSynthetic(s);
  const RichVocab g = SynthGraphemeVocab(s);
  const RichVocab m = SynthMergedVocab(s, data, 50);
  CHECK(static_cast<int>(g.units().size()) == s.vocab_size);
  CHECK(m.units().size() > g.units().size());
  CHECK(m.units().size() <= g.units().size() + 50);
  for (const auto &u : data) {
    const auto gs = ToSymbols(u.reference, g);
    const auto ms = ToSymbols(u.reference, m);
    CHECK(ms.size() <= gs.size());
    CHECK(FromSymbols(ms, m) == u.reference);
  }
}

}  // namespace
}  // namespace rnnt
