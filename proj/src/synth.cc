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

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>

#include "rnnt/errors.h"
#include "rnnt/params.h"

namespace rnnt {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    SynthSpec, seed, n_conversations, first_index, vocab_size, speakers,
    feature_dim, noise_sigma, clause_len_min, clause_len_max, punct_period,
    punct_comma, punct_question, turn_len_geometric_p, max_clauses_per_turn,
    frames_per_symbol_min, frames_per_symbol_max, turns_min, turns_max,
    lexicon_size, word_len_min, word_len_max, speaker_offset, segments_min,
    segments_max)

nlohmann::json SynthSpecToJson(const SynthSpec &spec) { return spec; }

SynthSpec SynthSpecFromJson(const nlohmann::json &j) {
  if (!j.is_object()) Fail(ErrorKind::kSpec, "synthetic spec must be an object");
  const nlohmann::json defaults = SynthSpec{};
  for (const auto &[key, value] : j.items()) {
    if (!defaults.contains(key)) {
      Fail(ErrorKind::kSpec, "unknown synthetic spec key '", key, "'");
    }
  }
  try {
    return j.get<SynthSpec>();
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kSpec, "bad synthetic spec: ", e.what());
  }
}

void ValidateSynthSpec(const SynthSpec &s) {
  auto require = [](bool ok, const char *what) {
    if (!ok) Fail(ErrorKind::kSpec, what);
  };
  require(s.vocab_size >= 2, "vocab_size must be >= 2");
  require(s.vocab_size <= 26, "vocab_size must be <= 26");
  require(s.n_conversations >= 0, "n_conversations must be >= 0");
  require(s.first_index >= 0, "first_index must be >= 0");
  require(s.speakers >= 2 && s.speakers <= kNumRoles, "speakers must be 2..4");
  require(s.feature_dim >= 1, "feature_dim must be >= 1");
  require(s.noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(s.clause_len_min >= 1 && s.clause_len_min <= s.clause_len_max,
          "clause_len range is empty");
  require(s.punct_period >= 0 && s.punct_comma >= 0 && s.punct_question >= 0 &&
              s.punct_period + s.punct_comma + s.punct_question <= 1.0 + 1e-12,
          "punctuation probabilities must be non-negative and sum to <= 1");
  require(s.turn_len_geometric_p > 0.0 && s.turn_len_geometric_p <= 1.0,
          "turn_len_geometric_p must be in (0, 1]");
  require(s.max_clauses_per_turn >= 1, "max_clauses_per_turn must be >= 1");
  require(s.frames_per_symbol_min >= 1 &&
              s.frames_per_symbol_min <= s.frames_per_symbol_max,
          "frames_per_symbol range is empty");
  require(s.turns_min >= 1 && s.turns_min <= s.turns_max,
          "turns range is empty");
  require(s.word_len_min >= 1 && s.word_len_min <= s.word_len_max,
          "word_len range is empty");
  require(s.lexicon_size >= 1, "lexicon_size must be >= 1");
  require(s.segments_min >= 1 && s.segments_min <= s.segments_max,
          "segments range is empty");
  require(s.speaker_offset >= 0.0, "speaker_offset must be >= 0");
}

namespace {

// Stream ids for the independent random streams derived from the seed.
constexpr std::uint64_t kLexiconStream = 0x1e71c0;
constexpr std::uint64_t kAcousticStream = 0xac0057;
constexpr std::uint64_t kConversationStream = 0xc0c0;

std::string Letter(int i) { return std::string(1, static_cast<char>('a' + i)); }

// Acoustic means per emitting grapheme-stream token, plus per-role offsets.
struct AcousticModel {
  std::map<std::string, Eigen::VectorXd> means;
  Eigen::VectorXd turn_cue;
  std::vector<Eigen::VectorXd> role_offsets;
};

AcousticModel BuildAcoustics(const SynthSpec &spec) {
  std::mt19937_64 rng(MixSeed(spec.seed, kAcousticStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](double scale) {
    Eigen::VectorXd v(spec.feature_dim);
    for (int d = 0; d < spec.feature_dim; ++d) v(d) = scale * normal(rng);
    return v;
  };
  AcousticModel m;
  for (int i = 0; i < spec.vocab_size; ++i) m.means[Letter(i)] = draw(1.0);
  m.means[std::string(kWordBoundaryToken)] = draw(1.0);
  // Punctuation marks share a pause component.
  const Eigen::VectorXd pause = draw(1.0);
  for (Punct p : {Punct::kPeriod, Punct::kComma, Punct::kQuestion}) {
    m.means[std::string(PunctToken(p))] = 0.7 * pause + draw(0.7);
  }
  m.turn_cue = draw(1.0);
  for (int r = 0; r < kNumRoles; ++r) {
    m.role_offsets.push_back(draw(spec.speaker_offset));
  }
  return m;
}

std::vector<double> ZipfWeights(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 1.0 / std::pow(i + 1.0, 0.8);
  return w;
}

}  // namespace

std::vector<std::string> SynthLexicon(const SynthSpec &spec) {
  ValidateSynthSpec(spec);
  std::mt19937_64 rng(MixSeed(spec.seed, kLexiconStream));
  std::uniform_int_distribution<int> len_dist(spec.word_len_min,
                                              spec.word_len_max);
  std::uniform_int_distribution<int> letter_dist(0, spec.vocab_size - 1);
  std::set<std::string> seen;
  std::vector<std::string> words;
  int attempts = 0;
  while (static_cast<int>(words.size()) < spec.lexicon_size) {
    if (++attempts > 100000) {
      Fail(ErrorKind::kSpec, "cannot draw ", spec.lexicon_size,
           " distinct words from ", spec.vocab_size, " letters");
    }
    const int len = len_dist(rng);
    std::string w;
    while (static_cast<int>(w.size()) < len) {
      const char c = static_cast<char>('a' + letter_dist(rng));
      // Repeated letters would be acoustically indistinguishable from one
      // long letter.
      if (!w.empty() && w.back() == c) continue;
      w.push_back(c);
    }
    if (seen.insert(w).second) words.push_back(w);
  }
  return words;
}

RichVocab SynthGraphemeVocab(const SynthSpec &spec) {
  std::vector<std::string> units;
  for (int i = 0; i < spec.vocab_size; ++i) units.push_back(Letter(i));
  return RichVocab::FromUnits(units);
}

RichVocab SynthMergedVocab(const SynthSpec &spec,
                           const std::vector<Utterance> &utterances,
                           int merges) {
  std::map<std::string, long> counts;
  for (const Utterance &u : utterances) {
    for (const Word &w : u.reference.words) {
      for (std::size_t i = 0; i + 1 < w.text.size(); ++i) {
        ++counts[w.text.substr(i, 2)];
      }
    }
  }
  std::vector<std::pair<std::string, long>> ranked(counts.begin(),
                                                   counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) {
                     return a.second > b.second;
                   });
  std::vector<std::string> units;
  for (int i = 0; i < spec.vocab_size; ++i) units.push_back(Letter(i));
  for (int i = 0; i < merges && i < static_cast<int>(ranked.size()); ++i) {
    units.push_back(ranked[i].first);
  }
  return RichVocab::FromUnits(units);
}

Utterance GenerateConversation(const SynthSpec &spec, int index) {
  ValidateSynthSpec(spec);
  const std::vector<std::string> lexicon = SynthLexicon(spec);
  const AcousticModel acoustics = BuildAcoustics(spec);
  const RichVocab vocab = SynthGraphemeVocab(spec);

  std::mt19937_64 rng(MixSeed(spec.seed ^ kConversationStream,
                              static_cast<std::uint64_t>(index)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  const std::vector<double> zipf = ZipfWeights(spec.lexicon_size);
  std::discrete_distribution<int> word_dist(zipf.begin(), zipf.end());

  Utterance utt;
  char id[32];
  std::snprintf(id, sizeof(id), "conv-%06d", index);
  utt.id = id;

  // Text.
  const int turns = uniform_int(spec.turns_min, spec.turns_max);
  int role = uniform_int(0, spec.speakers - 1);
  bool capitalize_next = true;
  for (int turn = 0; turn < turns; ++turn) {
    if (turn > 0) {
      int next = uniform_int(0, spec.speakers - 2);
      if (next >= role) ++next;
      role = next;
    }
    int clauses = 0;
    do {
      const int len = uniform_int(spec.clause_len_min, spec.clause_len_max);
      for (int k = 0; k < len; ++k) {
        Word w;
        w.text = lexicon[word_dist(rng)];
        w.role = static_cast<SpeakerRole>(role);
        w.capitalized = capitalize_next;
        capitalize_next = false;
        utt.reference.words.push_back(std::move(w));
      }
      const double draw = unit(rng);
      Punct p = Punct::kNone;
      if (draw < spec.punct_period) {
        p = Punct::kPeriod;
      } else if (draw < spec.punct_period + spec.punct_comma) {
        p = Punct::kComma;
      } else if (draw <
                 spec.punct_period + spec.punct_comma + spec.punct_question) {
        p = Punct::kQuestion;
      }
      utt.reference.words.back().punct = p;
      capitalize_next = p == Punct::kPeriod || p == Punct::kQuestion;
      ++clauses;
    } while (clauses < spec.max_clauses_per_turn &&
             unit(rng) >= spec.turn_len_geometric_p);
  }

  // Acoustics.
  const std::vector<int> symbols = ToSymbols(utt.reference, vocab);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  std::vector<Eigen::VectorXd> frames;
  std::vector<int> word_start_frame;
  int current_role = 0;
  std::size_t word = 0;
  for (int s : symbols) {
    const SymbolClass cls = vocab.Classify(s);
    const int begin = static_cast<int>(frames.size());
    if (cls == SymbolClass::kWordBoundary) {
      ++word;
    }
    if (word_start_frame.size() <= word && cls != SymbolClass::kWordBoundary) {
      word_start_frame.push_back(begin);
    }
    if (cls == SymbolClass::kSpeaker) {
      current_role = static_cast<int>(utt.reference.words[word].role);
    }
    if (cls == SymbolClass::kCap) {
      utt.symbol_frames.emplace_back(begin, begin);
      continue;
    }
    const Eigen::VectorXd &mean = cls == SymbolClass::kSpeaker
                                      ? acoustics.turn_cue
                                      : acoustics.means.at(vocab.token(s));
    const int n = uniform_int(spec.frames_per_symbol_min,
                              spec.frames_per_symbol_max);
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd f = mean + acoustics.role_offsets[current_role];
      if (spec.noise_sigma > 0.0) {
        for (int d = 0; d < spec.feature_dim; ++d) f(d) += noise(rng);
      }
      frames.push_back(std::move(f));
    }
    utt.symbol_frames.emplace_back(begin, static_cast<int>(frames.size()));
  }
  utt.frames.resize(static_cast<Eigen::Index>(frames.size()), spec.feature_dim);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (int d = 0; d < spec.feature_dim; ++d) {
      // Stored values are exactly representable as 32-bit reals, so a
      // dataset file round-trips bit for bit.
      utt.frames(t, d) = static_cast<float>(frames[t](d));
    }
  }

  // Segments split at word starts.
  const int total = static_cast<int>(frames.size());
  const int n_words = static_cast<int>(utt.reference.words.size());
  const int n_segments =
      std::min(uniform_int(spec.segments_min, spec.segments_max), n_words);
  std::vector<int> candidates;
  for (int w = 1; w < n_words; ++w) candidates.push_back(w);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(std::max(0, n_segments - 1));
  std::sort(candidates.begin(), candidates.end());
  int cursor = 0;
  for (int w : candidates) {
    const int start = word_start_frame[w];
    utt.segments.emplace_back(cursor, start);
    cursor = start;
  }
  utt.segments.emplace_back(cursor, total);
  return utt;
}

std::vector<Utterance> GenerateSynthetic(const SynthSpec &spec) {
  ValidateSynthSpec(spec);
  std::vector<Utterance> out;
  out.reserve(spec.n_conversations);
  for (int i = 0; i < spec.n_conversations; ++i) {
    out.push_back(GenerateConversation(spec, spec.first_index + i));
  }
  return out;
}

}  // namespace rnnt
