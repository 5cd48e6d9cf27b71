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

#include "rnnt/textio.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rnnt/errors.h"
#include "rnnt/synth.h"

namespace rnnt {

namespace {

constexpr SpeakerRole kRoles[] = {SpeakerRole::kDR, SpeakerRole::kPT,
                                  SpeakerRole::kCG, SpeakerRole::kOther};
constexpr Punct kPuncts[] = {Punct::kPeriod, Punct::kComma,
                             Punct::kQuestion};

std::optional<SpeakerRole> SpeakerFromToken(std::string_view token) {
  for (SpeakerRole r : kRoles) {
    if (SpeakerToken(r) == token) return r;
  }
  return std::nullopt;
}

std::optional<Punct> PunctFromToken(std::string_view token) {
  for (Punct p : kPuncts) {
    if (PunctToken(p) == token) return p;
  }
  return std::nullopt;
}

std::vector<std::string_view> SplitSpaces(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\t') ++j;
    if (j > i) out.push_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::string_view SpeakerToken(SpeakerRole role) {
  switch (role) {
    case SpeakerRole::kDR: return "<spk:dr>";
    case SpeakerRole::kPT: return "<spk:pt>";
    case SpeakerRole::kCG: return "<spk:cg>";
    case SpeakerRole::kOther: return "<spk:other>";
  }
  return "";
}

std::string_view PunctToken(Punct punct) {
  switch (punct) {
    case Punct::kNone: return "";
    case Punct::kPeriod: return ".";
    case Punct::kComma: return ",";
    case Punct::kQuestion: return "?";
  }
  return "";
}

DecoratedTranscript ParseDecorated(std::string_view text) {
  DecoratedTranscript out;
  std::optional<SpeakerRole> role;
  bool pending_cap = false;
  bool turn_has_word = true;  // no turn open yet
  std::size_t cap_position = 0;
  const auto tokens = SplitSpaces(text);
  for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
    const std::string_view tok = tokens[pos];
    if (auto spk = SpeakerFromToken(tok)) {
      if (pending_cap) {
        Fail(ErrorKind::kParse, "dangling <cap> at token ", cap_position);
      }
      if (!turn_has_word) {
        Fail(ErrorKind::kParse, "empty turn before token ", pos);
      }
      if (role && *role == *spk) {
        Fail(ErrorKind::kParse, "speaker token at token ", pos,
             " does not change the speaker");
      }
      role = *spk;
      turn_has_word = false;
    } else if (tok == kCapToken) {
      if (pending_cap) {
        Fail(ErrorKind::kParse, "dangling <cap> at token ", cap_position);
      }
      pending_cap = true;
      cap_position = pos;
    } else if (auto p = PunctFromToken(tok)) {
      if (pending_cap) {
        Fail(ErrorKind::kParse, "dangling <cap> at token ", cap_position);
      }
      if (!role || !turn_has_word || out.words.empty() ||
          out.words.back().punct != Punct::kNone) {
        Fail(ErrorKind::kParse, "punctuation at token ", pos,
             " does not follow a word");
      }
      out.words.back().punct = *p;
    } else {
      if (tok.front() == '<' || tok == kWordBoundaryToken) {
        Fail(ErrorKind::kParse, "unknown token '", tok, "' at token ", pos);
      }
      if (!role) {
        Fail(ErrorKind::kParse, "word at token ", pos,
             " precedes any speaker token");
      }
      Word w;
      w.text = std::string(tok);
      w.role = *role;
      w.capitalized = pending_cap;
      out.words.push_back(std::move(w));
      pending_cap = false;
      turn_has_word = true;
    }
  }
  if (pending_cap) {
    Fail(ErrorKind::kParse, "dangling <cap> at token ", cap_position);
  }
  if (!turn_has_word) Fail(ErrorKind::kParse, "transcript ends with empty turn");
  return out;
}

std::string RenderDecorated(const DecoratedTranscript &transcript) {
  std::string out;
  auto append = [&out](std::string_view tok) {
    if (!out.empty()) out.push_back(' ');
    out.append(tok);
  };
  for (std::size_t i = 0; i < transcript.words.size(); ++i) {
    const Word &w = transcript.words[i];
    if (i == 0 || transcript.words[i - 1].role != w.role) {
      append(SpeakerToken(w.role));
    }
    if (w.capitalized) append(kCapToken);
    append(w.text);
    if (w.punct != Punct::kNone) append(PunctToken(w.punct));
  }
  return out;
}

std::vector<std::string> PlainWords(const DecoratedTranscript &transcript) {
  std::vector<std::string> out;
  out.reserve(transcript.words.size());
  for (const Word &w : transcript.words) {
    std::string s = w.text;
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    out.push_back(std::move(s));
  }
  return out;
}

RichVocab RichVocab::FromUnits(std::vector<std::string> units) {
  std::vector<std::string> tokens = std::move(units);
  tokens.emplace_back(kWordBoundaryToken);
  for (SpeakerRole r : kRoles) tokens.emplace_back(SpeakerToken(r));
  for (Punct p : kPuncts) tokens.emplace_back(PunctToken(p));
  tokens.emplace_back(kCapToken);
  tokens.emplace_back(kBlankToken);
  return FromTokens(tokens);
}

RichVocab RichVocab::FromTokens(const std::vector<std::string> &tokens) {
  RichVocab v;
  if (tokens.empty() || tokens.back() != kBlankToken) {
    Fail(ErrorKind::kVocab, "vocabulary must end with ", kBlankToken);
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string &tok = tokens[i];
    if (tok.empty()) Fail(ErrorKind::kVocab, "empty token at index ", i);
    if (!v.index_.emplace(tok, static_cast<int>(i)).second) {
      Fail(ErrorKind::kVocab, "duplicate token '", tok, "'");
    }
    SymbolClass c;
    if (tok == kBlankToken) {
      if (i + 1 != tokens.size()) {
        Fail(ErrorKind::kVocab, "blank must be the last token");
      }
      c = SymbolClass::kBlank;
    } else if (tok == kWordBoundaryToken) {
      c = SymbolClass::kWordBoundary;
    } else if (SpeakerFromToken(tok)) {
      c = SymbolClass::kSpeaker;
    } else if (PunctFromToken(tok)) {
      c = SymbolClass::kPunct;
    } else if (tok == kCapToken) {
      c = SymbolClass::kCap;
    } else {
      if (tok.front() == '<') {
        Fail(ErrorKind::kVocab, "unknown rich token '", tok, "'");
      }
      c = SymbolClass::kUnit;
      v.max_unit_length_ =
          std::max(v.max_unit_length_, static_cast<int>(tok.size()));
    }
    v.tokens_.push_back(tok);
    v.classes_.push_back(c);
  }
  for (SpeakerRole r : kRoles) v.Id(SpeakerToken(r));
  for (Punct p : kPuncts) v.Id(PunctToken(p));
  v.Id(kCapToken);
  v.Id(kWordBoundaryToken);
  return v;
}

std::optional<int> RichVocab::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int RichVocab::Id(std::string_view token) const {
  auto id = Find(token);
  if (!id) Fail(ErrorKind::kVocab, "token '", token, "' not in vocabulary");
  return *id;
}

int RichVocab::SpeakerId(SpeakerRole role) const {
  return Id(SpeakerToken(role));
}

int RichVocab::PunctId(Punct punct) const {
  if (punct == Punct::kNone) Fail(ErrorKind::kVocab, "no token for kNone");
  return Id(PunctToken(punct));
}

std::vector<std::string> RichVocab::units() const {
  std::vector<std::string> out;
  for (int i = 0; i < size(); ++i) {
    if (IsUnit(i)) out.push_back(tokens_[i]);
  }
  return out;
}

void WriteVocabFile(const std::string &path,
                    const std::vector<std::string> &tokens) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kData, "cannot write ", path);
  for (const std::string &t : tokens) out << t << '\n';
}

std::vector<std::string> ReadVocabFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot read ", path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return tokens;
}

std::vector<int> ToSymbols(const DecoratedTranscript &transcript,
                           const RichVocab &vocab) {
  std::vector<int> out;
  for (std::size_t i = 0; i < transcript.words.size(); ++i) {
    const Word &w = transcript.words[i];
    if (i > 0) out.push_back(vocab.boundary_id());
    if (i == 0 || transcript.words[i - 1].role != w.role) {
      out.push_back(vocab.SpeakerId(w.role));
    }
    if (w.capitalized) out.push_back(vocab.cap_id());
    if (w.text.empty()) Fail(ErrorKind::kVocab, "empty word at index ", i);
    std::size_t pos = 0;
    while (pos < w.text.size()) {
      int best = -1;
      std::size_t best_len = 0;
      const std::size_t max_len = std::min<std::size_t>(
          vocab.max_unit_length(), w.text.size() - pos);
      for (std::size_t len = max_len; len >= 1; --len) {
        auto id = vocab.Find(std::string_view(w.text).substr(pos, len));
        if (id && vocab.IsUnit(*id)) {
          best = *id;
          best_len = len;
          break;
        }
      }
      if (best < 0) {
        Fail(ErrorKind::kVocab, "character '", w.text[pos], "' of word '",
             w.text, "' is not representable");
      }
      out.push_back(best);
      pos += best_len;
    }
    if (w.punct != Punct::kNone) out.push_back(vocab.PunctId(w.punct));
  }
  return out;
}

DecoratedTranscript FromSymbols(const std::vector<int> &symbols,
                                const RichVocab &vocab) {
  // Re-render the stream as canonical text, then parse and compare.
  DecoratedTranscript out;
  std::optional<SpeakerRole> role;
  std::size_t i = 0;
  auto bad = [](std::size_t pos, std::string_view what) {
    Fail(ErrorKind::kParse, what, " at symbol ", pos);
  };
  const auto n = symbols.size();
  while (i < n) {
    if (!out.words.empty()) {
      if (vocab.Classify(symbols[i]) != SymbolClass::kWordBoundary) {
        bad(i, "expected word boundary");
      }
      ++i;
      if (i == n) bad(i, "stream ends after word boundary");
    }
    Word w;
    if (vocab.Classify(symbols[i]) == SymbolClass::kSpeaker) {
      const SpeakerRole r = *SpeakerFromToken(vocab.token(symbols[i]));
      if (role && *role == r) bad(i, "redundant speaker token");
      role = r;
      ++i;
    }
    if (!role) bad(i, "word before any speaker token");
    w.role = *role;
    if (i < n && vocab.Classify(symbols[i]) == SymbolClass::kCap) {
      w.capitalized = true;
      ++i;
    }
    while (i < n && vocab.IsUnit(symbols[i])) {
      w.text += vocab.token(symbols[i]);
      ++i;
    }
    if (w.text.empty()) bad(i, "word without units");
    if (i < n && vocab.Classify(symbols[i]) == SymbolClass::kPunct) {
      w.punct = *PunctFromToken(vocab.token(symbols[i]));
      ++i;
    }
    out.words.push_back(std::move(w));
  }
  return out;
}

DecoratedTranscript FromSymbolsLenient(const std::vector<int> &symbols,
                                       const RichVocab &vocab,
                                       std::vector<int> *word_of_symbol,
                                       SpeakerRole default_role) {
  DecoratedTranscript out;
  SpeakerRole role = default_role;
  bool pending_cap = false;
  bool open = false;
  if (word_of_symbol) word_of_symbol->assign(symbols.size(), -1);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const int s = symbols[i];
    switch (vocab.Classify(s)) {
      case SymbolClass::kSpeaker:
        open = false;
        role = *SpeakerFromToken(vocab.token(s));
        break;
      case SymbolClass::kCap:
        open = false;
        pending_cap = true;
        break;
      case SymbolClass::kWordBoundary:
        open = false;
        break;
      case SymbolClass::kPunct:
        if (!out.words.empty() && out.words.back().punct == Punct::kNone &&
            (open || !pending_cap)) {
          out.words.back().punct = *PunctFromToken(vocab.token(s));
        }
        open = false;
        break;
      case SymbolClass::kUnit:
        if (!open) {
          Word w;
          w.role = role;
          w.capitalized = pending_cap;
          out.words.push_back(std::move(w));
          pending_cap = false;
          open = true;
        }
        out.words.back().text += vocab.token(s);
        if (word_of_symbol) {
          (*word_of_symbol)[i] = static_cast<int>(out.words.size()) - 1;
        }
        break;
      case SymbolClass::kBlank:
        break;
    }
  }
  return out;
}

bool SegmentsPartition(const std::vector<FrameRange> &segments, int frames) {
  int cursor = 0;
  for (const auto &[b, e] : segments) {
    if (b != cursor || e <= b) return false;
    cursor = e;
  }
  return cursor == frames;
}

namespace {

using nlohmann::json;

json RangesToJson(const std::vector<FrameRange> &ranges) {
  json arr = json::array();
  for (const auto &[b, e] : ranges) arr.push_back({b, e});
  return arr;
}

std::vector<FrameRange> RangesFromJson(const json &j) {
  std::vector<FrameRange> out;
  for (const auto &r : j) {
    if (!r.is_array() || r.size() != 2) {
      Fail(ErrorKind::kData, "frame range must be a [begin, end] pair");
    }
    out.emplace_back(r[0].get<int>(), r[1].get<int>());
  }
  return out;
}

}  // namespace

std::string UtteranceToJsonLine(const Utterance &utt) {
  json j;
  j["id"] = utt.id;
  json frames = json::array();
  for (Eigen::Index t = 0; t < utt.frames.rows(); ++t) {
    json row = json::array();
    for (Eigen::Index d = 0; d < utt.frames.cols(); ++d) {
      row.push_back(static_cast<float>(utt.frames(t, d)));
    }
    frames.push_back(std::move(row));
  }
  j["frames"] = std::move(frames);
  j["reference"] = RenderDecorated(utt.reference);
  j["segments"] = RangesToJson(utt.segments);
  j["symbol_frames"] = RangesToJson(utt.symbol_frames);
  return j.dump();
}

Utterance UtteranceFromJsonLine(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception &e) {
    Fail(ErrorKind::kData, "invalid JSON line: ", e.what());
  }
  try {
    Utterance utt;
    if (j.contains("synth_ref")) {
      const json &ref = j.at("synth_ref");
      SynthSpec spec = SynthSpecFromJson(ref.at("spec"));
      utt = GenerateConversation(spec, ref.at("index").get<int>());
    }
    utt.id = j.at("id").get<std::string>();
    if (j.contains("frames")) {
      const json &rows = j.at("frames");
      const Eigen::Index T = static_cast<Eigen::Index>(rows.size());
      const Eigen::Index D = T > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
      utt.frames.resize(T, D);
      for (Eigen::Index t = 0; t < T; ++t) {
        if (static_cast<Eigen::Index>(rows[t].size()) != D) {
          Fail(ErrorKind::kData, "ragged frame matrix in ", utt.id);
        }
        for (Eigen::Index d = 0; d < D; ++d) {
          utt.frames(t, d) = static_cast<float>(rows[t][d].get<double>());
        }
      }
    }
    if (j.contains("reference")) {
      utt.reference = ParseDecorated(j.at("reference").get<std::string>());
    }
    if (j.contains("segments")) utt.segments = RangesFromJson(j.at("segments"));
    if (j.contains("symbol_frames")) {
      utt.symbol_frames = RangesFromJson(j.at("symbol_frames"));
    }
    if (!utt.segments.empty() &&
        !SegmentsPartition(utt.segments, static_cast<int>(utt.frames.rows()))) {
      Fail(ErrorKind::kData, "segments of ", utt.id,
           " do not partition the frames");
    }
    return utt;
  } catch (const json::exception &e) {
    Fail(ErrorKind::kData, "malformed utterance: ", e.what());
  }
}

void WriteDataset(const std::string &path,
                  const std::vector<Utterance> &utterances) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kData, "cannot write ", path);
  for (const Utterance &u : utterances) out << UtteranceToJsonLine(u) << '\n';
}

std::vector<Utterance> ReadDataset(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot read ", path);
  std::vector<Utterance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(UtteranceFromJsonLine(line));
  }
  return out;
}

}  // namespace rnnt
