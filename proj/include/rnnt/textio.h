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

// Decorated transcripts and the rich token inventory.
//
// Serialized grammar (tokens separated by single spaces):
//
//   transcript := turn*
//   turn       := speaker word+          (speaker differs from previous turn)
//   word       := ["<cap>"] text [punct]
//   speaker    := "<spk:dr>" | "<spk:pt>" | "<spk:cg>" | "<spk:other>"
//   punct      := "." | "," | "?"
//
// Example: "<spk:dr> <cap> hello . <spk:pt> yes"
//
// Symbol streams interleave the same rich tokens with base units, and put the
// word boundary token "|" between consecutive words:
//
//   [<spk:dr>, <cap>, h, e, l, l, o, ., |, <spk:pt>, y, e, s]

#ifndef RNNT_TEXTIO_H_
#define RNNT_TEXTIO_H_

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rnnt/autograd.h"

namespace rnnt {

enum class SpeakerRole { kDR = 0, kPT = 1, kCG = 2, kOther = 3 };
inline constexpr int kNumRoles = 4;

enum class Punct { kNone = 0, kPeriod = 1, kComma = 2, kQuestion = 3 };

std::string_view SpeakerToken(SpeakerRole role);
std::string_view PunctToken(Punct punct);  // "" for kNone

inline constexpr std::string_view kCapToken = "<cap>";
inline constexpr std::string_view kWordBoundaryToken = "|";
inline constexpr std::string_view kBlankToken = "<blank>";

struct Word {
  std::string text;  // lower-case surface form
  SpeakerRole role = SpeakerRole::kOther;
  bool capitalized = false;
  Punct punct = Punct::kNone;

  bool operator==(const Word &) const = default;
};

struct DecoratedTranscript {
  std::vector<Word> words;

  bool operator==(const DecoratedTranscript &) const = default;
};

// Errors (kParse) carry the 0-based token position.
DecoratedTranscript ParseDecorated(std::string_view text);
std::string RenderDecorated(const DecoratedTranscript &transcript);

// Word texts with decorations stripped (for alignment).
std::vector<std::string> PlainWords(const DecoratedTranscript &transcript);

enum class SymbolClass { kUnit, kWordBoundary, kSpeaker, kPunct, kCap, kBlank };

// Token inventory in index order: base units, "|", the four speaker tokens,
// ".", ",", "?", "<cap>", and finally blank.
class RichVocab {
 public:
  RichVocab() = default;
  // Builds the full inventory around the given base units.
  static RichVocab FromUnits(std::vector<std::string> units);
  // Rebuilds from an index-ordered token list (e.g. a vocab file). The rich
  // tokens must all be present and blank must be last.
  static RichVocab FromTokens(const std::vector<std::string> &tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int num_labels() const { return size() - 1; }
  int blank() const { return size() - 1; }
  const std::string &token(int id) const { return tokens_.at(id); }
  const std::vector<std::string> &tokens() const { return tokens_; }
  std::optional<int> Find(std::string_view token) const;
  int Id(std::string_view token) const;  // throws kVocab
  SymbolClass Classify(int id) const { return classes_.at(id); }
  bool IsUnit(int id) const { return Classify(id) == SymbolClass::kUnit; }
  int SpeakerId(SpeakerRole role) const;
  int PunctId(Punct punct) const;
  int cap_id() const { return Id(kCapToken); }
  int boundary_id() const { return Id(kWordBoundaryToken); }
  std::vector<std::string> units() const;
  int max_unit_length() const { return max_unit_length_; }

  bool operator==(const RichVocab &other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<SymbolClass> classes_;
  std::unordered_map<std::string, int> index_;
  int max_unit_length_ = 0;
};

// Vocab file: one token per line, index = line number, blank last.
void WriteVocabFile(const std::string &path,
                    const std::vector<std::string> &tokens);
std::vector<std::string> ReadVocabFile(const std::string &path);

// Canonical symbol stream. Word texts are segmented greedily by longest
// matching unit. Throws kVocab for unrepresentable characters.
std::vector<int> ToSymbols(const DecoratedTranscript &transcript,
                           const RichVocab &vocab);

// Strict inverse of ToSymbols; throws kParse on streams outside the grammar.
DecoratedTranscript FromSymbols(const std::vector<int> &symbols,
                                const RichVocab &vocab);

// Tolerant reconstruction for decoder output. Words seen before any speaker
// token get `default_role`; a dangling <cap> or orphan punctuation is dropped.
// When `word_of_symbol` is non-null it receives, per input symbol, the index
// of the word a unit symbol belongs to (or -1 for non-unit symbols).
DecoratedTranscript FromSymbolsLenient(
    const std::vector<int> &symbols, const RichVocab &vocab,
    std::vector<int> *word_of_symbol = nullptr,
    SpeakerRole default_role = SpeakerRole::kOther);

// Frame range [begin, end) in input frames.
using FrameRange = std::pair<int, int>;

struct Utterance {
  std::string id;
  ag::Mat frames;  // T x feature_dim
  DecoratedTranscript reference;
  std::vector<FrameRange> segments;  // partition of [0, T) when non-empty
  // Per symbol of the canonical grapheme stream, the input frames it occupies.
  // Symbols without acoustic realization (<cap>) have an empty range placed
  // at the start of the next symbol.
  std::vector<FrameRange> symbol_frames;
};

// Dataset JSONL: {"id", "frames", "reference", "segments", "symbol_frames"}.
// Frames are written as 32-bit reals.
std::string UtteranceToJsonLine(const Utterance &utt);
Utterance UtteranceFromJsonLine(std::string_view line);
void WriteDataset(const std::string &path,
                  const std::vector<Utterance> &utterances);
std::vector<Utterance> ReadDataset(const std::string &path);

// True iff `segments` partition [0, frames) in order.
bool SegmentsPartition(const std::vector<FrameRange> &segments, int frames);

}  // namespace rnnt

#endif  // RNNT_TEXTIO_H_
