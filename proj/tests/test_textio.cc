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

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "doctest.h"
#include "rnnt/errors.h"

namespace rnnt {
namespace {

std::string MessageOf(const std::function<void()> &f, ErrorKind want) {
  try {
    f();
  } catch (const Error &e) {
    CHECK(e.kind() == want);
    return e.what();
  }
  FAIL("no error raised");
  return "";
}

RichVocab Letters() {
  return RichVocab::FromUnits({"a", "b", "c", "d", "e", "h", "i", "l", "o",
                               "s", "y"});
}

DecoratedTranscript RandomTranscript(std::mt19937_64 &rng,
                                     const std::vector<std::string> &letters) {
  std::uniform_int_distribution<int> n_words(0, 12);
  std::uniform_int_distribution<int> len(1, 5);
  std::uniform_int_distribution<int> letter(0, letters.size() - 1);
  std::uniform_int_distribution<int> role(0, kNumRoles - 1);
  std::uniform_int_distribution<int> punct(0, 3);
  std::bernoulli_distribution flip(0.3);
  DecoratedTranscript t;
  const int n = n_words(rng);
  SpeakerRole current = static_cast<SpeakerRole>(role(rng));
  for (int i = 0; i < n; ++i) {
    if (flip(rng)) current = static_cast<SpeakerRole>(role(rng));
    Word w;
    const int l = len(rng);
    for (int k = 0; k < l; ++k) w.text += letters[letter(rng)];
    w.role = current;
    w.capitalized = flip(rng);
    w.punct = static_cast<Punct>(punct(rng));
    t.words.push_back(w);
  }
  return t;
}

TEST_CASE("parse example") {
  const auto t = ParseDecorated("<spk:dr> <cap> hello . <spk:pt> yes");
  REQUIRE(t.words.size() == 2);
  CHECK(t.words[0] == Word{"hello", SpeakerRole::kDR, true, Punct::kPeriod});
  CHECK(t.words[1] == Word{"yes", SpeakerRole::kPT, false, Punct::kNone});
}

TEST_CASE("parse errors carry positions") {
  auto msg = MessageOf([] { ParseDecorated("<cap> <spk:dr> hi"); },
                       ErrorKind::kParse);
  CHECK(msg.find("dangling <cap> at token 0") != std::string::npos);
  msg = MessageOf([] { ParseDecorated("hi there"); }, ErrorKind::kParse);
  CHECK(msg.find("token 0") != std::string::npos);
  msg = MessageOf([] { ParseDecorated("<spk:dr> hi <spk:zz> x"); },
                  ErrorKind::kParse);
  CHECK(msg.find("token 2") != std::string::npos);
  MessageOf([] { ParseDecorated("<spk:dr> hi <cap>"); }, ErrorKind::kParse);
  MessageOf([] { ParseDecorated("<spk:dr> ."); }, ErrorKind::kParse);
  MessageOf([] { ParseDecorated("<spk:dr> hi . ,"); }, ErrorKind::kParse);
  MessageOf([] { ParseDecorated("<spk:dr> <spk:pt> hi"); }, ErrorKind::kParse);
  MessageOf([] { ParseDecorated("<spk:dr> hi <spk:dr> yo"); },
            ErrorKind::kParse);
  MessageOf([] { ParseDecorated("<spk:dr> a | b"); }, ErrorKind::kParse);
}

TEST_CASE("render examples") {
  CHECK(RenderDecorated({}) == "");
  DecoratedTranscript two;
  two.words = {{"a", SpeakerRole::kDR, false, Punct::kNone},
               {"b", SpeakerRole::kDR, false, Punct::kNone}};
  CHECK(RenderDecorated(two) == "<spk:dr> a b");
  DecoratedTranscript one;
  one.words = {{"word", SpeakerRole::kCG, true, Punct::kPeriod}};
  CHECK(RenderDecorated(one) == "<spk:cg> <cap> word .");
  CHECK(ParseDecorated("") == DecoratedTranscript{});
}

TEST_CASE("grammar round trip on random transcripts") {
  std::mt19937_64 rng(5);
  const auto letters = Letters().units();
  for (int trial = 0; trial < 10000; ++trial) {
    const auto t = RandomTranscript(rng, letters);
    const std::string text = RenderDecorated(t);
    REQUIRE(ParseDecorated(text) == t);
    REQUIRE(RenderDecorated(ParseDecorated(text)) == text);
  }
}

TEST_CASE("to_symbols examples") {
  const RichVocab v = Letters();
  DecoratedTranscript t;
  t.words = {{"hi", SpeakerRole::kDR, false, Punct::kPeriod}};
  CHECK(ToSymbols(t, v) == std::vector<int>{v.SpeakerId(SpeakerRole::kDR),
                                            v.Id("h"), v.Id("i"),
                                            v.PunctId(Punct::kPeriod)});
  const RichVocab merged = RichVocab::FromUnits({"h", "i", "s", "hi"});
  CHECK(ToSymbols(t, merged) ==
        std::vector<int>{merged.SpeakerId(SpeakerRole::kDR), merged.Id("hi"),
                         merged.PunctId(Punct::kPeriod)});
  t.words.push_back({"his", SpeakerRole::kDR, true, Punct::kNone});
  CHECK(ToSymbols(t, merged) ==
        std::vector<int>{merged.SpeakerId(SpeakerRole::kDR), merged.Id("hi"),
                         merged.PunctId(Punct::kPeriod), merged.boundary_id(),
                         merged.cap_id(), merged.Id("hi"), merged.Id("s")});
  t.words[0].text = "hz";
  MessageOf([&] { ToSymbols(t, v); }, ErrorKind::kVocab);
}

TEST_CASE("symbolization round trip, grapheme and merged units") {
  std::mt19937_64 rng(9);
  const RichVocab graphemes = Letters();
  auto units = graphemes.units();
  for (const char *m : {"he", "ll", "lo", "hel", "ya", "ss"}) units.push_back(m);
  const RichVocab merged = RichVocab::FromUnits(units);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto t = RandomTranscript(rng, graphemes.units());
    for (const RichVocab *v : {&graphemes, &merged}) {
      const auto symbols = ToSymbols(t, *v);
      REQUIRE(FromSymbols(symbols, *v) == t);
      REQUIRE(FromSymbolsLenient(symbols, *v) == t);
    }
  }
}

TEST_CASE("strict inverse rejects streams outside the grammar") {
  const RichVocab v = Letters();
  const int a = v.Id("a");
  const int dr = v.SpeakerId(SpeakerRole::kDR);
  MessageOf([&] { FromSymbols({a}, v); }, ErrorKind::kParse);
  MessageOf([&] { FromSymbols({dr, a, a, dr, a}, v); }, ErrorKind::kParse);
  MessageOf([&] { FromSymbols({dr, a, v.boundary_id()}, v); },
            ErrorKind::kParse);
  MessageOf([&] { FromSymbols({dr, v.cap_id()}, v); }, ErrorKind::kParse);
}

TEST_CASE("lenient inverse tolerates decoder output") {
  const RichVocab v = Letters();
  const int a = v.Id("a"), b = v.Id("b");
  std::vector<int> wos;
  const auto t = FromSymbolsLenient(
      {v.PunctId(Punct::kComma), a, v.cap_id(), v.boundary_id(),
       v.SpeakerId(SpeakerRole::kPT), b, v.PunctId(Punct::kQuestion)},
      v, &wos, SpeakerRole::kCG);
  REQUIRE(t.words.size() == 2);
  CHECK(t.words[0] == Word{"a", SpeakerRole::kCG, false, Punct::kNone});
  CHECK(t.words[1] == Word{"b", SpeakerRole::kPT, true, Punct::kQuestion});
  CHECK(wos == std::vector<int>{-1, 0, -1, -1, -1, 1, -1});
}

TEST_CASE("vocab inventory and files") {
  const RichVocab v = Letters();
  CHECK(v.token(v.blank()) == "<blank>");
  CHECK(v.Classify(v.boundary_id()) == SymbolClass::kWordBoundary);
  CHECK(v.Classify(v.cap_id()) == SymbolClass::kCap);
  CHECK(v.size() == 11 + 1 + 4 + 3 + 1 + 1);
  MessageOf([&] { v.Id("zz"); }, ErrorKind::kVocab);
  MessageOf([] { RichVocab::FromUnits({"a", "<cap>"}); }, ErrorKind::kVocab);

  const auto path =
      (std::filesystem::temp_directory_path() / "rnnt_test_vocab.txt").string();
  WriteVocabFile(path, v.tokens());
  CHECK(RichVocab::FromTokens(ReadVocabFile(path)) == v);
  std::filesystem::remove(path);

  auto tokens = v.tokens();
  std::swap(tokens.front(), tokens.back());
  MessageOf([&] { RichVocab::FromTokens(tokens); }, ErrorKind::kVocab);
}

TEST_CASE("dataset lines round trip") {
  Utterance u;
  u.id = "u1";
  u.frames = ag::Mat::Zero(3, 2);
  u.frames(0, 0) = 0.5;
  u.frames(2, 1) = -1.25;
  u.reference = ParseDecorated("<spk:dr> <cap> ab . <spk:pt> c");
  u.segments = {{0, 1}, {1, 3}};
  u.symbol_frames = {{0, 1}, {1, 1}, {1, 2}, {2, 3}};
  const std::string line = UtteranceToJsonLine(u);
  const Utterance back = UtteranceFromJsonLine(line);
  CHECK(back.id == u.id);
  CHECK(back.frames == u.frames);
  CHECK(back.reference == u.reference);
  CHECK(back.segments == u.segments);
  CHECK(back.symbol_frames == u.symbol_frames);

  const auto path =
      (std::filesystem::temp_directory_path() / "rnnt_test_data.jsonl")
          .string();
  WriteDataset(path, {u, back});
  CHECK(ReadDataset(path).size() == 2);
  std::filesystem::remove(path);

  MessageOf([] { UtteranceFromJsonLine("{not json"); }, ErrorKind::kData);
  u.segments = {{0, 2}};
  MessageOf([&] { UtteranceFromJsonLine(UtteranceToJsonLine(u)); },
            ErrorKind::kData);
}

TEST_CASE("segment partition check") {
  CHECK(SegmentsPartition({{0, 2}, {2, 5}}, 5));
  CHECK_FALSE(SegmentsPartition({{0, 2}, {3, 5}}, 5));
  CHECK_FALSE(SegmentsPartition({{0, 2}, {2, 4}}, 5));
  CHECK_FALSE(SegmentsPartition({{0, 0}, {0, 5}}, 5));
}

}  // namespace
}  // namespace rnnt
