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

#include "rnnt/metrics.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "rnnt/errors.h"

namespace rnnt {
namespace {

// Frozen: 1 + ln(0.9) / ln(2), evaluated independently.
constexpr double kNceExample = 0.8479969065549501;

std::vector<std::string> Split(const std::string &s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

ErrorKind KindOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::kUsage;
}

// Plain recursion over every edit script.
int EditCostOracle(const std::vector<std::string> &a, std::size_t i,
                   const std::vector<std::string> &b, std::size_t j) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  return std::min({EditCostOracle(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1),
                   EditCostOracle(a, i + 1, b, j) + 1,
                   EditCostOracle(a, i, b, j + 1) + 1});
}

std::vector<std::string> RandomWords(std::mt19937_64 &rng, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<int> w(0, 3);
  std::vector<std::string> out(len(rng));
  for (auto &s : out) s = std::string(1, static_cast<char>('a' + w(rng)));
  return out;
}

DecoratedTranscript Transcript(const std::vector<Word> &words) {
  DecoratedTranscript t;
  t.words = words;
  return t;
}

Word W(const char *text, SpeakerRole role = SpeakerRole::kDR,
       Punct punct = Punct::kNone, bool cap = false) {
  return Word{text, role, cap, punct};
}

TEST_CASE("wer examples") {
  const auto r = Wer(Split("a b c d"), Split("a x c"));
  CHECK(r.wer == 0.5);
  CHECK(r.alignment.substitutions == 1);
  CHECK(r.alignment.deletions == 1);
  CHECK(Wer(Split("a b"), Split("a b")).wer == 0.0);
  CHECK(Wer({}, {}).wer == 0.0);
  const auto empty = Wer({}, Split("x y"));
  CHECK(std::isinf(empty.wer));
  CHECK(empty.counts.errors == 2);
  CHECK(empty.counts.total == 0);
}

TEST_CASE("alignment ties prefer match, substitute, delete, insert") {
  // "a" vs "b a": insert b then match, not substitute then insert.
  auto a = AlignWords(Split("a"), Split("b a"));
  REQUIRE(a.ops.size() == 2);
  CHECK(a.ops[1].op == EditOp::kMatch);
  // "a b" vs "c": one substitution and one deletion; the backtrace takes the
  // diagonal first, so b is substituted and a deleted.
  a = AlignWords(Split("a b"), Split("c"));
  REQUIRE(a.ops.size() == 2);
  CHECK(a.ops[0].op == EditOp::kDelete);
  CHECK(a.ops[1].op == EditOp::kSubstitute);
}

TEST_CASE("wer cost equals exhaustive edit distance") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 400; ++trial) {
    const auto ref = RandomWords(rng, 6);
    const auto hyp = RandomWords(rng, 6);
    const WordAlignment a = AlignWords(ref, hyp);
    REQUIRE(a.cost() == EditCostOracle(ref, 0, hyp, 0));
    // The ops form a consistent, strictly increasing alignment.
    int ri = 0, hi = 0;
    for (const AlignedPair &p : a.ops) {
      if (p.op != EditOp::kInsert) CHECK(p.ref == ri++);
      if (p.op != EditOp::kDelete) CHECK(p.hyp == hi++);
      if (p.op == EditOp::kMatch) CHECK(ref[p.ref] == hyp[p.hyp]);
      if (p.op == EditOp::kSubstitute) CHECK(ref[p.ref] != hyp[p.hyp]);
    }
    CHECK(ri == static_cast<int>(ref.size()));
    CHECK(hi == static_cast<int>(hyp.size()));
    // Swapping sides keeps the cost; deletions and insertions trade places.
    const WordAlignment b = AlignWords(hyp, ref);
    CHECK(b.cost() == a.cost());
    CHECK(b.deletions - b.insertions == a.insertions - a.deletions);
  }
}

TEST_CASE("wder examples") {
  using R = SpeakerRole;
  const auto ref = Transcript({W("a", R::kDR), W("b", R::kDR), W("c", R::kPT)});
  const auto hyp = Transcript({W("a", R::kDR), W("b", R::kPT), W("c", R::kPT)});
  CHECK(Wder(ref, hyp) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(Wder(ref, ref) == 0.0);
  const auto flipped =
      Transcript({W("a", R::kCG), W("b", R::kCG), W("c", R::kDR)});
  CHECK(Wder(ref, flipped) == 1.0);
  // Insertions and deletions are outside numerator and denominator.
  const auto extra = Transcript({W("a", R::kDR), W("q", R::kCG),
                                 W("b", R::kDR)});
  CHECK(Wder(Transcript({W("a"), W("b")}), extra) == 0.0);
  CHECK(KindOf([&] { Wder(ref, {}); }) == ErrorKind::kUndefinedMetric);
}

TEST_CASE("ser example and properties") {
  using P = Punct;
  const auto ref = Transcript({W("a", SpeakerRole::kDR, P::kPeriod),
                               W("b", SpeakerRole::kDR, P::kPeriod),
                               W("c", SpeakerRole::kDR, P::kComma),
                               W("d")});
  const auto hyp = Transcript({W("a", SpeakerRole::kDR, P::kPeriod),
                               W("b"),
                               W("c", SpeakerRole::kDR, P::kPeriod),
                               W("d", SpeakerRole::kDR, P::kQuestion)});
  const SlotCounts period = SerCounts(ref, hyp, SlotFamily::kPeriod);
  CHECK(period.substitutions == 1);
  CHECK(period.deletions == 1);
  CHECK(period.insertions == 0);
  CHECK(period.ref_slots == 2);
  CHECK(period.rate() == 1.0);
  CHECK(SerCounts(ref, hyp, SlotFamily::kQuestion).insertions == 1);
  CHECK(KindOf([&] { Ser(ref, hyp, SlotFamily::kQuestion); }) ==
        ErrorKind::kUndefinedMetric);

  for (SlotFamily f : {SlotFamily::kPeriod, SlotFamily::kComma}) {
    CHECK(Ser(ref, ref, f) == 0.0);
  }

  // Insertions can push SER past 1.
  const auto one = Transcript({W("a", SpeakerRole::kDR, P::kComma), W("b")});
  const auto many = Transcript({W("a", SpeakerRole::kDR, P::kComma),
                                W("b", SpeakerRole::kDR, P::kComma),
                                W("x", SpeakerRole::kDR, P::kComma)});
  CHECK(Ser(one, many, SlotFamily::kComma) == 2.0);

  // Slots on a deleted word are deletions.
  const auto capped = Transcript({W("a", SpeakerRole::kDR, P::kNone, true),
                                  W("b")});
  const SlotCounts cap = SerCounts(capped, Transcript({W("b")}),
                                   SlotFamily::kCap);
  CHECK(cap.deletions == 1);
  CHECK(cap.rate() == 1.0);
}

TEST_CASE("ser decomposes over families without cross-family swaps") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pick(0, 3);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto rw = RandomWords(rng, 7);
    DecoratedTranscript ref, hyp;
    for (const auto &w : rw) {
      ref.words.push_back(
          W(w.c_str(), SpeakerRole::kDR, static_cast<Punct>(pick(rng)),
            coin(rng)));
    }
    for (const auto &w : RandomWords(rng, 7)) {
      hyp.words.push_back(
          W(w.c_str(), SpeakerRole::kDR, static_cast<Punct>(pick(rng)),
            coin(rng)));
    }
    // Remove cross-family punctuation swaps on aligned positions.
    for (const AlignedPair &p :
         AlignWords(PlainWords(ref), PlainWords(hyp)).ops) {
      if (p.ref < 0 || p.hyp < 0) continue;
      Word &h = hyp.words[p.hyp];
      if (h.punct != Punct::kNone && ref.words[p.ref].punct != Punct::kNone) {
        h.punct = ref.words[p.ref].punct;
      }
    }
    SlotCounts sum;
    for (SlotFamily f : kAllSlotFamilies) sum += SerCounts(ref, hyp, f);
    const SlotCounts all = SerCountsAll(ref, hyp);
    CHECK(all.errors() == sum.errors());
    CHECK(all.ref_slots == sum.ref_slots);
  }
}

TEST_CASE("nce") {
  CHECK(Nce({0.9, 0.9, 0.1, 0.1}, {true, true, false, false}) ==
        doctest::Approx(kNceExample).epsilon(1e-12));
  CHECK(std::abs(Nce({0.25, 0.25, 0.25, 0.25}, {true, false, false, false})) <
        1e-12);
  // Perfect confidences are clamped to 1 - eps and eps.
  const double perfect = Nce({1.0, 0.0}, {true, false});
  const double expected = 1.0 + std::log1p(-kConfidenceEpsilon) / std::log(2.0);
  CHECK(std::abs(perfect - expected) < 1e-12);
  CHECK(1.0 - perfect < 2e-7);
  CHECK(KindOf([] { Nce({0.5, 0.5}, {true, true}); }) ==
        ErrorKind::kUndefinedMetric);
  CHECK(KindOf([] { Nce({0.5}, {true, false}); }) == ErrorKind::kInput);

  // Lowering an incorrect word's confidence raises NCE.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> c(8);
    std::vector<bool> l(8);
    for (int k = 0; k < 8; ++k) {
      c[k] = u(rng);
      l[k] = k % 2 == 0;
    }
    const double before = Nce(c, l);
    c[1] *= 0.5;
    CHECK(Nce(c, l) > before);
  }
}

// Threshold sweeps written directly from the curve definitions.
double RocOracle(const std::vector<double> &c, const std::vector<bool> &l) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (!l[i] || l[j]) continue;
      ++pairs;
      wins += c[i] > c[j] ? 1.0 : c[i] == c[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

std::vector<double> Distinct(const std::vector<double> &c) {
  std::set<double> s(c.begin(), c.end());
  return {s.begin(), s.end()};
}

double Area(std::vector<std::pair<double, double>> pts) {
  double a = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    a += (pts[k].first - pts[k - 1].first) *
         (pts[k].second + pts[k - 1].second) / 2;
  }
  return a;
}

double PrcOracle(const std::vector<double> &c, const std::vector<bool> &l) {
  auto thresholds = Distinct(c);
  std::reverse(thresholds.begin(), thresholds.end());
  double positives = 0;
  for (bool b : l) positives += b;
  std::vector<std::pair<double, double>> pts;
  for (double t : thresholds) {
    double tp = 0, predicted = 0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (c[k] >= t) {
        ++predicted;
        tp += l[k];
      }
    }
    pts.emplace_back(tp / positives, tp / predicted);
  }
  pts.insert(pts.begin(), {0.0, pts.front().second});
  return Area(pts);
}

double NpvOracle(const std::vector<double> &c, const std::vector<bool> &l) {
  auto thresholds = Distinct(c);
  thresholds.push_back(std::numeric_limits<double>::infinity());
  double negatives = 0;
  for (bool b : l) negatives += !b;
  std::vector<std::pair<double, double>> pts;
  for (double t : thresholds) {
    double tn = 0, predicted = 0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (c[k] < t) {
        ++predicted;
        tn += !l[k];
      }
    }
    if (predicted == 0) continue;
    pts.emplace_back(tn / negatives, tn / predicted);
  }
  pts.insert(pts.begin(), {0.0, pts.front().second});
  return Area(pts);
}

TEST_CASE("calibration unit cases") {
  const std::vector<double> sep = {0.9, 0.8, 0.3, 0.1};
  const std::vector<bool> lab = {true, true, false, false};
  const CalibrationReport r = Calibrate(sep, lab);
  CHECK(std::abs(r.auc_roc - 1.0) < 1e-12);
  CHECK(std::abs(r.auc_prc - 1.0) < 1e-12);
  CHECK(std::abs(r.auc_npv_tnr - 1.0) < 1e-12);
  CHECK(std::abs(ExpectedCalibrationError({1, 1, 1, 1},
                                          {true, false, true, false}, 10) -
                 0.5) < 1e-12);
  CHECK(KindOf([] { NpvTnrAuc({0.5, 0.6}, {true, true}); }) ==
        ErrorKind::kUndefinedMetric);
  CHECK(KindOf([] { ExpectedCalibrationError({0.5}, {true}, 0); }) ==
        ErrorKind::kParameter);
}

TEST_CASE("four-point hand set") {
  // Bins of width 0.5: {0.2 (incorrect), 0.4 (correct)} and
  // {0.6 (incorrect), 0.9 (correct)}.
  const std::vector<double> c = {0.2, 0.4, 0.6, 0.9};
  const std::vector<bool> l = {false, true, false, true};
  const double ece = (std::abs(1 - 0.6) + std::abs(1 - 1.5)) / 4;
  CHECK(std::abs(ExpectedCalibrationError(c, l, 2) - ece) < 1e-12);
  CHECK(std::abs(RocAuc(c, l) - 0.75) < 1e-12);
  CHECK(std::abs(PrcAuc(c, l) - PrcOracle(c, l)) < 1e-12);
  CHECK(std::abs(NpvTnrAuc(c, l) - NpvOracle(c, l)) < 1e-12);
}

TEST_CASE("calibration curves match threshold enumeration") {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> n_dist(2, 14);
  std::uniform_int_distribution<int> level(0, 6);  // coarse, so ties occur
  std::bernoulli_distribution coin(0.5);
  int checked = 0;
  while (checked < 300) {
    const int n = n_dist(rng);
    std::vector<double> c(n);
    std::vector<bool> l(n);
    for (int k = 0; k < n; ++k) {
      c[k] = level(rng) / 6.0;
      l[k] = coin(rng);
    }
    const long pos = std::count(l.begin(), l.end(), true);
    if (pos == 0 || pos == n) continue;
    ++checked;
    CHECK(std::abs(RocAuc(c, l) - RocOracle(c, l)) < 1e-12);
    CHECK(std::abs(PrcAuc(c, l) - PrcOracle(c, l)) < 1e-12);
    CHECK(std::abs(NpvTnrAuc(c, l) - NpvOracle(c, l)) < 1e-12);
    const CalibrationReport r = Calibrate(c, l);
    CHECK(r.nce <= 1.0);
    CHECK(r.ece >= 0.0);
    CHECK(r.ece <= 1.0);
    for (double a : {r.auc_roc, r.auc_prc, r.auc_npv_tnr}) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0 + 1e-12);
    }

    // Pooled metrics do not depend on the order of the words.
    std::vector<int> perm(n);
    for (int k = 0; k < n; ++k) perm[k] = k;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pc(n);
    std::vector<bool> pl(n);
    for (int k = 0; k < n; ++k) {
      pc[k] = c[perm[k]];
      pl[k] = l[perm[k]];
    }
    const CalibrationReport q = Calibrate(pc, pl);
    CHECK(std::abs(q.nce - r.nce) < 1e-12);
    CHECK(std::abs(q.ece - r.ece) < 1e-12);
    CHECK(std::abs(q.auc_roc - r.auc_roc) < 1e-12);
    CHECK(std::abs(q.auc_prc - r.auc_prc) < 1e-12);
    CHECK(std::abs(q.auc_npv_tnr - r.auc_npv_tnr) < 1e-12);
  }
}

TEST_CASE("tag f1") {
  const std::vector<TagSpan> ref = {{"MEDS", 1, 1}, {"SYM:PAIN", 3, 5}};
  F1Counts c = TagF1Counts(ref, {{"MEDS", 1, 1}, {"SYM:PAIN", 7, 7}});
  CHECK(c.precision() == 0.5);
  CHECK(c.recall() == 0.5);
  CHECK(c.f1() == 0.5);
  CHECK(TagF1Counts(ref, ref).f1() == 1.0);
  CHECK(TagF1Counts({}, {}).f1() == 1.0);
  CHECK(TagF1Counts(ref, {}).f1() == 0.0);
  CHECK(TagF1Counts({}, ref).f1() == 0.0);

  // "eyes would just water" vs "water" alone is a miss.
  const std::vector<TagSpan> phrase = {{"SYM:EYE", 4, 7}};
  CHECK(TagF1Counts(phrase, {{"SYM:EYE", 7, 7}}).true_positives == 0);
  CHECK(TagF1Counts(phrase, {{"SYM:EAR", 4, 7}}).true_positives == 0);

  const auto per = TagF1CountsPerOntology(
      {{"MEDS", 1, 1}, {"SYM:PAIN", 3, 5}, {"CONDITION:X", 8, 9}},
      {{"MEDS", 1, 1}, {"SYM:PAIN", 3, 4}});
  CHECK(per.at("Medication").f1() == 1.0);
  CHECK(per.at("Symptoms").f1() == 0.0);
  CHECK(per.at("Condition").recall() == 0.0);
  CHECK(per.at("Treatment").f1() == 1.0);
  CHECK(OntologyOf("SYM:IMMUNO:ALLERGIES") == "Symptoms");
}

}  // namespace
}  // namespace rnnt
