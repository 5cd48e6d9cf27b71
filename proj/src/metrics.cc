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
#include <limits>
#include <numeric>
#include <set>

#include "rnnt/errors.h"

namespace rnnt {

WordAlignment AlignWords(const std::vector<std::string> &ref,
                         const std::vector<std::string> &hyp) {
  const int n = static_cast<int>(ref.size());
  const int m = static_cast<int>(hyp.size());
  std::vector<int> cost((n + 1) * (m + 1));
  auto at = [&](int i, int j) -> int & { return cost[i * (m + 1) + j]; };
  for (int i = 0; i <= n; ++i) at(i, 0) = i;
  for (int j = 0; j <= m; ++j) at(0, j) = j;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      const int diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  WordAlignment out;
  int i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        out.ops.push_back(
            {same ? EditOp::kMatch : EditOp::kSubstitute, i - 1, j - 1});
        same ? ++out.matches : ++out.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      out.ops.push_back({EditOp::kDelete, i - 1, -1});
      ++out.deletions;
      --i;
    } else {
      out.ops.push_back({EditOp::kInsert, -1, j - 1});
      ++out.insertions;
      --j;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

double RateCounts::rate() const {
  if (total == 0) {
    return errors == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(errors) / static_cast<double>(total);
}

WerResult Wer(const std::vector<std::string> &ref,
              const std::vector<std::string> &hyp) {
  WerResult r;
  r.alignment = AlignWords(ref, hyp);
  r.counts.errors = r.alignment.cost();
  r.counts.total = static_cast<long>(ref.size());
  r.wer = r.counts.rate();
  return r;
}

RateCounts WderCounts(const DecoratedTranscript &ref,
                      const DecoratedTranscript &hyp) {
  const WordAlignment a = AlignWords(PlainWords(ref), PlainWords(hyp));
  RateCounts c;
  for (const AlignedPair &p : a.ops) {
    if (p.op != EditOp::kMatch && p.op != EditOp::kSubstitute) continue;
    ++c.total;
    if (ref.words[p.ref].role != hyp.words[p.hyp].role) ++c.errors;
  }
  return c;
}

double Wder(const DecoratedTranscript &ref, const DecoratedTranscript &hyp) {
  const RateCounts c = WderCounts(ref, hyp);
  if (c.total == 0) Fail(ErrorKind::kUndefinedMetric, "WDER with no aligned words");
  return c.rate();
}

std::string_view SlotFamilyName(SlotFamily family) {
  switch (family) {
    case SlotFamily::kPeriod: return ".";
    case SlotFamily::kComma: return ",";
    case SlotFamily::kQuestion: return "?";
    case SlotFamily::kCap: return "cap";
  }
  return "";
}

double SlotCounts::rate() const {
  if (ref_slots == 0) {
    Fail(ErrorKind::kUndefinedMetric, "SER with no reference slots");
  }
  return static_cast<double>(errors()) / static_cast<double>(ref_slots);
}

namespace {

// Slot value of one family at a word: 0 = no slot, otherwise a family-local
// code (punctuation kind, or 1 for capitalization).
int PunctCode(const Word *w) { return w ? static_cast<int>(w->punct) : 0; }
int CapCode(const Word *w) { return w && w->capitalized ? 1 : 0; }

// Classifies the slot pair at one aligned position into `c`. `in_family`
// says whether a code belongs to the family being scored.
template <typename InFamily>
void CountPosition(int ref_code, int hyp_code, InFamily in_family,
                   SlotCounts &c) {
  if (ref_code != 0 && in_family(ref_code)) ++c.ref_slots;
  if (ref_code == hyp_code) return;
  if (!in_family(ref_code) && !in_family(hyp_code)) return;
  if (ref_code != 0 && hyp_code != 0) {
    ++c.substitutions;
  } else if (ref_code != 0) {
    ++c.deletions;
  } else {
    ++c.insertions;
  }
}

template <typename Fn>
void ForEachPosition(const DecoratedTranscript &ref,
                     const DecoratedTranscript &hyp, Fn fn) {
  const WordAlignment a = AlignWords(PlainWords(ref), PlainWords(hyp));
  for (const AlignedPair &p : a.ops) {
    fn(p.ref >= 0 ? &ref.words[p.ref] : nullptr,
       p.hyp >= 0 ? &hyp.words[p.hyp] : nullptr);
  }
}

}  // namespace

SlotCounts SerCounts(const DecoratedTranscript &ref,
                     const DecoratedTranscript &hyp, SlotFamily family) {
  SlotCounts c;
  ForEachPosition(ref, hyp, [&](const Word *r, const Word *h) {
    if (family == SlotFamily::kCap) {
      CountPosition(CapCode(r), CapCode(h), [](int v) { return v == 1; }, c);
      return;
    }
    const int code = family == SlotFamily::kPeriod  ? 1
                     : family == SlotFamily::kComma ? 2
                                                    : 3;
    CountPosition(PunctCode(r), PunctCode(h),
                  [code](int v) { return v == code; }, c);
  });
  return c;
}

SlotCounts SerCountsAll(const DecoratedTranscript &ref,
                        const DecoratedTranscript &hyp) {
  SlotCounts c;
  auto any = [](int v) { return v != 0; };
  ForEachPosition(ref, hyp, [&](const Word *r, const Word *h) {
    CountPosition(PunctCode(r), PunctCode(h), any, c);
    CountPosition(CapCode(r), CapCode(h), any, c);
  });
  return c;
}

double Ser(const DecoratedTranscript &ref, const DecoratedTranscript &hyp,
           SlotFamily family) {
  return SerCounts(ref, hyp, family).rate();
}

namespace {

void CheckScored(const std::vector<double> &confidences,
                 const std::vector<bool> &labels) {
  if (confidences.size() != labels.size()) {
    Fail(ErrorKind::kInput, "confidences and labels differ in length (",
         confidences.size(), " vs ", labels.size(), ")");
  }
  for (double c : confidences) {
    if (!std::isfinite(c)) Fail(ErrorKind::kInput, "non-finite confidence");
  }
}

std::pair<long, long> ClassCounts(const std::vector<bool> &labels) {
  const long pos = std::count(labels.begin(), labels.end(), true);
  return {pos, static_cast<long>(labels.size()) - pos};
}

void RequireBothClasses(const std::vector<bool> &labels, const char *what) {
  const auto [pos, neg] = ClassCounts(labels);
  if (pos == 0 || neg == 0) {
    Fail(ErrorKind::kUndefinedMetric, what, " needs both correct and ",
         "incorrect words (", pos, " correct, ", neg, " incorrect)");
  }
}

// Indices grouped by equal confidence, in the requested order.
std::vector<std::vector<std::size_t>> TieGroups(
    const std::vector<double> &confidences, bool descending) {
  std::vector<std::size_t> order(confidences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? confidences[a] > confidences[b]
                      : confidences[a] < confidences[b];
  });
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || confidences[order[k]] != confidences[order[k - 1]]) {
      groups.emplace_back();
    }
    groups.back().push_back(order[k]);
  }
  return groups;
}

double Trapezoid(const std::vector<std::pair<double, double>> &points) {
  double area = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    area += (points[k].first - points[k - 1].first) *
            (points[k].second + points[k - 1].second) / 2.0;
  }
  return area;
}

}  // namespace

double Nce(const std::vector<double> &confidences,
           const std::vector<bool> &labels) {
  CheckScored(confidences, labels);
  RequireBothClasses(labels, "NCE");
  const auto [nc, ni] = ClassCounts(labels);
  const double pc = static_cast<double>(nc) / static_cast<double>(nc + ni);
  const double h_base =
      -(static_cast<double>(nc) * std::log(pc) +
        static_cast<double>(ni) * std::log1p(-pc));
  double h_conf = 0.0;
  for (std::size_t k = 0; k < confidences.size(); ++k) {
    const double c = std::clamp(confidences[k], kConfidenceEpsilon,
                                1.0 - kConfidenceEpsilon);
    h_conf -= labels[k] ? std::log(c) : std::log1p(-c);
  }
  return (h_base - h_conf) / h_base;
}

double ExpectedCalibrationError(const std::vector<double> &confidences,
                                const std::vector<bool> &labels, int bins) {
  CheckScored(confidences, labels);
  if (bins < 1) Fail(ErrorKind::kParameter, "bins must be >= 1, got ", bins);
  if (confidences.empty()) {
    Fail(ErrorKind::kUndefinedMetric, "ECE of an empty set");
  }
  std::vector<double> conf_sum(bins, 0.0), correct_sum(bins, 0.0);
  for (std::size_t k = 0; k < confidences.size(); ++k) {
    const double c = std::clamp(confidences[k], 0.0, 1.0);
    const int b = std::min(static_cast<int>(c * bins), bins - 1);
    conf_sum[b] += c;
    correct_sum[b] += labels[k] ? 1.0 : 0.0;
  }
  double ece = 0.0;
  for (int b = 0; b < bins; ++b) ece += std::abs(correct_sum[b] - conf_sum[b]);
  return ece / static_cast<double>(confidences.size());
}

double RocAuc(const std::vector<double> &confidences,
              const std::vector<bool> &labels) {
  CheckScored(confidences, labels);
  RequireBothClasses(labels, "ROC AUC");
  const auto [pos, neg] = ClassCounts(labels);
  std::vector<std::pair<double, double>> points = {{0.0, 0.0}};
  long tp = 0, fp = 0;
  for (const auto &group : TieGroups(confidences, /*descending=*/true)) {
    for (std::size_t k : group) labels[k] ? ++tp : ++fp;
    points.emplace_back(static_cast<double>(fp) / neg,
                        static_cast<double>(tp) / pos);
  }
  return Trapezoid(points);
}

double PrcAuc(const std::vector<double> &confidences,
              const std::vector<bool> &labels) {
  CheckScored(confidences, labels);
  RequireBothClasses(labels, "PRC AUC");
  const long pos = ClassCounts(labels).first;
  std::vector<std::pair<double, double>> points;
  long tp = 0, fp = 0;
  for (const auto &group : TieGroups(confidences, /*descending=*/true)) {
    for (std::size_t k : group) labels[k] ? ++tp : ++fp;
    points.emplace_back(static_cast<double>(tp) / pos,
                        static_cast<double>(tp) / (tp + fp));
  }
  points.insert(points.begin(), {0.0, points.front().second});
  return Trapezoid(points);
}

double NpvTnrAuc(const std::vector<double> &confidences,
                 const std::vector<bool> &labels) {
  CheckScored(confidences, labels);
  const auto [pos, neg] = ClassCounts(labels);
  if (neg == 0) {
    Fail(ErrorKind::kUndefinedMetric, "NPV-TNR curve needs incorrect words");
  }
  (void)pos;
  // Raising the threshold past each tie group moves it into the
  // predicted-incorrect set.
  std::vector<std::pair<double, double>> points;
  long tn = 0, fn = 0;
  for (const auto &group : TieGroups(confidences, /*descending=*/false)) {
    for (std::size_t k : group) labels[k] ? ++fn : ++tn;
    points.emplace_back(static_cast<double>(tn) / neg,
                        static_cast<double>(tn) / (tn + fn));
  }
  points.insert(points.begin(), {0.0, points.front().second});
  return Trapezoid(points);
}

CalibrationReport Calibrate(const std::vector<double> &confidences,
                            const std::vector<bool> &labels, int bins) {
  CalibrationReport r;
  r.nce = Nce(confidences, labels);
  r.ece = ExpectedCalibrationError(confidences, labels, bins);
  r.auc_roc = RocAuc(confidences, labels);
  r.auc_prc = PrcAuc(confidences, labels);
  r.auc_npv_tnr = NpvTnrAuc(confidences, labels);
  return r;
}

double F1Counts::precision() const {
  if (hyp_spans == 0) return ref_spans == 0 ? 1.0 : 0.0;
  return static_cast<double>(true_positives) / hyp_spans;
}

double F1Counts::recall() const {
  if (ref_spans == 0) return hyp_spans == 0 ? 1.0 : 0.0;
  return static_cast<double>(true_positives) / ref_spans;
}

double F1Counts::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

std::string OntologyOf(std::string_view label) {
  const std::string_view top = label.substr(0, label.find(':'));
  static const std::map<std::string_view, std::string> kTop = {
      {"SYM", "Symptoms"},      {"SYMPTOM", "Symptoms"},
      {"MEDS", "Medication"},   {"MED", "Medication"},
      {"ATTR", "Attributes"},   {"ATTRIBUTE", "Attributes"},
      {"CONDITION", "Condition"}, {"COND", "Condition"},
      {"DIAG", "Diagnostics"},  {"DIAGNOSTICS", "Diagnostics"},
      {"TREAT", "Treatment"},   {"TREATMENT", "Treatment"},
  };
  const auto it = kTop.find(top);
  return it == kTop.end() ? std::string(top) : it->second;
}

F1Counts TagF1Counts(const std::vector<TagSpan> &ref,
                     const std::vector<TagSpan> &hyp) {
  std::multiset<TagSpan> pool(ref.begin(), ref.end());
  F1Counts c;
  c.ref_spans = static_cast<long>(ref.size());
  c.hyp_spans = static_cast<long>(hyp.size());
  for (const TagSpan &s : hyp) {
    const auto it = pool.find(s);
    if (it != pool.end()) {
      ++c.true_positives;
      pool.erase(it);
    }
  }
  return c;
}

std::map<std::string, F1Counts> TagF1CountsPerOntology(
    const std::vector<TagSpan> &ref, const std::vector<TagSpan> &hyp) {
  std::map<std::string, std::vector<TagSpan>> by_ref, by_hyp;
  for (const TagSpan &s : ref) by_ref[OntologyOf(s.label)].push_back(s);
  for (const TagSpan &s : hyp) by_hyp[OntologyOf(s.label)].push_back(s);
  std::map<std::string, F1Counts> out;
  for (const char *name : kOntologies) out[name] = {};
  for (const auto &[name, spans] : by_ref) out[name] = {};
  for (const auto &[name, spans] : by_hyp) out[name] = {};
  for (auto &[name, counts] : out) counts = TagF1Counts(by_ref[name], by_hyp[name]);
  return out;
}

}  // namespace rnnt
