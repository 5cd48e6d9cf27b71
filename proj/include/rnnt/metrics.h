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

// Evaluation metrics: word, speaker and slot error rates, confidence
// calibration, and span F-measure.
//
// Every rate has a counts form so corpora can be pooled by summing counts.

#ifndef RNNT_METRICS_H_
#define RNNT_METRICS_H_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rnnt/textio.h"

namespace rnnt {

enum class EditOp { kMatch, kSubstitute, kDelete, kInsert };

struct AlignedPair {
  EditOp op;
  int ref = -1;  // -1 for insertions
  int hyp = -1;  // -1 for deletions
};

struct WordAlignment {
  std::vector<AlignedPair> ops;
  int matches = 0;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;

  int cost() const { return substitutions + deletions + insertions; }
};

// Minimal Levenshtein alignment. Among equal-cost alignments the backtrace
// prefers Match, then Substitute, then Delete, then Insert.
WordAlignment AlignWords(const std::vector<std::string> &ref,
                         const std::vector<std::string> &hyp);

struct RateCounts {
  long errors = 0;
  long total = 0;

  // errors / total; +inf when total is 0 and errors > 0, 0 when both are 0.
  double rate() const;
  RateCounts &operator+=(const RateCounts &o) {
    errors += o.errors;
    total += o.total;
    return *this;
  }
};

struct WerResult {
  double wer = 0.0;
  RateCounts counts;
  WordAlignment alignment;
};

WerResult Wer(const std::vector<std::string> &ref,
              const std::vector<std::string> &hyp);

// Over Match and Substitute pairs: pairs with differing speaker roles.
RateCounts WderCounts(const DecoratedTranscript &ref,
                      const DecoratedTranscript &hyp);
double Wder(const DecoratedTranscript &ref, const DecoratedTranscript &hyp);

enum class SlotFamily { kPeriod, kComma, kQuestion, kCap };
inline constexpr SlotFamily kAllSlotFamilies[] = {
    SlotFamily::kPeriod, SlotFamily::kComma, SlotFamily::kQuestion,
    SlotFamily::kCap};
std::string_view SlotFamilyName(SlotFamily family);  // ".", ",", "?", "cap"

struct SlotCounts {
  long substitutions = 0;
  long deletions = 0;
  long insertions = 0;
  long ref_slots = 0;

  long errors() const { return substitutions + deletions + insertions; }
  double rate() const;  // throws kUndefinedMetric when ref_slots == 0
  SlotCounts &operator+=(const SlotCounts &o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    ref_slots += o.ref_slots;
    return *this;
  }
};

// Slots live on aligned word positions. A punctuation substitution between
// two families counts as a substitution for both of them.
SlotCounts SerCounts(const DecoratedTranscript &ref,
                     const DecoratedTranscript &hyp, SlotFamily family);
// All families at once; each differing slot position counts once.
SlotCounts SerCountsAll(const DecoratedTranscript &ref,
                        const DecoratedTranscript &hyp);
double Ser(const DecoratedTranscript &ref, const DecoratedTranscript &hyp,
           SlotFamily family);

inline constexpr double kConfidenceEpsilon = 1e-7;

// Natural-log normalized cross-entropy; labels[i] is true for correct words.
// Throws kUndefinedMetric when every label is equal.
double Nce(const std::vector<double> &confidences,
           const std::vector<bool> &labels);

struct CalibrationReport {
  double nce = 0.0;
  double ece = 0.0;
  double auc_roc = 0.0;
  double auc_prc = 0.0;
  double auc_npv_tnr = 0.0;
};

double ExpectedCalibrationError(const std::vector<double> &confidences,
                                const std::vector<bool> &labels, int bins);
// Correct words are the positive class.
double RocAuc(const std::vector<double> &confidences,
              const std::vector<bool> &labels);
double PrcAuc(const std::vector<double> &confidences,
              const std::vector<bool> &labels);
// Incorrect words are the target; "predict incorrect" below a threshold.
double NpvTnrAuc(const std::vector<double> &confidences,
                 const std::vector<bool> &labels);

// Requires both classes (kUndefinedMetric otherwise) and bins >= 1.
CalibrationReport Calibrate(const std::vector<double> &confidences,
                            const std::vector<bool> &labels, int bins = 10);

struct TagSpan {
  std::string label;
  int start = 0;  // inclusive word indices
  int end = 0;

  bool operator==(const TagSpan &) const = default;
  auto operator<=>(const TagSpan &) const = default;
};

struct F1Counts {
  long true_positives = 0;
  long hyp_spans = 0;
  long ref_spans = 0;

  double precision() const;
  double recall() const;
  double f1() const;  // 1.0 when both sides are empty
  F1Counts &operator+=(const F1Counts &o) {
    true_positives += o.true_positives;
    hyp_spans += o.hyp_spans;
    ref_spans += o.ref_spans;
    return *this;
  }
};

inline constexpr const char *kOntologies[] = {
    "Symptoms", "Medication", "Attributes", "Condition", "Diagnostics",
    "Treatment"};

// Top-level ontology of a label such as "SYM:IMMUNO:ALLERGIES" (Symptoms) or
// "MEDS" (Medication). Unrecognized prefixes map to themselves.
std::string OntologyOf(std::string_view label);

// Exact match on label and word range.
F1Counts TagF1Counts(const std::vector<TagSpan> &ref,
                     const std::vector<TagSpan> &hyp);
std::map<std::string, F1Counts> TagF1CountsPerOntology(
    const std::vector<TagSpan> &ref, const std::vector<TagSpan> &hyp);

}  // namespace rnnt

#endif  // RNNT_METRICS_H_
