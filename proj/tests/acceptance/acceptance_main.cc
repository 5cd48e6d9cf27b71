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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Wall-clock budgets are part of each
// criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rnnt/errors.h"
#include "rnnt/experiments.h"
#include "rnnt/metrics.h"
#include "rnnt/selfcheck.h"
#include "rnnt/textio.h"

namespace rnnt {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double Since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void Log(const std::string &msg) { std::cerr << msg << std::endl; }

std::string Fmt(double x, int precision = 4) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << x;
  return ss.str();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Outcome {
  int id;
  std::string name;
  bool pass;
  double seconds;
  double budget;
  std::string detail;
};

// ---- shared recognizers ----

struct Recognizers {
  std::string recipe_dir;
  int jobs = 1;
  std::optional<RichRecipe> recipe;
  std::optional<RichVocab> vocab;
  std::optional<Parameters> streaming;
  std::optional<Parameters> non_streaming;
  double streaming_seconds = 0.0;
  double non_streaming_seconds = 0.0;

  const RichRecipe &Recipe() {
    if (!recipe) recipe = RichRecipeFromJson(ReadJsonFile(recipe_dir + "/rich.json"));
    return *recipe;
  }

  const Parameters &Get(EncodeMode mode) {
    std::optional<Parameters> &slot =
        mode == EncodeMode::kStreaming ? streaming : non_streaming;
    if (slot) return *slot;
    const auto start = Clock::now();
    const std::vector<Utterance> train = GenerateSynthetic(TrainSpec(Recipe()));
    if (!vocab) vocab = RecipeVocab(Recipe(), train);
    const std::string name(EncodeModeName(mode));
    Log("training " + name + " recognizer on " + std::to_string(train.size()) +
        " conversations");
    Progress progress{100, [name](int step, double loss) {
                        Log("  " + name + " step " + std::to_string(step) +
                            " loss " + Fmt(loss));
                      }};
    slot = TrainRich(Recipe(), mode, train, *vocab, jobs, progress);
    (mode == EncodeMode::kStreaming ? streaming_seconds : non_streaming_seconds) =
        Since(start);
    return *slot;
  }
};

// ---- criteria 1-3 ----

Verdict FromCheck(const CheckResult &c) {
  return {c.pass, c.detail.dump()};
}

// ---- criterion 4 ----

Verdict SplitAndCarry(Recognizers &rec) {
  constexpr double kScoreTol = 1e-4;
  constexpr int kUtterances = 20;
  const Parameters &params = rec.Get(EncodeMode::kStreaming);
  std::vector<Utterance> utts = GenerateSynthetic(EvalSpec(rec.Recipe()));
  if (static_cast<int>(utts.size()) < kUtterances) {
    return {false, "recipe has fewer than 20 eval conversations"};
  }
  utts.resize(kUtterances);
  const auto start = Clock::now();
  const BeamConfig &beam = rec.Recipe().beam;
  const auto unsplit = DecodeAll(params, utts, EncodeMode::kStreaming, beam,
                                 *rec.vocab, rec.jobs);
  const auto carry = DecodeSegmented(params, utts, true, beam, *rec.vocab, rec.jobs);
  const auto reset = DecodeSegmented(params, utts, false, beam, *rec.vocab, rec.jobs);
  double worst = 0.0;
  double wder_carry = 0.0, wder_reset = 0.0;
  int scored = 0, segments = 0;
  for (int i = 0; i < kUtterances; ++i) {
    worst = std::max(worst, std::abs(carry[i].best.score - unsplit[i].best.score));
    segments += static_cast<int>(utts[i].segments.size());
    const RateCounts on = WderCounts(utts[i].reference, carry[i].transcript);
    const RateCounts off = WderCounts(utts[i].reference, reset[i].transcript);
    if (on.total == 0 || off.total == 0) continue;
    wder_carry += on.rate();
    wder_reset += off.rate();
    ++scored;
  }
  if (scored > 0) {
    wder_carry /= scored;
    wder_reset /= scored;
  }
  const bool pass = worst <= kScoreTol && scored > 0 && wder_reset > wder_carry;
  return {pass, "max |score carry - unsplit| " + Fmt(worst) + " (tol 1e-4) over " +
                    std::to_string(segments) + " segments; mean WDER carry-on " +
                    Fmt(wder_carry) + " vs carry-off " + Fmt(wder_reset) +
                    "; decode " + Fmt(Since(start), 3) + " s"};
}

// ---- criterion 5 ----

struct ModeScores {
  double wer, wder, ser_period;
};

ModeScores ScoreMode(Recognizers &rec, EncodeMode mode) {
  const Parameters &params = rec.Get(mode);
  const std::vector<Utterance> eval = GenerateSynthetic(EvalSpec(rec.Recipe()));
  const auto out = DecodeAll(params, eval, mode, rec.Recipe().beam, *rec.vocab,
                             rec.jobs);
  RichScores s;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    s.Add(eval[i].reference, out[i].transcript);
  }
  return {s.wer(), s.wder(), s.ser(SlotFamily::kPeriod)};
}

Verdict RichTranscription(Recognizers &rec) {
  constexpr double kMaxWer = 0.10, kMaxWder = 0.10, kMaxSerPeriod = 0.60;
  const RichRecipe &r = rec.Recipe();
  if (r.seed != 17 || r.data.n_conversations != 500) {
    return {false, "recipes/rich.json must use seed 17 and 500 conversations"};
  }
  const ModeScores s = ScoreMode(rec, EncodeMode::kStreaming);
  const ModeScores n = ScoreMode(rec, EncodeMode::kNonStreaming);
  const bool pass = s.wer <= kMaxWer && s.wder <= kMaxWder &&
                    s.ser_period <= kMaxSerPeriod && n.wer <= s.wer &&
                    n.wder <= s.wder && n.ser_period <= s.ser_period;
  return {pass, "streaming WER " + Fmt(s.wer) + " WDER " + Fmt(s.wder) +
                    " SER(.) " + Fmt(s.ser_period) + "; non-streaming WER " +
                    Fmt(n.wer) + " WDER " + Fmt(n.wder) + " SER(.) " +
                    Fmt(n.ser_period) + "; training " +
                    Fmt(rec.streaming_seconds, 3) + " s + " +
                    Fmt(rec.non_streaming_seconds, 3) + " s"};
}

// ---- criterion 6 ----

std::string MetricUnitVectors(bool *ok) {
  constexpr double kTol = 1e-9;
  std::vector<std::string> failed;
  // Perfect confidences are clamped to 1 - eps and eps, so NCE sits at its
  // clamped closed form, a hair under 1.
  const double perfect = Nce({1.0, 1.0, 0.0, 0.0}, {true, true, false, false});
  const double closed = 1.0 + std::log1p(-kConfidenceEpsilon) / std::log(2.0);
  if (std::abs(perfect - closed) > kTol) failed.push_back("nce perfect");
  const double base = Nce({0.75, 0.75, 0.75, 0.75}, {true, true, true, false});
  if (std::abs(base) > kTol) failed.push_back("nce base rate");
  const double ece =
      ExpectedCalibrationError({1.0, 1.0, 1.0, 1.0}, {true, false, true, false}, 10);
  if (std::abs(ece - 0.5) > kTol) failed.push_back("ece");
  const CalibrationReport sep =
      Calibrate({0.95, 0.7, 0.4, 0.2, 0.05}, {true, true, false, false, false});
  for (double a : {sep.auc_roc, sep.auc_prc, sep.auc_npv_tnr}) {
    if (std::abs(a - 1.0) > kTol) failed.push_back("separable auc");
  }
  *ok = failed.empty();
  std::string msg = "unit vectors: NCE perfect " + Fmt(perfect, 10) +
                    " (clamped closed form " + Fmt(closed, 10) + "), base " +
                    Fmt(base, 3) + ", ECE " + Fmt(ece, 10) + ", AUCs " +
                    Fmt(sep.auc_roc) + "/" + Fmt(sep.auc_prc) + "/" +
                    Fmt(sep.auc_npv_tnr);
  for (const std::string &f : failed) msg += " FAILED:" + f;
  return msg;
}

Verdict Confidence(Recognizers &rec) {
  const ConfidenceRecipe r = ConfidenceRecipeFromJson(
      ReadJsonFile(rec.recipe_dir + "/confidence.json"), rec.recipe_dir);
  if (RichRecipeToJson(r.recognizer) != RichRecipeToJson(rec.Recipe()) ||
      r.mode != EncodeMode::kStreaming) {
    return {false, "confidence recipe must use the streaming rich recognizer"};
  }
  const Parameters &params = rec.Get(r.mode);
  const auto start = Clock::now();
  const auto train = PrepareConfidence(params, ConfidenceData(r, false), r.mode,
                                       r.recognizer.beam, *rec.vocab, rec.jobs);
  Progress progress{100, [](int step, double loss) {
                      Log("  confidence step " + std::to_string(step) + " loss " +
                          Fmt(loss));
                    }};
  const ConfidenceHead head =
      TrainConfidence(r, InitConfidenceHead(RecipeHead(r, params)), train, progress);
  const auto eval = PrepareConfidence(params, ConfidenceData(r, true), r.mode,
                                      r.recognizer.beam, *rec.vocab, rec.jobs);
  const ConfidenceEvaluation e = EvaluateConfidence(head, eval, r.calibration_bins);

  bool law = true;
  for (const auto *set : {&train, &eval}) {
    for (const ConfidenceUtterance &u : *set) {
      law = law && static_cast<int>(u.examples.size()) == u.emitted_units;
    }
  }
  bool units_ok = false;
  const std::string units = MetricUnitVectors(&units_ok);
  if (!e.head || !e.baseline) {
    return {false, "evaluation words all share one label (" +
                       std::to_string(e.incorrect_words) + " incorrect of " +
                       std::to_string(e.words) + ")"};
  }
  const double head_nce = e.head->nce, base_nce = e.baseline->nce;
  const bool pass = head_nce > 0.0 && head_nce > base_nce && law && units_ok;
  return {pass, "head NCE " + Fmt(head_nce) + " vs posterior baseline " +
                    Fmt(base_nce) + " on " + std::to_string(e.words) + " words (" +
                    std::to_string(e.incorrect_words) + " incorrect); examples " +
                    std::to_string(e.examples) + " = emitted units " +
                    std::to_string(e.emitted_units) + (law ? "" : " VIOLATED") +
                    "; " + units + "; " + Fmt(Since(start), 3) + " s"};
}

// ---- criterion 7 ----

Verdict TaggingRobustness(const std::string &recipe_dir) {
  const TaggingRecipe r =
      TaggingRecipeFromJson(ReadJsonFile(recipe_dir + "/tagging.json"));
  if (r.seq_lens != std::vector<int>{50, 200}) {
    return {false, "tagging recipe must evaluate seq_lens [50, 200]"};
  }
  std::map<std::pair<Objective, int>, double> f1;
  RunTaggingGrid(r, [&](const TaggingRun &run) {
    f1[{run.objective, run.seq_len}] = run.eval.exact.f1();
    Log("  tagging " + std::string(ObjectiveName(run.objective)) + " len " +
        std::to_string(run.seq_len) + " F1 " + Fmt(run.eval.exact.f1()) + " (" +
        Fmt(run.seconds, 3) + " s)");
  });
  const double fixed50 = f1[{Objective::kFixedAlignment, 50}];
  const double marg50 = f1[{Objective::kMarginal, 50}];
  const double fixed200 = f1[{Objective::kFixedAlignment, 200}];
  const double marg200 = f1[{Objective::kMarginal, 200}];
  const double gap50 = fixed50 - marg50, gap200 = fixed200 - marg200;
  return {fixed50 >= marg50 && gap200 > gap50,
          "F1 fixed/marginal at 50: " + Fmt(fixed50) + "/" + Fmt(marg50) +
              ", at 200: " + Fmt(fixed200) + "/" + Fmt(marg200) + "; gap " +
              Fmt(gap50) + " -> " + Fmt(gap200)};
}

// ---- criterion 8 ----

using Words = std::vector<std::string>;

// Plain recursion with memoization over suffix pairs.
int EditCost(const Words &a, std::size_t i, const Words &b, std::size_t j,
             std::map<std::pair<std::size_t, std::size_t>, int> &memo) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  const auto key = std::make_pair(i, j);
  if (const auto it = memo.find(key); it != memo.end()) return it->second;
  const int best = std::min({EditCost(a, i + 1, b, j + 1, memo) + (a[i] != b[j]),
                             EditCost(a, i + 1, b, j, memo) + 1,
                             EditCost(a, i, b, j + 1, memo) + 1});
  memo[key] = best;
  return best;
}

std::vector<Words> AllSequences(const Words &alphabet, int max_len) {
  std::vector<Words> out = {{}};
  std::size_t begin = 0;
  for (int len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t k = begin; k < end; ++k) {
      for (const std::string &w : alphabet) {
        Words next = out[k];
        next.push_back(w);
        out.push_back(std::move(next));
      }
    }
    begin = end;
  }
  return out;
}

bool WerMatchesOracle(long *pairs) {
  bool ok = true;
  for (const auto &[alphabet, max_len] :
       std::vector<std::pair<Words, int>>{{{"a", "b"}, 6}, {{"a", "b", "c"}, 4}}) {
    const auto seqs = AllSequences(alphabet, max_len);
    for (const Words &ref : seqs) {
      for (const Words &hyp : seqs) {
        std::map<std::pair<std::size_t, std::size_t>, int> memo;
        const int cost = EditCost(ref, 0, hyp, 0, memo);
        const WerResult w = Wer(ref, hyp);
        double want;
        if (!ref.empty()) {
          want = static_cast<double>(cost) / ref.size();
        } else {
          want = hyp.empty() ? 0.0 : std::numeric_limits<double>::infinity();
        }
        ok = ok && w.alignment.cost() == cost && w.wer == want;
        ++*pairs;
      }
    }
  }
  return ok;
}

// Threshold enumeration straight from the curve definitions.
struct CurveOracle {
  const std::vector<double> &c;
  const std::vector<bool> &l;

  static double Area(const std::vector<std::pair<double, double>> &pts) {
    double a = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      a += (pts[k].first - pts[k - 1].first) *
           (pts[k].second + pts[k - 1].second) / 2;
    }
    return a;
  }

  std::vector<double> Thresholds() const {
    std::set<double> s(c.begin(), c.end());
    return {s.begin(), s.end()};
  }

  double Roc() const {
    // Predict correct when c >= t; sweep from strict to lenient.
    auto ts = Thresholds();
    std::reverse(ts.begin(), ts.end());
    double pos = 0, neg = 0;
    for (bool b : l) (b ? pos : neg) += 1;
    std::vector<std::pair<double, double>> pts = {{0.0, 0.0}};
    for (double t : ts) {
      double tp = 0, fp = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (c[k] >= t) (l[k] ? tp : fp) += 1;
      }
      pts.emplace_back(fp / neg, tp / pos);
    }
    return Area(pts);
  }

  double Prc() const {
    auto ts = Thresholds();
    std::reverse(ts.begin(), ts.end());
    double pos = 0;
    for (bool b : l) pos += b;
    std::vector<std::pair<double, double>> pts;
    for (double t : ts) {
      double tp = 0, predicted = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (c[k] >= t) {
          ++predicted;
          tp += l[k];
        }
      }
      pts.emplace_back(tp / pos, tp / predicted);
    }
    pts.insert(pts.begin(), {0.0, pts.front().second});
    return Area(pts);
  }

  double NpvTnr() const {
    auto ts = Thresholds();
    ts.push_back(std::numeric_limits<double>::infinity());
    double neg = 0;
    for (bool b : l) neg += !b;
    std::vector<std::pair<double, double>> pts;
    for (double t : ts) {
      double tn = 0, predicted = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (c[k] < t) {
          ++predicted;
          tn += !l[k];
        }
      }
      if (predicted > 0) pts.emplace_back(tn / neg, tn / predicted);
    }
    pts.insert(pts.begin(), {0.0, pts.front().second});
    return Area(pts);
  }

  double Ece(int bins) const {
    std::vector<double> sum_c(bins, 0.0), sum_l(bins, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const int b = std::min(bins - 1, static_cast<int>(c[k] * bins));
      sum_c[b] += c[k];
      sum_l[b] += l[k];
    }
    double e = 0.0;
    for (int b = 0; b < bins; ++b) e += std::abs(sum_c[b] - sum_l[b]);
    return e / c.size();
  }
};

bool CalibrationMatchesOracle(int *sets) {
  constexpr double kTol = 1e-12;
  using Set = std::pair<std::vector<double>, std::vector<bool>>;
  std::vector<Set> hand = {
      {{0.2, 0.4, 0.6, 0.9}, {false, true, false, true}},
      {{0.9, 0.8, 0.3, 0.1}, {true, true, false, false}},
      {{0.5, 0.5, 0.5, 0.5}, {true, false, true, false}},
      {{0.1, 0.3, 0.3, 0.7, 0.7, 0.95}, {false, true, false, true, false, true}},
      {{0.05, 0.6, 0.6, 0.6, 0.99}, {true, false, true, true, false}},
      {{1.0, 0.0, 0.5}, {false, true, true}},
  };
  bool ok = true;
  for (const auto &[c, l] : hand) {
    const CurveOracle o{c, l};
    ok = ok && std::abs(RocAuc(c, l) - o.Roc()) <= kTol &&
         std::abs(PrcAuc(c, l) - o.Prc()) <= kTol &&
         std::abs(NpvTnrAuc(c, l) - o.NpvTnr()) <= kTol;
    for (int bins : {1, 2, 10}) {
      ok = ok && std::abs(ExpectedCalibrationError(c, l, bins) - o.Ece(bins)) <= kTol;
    }
    ++*sets;
  }
  return ok;
}

DecoratedTranscript RandomTranscript(std::mt19937_64 &rng, const Words &letters) {
  std::uniform_int_distribution<int> n_words(0, 12), len(1, 5), role(0, kNumRoles - 1),
      punct(0, 3);
  std::uniform_int_distribution<std::size_t> letter(0, letters.size() - 1);
  std::bernoulli_distribution flip(0.3);
  DecoratedTranscript t;
  SpeakerRole current = static_cast<SpeakerRole>(role(rng));
  const int n = n_words(rng);
  for (int i = 0; i < n; ++i) {
    if (flip(rng)) current = static_cast<SpeakerRole>(role(rng));
    Word w;
    const int l = len(rng);
    for (int k = 0; k < l; ++k) w.text += letters[letter(rng)];
    w.role = current;
    w.capitalized = flip(rng);
    w.punct = static_cast<Punct>(punct(rng));
    t.words.push_back(std::move(w));
  }
  return t;
}

bool RoundTrips(int trials, std::uint64_t seed) {
  const Words letters = {"a", "e", "i", "k", "l", "m", "o", "r", "s", "t"};
  const RichVocab graphemes = RichVocab::FromUnits(letters);
  Words units = letters;
  for (const char *m : {"ar", "st", "ta", "ki", "lo", "mor", "ss"}) units.push_back(m);
  const RichVocab merged = RichVocab::FromUnits(units);
  std::mt19937_64 rng(seed);
  for (int n = 0; n < trials; ++n) {
    const DecoratedTranscript t = RandomTranscript(rng, letters);
    const std::string text = RenderDecorated(t);
    if (ParseDecorated(text) != t) return false;
    if (RenderDecorated(ParseDecorated(text)) != text) return false;
    for (const RichVocab *v : {&graphemes, &merged}) {
      if (FromSymbols(ToSymbols(t, *v), *v) != t) return false;
    }
  }
  return true;
}

Verdict MetricOracles() {
  long pairs = 0;
  int sets = 0;
  const bool wer = WerMatchesOracle(&pairs);
  const bool cal = CalibrationMatchesOracle(&sets);
  const bool trips = RoundTrips(10000, 8);
  return {wer && cal && trips,
          "WER vs brute force on " + std::to_string(pairs) + " pairs: " +
              (wer ? "ok" : "MISMATCH") + "; calibration vs threshold enumeration on " +
              std::to_string(sets) + " hand sets: " + (cal ? "ok" : "MISMATCH") +
              "; 10000 grammar and symbolization round trips: " +
              (trips ? "ok" : "MISMATCH")};
}

int Main(int argc, char **argv) {
  CLI::App app{"rnnt acceptance suite"};
  std::string recipe_dir = RNNT_RECIPE_DIR;
  std::vector<int> only;
  int jobs = 1;
  std::uint64_t seed = 2026;
  std::string report_path;
  app.add_option("--recipes", recipe_dir, "recipe directory");
  app.add_option("--only", only, "criteria to run (default: all)")
      ->check(CLI::Range(1, 8));
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for the oracle sweeps");
  app.add_option("--report", report_path, "also write the result lines here");
  CLI11_PARSE(app, argc, argv);

  Recognizers rec;
  rec.recipe_dir = recipe_dir;
  rec.jobs = jobs;

  // Budgets in seconds. Recognizer training is shared between criteria 4, 5
  // and 6 and is charged to criterion 5.
  struct Criterion {
    int id;
    std::string name;
    double budget;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "marginal loss and gradient exactness", 10,
       [&] { return FromCheck(CheckTrellisExactness(200, seed)); }},
      {2, "fixed-alignment loss dominance", 5,
       [&] { return FromCheck(CheckFixedDominance(1000, seed + 1)); }},
      {3, "saturating beam optimality", 30,
       [&] { return FromCheck(CheckBeamOptimality(50, seed + 2)); }},
      {5, "rich transcription quality", 1800, [&] { return RichTranscription(rec); }},
      {4, "split-and-carry streaming decode", 300, [&] { return SplitAndCarry(rec); }},
      {6, "confidence estimation", 600, [&] { return Confidence(rec); }},
      {7, "tagging robustness to sequence length", 1200,
       [&] { return TaggingRobustness(recipe_dir); }},
      {8, "metric oracles", 60, [] { return MetricOracles(); }},
  };

  std::ofstream report;
  if (!report_path.empty()) {
    report.open(report_path);
    if (!report) {
      std::cerr << "cannot write " << report_path << std::endl;
      return 2;
    }
  }
  auto print = [&](const std::string &line) {
    std::cout << line << std::endl;
    if (report.is_open()) report << line << std::endl;
  };

  std::vector<Outcome> outcomes;
  for (const Criterion &c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
      continue;
    }
    Log("running criterion " + std::to_string(c.id) + ": " + c.name);
    const double trained_before = rec.streaming_seconds + rec.non_streaming_seconds;
    const auto start = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception &e) {
      v = {false, std::string("error: ") + e.what()};
    }
    double seconds = Since(start);
    // Training done on behalf of criterion 5 counts against criterion 5 only.
    if (c.id != 5) {
      seconds -= rec.streaming_seconds + rec.non_streaming_seconds - trained_before;
    }
    const bool pass = v.pass && seconds <= c.budget;
    outcomes.push_back({c.id, c.name, pass, seconds, c.budget, v.detail});
    print("criterion " + std::to_string(c.id) + " " + (pass ? "PASS" : "FAIL") +
          " [" + c.name + "] " + v.detail + " (" + Fmt(seconds, 3) + " s, budget " +
          Fmt(c.budget) + " s)");
  }
  std::sort(outcomes.begin(), outcomes.end(),
            [](const Outcome &a, const Outcome &b) { return a.id < b.id; });
  int failed = 0;
  for (const Outcome &o : outcomes) failed += !o.pass;
  print("summary: " + std::to_string(outcomes.size() - failed) + "/" +
        std::to_string(outcomes.size()) + " criteria passed");
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace rnnt

int main(int argc, char **argv) { return rnnt::Main(argc, argv); }
