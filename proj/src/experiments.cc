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

#include "rnnt/experiments.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "rnnt/errors.h"
#include "rnnt/params.h"

namespace rnnt {

using nlohmann::json;

namespace {

constexpr std::uint64_t kBatchStream = 0xba7c4;

void CheckKeys(const json &j, const std::set<std::string> &allowed,
               const std::string &what) {
  if (!j.is_object()) Fail(ErrorKind::kConfig, what, " must be an object");
  for (const auto &[key, value] : j.items()) {
    if (!allowed.contains(key)) {
      Fail(ErrorKind::kConfig, "unknown ", what, " key '", key, "'");
    }
  }
}

template <typename T>
T Get(const json &j, const char *key, T fallback) {
  try {
    return j.value(key, fallback);
  } catch (const json::exception &e) {
    Fail(ErrorKind::kConfig, "bad value for '", key, "': ", e.what());
  }
}

json AdamToJson(const AdamConfig &a) {
  return {{"learning_rate", a.learning_rate}, {"beta1", a.beta1},
          {"beta2", a.beta2},                 {"epsilon", a.epsilon},
          {"clip_norm", a.clip_norm}};
}

// Reads the optimizer fields of a "train" object.
AdamConfig AdamFromJson(const json &j) {
  AdamConfig a;
  a.learning_rate = Get(j, "learning_rate", a.learning_rate);
  a.beta1 = Get(j, "beta1", a.beta1);
  a.beta2 = Get(j, "beta2", a.beta2);
  a.epsilon = Get(j, "epsilon", a.epsilon);
  a.clip_norm = Get(j, "clip_norm", a.clip_norm);
  if (!(a.learning_rate >= 0.0)) {
    Fail(ErrorKind::kConfig, "learning_rate must be >= 0");
  }
  return a;
}

const std::set<std::string> kAdamKeys = {"learning_rate", "beta1", "beta2",
                                         "epsilon", "clip_norm"};

std::set<std::string> With(std::set<std::string> keys,
                           std::initializer_list<std::string> more) {
  keys.insert(more);
  return keys;
}

// Architecture fields only; vocab, encoder kind, input size and seed are set
// by the run.
json ArchToJson(const ModelConfig &c) {
  return {{"enc_layers", c.enc_layers},
          {"enc_dim", c.enc_dim},
          {"attention_window", c.attention_window},
          {"subsample_factor", c.subsample_factor},
          {"pred_dim", c.pred_dim},
          {"joint_dim", c.joint_dim}};
}

ModelConfig ArchFromJson(const json &j, ModelConfig c) {
  CheckKeys(j, {"enc_layers", "enc_dim", "attention_window", "subsample_factor",
                "pred_dim", "joint_dim"},
            "model");
  c.enc_layers = Get(j, "enc_layers", c.enc_layers);
  c.enc_dim = Get(j, "enc_dim", c.enc_dim);
  c.attention_window = Get(j, "attention_window", c.attention_window);
  c.subsample_factor = Get(j, "subsample_factor", c.subsample_factor);
  c.pred_dim = Get(j, "pred_dim", c.pred_dim);
  c.joint_dim = Get(j, "joint_dim", c.joint_dim);
  return c;
}

template <typename Fn>
void ParallelFor(int n, int jobs, Fn fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : pool) t.join();
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Epoch-shuffled batches.
class BatchSampler {
 public:
  BatchSampler(int n, std::uint64_t seed) : order_(n), rng_(seed) {
    std::iota(order_.begin(), order_.end(), 0);
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::vector<int> Next(int size) {
    std::vector<int> out;
    while (static_cast<int>(out.size()) < size) {
      if (cursor_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
      }
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  std::vector<int> order_;
  std::mt19937_64 rng_;
  std::size_t cursor_ = 0;
};

}  // namespace

json ReadJsonFile(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot read ", path);
  try {
    return json::parse(in);
  } catch (const json::exception &e) {
    Fail(ErrorKind::kData, path, ": ", e.what());
  }
}

// ---- Rich transcription ----

json RichRecipeToJson(const RichRecipe &r) {
  json data = SynthSpecToJson(r.data);
  data.erase("seed");
  json train = AdamToJson(r.adam);
  train["steps"] = r.steps;
  train["batch_size"] = r.batch_size;
  return {{"seed", r.seed},
          {"data", data},
          {"eval_conversations", r.eval_conversations},
          {"units", r.units},
          {"merges", r.merges},
          {"model", ArchToJson(r.model)},
          {"encoders",
           {{"streaming", EncoderKindName(r.streaming_encoder)},
            {"non-streaming", EncoderKindName(r.non_streaming_encoder)}}},
          {"objective", ObjectiveName(r.objective)},
          {"train", train},
          {"decode",
           {{"beam_width", r.beam.beam_width},
            {"max_symbols_per_frame", r.beam.max_symbols_per_frame}}}};
}

RichRecipe RichRecipeFromJson(const json &j) {
  CheckKeys(j, {"seed", "data", "eval_conversations", "units", "merges",
                "model", "encoders", "objective", "train", "decode"},
            "recipe");
  RichRecipe r;
  r.seed = Get(j, "seed", r.seed);
  if (j.contains("data")) {
    if (j["data"].contains("seed")) {
      Fail(ErrorKind::kConfig, "set the seed at the top level of the recipe");
    }
    r.data = SynthSpecFromJson(j["data"]);
  }
  r.data.seed = r.seed;
  ValidateSynthSpec(r.data);
  r.eval_conversations = Get(j, "eval_conversations", r.eval_conversations);
  r.units = Get(j, "units", r.units);
  if (r.units != "grapheme" && r.units != "merged") {
    Fail(ErrorKind::kConfig, "units must be grapheme or merged, got '", r.units,
         "'");
  }
  r.merges = Get(j, "merges", r.merges);
  if (j.contains("model")) r.model = ArchFromJson(j["model"], r.model);
  if (j.contains("encoders")) {
    const json &e = j["encoders"];
    CheckKeys(e, {"streaming", "non-streaming"}, "encoders");
    r.streaming_encoder = ParseEncoderKind(Get(
        e, "streaming", std::string(EncoderKindName(r.streaming_encoder))));
    r.non_streaming_encoder = ParseEncoderKind(
        Get(e, "non-streaming",
            std::string(EncoderKindName(r.non_streaming_encoder))));
  }
  r.objective = ParseObjective(
      Get(j, "objective", std::string(ObjectiveName(r.objective))));
  if (j.contains("train")) {
    const json &t = j["train"];
    CheckKeys(t, With(kAdamKeys, {"steps", "batch_size"}), "train");
    r.adam = AdamFromJson(t);
    r.steps = Get(t, "steps", r.steps);
    r.batch_size = Get(t, "batch_size", r.batch_size);
  }
  if (j.contains("decode")) {
    const json &d = j["decode"];
    CheckKeys(d, {"beam_width", "max_symbols_per_frame"}, "decode");
    r.beam.beam_width = Get(d, "beam_width", r.beam.beam_width);
    r.beam.max_symbols_per_frame =
        Get(d, "max_symbols_per_frame", r.beam.max_symbols_per_frame);
  }
  if (r.steps < 0 || r.batch_size < 1 || r.eval_conversations < 0) {
    Fail(ErrorKind::kConfig,
         "steps and eval_conversations must be >= 0, batch_size >= 1");
  }
  ValidateBeamConfig(r.beam);
  return r;
}

SynthSpec TrainSpec(const RichRecipe &recipe) {
  SynthSpec s = recipe.data;
  s.seed = recipe.seed;
  return s;
}

SynthSpec EvalSpec(const RichRecipe &recipe) {
  SynthSpec s = TrainSpec(recipe);
  s.first_index = recipe.data.first_index + recipe.data.n_conversations;
  s.n_conversations = recipe.eval_conversations;
  return s;
}

RichVocab RecipeVocab(const RichRecipe &recipe,
                      const std::vector<Utterance> &train) {
  if (recipe.units == "merged") {
    return SynthMergedVocab(TrainSpec(recipe), train, recipe.merges);
  }
  return SynthGraphemeVocab(TrainSpec(recipe));
}

ModelConfig RecipeModel(const RichRecipe &recipe, EncodeMode mode,
                        const RichVocab &vocab) {
  ModelConfig c = recipe.model;
  c.input_dim = recipe.data.feature_dim;
  c.enc_kind = mode == EncodeMode::kStreaming ? recipe.streaming_encoder
                                              : recipe.non_streaming_encoder;
  c.vocab = vocab.tokens();
  c.seed = recipe.seed;
  ValidateModelConfig(c);
  return c;
}

AlignmentPath LastFramePath(const Utterance &utt, int subsample_factor,
                            int encoded_frames) {
  AlignmentPath path;
  int frame = 0;
  for (std::size_t i = 0; i < utt.symbol_frames.size(); ++i) {
    const int last = std::max(utt.symbol_frames[i].second - 1, 0);
    const int at = std::min(last / subsample_factor, encoded_frames - 1);
    while (frame < at) {
      path.push_back(Move::Blank());
      ++frame;
    }
    path.push_back(Move::Label(static_cast<int>(i)));
  }
  while (frame < encoded_frames) {
    path.push_back(Move::Blank());
    ++frame;
  }
  return path;
}

Parameters TrainRich(const RichRecipe &recipe, EncodeMode mode,
                     const std::vector<Utterance> &train,
                     const RichVocab &vocab, int jobs,
                     const Progress &progress, double *final_loss) {
  if (train.empty()) Fail(ErrorKind::kData, "no training conversations");
  Parameters params = InitModel(RecipeModel(recipe, mode, vocab));
  const bool fixed = recipe.objective == Objective::kFixedAlignment;
  if (fixed && recipe.units != "grapheme") {
    Fail(ErrorKind::kConfig,
         "the fixed objective needs grapheme units for frame alignments");
  }
  std::vector<std::vector<int>> targets;
  std::vector<AlignmentPath> paths;
  for (const Utterance &u : train) {
    targets.push_back(ToSymbols(u.reference, vocab));
    if (fixed) {
      const int t = EncodedLength(params.config,
                                  static_cast<int>(u.frames.rows()));
      paths.push_back(LastFramePath(u, params.config.subsample_factor, t));
    }
  }
  TrainOptions options;
  options.objective = recipe.objective;
  options.mode = mode;
  options.adam = recipe.adam;
  options.threads = jobs;
  AdamState state;
  BatchSampler sampler(static_cast<int>(train.size()),
                       MixSeed(recipe.seed, kBatchStream));
  double loss = 0.0;
  for (int step = 1; step <= recipe.steps; ++step) {
    std::vector<TrainExample> batch;
    for (int i : sampler.Next(recipe.batch_size)) {
      batch.push_back({&train[i].frames, targets[i],
                       fixed ? paths[i] : AlignmentPath{}});
    }
    loss = TrainStep(params, batch, options, state);
    if (progress.report && progress.interval > 0 &&
        (step % progress.interval == 0 || step == recipe.steps)) {
      progress.report(step, loss);
    }
  }
  if (final_loss != nullptr) *final_loss = loss;
  return params;
}

std::vector<DecodeOutput> DecodeAll(const Parameters &params,
                                    const std::vector<Utterance> &utts,
                                    EncodeMode mode, const BeamConfig &beam,
                                    const RichVocab &vocab, int jobs) {
  std::vector<DecodeOutput> out(utts.size());
  ParallelFor(static_cast<int>(utts.size()), jobs, [&](int i) {
    out[i] = DecodeUtterance(params, utts[i].frames, mode, beam, vocab);
  });
  return out;
}

std::vector<DecodeOutput> DecodeSegmented(const Parameters &params,
                                          const std::vector<Utterance> &utts,
                                          bool carry_state,
                                          const BeamConfig &beam,
                                          const RichVocab &vocab, int jobs) {
  std::vector<DecodeOutput> out(utts.size());
  ParallelFor(static_cast<int>(utts.size()), jobs, [&](int i) {
    const Utterance &u = utts[i];
    std::vector<ag::Mat> segments;
    if (u.segments.empty()) {
      segments.push_back(u.frames);
    } else {
      for (const auto &[begin, end] : u.segments) {
        segments.push_back(u.frames.middleRows(begin, end - begin));
      }
    }
    out[i] = StreamingDecode(params, segments, carry_state, beam, vocab);
  });
  return out;
}

double RichScores::wder() const { return speakers.rate(); }

double RichScores::ser(SlotFamily family) const {
  const auto it = slots.find(family);
  if (it == slots.end()) return 0.0;
  if (it->second.ref_slots == 0) {
    return it->second.errors() == 0
               ? 0.0
               : std::numeric_limits<double>::infinity();
  }
  return it->second.rate();
}

void RichScores::Add(const DecoratedTranscript &ref,
                     const DecoratedTranscript &hyp) {
  words += Wer(PlainWords(ref), PlainWords(hyp)).counts;
  speakers += WderCounts(ref, hyp);
  for (SlotFamily f : kAllSlotFamilies) slots[f] += SerCounts(ref, hyp, f);
}

json RichScores::ToJson() const {
  json ser = json::object();
  json slot_counts = json::object();
  for (SlotFamily f : kAllSlotFamilies) {
    const std::string name(SlotFamilyName(f));
    const double rate = this->ser(f);
    ser[name] = std::isfinite(rate) ? json(rate) : json(nullptr);
    const auto it = slots.find(f);
    const SlotCounts c = it == slots.end() ? SlotCounts{} : it->second;
    slot_counts[name] = {{"substitutions", c.substitutions},
                         {"deletions", c.deletions},
                         {"insertions", c.insertions},
                         {"ref_slots", c.ref_slots}};
  }
  return {{"wer", words.total == 0 && words.errors > 0 ? json(nullptr)
                                                       : json(wer())},
          {"wder", wder()},
          {"ser", ser},
          {"counts",
           {{"word_errors", words.errors},
            {"ref_words", words.total},
            {"speaker_errors", speakers.errors},
            {"aligned_words", speakers.total},
            {"slots", slot_counts}}}};
}

RichScores ScoreAll(const std::vector<DecoratedTranscript> &refs,
                    const std::vector<DecoratedTranscript> &hyps) {
  if (refs.size() != hyps.size()) {
    Fail(ErrorKind::kData, refs.size(), " references but ", hyps.size(),
         " hypotheses");
  }
  RichScores s;
  for (std::size_t i = 0; i < refs.size(); ++i) s.Add(refs[i], hyps[i]);
  return s;
}

// ---- Confidence ----

json ConfidenceRecipeToJson(const ConfidenceRecipe &r) {
  json head = ConfidenceConfigToJson(r.head);
  head.erase("enc_dim");
  head.erase("num_symbols");
  json train = AdamToJson(r.adam);
  train["steps"] = r.steps;
  train["batch_size"] = r.batch_size;
  return {{"recognizer", RichRecipeToJson(r.recognizer)},
          {"mode", EncodeModeName(r.mode)},
          {"noise_sigma", r.noise_sigma},
          {"train_conversations", r.train_conversations},
          {"eval_conversations", r.eval_conversations},
          {"train_first_index", r.train_first_index},
          {"eval_first_index", r.eval_first_index},
          {"head", head},
          {"train", train},
          {"calibration_bins", r.calibration_bins}};
}

ConfidenceRecipe ConfidenceRecipeFromJson(const json &j,
                                          const std::string &base_dir) {
  CheckKeys(j, {"recognizer", "mode", "noise_sigma", "train_conversations",
                "eval_conversations", "train_first_index", "eval_first_index",
                "head", "train", "calibration_bins"},
            "confidence recipe");
  ConfidenceRecipe r;
  if (j.contains("recognizer")) {
    const json &rec = j["recognizer"];
    if (rec.is_string()) {
      const auto path =
          std::filesystem::path(base_dir) / rec.get<std::string>();
      r.recognizer = RichRecipeFromJson(ReadJsonFile(path.string()));
    } else {
      r.recognizer = RichRecipeFromJson(rec);
    }
  }
  r.mode = ParseEncodeMode(Get(j, "mode", std::string(EncodeModeName(r.mode))));
  r.noise_sigma = Get(j, "noise_sigma", r.noise_sigma);
  r.train_conversations = Get(j, "train_conversations", r.train_conversations);
  r.eval_conversations = Get(j, "eval_conversations", r.eval_conversations);
  r.train_first_index = Get(j, "train_first_index", r.train_first_index);
  r.eval_first_index = Get(j, "eval_first_index", r.eval_first_index);
  if (j.contains("head")) {
    json head = j["head"];
    if (head.contains("enc_dim") || head.contains("num_symbols")) {
      Fail(ErrorKind::kConfig,
           "head enc_dim and num_symbols follow the recognizer");
    }
    r.head = ConfidenceConfigFromJson(head);
  }
  if (j.contains("train")) {
    const json &t = j["train"];
    CheckKeys(t, With(kAdamKeys, {"steps", "batch_size"}), "train");
    r.adam = AdamFromJson(t);
    r.steps = Get(t, "steps", r.steps);
    r.batch_size = Get(t, "batch_size", r.batch_size);
  }
  r.calibration_bins = Get(j, "calibration_bins", r.calibration_bins);
  if (r.steps < 0 || r.batch_size < 1 || r.calibration_bins < 1 ||
      r.train_conversations < 0 || r.eval_conversations < 0 ||
      !(r.noise_sigma >= 0.0)) {
    Fail(ErrorKind::kConfig, "invalid confidence recipe counts");
  }
  return r;
}

std::vector<Utterance> ConfidenceData(const ConfidenceRecipe &recipe,
                                      bool eval) {
  SynthSpec s = TrainSpec(recipe.recognizer);
  s.noise_sigma = recipe.noise_sigma;
  s.first_index = eval ? recipe.eval_first_index : recipe.train_first_index;
  s.n_conversations =
      eval ? recipe.eval_conversations : recipe.train_conversations;
  return GenerateSynthetic(s);
}

std::vector<ConfidenceUtterance> PrepareConfidence(
    const Parameters &params, const std::vector<Utterance> &utts,
    EncodeMode mode, const BeamConfig &beam, const RichVocab &vocab,
    int jobs) {
  std::vector<ConfidenceUtterance> out(utts.size());
  ParallelFor(static_cast<int>(utts.size()), jobs, [&](int i) {
    const DecodeOutput d =
        DecodeUtterance(params, utts[i].frames, mode, beam, vocab);
    ConfidenceUtterance &c = out[i];
    c.id = utts[i].id;
    c.hyp = d.transcript;
    c.examples = ExtractFeatures(d.encodings, d.best, vocab);
    c.word_correct = MakeWordLabels(d.transcript, utts[i].reference);
    AssignLabels(c.examples, c.word_correct);
    const int words = static_cast<int>(d.transcript.words.size());
    c.baseline = PosteriorBaseline(d.best, c.examples, words);
    for (int s : d.best.symbols) c.emitted_units += vocab.IsUnit(s) ? 1 : 0;
  });
  return out;
}

ConfidenceConfig RecipeHead(const ConfidenceRecipe &recipe,
                            const Parameters &params) {
  ConfidenceConfig c = recipe.head;
  c.enc_dim = params.config.enc_dim;
  c.num_symbols = params.config.num_symbols();
  ValidateConfidenceConfig(c);
  return c;
}

ConfidenceHead TrainConfidence(const ConfidenceRecipe &recipe,
                               const ConfidenceHead &init,
                               const std::vector<ConfidenceUtterance> &data,
                               const Progress &progress, double *final_loss) {
  ConfidenceHead head = init;
  std::vector<int> usable;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].examples.empty()) usable.push_back(static_cast<int>(i));
  }
  if (usable.empty()) Fail(ErrorKind::kData, "no confidence examples");
  AdamState state;
  BatchSampler sampler(static_cast<int>(usable.size()),
                       MixSeed(recipe.head.seed, kBatchStream));
  double loss = 0.0;
  for (int step = 1; step <= recipe.steps; ++step) {
    std::vector<std::vector<ConfidenceExample>> batch;
    for (int k : sampler.Next(recipe.batch_size)) {
      batch.push_back(data[usable[k]].examples);
    }
    loss = TrainConfidenceStep(head, batch, recipe.adam, state);
    if (progress.report && progress.interval > 0 &&
        (step % progress.interval == 0 || step == recipe.steps)) {
      progress.report(step, loss);
    }
  }
  if (final_loss != nullptr) *final_loss = loss;
  return head;
}

std::vector<std::vector<double>> ScoreConfidenceWords(
    const ConfidenceHead &head, const std::vector<ConfidenceUtterance> &data) {
  std::vector<std::vector<double>> out;
  for (const ConfidenceUtterance &c : data) {
    const int words = static_cast<int>(c.hyp.words.size());
    if (c.examples.empty()) {
      out.emplace_back();
      continue;
    }
    const std::vector<double> units = ScoreUnits(head, c.examples);
    out.push_back(ScoreWords(units, WordIndices(c.examples), words));
  }
  return out;
}

json ConfidenceEvaluation::ToJson() const {
  auto report = [](const std::optional<CalibrationReport> &o) {
    if (!o) return json(nullptr);
    const CalibrationReport &r = *o;
    return json{{"nce", r.nce},
                {"ece", r.ece},
                {"auc_roc", r.auc_roc},
                {"auc_prc", r.auc_prc},
                {"auc_npv_tnr", r.auc_npv_tnr}};
  };
  return {{"head", report(head)},
          {"baseline", report(baseline)},
          {"words", words},
          {"incorrect_words", incorrect_words},
          {"examples", examples},
          {"emitted_units", emitted_units}};
}

ConfidenceEvaluation EvaluateConfidence(
    const ConfidenceHead &head, const std::vector<ConfidenceUtterance> &data,
    int bins) {
  const auto scores = ScoreConfidenceWords(head, data);
  std::vector<double> conf, base;
  std::vector<bool> labels;
  ConfidenceEvaluation e;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ConfidenceUtterance &c = data[i];
    for (std::size_t w = 0; w < c.word_correct.size(); ++w) {
      conf.push_back(scores[i][w]);
      base.push_back(c.baseline[w]);
      labels.push_back(c.word_correct[w]);
      e.incorrect_words += c.word_correct[w] ? 0 : 1;
    }
    e.examples += static_cast<long>(c.examples.size());
    e.emitted_units += c.emitted_units;
  }
  e.words = static_cast<long>(labels.size());
  const long correct = std::count(labels.begin(), labels.end(), true);
  if (correct > 0 && correct < e.words) {
    e.head = Calibrate(conf, labels, bins);
    e.baseline = Calibrate(base, labels, bins);
  }
  return e;
}

// ---- Tagging ----

json TaggingRecipeToJson(const TaggingRecipe &r) {
  json task = TaggingTaskSpecToJson(r.task);
  task.erase("n_sentences");
  task.erase("first_index");
  task.erase("seq_len");
  json train = AdamToJson(r.options.adam);
  train["steps"] = r.options.steps;
  train["batch_size"] = r.options.batch_size;
  train["seed"] = r.options.seed;
  train["embed_seed"] = r.options.embed_seed;
  json model = ArchToJson(r.model);
  model["input_dim"] = r.model.input_dim;
  model["enc_kind"] = EncoderKindName(r.model.enc_kind);
  model["seed"] = r.model.seed;
  return {{"task", task},
          {"train_sentences", r.train_sentences},
          {"eval_words", r.eval_words},
          {"eval_first_index", r.eval_first_index},
          {"model", model},
          {"mode", EncodeModeName(r.options.mode)},
          {"train", train},
          {"seq_lens", r.seq_lens}};
}

TaggingRecipe TaggingRecipeFromJson(const json &j) {
  CheckKeys(j, {"task", "train_sentences", "eval_words", "eval_first_index",
                "model", "mode", "train", "seq_lens"},
            "tagging recipe");
  TaggingRecipe r;
  if (j.contains("task")) r.task = TaggingTaskSpecFromJson(j["task"]);
  r.train_sentences = Get(j, "train_sentences", r.train_sentences);
  r.eval_words = Get(j, "eval_words", r.eval_words);
  r.eval_first_index = Get(j, "eval_first_index", r.eval_first_index);
  if (j.contains("model")) {
    json m = j["model"];
    ModelConfig c = r.model;
    c.input_dim = Get(m, "input_dim", c.input_dim);
    c.enc_kind = ParseEncoderKind(
        Get(m, "enc_kind", std::string(EncoderKindName(c.enc_kind))));
    c.seed = Get(m, "seed", c.seed);
    m.erase("input_dim");
    m.erase("enc_kind");
    m.erase("seed");
    r.model = ArchFromJson(m, c);
  }
  r.options.mode = ParseEncodeMode(
      Get(j, "mode", std::string(EncodeModeName(r.options.mode))));
  if (j.contains("train")) {
    const json &t = j["train"];
    CheckKeys(t, With(kAdamKeys, {"steps", "batch_size", "seed", "embed_seed"}),
              "train");
    r.options.adam = AdamFromJson(t);
    r.options.steps = Get(t, "steps", r.options.steps);
    r.options.batch_size = Get(t, "batch_size", r.options.batch_size);
    r.options.seed = Get(t, "seed", r.options.seed);
    r.options.embed_seed = Get(t, "embed_seed", r.options.embed_seed);
  }
  r.seq_lens = Get(j, "seq_lens", r.seq_lens);
  if (r.train_sentences < 1 || r.eval_words < 1 || r.seq_lens.empty()) {
    Fail(ErrorKind::kConfig,
         "train_sentences, eval_words and seq_lens must be positive");
  }
  for (int len : r.seq_lens) {
    TaggingTaskSpec s = r.task;
    s.seq_len = len;
    ValidateTaggingTaskSpec(s);
  }
  return r;
}

std::vector<TagSentence> TaggingData(const TaggingRecipe &recipe, int seq_len,
                                     bool eval) {
  TaggingTaskSpec s = recipe.task;
  s.seq_len = seq_len;
  s.first_index = eval ? recipe.eval_first_index : 0;
  s.n_sentences =
      eval ? std::max(1, recipe.eval_words / seq_len) : recipe.train_sentences;
  return GenerateTaggingTask(s);
}

Parameters TrainTaggingRun(const TaggingRecipe &recipe, Objective objective,
                           int seq_len, double *final_loss) {
  const TagVocab vocab = TagVocab::FromLabels(TaggingLabels());
  ModelConfig c = recipe.model;
  c.vocab = vocab.tokens();
  Parameters params = InitModel(c);
  TaggerOptions options = recipe.options;
  options.objective = objective;
  const double loss = TrainTagger(params, vocab,
                                  TaggingData(recipe, seq_len, false), options);
  if (final_loss != nullptr) *final_loss = loss;
  return params;
}

json TaggingRunToJson(const TaggingRun &run) {
  json per = json::object();
  for (const auto &[name, c] : run.eval.per_ontology) per[name] = c.f1();
  return {{"objective", ObjectiveName(run.objective)},
          {"seq_len", run.seq_len},
          {"final_loss", run.final_loss},
          {"f1", run.eval.exact.f1()},
          {"precision", run.eval.exact.precision()},
          {"recall", run.eval.exact.recall()},
          {"per_ontology_f1", per},
          {"dropped_tags", run.eval.dropped}};
}

std::vector<TaggingRun> RunTaggingGrid(
    const TaggingRecipe &recipe,
    const std::function<void(const TaggingRun &)> &on_run) {
  const TagVocab vocab = TagVocab::FromLabels(TaggingLabels());
  std::vector<TaggingRun> out;
  for (Objective objective :
       {Objective::kFixedAlignment, Objective::kMarginal}) {
    for (int len : recipe.seq_lens) {
      const auto start = std::chrono::steady_clock::now();
      TaggingRun run;
      run.objective = objective;
      run.seq_len = len;
      const Parameters params =
          TrainTaggingRun(recipe, objective, len, &run.final_loss);
      TaggerOptions options = recipe.options;
      options.objective = objective;
      run.eval = EvaluateTagger(params, vocab, TaggingData(recipe, len, true),
                                options);
      run.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      if (on_run) on_run(run);
      out.push_back(std::move(run));
    }
  }
  return out;
}

}  // namespace rnnt
