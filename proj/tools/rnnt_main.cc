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

// rnnt: data generation, training, decoding, scoring, confidence and tagging.
//
// Results go to stdout as JSON, logs to stderr. Exit codes: 2 usage or
// configuration error, 3 data error, 4 numeric error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rnnt/errors.h"
#include "rnnt/experiments.h"
#include "rnnt/selfcheck.h"

namespace rnnt {
namespace {

using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
    case ErrorKind::kConfig:
    case ErrorKind::kSpec:
    case ErrorKind::kParameter:
    case ErrorKind::kMode:
    case ErrorKind::kRefusal:
      return kExitUsage;
    case ErrorKind::kInput:
    case ErrorKind::kDivergence:
    case ErrorKind::kUndefinedMetric:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
  std::string mode;
  std::string carry_state;
  std::string objective;
  std::string units;
  // Command-specific.
  std::string split = "train";
  std::string data;
  std::string model;
  std::string head;
  std::string ref;
  std::string hyp;
  int beam_width = 0;
  int seq_len = 0;
};

void Log(const std::string &msg) { std::cerr << msg << std::endl; }

void Emit(const json &result) { std::cout << result.dump(2) << std::endl; }

std::string Dir(const std::string &path) {
  const auto parent = std::filesystem::path(path).parent_path();
  return parent.empty() ? "." : parent.string();
}

RichRecipe LoadRichRecipe(const Flags &f) {
  RichRecipe r = f.config.empty() ? RichRecipeFromJson(json::object())
                                  : RichRecipeFromJson(ReadJsonFile(f.config));
  if (f.seed) {
    r.seed = *f.seed;
    r.data.seed = *f.seed;
  }
  if (!f.objective.empty()) r.objective = ParseObjective(f.objective);
  if (!f.units.empty()) {
    if (f.units != "grapheme" && f.units != "merged") {
      Fail(ErrorKind::kUsage, "--units must be grapheme or merged");
    }
    r.units = f.units;
  }
  if (f.beam_width > 0) r.beam.beam_width = f.beam_width;
  return r;
}

EncodeMode DefaultMode(const Parameters &params) {
  return params.config.enc_kind == EncoderKind::kRecurrentBi
             ? EncodeMode::kNonStreaming
             : EncodeMode::kStreaming;
}

std::optional<bool> CarryFlag(const Flags &f) {
  if (f.carry_state.empty()) return std::nullopt;
  if (f.carry_state == "on") return true;
  if (f.carry_state == "off") return false;
  Fail(ErrorKind::kUsage, "--carry-state must be on or off");
}

void RequireOut(const Flags &f, const char *what) {
  if (f.out.empty()) Fail(ErrorKind::kUsage, "--out is required: ", what);
}

template <typename Fn>
void WriteLines(const std::string &path, int n, Fn line) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kData, "cannot write ", path);
  for (int i = 0; i < n; ++i) out << line(i) << '\n';
  if (!out) Fail(ErrorKind::kData, "failed writing ", path);
}

Progress LogProgress(const std::string &what) {
  return {100, [what](int step, double loss) {
            Log(what + " step " + std::to_string(step) + " loss " +
                std::to_string(loss));
          }};
}

// ---- commands ----

void GenSynth(const Flags &f) {
  RequireOut(f, "dataset path");
  const RichRecipe r = LoadRichRecipe(f);
  if (f.split != "train" && f.split != "eval") {
    Fail(ErrorKind::kUsage, "--split must be train or eval");
  }
  const SynthSpec spec = f.split == "train" ? TrainSpec(r) : EvalSpec(r);
  const std::vector<Utterance> utts = GenerateSynthetic(spec);
  WriteDataset(f.out, utts);
  long frames = 0, words = 0;
  for (const Utterance &u : utts) {
    frames += u.frames.rows();
    words += static_cast<long>(u.reference.words.size());
  }
  Emit({{"command", "gen-synth"},
        {"config", {{"recipe", RichRecipeToJson(r)}, {"split", f.split}}},
        {"spec", SynthSpecToJson(spec)},
        {"conversations", utts.size()},
        {"frames", frames},
        {"words", words},
        {"out", f.out}});
}

void Train(const Flags &f) {
  RequireOut(f, "model path");
  const RichRecipe r = LoadRichRecipe(f);
  const EncodeMode mode =
      f.mode.empty() ? EncodeMode::kStreaming : ParseEncodeMode(f.mode);
  const std::vector<Utterance> train =
      f.data.empty() ? GenerateSynthetic(TrainSpec(r)) : ReadDataset(f.data);
  const RichVocab vocab = RecipeVocab(r, train);
  const json config = {{"recipe", RichRecipeToJson(r)},
                       {"mode", EncodeModeName(mode)},
                       {"data", f.data.empty() ? json("recipe") : json(f.data)}};
  Log("training on " + std::to_string(train.size()) + " conversations");
  double loss = 0.0;
  const Parameters params =
      TrainRich(r, mode, train, vocab, f.jobs, LogProgress("train"), &loss);
  SaveModel(params, f.out, config);
  const std::vector<Utterance> eval = GenerateSynthetic(EvalSpec(r));
  const auto outputs = DecodeAll(params, eval, mode, r.beam, vocab, f.jobs);
  RichScores scores;
  for (std::size_t i = 0; i < eval.size(); ++i) {
    scores.Add(eval[i].reference, outputs[i].transcript);
  }
  Emit({{"command", "train"},
        {"config", config},
        {"final_loss", loss},
        {"model", f.out},
        {"eval", scores.ToJson()}});
}

void Decode(const Flags &f) {
  if (f.model.empty()) Fail(ErrorKind::kUsage, "--model is required");
  const Parameters params = LoadModel(f.model);
  const RichVocab vocab = RichVocab::FromTokens(params.config.vocab);
  const EncodeMode mode =
      f.mode.empty() ? DefaultMode(params) : ParseEncodeMode(f.mode);
  const std::optional<bool> carry = CarryFlag(f);
  if (carry && mode != EncodeMode::kStreaming) {
    Fail(ErrorKind::kUsage, "--carry-state needs --mode streaming");
  }
  std::vector<Utterance> utts;
  json source;
  if (!f.data.empty()) {
    utts = ReadDataset(f.data);
    source = f.data;
  } else {
    const RichRecipe r = LoadRichRecipe(f);
    utts = GenerateSynthetic(EvalSpec(r));
    source = {{"recipe_eval", RichRecipeToJson(r)}};
  }
  BeamConfig beam;
  if (f.beam_width > 0) beam.beam_width = f.beam_width;
  const auto outputs =
      carry ? DecodeSegmented(params, utts, *carry, beam, vocab, f.jobs)
            : DecodeAll(params, utts, mode, beam, vocab, f.jobs);
  RichScores scores;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    scores.Add(utts[i].reference, outputs[i].transcript);
  }
  if (!f.out.empty()) {
    WriteLines(f.out, static_cast<int>(utts.size()), [&](int i) {
      return json{{"id", utts[i].id},
                  {"text", RenderDecorated(outputs[i].transcript)},
                  {"score", outputs[i].best.score}}
          .dump();
    });
  }
  Emit({{"command", "decode"},
        {"config",
         {{"model", f.model},
          {"data", source},
          {"mode", EncodeModeName(mode)},
          {"carry_state", carry ? json(*carry ? "on" : "off") : json(nullptr)},
          {"beam_width", beam.beam_width},
          {"max_symbols_per_frame", beam.max_symbols_per_frame}}},
        {"utterances", utts.size()},
        {"out", f.out.empty() ? json(nullptr) : json(f.out)},
        {"scores", scores.ToJson()}});
}

// Transcript files: JSONL with "id" and "text" (or a dataset's "reference").
std::map<std::string, DecoratedTranscript> ReadTranscripts(
    const std::string &path, std::vector<std::string> *order) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot read ", path);
  std::map<std::string, DecoratedTranscript> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception &e) {
      Fail(ErrorKind::kData, path, ":", line_no, ": ", e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      Fail(ErrorKind::kData, path, ":", line_no, ": missing string \"id\"");
    }
    const char *key = j.contains("text") ? "text" : "reference";
    if (!j.contains(key) || !j[key].is_string()) {
      Fail(ErrorKind::kData, path, ":", line_no,
           ": missing \"text\" or \"reference\"");
    }
    const std::string id = j["id"];
    DecoratedTranscript t;
    try {
      t = ParseDecorated(j[key].get<std::string>());
    } catch (const Error &e) {
      Fail(ErrorKind::kData, path, ":", line_no, ": ", e.what());
    }
    if (!out.emplace(id, std::move(t)).second) {
      Fail(ErrorKind::kData, path, ":", line_no, ": duplicate id ", id);
    }
    if (order != nullptr) order->push_back(id);
  }
  return out;
}

void Score(const Flags &f) {
  if (f.ref.empty() || f.hyp.empty()) {
    Fail(ErrorKind::kUsage, "--ref and --hyp are required");
  }
  std::vector<std::string> ids;
  const auto refs = ReadTranscripts(f.ref, &ids);
  const auto hyps = ReadTranscripts(f.hyp, nullptr);
  RichScores scores;
  for (const std::string &id : ids) {
    const auto it = hyps.find(id);
    if (it == hyps.end()) Fail(ErrorKind::kData, "no hypothesis for ", id);
    scores.Add(refs.at(id), it->second);
  }
  if (hyps.size() != refs.size()) {
    Fail(ErrorKind::kData, "hypothesis file has ids missing from the reference");
  }
  const json result = {{"command", "score"},
                       {"config", {{"ref", f.ref}, {"hyp", f.hyp}}},
                       {"utterances", ids.size()},
                       {"scores", scores.ToJson()}};
  if (!f.out.empty()) {
    WriteLines(f.out, 1, [&](int) { return result.dump(2); });
  }
  Emit(result);
}

ConfidenceRecipe LoadConfidenceRecipe(const Flags &f) {
  ConfidenceRecipe r =
      f.config.empty()
          ? ConfidenceRecipeFromJson(json::object())
          : ConfidenceRecipeFromJson(ReadJsonFile(f.config), Dir(f.config));
  if (f.seed) r.head.seed = *f.seed;
  if (!f.mode.empty()) r.mode = ParseEncodeMode(f.mode);
  return r;
}

Parameters RecognizerFor(const Flags &f, const ConfidenceRecipe &r) {
  if (!f.model.empty()) return LoadModel(f.model);
  Log("no --model given; training the recognizer from the recipe");
  const std::vector<Utterance> train =
      GenerateSynthetic(TrainSpec(r.recognizer));
  return TrainRich(r.recognizer, r.mode, train,
                   RecipeVocab(r.recognizer, train), f.jobs,
                   LogProgress("recognizer"));
}

void ConfidenceTrain(const Flags &f) {
  RequireOut(f, "confidence head path");
  const ConfidenceRecipe r = LoadConfidenceRecipe(f);
  const Parameters params = RecognizerFor(f, r);
  const RichVocab vocab = RichVocab::FromTokens(params.config.vocab);
  const json config = {
      {"recipe", ConfidenceRecipeToJson(r)},
      {"model", f.model.empty() ? json("recipe") : json(f.model)}};
  const auto train = PrepareConfidence(params, ConfidenceData(r, false), r.mode,
                                       r.recognizer.beam, vocab, f.jobs);
  double loss = 0.0;
  const ConfidenceHead head =
      TrainConfidence(r, InitConfidenceHead(RecipeHead(r, params)), train,
                      LogProgress("confidence"), &loss);
  SaveConfidenceHead(head, f.out, config);
  const auto eval = PrepareConfidence(params, ConfidenceData(r, true), r.mode,
                                      r.recognizer.beam, vocab, f.jobs);
  Emit({{"command", "confidence-train"},
        {"config", config},
        {"final_loss", loss},
        {"head", f.out},
        {"eval", EvaluateConfidence(head, eval, r.calibration_bins).ToJson()}});
}

void ConfidenceScore(const Flags &f) {
  if (f.model.empty() || f.head.empty()) {
    Fail(ErrorKind::kUsage, "--model and --head are required");
  }
  const ConfidenceRecipe r = LoadConfidenceRecipe(f);
  const Parameters params = LoadModel(f.model);
  const ConfidenceHead head = LoadConfidenceHead(f.head);
  const RichVocab vocab = RichVocab::FromTokens(params.config.vocab);
  const std::vector<Utterance> utts =
      f.data.empty() ? ConfidenceData(r, true) : ReadDataset(f.data);
  const auto data =
      PrepareConfidence(params, utts, r.mode, r.recognizer.beam, vocab, f.jobs);
  if (!f.out.empty()) {
    const auto scores = ScoreConfidenceWords(head, data);
    WriteLines(f.out, static_cast<int>(data.size()), [&](int i) {
      json words = json::array();
      for (std::size_t w = 0; w < data[i].hyp.words.size(); ++w) {
        words.push_back({{"text", data[i].hyp.words[w].text},
                         {"confidence", scores[i][w]}});
      }
      return json{{"id", data[i].id}, {"words", words}}.dump();
    });
  }
  Emit({{"command", "confidence-score"},
        {"config",
         {{"recipe", ConfidenceRecipeToJson(r)},
          {"model", f.model},
          {"head", f.head},
          {"data", f.data.empty() ? json("recipe_eval") : json(f.data)}}},
        {"out", f.out.empty() ? json(nullptr) : json(f.out)},
        {"eval", EvaluateConfidence(head, data, r.calibration_bins).ToJson()}});
}

TaggingRecipe LoadTaggingRecipe(const Flags &f) {
  TaggingRecipe r = f.config.empty()
                        ? TaggingRecipeFromJson(json::object())
                        : TaggingRecipeFromJson(ReadJsonFile(f.config));
  if (f.seed) r.model.seed = *f.seed;
  if (!f.mode.empty()) r.options.mode = ParseEncodeMode(f.mode);
  return r;
}

int SeqLen(const Flags &f, const TaggingRecipe &r) {
  return f.seq_len > 0 ? f.seq_len : r.seq_lens.front();
}

json TaggerEvalJson(const TaggerEvaluation &e) {
  TaggingRun run;
  run.eval = e;
  json j = TaggingRunToJson(run);
  j.erase("objective");
  j.erase("seq_len");
  j.erase("final_loss");
  return j;
}

void TagTrain(const Flags &f) {
  RequireOut(f, "tagger model path");
  const TaggingRecipe r = LoadTaggingRecipe(f);
  const Objective objective = f.objective.empty()
                                  ? Objective::kFixedAlignment
                                  : ParseObjective(f.objective);
  const int len = SeqLen(f, r);
  const TagVocab vocab = TagVocab::FromLabels(TaggingLabels());
  TaggerOptions options = r.options;
  options.objective = objective;
  const json config = {{"recipe", TaggingRecipeToJson(r)},
                       {"objective", ObjectiveName(objective)},
                       {"seq_len", len},
                       {"data", f.data.empty() ? json("recipe") : json(f.data)}};
  ModelConfig c = r.model;
  c.vocab = vocab.tokens();
  Parameters params = InitModel(c);
  const std::vector<TagSentence> corpus =
      f.data.empty() ? TaggingData(r, len, false) : ReadTagCorpus(f.data);
  const double loss = TrainTagger(params, vocab, corpus, options);
  SaveModel(params, f.out, config);
  const TaggerEvaluation e =
      EvaluateTagger(params, vocab, TaggingData(r, len, true), options);
  Emit({{"command", "tag-train"},
        {"config", config},
        {"final_loss", loss},
        {"model", f.out},
        {"eval", TaggerEvalJson(e)}});
}

void TagEval(const Flags &f) {
  if (f.model.empty()) Fail(ErrorKind::kUsage, "--model is required");
  const TaggingRecipe r = LoadTaggingRecipe(f);
  const Parameters params = LoadModel(f.model);
  const TagVocab vocab = TagVocab::FromTokens(params.config.vocab);
  const int len = SeqLen(f, r);
  const std::vector<TagSentence> corpus =
      f.data.empty() ? TaggingData(r, len, true) : ReadTagCorpus(f.data);
  TaggerOptions options = r.options;
  const TaggerEvaluation e = EvaluateTagger(params, vocab, corpus, options);
  if (!f.out.empty()) {
    WriteLines(f.out, static_cast<int>(corpus.size()), [&](int i) {
      TagSentence s = corpus[i];
      s.spans = TagWords(params, vocab, s.words, options);
      return TagSentenceToJsonLine(s);
    });
  }
  Emit({{"command", "tag-eval"},
        {"config",
         {{"recipe", TaggingRecipeToJson(r)},
          {"model", f.model},
          {"seq_len", len},
          {"data", f.data.empty() ? json("recipe_eval") : json(f.data)}}},
        {"sentences", corpus.size()},
        {"eval", TaggerEvalJson(e)}});
}

int SelfCheck(const Flags &f) {
  const std::uint64_t seed = f.seed.value_or(1);
  const std::vector<CheckResult> checks = {
      CheckTrellisExactness(200, seed), CheckFixedDominance(1000, seed + 1),
      CheckBeamOptimality(50, seed + 2)};
  json list = json::array();
  bool pass = true;
  for (const CheckResult &c : checks) {
    Log(std::string(c.pass ? "PASS " : "FAIL ") + c.name);
    list.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    pass = pass && c.pass;
  }
  Emit({{"command", "selfcheck"},
        {"config", {{"seed", seed}}},
        {"checks", list},
        {"pass", pass}});
  return pass ? 0 : kExitNumeric;
}

int Run(int argc, char **argv) {
  CLI::App app{"rnnt: transducer toolkit for rich transcription, confidence "
               "and tagging"};
  app.require_subcommand(1);
  Flags f;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App *cmd) {
    cmd->add_option("--config", f.config, "recipe JSON file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "seed override");
    cmd->add_option("--out", f.out, "output path");
    cmd->add_option("--jobs", f.jobs, "worker threads")
        ->check(CLI::PositiveNumber);
  };
  auto mode = [&](CLI::App *cmd) {
    cmd->add_option("--mode", f.mode, "streaming or non-streaming")
        ->check(CLI::IsMember({"streaming", "non-streaming"}));
  };
  auto objective = [&](CLI::App *cmd) {
    cmd->add_option("--objective", f.objective, "marginal or fixed")
        ->check(CLI::IsMember({"marginal", "fixed"}));
  };

  std::map<CLI::App *, std::function<int()>> handlers;
  auto add = [&](const char *name, const char *help, auto fn) {
    CLI::App *cmd = app.add_subcommand(name, help);
    common(cmd);
    handlers[cmd] = [fn, &f] {
      fn(f);
      return 0;
    };
    return cmd;
  };

  CLI::App *gen = add("gen-synth", "generate a synthetic conversation dataset",
                      GenSynth);
  gen->add_option("--split", f.split, "train or eval")
      ->check(CLI::IsMember({"train", "eval"}));

  CLI::App *train = add("train", "train a rich-transcription model", Train);
  mode(train);
  objective(train);
  train->add_option("--units", f.units, "grapheme or merged")
      ->check(CLI::IsMember({"grapheme", "merged"}));
  train->add_option("--data", f.data, "training dataset (default: recipe)");

  CLI::App *decode = add("decode", "decode a dataset", Decode);
  mode(decode);
  decode->add_option("--carry-state", f.carry_state,
                     "segment-wise streaming decode, on or off")
      ->check(CLI::IsMember({"on", "off"}));
  decode->add_option("--model", f.model, "model file");
  decode->add_option("--data", f.data, "dataset (default: recipe eval split)");
  decode->add_option("--beam-width", f.beam_width, "beam width")
      ->check(CLI::PositiveNumber);

  CLI::App *score = add("score", "score hypotheses against references", Score);
  score->add_option("--ref", f.ref, "reference JSONL");
  score->add_option("--hyp", f.hyp, "hypothesis JSONL");

  CLI::App *ctrain =
      add("confidence-train", "train a confidence head", ConfidenceTrain);
  mode(ctrain);
  ctrain->add_option("--model", f.model,
                     "recognizer (default: trained from the recipe)");

  CLI::App *cscore =
      add("confidence-score", "score word confidences", ConfidenceScore);
  mode(cscore);
  cscore->add_option("--model", f.model, "recognizer model file");
  cscore->add_option("--head", f.head, "confidence head file");
  cscore->add_option("--data", f.data, "dataset (default: recipe eval split)");

  CLI::App *ttrain = add("tag-train", "train a span tagger", TagTrain);
  objective(ttrain);
  ttrain->add_option("--seq-len", f.seq_len, "words per sentence")
      ->check(CLI::PositiveNumber);
  ttrain->add_option("--data", f.data, "annotation JSONL (default: recipe)");

  CLI::App *teval = add("tag-eval", "evaluate a span tagger", TagEval);
  teval->add_option("--model", f.model, "tagger model file");
  teval->add_option("--seq-len", f.seq_len, "words per sentence")
      ->check(CLI::PositiveNumber);
  teval->add_option("--data", f.data, "annotation JSONL (default: recipe)");

  CLI::App *check =
      app.add_subcommand("selfcheck", "run the trellis and decoder oracles");
  check->add_option("--seed", seed, "seed");
  handlers[check] = [&f] { return SelfCheck(f); };

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << app.help();
    return kExitUsage;
  }
  for (auto &[cmd, handler] : handlers) {
    if (!cmd->parsed()) continue;
    if (cmd->count("--seed") > 0) f.seed = seed;
    return handler();
  }
  return kExitUsage;
}

}  // namespace
}  // namespace rnnt

int main(int argc, char **argv) {
  try {
    return rnnt::Run(argc, argv);
  } catch (const rnnt::Error &e) {
    std::cerr << "rnnt: " << e.what() << std::endl;
    return rnnt::ExitCodeFor(e.kind());
  } catch (const std::exception &e) {
    std::cerr << "rnnt: " << e.what() << std::endl;
    return 1;
  }
}
