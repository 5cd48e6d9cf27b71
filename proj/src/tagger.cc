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

#include "rnnt/tagger.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "rnnt/errors.h"
#include "rnnt/params.h"

namespace rnnt {

using ag::Mat;

TagVocab TagVocab::FromLabels(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  for (const auto &l : labels) {
    if (l.empty() || l.find(' ') != std::string::npos) {
      Fail(ErrorKind::kVocab, "invalid tag label '", l, "'");
    }
  }
  TagVocab v;
  v.labels_ = std::move(labels);
  return v;
}

TagVocab TagVocab::FromTokens(const std::vector<std::string> &tokens) {
  if (tokens.empty() || tokens.back() != kBlankToken) {
    Fail(ErrorKind::kVocab, "tag vocabulary must end with ", kBlankToken);
  }
  std::vector<std::string> labels;
  for (std::size_t i = 0; i + 1 < tokens.size(); i += 2) {
    const std::string &b = tokens[i];
    if (b.rfind("B:", 0) != 0 || i + 1 >= tokens.size() - 1 ||
        tokens[i + 1] != "END:" + b.substr(2)) {
      Fail(ErrorKind::kVocab, "malformed tag vocabulary at token ", i);
    }
    labels.push_back(b.substr(2));
  }
  TagVocab v = FromLabels(labels);
  if (v.tokens() != tokens) {
    Fail(ErrorKind::kVocab, "tag vocabulary is not in canonical order");
  }
  return v;
}

std::vector<std::string> TagVocab::tokens() const {
  std::vector<std::string> out;
  for (const auto &l : labels_) {
    out.push_back("B:" + l);
    out.push_back("END:" + l);
  }
  out.emplace_back(kBlankToken);
  return out;
}

int TagVocab::LabelIndex(std::string_view label) const {
  const auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) {
    Fail(ErrorKind::kVocab, "unknown tag label '", label, "'");
  }
  return static_cast<int>(it - labels_.begin());
}

int TagVocab::BeginId(std::string_view label) const {
  return 2 * LabelIndex(label);
}

int TagVocab::EndId(std::string_view label) const {
  return 2 * LabelIndex(label) + 1;
}

void ValidateSpans(int words, const std::vector<TagSpan> &spans,
                   const TagVocab &vocab) {
  std::map<std::string, std::vector<std::pair<int, int>>> by_label;
  for (const TagSpan &s : spans) {
    if (s.start < 0 || s.start > s.end || s.end >= words) {
      Fail(ErrorKind::kAnnotation, "span ", s.label, " [", s.start, ", ",
           s.end, "] outside ", words, " words");
    }
    vocab.BeginId(s.label);
    by_label[s.label].emplace_back(s.start, s.end);
  }
  for (auto &[label, ranges] : by_label) {
    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i) {
      if (ranges[i].first <= ranges[i - 1].second) {
        Fail(ErrorKind::kAnnotation, "overlapping ", label, " spans at words ",
             ranges[i - 1].first, "-", ranges[i - 1].second, " and ",
             ranges[i].first, "-", ranges[i].second);
      }
    }
  }
}

TagTarget AnnotationToPath(int words, const std::vector<TagSpan> &spans,
                           const TagVocab &vocab) {
  ValidateSpans(words, spans, vocab);
  // Per step: (phase, label, id) with phase 0 = closing end, 1 = begin,
  // 2 = end of a one-word span.
  std::vector<std::vector<std::tuple<int, std::string, int>>> at(words);
  for (const TagSpan &s : spans) {
    at[s.start].emplace_back(1, s.label, vocab.BeginId(s.label));
    at[s.end].emplace_back(s.start == s.end ? 2 : 0, s.label,
                           vocab.EndId(s.label));
  }
  TagTarget out;
  for (int w = 0; w < words; ++w) {
    std::sort(at[w].begin(), at[w].end());
    for (const auto &[phase, label, id] : at[w]) {
      out.path.push_back(Move::Label(static_cast<int>(out.symbols.size())));
      out.symbols.push_back(id);
      out.emit_times.push_back(w);
    }
    out.path.push_back(Move::Blank());
  }
  return out;
}

DecodedSpans DecodeSpans(const Hypothesis &hyp, const TagVocab &vocab) {
  DecodedSpans out;
  std::map<std::string, int> open;
  for (std::size_t i = 0; i < hyp.symbols.size(); ++i) {
    const int s = hyp.symbols[i];
    if (s < 0 || s >= vocab.blank()) {
      ++out.dropped;
      continue;
    }
    const int t = i < hyp.emit_times.size() ? hyp.emit_times[i] : 0;
    const std::string &label = vocab.LabelOf(s);
    if (vocab.IsBegin(s)) {
      if (open.count(label)) ++out.dropped;
      open[label] = t;
    } else {
      const auto it = open.find(label);
      if (it == open.end()) {
        ++out.dropped;
      } else {
        out.spans.push_back({label, it->second, t});
        open.erase(it);
      }
    }
  }
  out.dropped += static_cast<int>(open.size());
  std::sort(out.spans.begin(), out.spans.end(),
            [](const TagSpan &a, const TagSpan &b) {
              return std::tie(a.start, a.end, a.label) <
                     std::tie(b.start, b.end, b.label);
            });
  return out;
}

std::string TagSentenceToJsonLine(const TagSentence &s) {
  nlohmann::json spans = nlohmann::json::array();
  for (const TagSpan &t : s.spans) {
    spans.push_back({{"label", t.label}, {"start", t.start}, {"end", t.end}});
  }
  return nlohmann::json{{"id", s.id}, {"words", s.words}, {"spans", spans}}
      .dump();
}

TagSentence TagSentenceFromJsonLine(std::string_view line) {
  TagSentence s;
  try {
    const auto j = nlohmann::json::parse(line);
    s.id = j.at("id").get<std::string>();
    s.words = j.at("words").get<std::vector<std::string>>();
    for (const auto &t : j.at("spans")) {
      s.spans.push_back({t.at("label").get<std::string>(),
                         t.at("start").get<int>(), t.at("end").get<int>()});
    }
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kData, "malformed annotation line: ", e.what());
  }
  return s;
}

void WriteTagCorpus(const std::string &path,
                    const std::vector<TagSentence> &corpus) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kData, "cannot write ", path);
  for (const TagSentence &s : corpus) out << TagSentenceToJsonLine(s) << '\n';
  if (!out) Fail(ErrorKind::kData, "failed writing ", path);
}

std::vector<TagSentence> ReadTagCorpus(const std::string &path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kData, "cannot read ", path);
  std::vector<TagSentence> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(TagSentenceFromJsonLine(line));
  }
  return out;
}

nlohmann::json TaggingTaskSpecToJson(const TaggingTaskSpec &s) {
  return {{"seed", s.seed},
          {"n_sentences", s.n_sentences},
          {"first_index", s.first_index},
          {"seq_len", s.seq_len},
          {"filler_words", s.filler_words},
          {"markers", s.markers},
          {"contexts", s.contexts},
          {"span_rate", s.span_rate},
          {"max_span_len", s.max_span_len}};
}

TaggingTaskSpec TaggingTaskSpecFromJson(const nlohmann::json &j) {
  if (!j.is_object()) Fail(ErrorKind::kSpec, "tagging spec must be an object");
  TaggingTaskSpec s;
  const nlohmann::json known = TaggingTaskSpecToJson(s);
  for (const auto &[key, value] : j.items()) {
    if (!known.contains(key)) {
      Fail(ErrorKind::kSpec, "unknown tagging spec key '", key, "'");
    }
  }
  try {
    s.seed = j.value("seed", s.seed);
    s.n_sentences = j.value("n_sentences", s.n_sentences);
    s.first_index = j.value("first_index", s.first_index);
    s.seq_len = j.value("seq_len", s.seq_len);
    s.filler_words = j.value("filler_words", s.filler_words);
    s.markers = j.value("markers", s.markers);
    s.contexts = j.value("contexts", s.contexts);
    s.span_rate = j.value("span_rate", s.span_rate);
    s.max_span_len = j.value("max_span_len", s.max_span_len);
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kSpec, "bad tagging spec: ", e.what());
  }
  return s;
}

void ValidateTaggingTaskSpec(const TaggingTaskSpec &s) {
  auto require = [](bool ok, const char *what) {
    if (!ok) Fail(ErrorKind::kSpec, "tagging spec: ", what);
  };
  require(s.n_sentences >= 0, "n_sentences must be >= 0");
  require(s.first_index >= 0, "first_index must be >= 0");
  require(s.seq_len >= 1, "seq_len must be >= 1");
  require(s.filler_words >= 1, "filler_words must be >= 1");
  require(s.markers >= 1, "markers must be >= 1");
  require(s.contexts >= 1, "contexts must be >= 1");
  require(s.span_rate >= 0.0 && s.span_rate <= 1.0,
          "span_rate must be in [0, 1]");
  require(s.max_span_len >= 1, "max_span_len must be >= 1");
}

std::vector<std::string> TaggingLabels() {
  return {"ATTR:SEVERITY", "CONDITION:CHRONIC", "DIAG:TEST",
          "MEDS",          "SYM:PAIN",          "TREAT:THERAPY"};
}

namespace {

constexpr std::uint64_t kTagStream = 0x7a66;

std::string Indexed(const char *prefix, int i) {
  return prefix + std::to_string(i);
}

}  // namespace

std::vector<TagSentence> GenerateTaggingTask(const TaggingTaskSpec &spec) {
  ValidateTaggingTaskSpec(spec);
  const std::vector<std::string> labels = TaggingLabels();
  // Label table over (context, marker), shared by every sentence.
  std::mt19937_64 table_rng(MixSeed(spec.seed, kTagStream));
  std::vector<std::vector<int>> label_of(spec.contexts,
                                         std::vector<int>(spec.markers));
  for (auto &row : label_of) {
    for (int &l : row) {
      l = std::uniform_int_distribution<int>(
          0, static_cast<int>(labels.size()) - 1)(table_rng);
    }
  }
  std::vector<TagSentence> out;
  for (int n = 0; n < spec.n_sentences; ++n) {
    const int index = spec.first_index + n;
    std::mt19937_64 rng(
        MixSeed(spec.seed ^ kTagStream, static_cast<std::uint64_t>(index)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](int n_choices) {
      return std::uniform_int_distribution<int>(0, n_choices - 1)(rng);
    };
    TagSentence s;
    s.id = Indexed("tag-", index);
    while (static_cast<int>(s.words.size()) < spec.seq_len) {
      const int m = pick(spec.markers);
      const int len = 1 + m % spec.max_span_len;
      const int room = spec.seq_len - static_cast<int>(s.words.size());
      if (room >= 1 + len && unit(rng) < spec.span_rate) {
        const int c = pick(spec.contexts);
        s.words.push_back(Indexed("cx", c));
        const int start = static_cast<int>(s.words.size());
        s.words.push_back(Indexed("mk", m));
        for (int k = 1; k < len; ++k) {
          s.words.push_back(Indexed("w", pick(spec.filler_words)));
        }
        s.spans.push_back({labels[label_of[c][m]], start, start + len - 1});
      } else {
        s.words.push_back(Indexed("w", pick(spec.filler_words)));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

Mat EmbedWords(const std::vector<std::string> &words, int dim,
               std::uint64_t seed) {
  Mat out(static_cast<Eigen::Index>(words.size()), dim);
  for (std::size_t i = 0; i < words.size(); ++i) {
    // FNV-1a, so the vectors do not depend on the standard library.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : words[i]) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    std::uint64_t state = MixSeed(seed, h);
    for (int d = 0; d < dim; ++d) {
      state = MixSeed(state, static_cast<std::uint64_t>(d));
      // Uniform on [-sqrt(3), sqrt(3)]: unit variance.
      const double u = static_cast<double>(state >> 11) * 0x1.0p-53;
      out(static_cast<Eigen::Index>(i), d) = (2.0 * u - 1.0) * 1.7320508075688772;
    }
  }
  return out;
}

namespace {

void CheckTaggerModel(const Parameters &params, const TagVocab &vocab) {
  if (params.config.subsample_factor != 1) {
    Fail(ErrorKind::kConfig, "tagging needs subsample_factor 1, got ",
         params.config.subsample_factor);
  }
  if (params.config.vocab != vocab.tokens()) {
    Fail(ErrorKind::kVocab, "model vocabulary does not match the tag set");
  }
}

}  // namespace

double TrainTagger(Parameters &params, const TagVocab &vocab,
                   const std::vector<TagSentence> &corpus,
                   const TaggerOptions &options) {
  CheckTaggerModel(params, vocab);
  if (corpus.empty()) Fail(ErrorKind::kData, "empty tagging corpus");
  if (options.batch_size < 1) {
    Fail(ErrorKind::kParameter, "batch_size must be >= 1");
  }
  std::vector<Mat> frames;
  std::vector<TrainExample> examples;
  frames.reserve(corpus.size());
  for (const TagSentence &s : corpus) {
    frames.push_back(
        EmbedWords(s.words, params.config.input_dim, options.embed_seed));
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    TagTarget target = AnnotationToPath(
        static_cast<int>(corpus[i].words.size()), corpus[i].spans, vocab);
    examples.push_back(
        {&frames[i], std::move(target.symbols), std::move(target.path)});
  }

  TrainOptions train;
  train.objective = options.objective;
  train.mode = options.mode;
  train.adam = options.adam;
  train.threads = options.threads;
  AdamState state;
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  double loss = 0.0;
  std::vector<TrainExample> batch;
  for (int step = 0; step < options.steps; ++step) {
    batch.clear();
    while (static_cast<int>(batch.size()) <
           std::min<int>(options.batch_size, static_cast<int>(order.size()))) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(examples[order[cursor++]]);
    }
    loss = TrainStep(params, batch, train, state);
  }
  return loss;
}

std::vector<TagSpan> TagWords(const Parameters &params, const TagVocab &vocab,
                              const std::vector<std::string> &words,
                              const TaggerOptions &options, int *dropped) {
  CheckTaggerModel(params, vocab);
  if (words.empty()) return {};
  const Mat frames =
      EmbedWords(words, params.config.input_dim, options.embed_seed);
  const Mat enc = Encode(params, frames, options.mode).encodings;
  const ModelScorer scorer(params);
  const Hypothesis best = BeamDecode(scorer, enc, BeamConfig{}).front();
  DecodedSpans decoded = DecodeSpans(best, vocab);
  if (dropped) *dropped = decoded.dropped;
  return decoded.spans;
}

TaggerEvaluation EvaluateTagger(const Parameters &params,
                                const TagVocab &vocab,
                                const std::vector<TagSentence> &corpus,
                                const TaggerOptions &options) {
  TaggerEvaluation out;
  for (const char *name : kOntologies) out.per_ontology[name] = {};
  for (const TagSentence &s : corpus) {
    int dropped = 0;
    const auto hyp = TagWords(params, vocab, s.words, options, &dropped);
    out.dropped += dropped;
    out.exact += TagF1Counts(s.spans, hyp);
    for (const auto &[name, counts] : TagF1CountsPerOntology(s.spans, hyp)) {
      out.per_ontology[name] += counts;
    }
  }
  return out;
}

}  // namespace rnnt
