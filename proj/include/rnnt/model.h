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

// A micro transducer: encoder, one-layer recurrent prediction network, and an
// additive tanh joint.
//
// The encoder first stacks input frames: the output frame for input index t
// (t = 0, s, 2s, ...) sees [x_{t-s+1}, ..., x_t], with zeros before the start.
// This keeps the encoder causal and gives ceil(T / s) outputs.

#ifndef RNNT_MODEL_H_
#define RNNT_MODEL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rnnt/autograd.h"
#include "rnnt/optimizer.h"
#include "rnnt/params.h"
#include "rnnt/trellis.h"

namespace rnnt {

enum class EncoderKind { kRecurrentUni, kRecurrentBi, kWindowedAttention };
enum class EncodeMode { kStreaming, kNonStreaming };
enum class Objective { kMarginal, kFixedAlignment };

std::string_view EncoderKindName(EncoderKind kind);
EncoderKind ParseEncoderKind(std::string_view name);  // throws kConfig
std::string_view EncodeModeName(EncodeMode mode);
EncodeMode ParseEncodeMode(std::string_view name);    // throws kConfig
std::string_view ObjectiveName(Objective objective);
Objective ParseObjective(std::string_view name);      // throws kConfig

struct ModelConfig {
  int input_dim = 16;
  EncoderKind enc_kind = EncoderKind::kRecurrentUni;
  int enc_layers = 1;
  int enc_dim = 32;
  int attention_window = 8;  // encoder frames, self included
  int subsample_factor = 1;
  int pred_dim = 32;
  int joint_dim = 32;
  std::vector<std::string> vocab;  // index order; the last entry is blank
  std::uint64_t seed = 0;

  int num_symbols() const { return static_cast<int>(vocab.size()); }
  int blank() const { return num_symbols() - 1; }
};

nlohmann::json ModelConfigToJson(const ModelConfig &config);
// Missing keys keep their defaults; unknown keys are rejected (kConfig).
ModelConfig ModelConfigFromJson(const nlohmann::json &j);
void ValidateModelConfig(const ModelConfig &config);

// Everything the encoder needs to resume where it stopped.
struct EncoderState {
  std::int64_t frames_seen = 0;  // input frames consumed so far
  ag::Mat pending;               // last s-1 input frames
  // Per layer: 1 x width hidden state (recurrent) or the last window-1
  // inputs of the layer (attention).
  std::vector<ag::Mat> carry;
  std::vector<int> valid;  // attention only: meaningful rows of carry

  bool operator==(const EncoderState &) const = default;
};

EncoderState InitialEncoderState(const ModelConfig &config);
nlohmann::json EncoderStateToJson(const EncoderState &state);
EncoderState EncoderStateFromJson(const nlohmann::json &j);
// Throws kState when the shapes do not match `config`.
void CheckEncoderState(const ModelConfig &config, const EncoderState &state);

struct Parameters {
  ModelConfig config;
  ParamLayout layout;
  std::vector<double> values;
};

ParamLayout ModelLayout(const ModelConfig &config);
Parameters InitModel(const ModelConfig &config);

struct EncodeResult {
  ag::Mat encodings;  // ceil(T / s) x enc_dim
  EncoderState state;
};

// Streaming mode rejects the bidirectional encoder (kMode); non-streaming mode
// rejects a carried state (kMode).
EncodeResult Encode(const Parameters &params, const ag::Mat &frames,
                    EncodeMode mode,
                    const std::optional<EncoderState> &state = std::nullopt);

int EncodedLength(const ModelConfig &config, int frames);

// Joint logits over all (t, u) for a fixed target.
LogitLattice JointLattice(const Parameters &params, const ag::Mat &encodings,
                          const std::vector<int> &target);

// Prediction network outputs for [SOS, y_1, ..., y_U]: (U+1) x pred_dim.
ag::Mat PredictionOutputs(const Parameters &params,
                          const std::vector<int> &target);

// Incremental pieces used by the decoder.
ag::Mat PredictionStart(const Parameters &params);  // hidden after SOS
ag::Mat PredictionStep(const Parameters &params, const ag::Mat &hidden,
                       int symbol);
// Precomputed joint projections.
ag::Mat EncoderProjection(const Parameters &params, const ag::Mat &encodings);
ag::Mat PredictionProjection(const Parameters &params, const ag::Mat &hidden);
// Log-softmax over symbols of one joint node.
void JointLogProbs(const Parameters &params, std::span<const double> enc_proj,
                   std::span<const double> pred_proj, std::span<double> out);

struct TrainExample {
  const ag::Mat *frames = nullptr;
  std::vector<int> target;
  AlignmentPath path;  // over encoder frames; fixed-alignment objective only
};

struct TrainOptions {
  Objective objective = Objective::kMarginal;
  EncodeMode mode = EncodeMode::kStreaming;
  AdamConfig adam;
  int threads = 1;
};

// Mean loss over the batch; `grad` (resized to the parameter count) receives
// the gradient of the mean when non-null. Throws kDivergence on a non-finite
// loss.
double BatchLossAndGrad(const Parameters &params,
                        std::span<const TrainExample> batch,
                        Objective objective, EncodeMode mode,
                        std::vector<double> *grad, int threads = 1);

// One optimizer step; returns the batch mean loss before the update.
double TrainStep(Parameters &params, std::span<const TrainExample> batch,
                 const TrainOptions &options, AdamState &optimizer);

inline constexpr std::uint32_t kModelFormatVersion = 1;

// `run_config`, when given, is stored in the file header as provenance.
void SaveModel(const Parameters &params, const std::string &path,
               const nlohmann::json &run_config = nullptr);
// Throws kLoad for unreadable, truncated, or version-mismatched files.
Parameters LoadModel(const std::string &path);

}  // namespace rnnt

#endif  // RNNT_MODEL_H_
