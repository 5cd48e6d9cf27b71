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

#include "rnnt/optimizer.h"

#include <cmath>

#include "rnnt/errors.h"

namespace rnnt {

double AdamUpdate(const AdamConfig &config, AdamState &state,
                  std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size()) {
    Fail(ErrorKind::kInput, "optimizer got ", grads.size(),
         " gradients for ", params.size(), " parameters");
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  double norm2 = 0.0;
  for (double g : grads) norm2 += g * g;
  const double norm = std::sqrt(norm2);
  if (!std::isfinite(norm)) {
    Fail(ErrorKind::kDivergence, "non-finite gradient norm");
  }
  const double clip = (config.clip_norm > 0.0 && norm > config.clip_norm)
                          ? config.clip_norm / norm
                          : 1.0;
  ++state.step;
  if (config.learning_rate == 0.0) return norm;
  const double bc1 = 1.0 - std::pow(config.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] * clip;
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
  }
  return norm;
}

}  // namespace rnnt
