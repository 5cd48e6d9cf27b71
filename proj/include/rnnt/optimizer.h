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

#ifndef RNNT_OPTIMIZER_H_
#define RNNT_OPTIMIZER_H_

#include <cstdint>
#include <span>
#include <vector>

namespace rnnt {

struct AdamConfig {
  double learning_rate = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 1.0;  // global L2 norm; <= 0 disables clipping
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
};

// One Adam update after global-norm clipping. Returns the pre-clip norm.
double AdamUpdate(const AdamConfig &config, AdamState &state,
                  std::span<double> params, std::span<const double> grads);

}  // namespace rnnt

#endif  // RNNT_OPTIMIZER_H_
