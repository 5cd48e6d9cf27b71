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

#ifndef RNNT_LOG_MATH_H_
#define RNNT_LOG_MATH_H_

#include <algorithm>
#include <cmath>
#include <span>

namespace rnnt {

// Stand-in for log(0). Large enough that exp(kLogZero - x) underflows for any
// finite score we produce, small enough that sums of a few of them stay finite.
inline constexpr double kLogZero = -1.0e30;

inline bool IsLogZero(double x) { return x <= 0.5 * kLogZero; }

// log(exp(a) + exp(b)), max-shifted.
inline double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (IsLogZero(b)) return a;
  return a + std::log1p(std::exp(b - a));
}

inline double LogSumExp(std::span<const double> xs) {
  double max_value = kLogZero;
  for (double x : xs) max_value = std::max(max_value, x);
  if (IsLogZero(max_value)) return kLogZero;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - max_value);
  return max_value + std::log(sum);
}

// In-place log-softmax of a contiguous row. Accumulates in double.
template <typename Scalar>
void LogSoftmaxInto(std::span<const Scalar> logits, std::span<double> out) {
  double max_value = -INFINITY;
  for (Scalar x : logits) max_value = std::max(max_value, double(x));
  double sum = 0.0;
  for (Scalar x : logits) sum += std::exp(double(x) - max_value);
  const double log_norm = max_value + std::log(sum);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = double(logits[k]) - log_norm;
  }
}

}  // namespace rnnt

#endif  // RNNT_LOG_MATH_H_
