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

// Shared helpers for the unit tests: random lattices and finite differences.

#ifndef RNNT_TESTS_TEST_UTIL_H_
#define RNNT_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rnnt/trellis.h"

namespace rnnt::testing {

inline LogitLattice RandomLattice(std::mt19937_64 &rng, int T, int U, int V,
                                  double scale = 2.0) {
  std::uniform_int_distribution<int> sym(0, V - 1);
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<int> targets(U);
  for (int &y : targets) y = sym(rng);
  LogitLattice lattice(T, targets, V);
  for (double &x : lattice.mutable_logits()) x = normal(rng);
  return lattice;
}

// Random valid path: shuffle T - 1 blanks with U labels, then the final blank.
inline AlignmentPath RandomPath(std::mt19937_64 &rng, int T, int U) {
  std::vector<bool> is_label(T - 1 + U, false);
  std::fill(is_label.begin(), is_label.begin() + U, true);
  std::shuffle(is_label.begin(), is_label.end(), rng);
  AlignmentPath path;
  int u = 0;
  for (bool l : is_label) {
    path.push_back(l ? Move::Label(u++) : Move::Blank());
  }
  path.push_back(Move::Blank());
  return path;
}

// Central difference of f with respect to x[i].
inline double CentralDifference(std::vector<double> &x, std::size_t i,
                                double step,
                                const std::function<double()> &f) {
  const double saved = x[i];
  x[i] = saved + step;
  const double plus = f();
  x[i] = saved - step;
  const double minus = f();
  x[i] = saved;
  return (plus - minus) / (2.0 * step);
}

// |a - b| relative to max(|a|, |b|, floor).
inline double RelativeError(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace rnnt::testing

#endif  // RNNT_TESTS_TEST_UTIL_H_
