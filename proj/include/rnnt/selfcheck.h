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

// Oracle checks of the trellis and the decoder on random micro-instances.

#ifndef RNNT_SELFCHECK_H_
#define RNNT_SELFCHECK_H_

#include <cstdint>
#include <string>

#include "json.hpp"

namespace rnnt {

struct CheckResult {
  std::string name;
  bool pass = false;
  nlohmann::json detail;
};

// Losses against path enumeration (1e-6 absolute) and gradients against
// central differences (1e-6 relative, magnitudes floored at 1e-3). Lattices
// have T <= 4, U <= 3 and up to 3 labels.
CheckResult CheckTrellisExactness(int lattices, std::uint64_t seed);

// Fixed loss >= marginal loss on random valid paths; equal when U = 0.
CheckResult CheckFixedDominance(int pairs, std::uint64_t seed);

// Beam search with a saturating width returns exactly the enumerated label
// sequences and scores, best first. T <= 3 and up to 2 labels.
CheckResult CheckBeamOptimality(int models, std::uint64_t seed);

}  // namespace rnnt

#endif  // RNNT_SELFCHECK_H_
