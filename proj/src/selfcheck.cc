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

#include "rnnt/selfcheck.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "rnnt/decoder.h"
#include "rnnt/model.h"
#include "rnnt/params.h"
#include "rnnt/trellis.h"

namespace rnnt {
namespace {

LogitLattice RandomLattice(std::mt19937_64 &rng, int T, int U, int V) {
  std::uniform_int_distribution<int> sym(0, V - 1);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<int> targets(U);
  for (int &y : targets) y = sym(rng);
  LogitLattice lattice(T, targets, V);
  for (double &x : lattice.mutable_logits()) x = normal(rng);
  return lattice;
}

AlignmentPath RandomPath(std::mt19937_64 &rng, int T, int U) {
  std::vector<bool> is_label(T - 1 + U, false);
  std::fill(is_label.begin(), is_label.begin() + U, true);
  std::shuffle(is_label.begin(), is_label.end(), rng);
  AlignmentPath path;
  int u = 0;
  for (bool l : is_label) path.push_back(l ? Move::Label(u++) : Move::Blank());
  path.push_back(Move::Blank());
  return path;
}

int Draw(std::mt19937_64 &rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

CheckResult CheckTrellisExactness(int lattices, std::uint64_t seed) {
  constexpr double kLossTol = 1e-6;
  constexpr double kGradTol = 1e-6;
  constexpr double kFloor = 1e-3;
  constexpr double kStep = 1e-4;
  std::mt19937_64 rng(seed);
  double worst_loss = 0.0, worst_grad = 0.0;
  long entries = 0;
  for (int n = 0; n < lattices; ++n) {
    const int T = Draw(rng, 1, 4), U = Draw(rng, 0, 3), V = Draw(rng, 1, 3);
    LogitLattice lattice = RandomLattice(rng, T, U, V);
    const LossResult r = MarginalLossAndGrad(lattice, U);
    worst_loss =
        std::max(worst_loss, std::abs(r.loss - EnumerateOracle(lattice)));
    std::vector<double> &x = lattice.mutable_logits();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double saved = x[i];
      x[i] = saved + kStep;
      const double plus = MarginalLossAndGrad(lattice, U).loss;
      x[i] = saved - kStep;
      const double minus = MarginalLossAndGrad(lattice, U).loss;
      x[i] = saved;
      const double fd = (plus - minus) / (2.0 * kStep);
      const double rel = std::abs(fd - r.grad[i]) /
                         std::max({std::abs(fd), std::abs(r.grad[i]), kFloor});
      worst_grad = std::max(worst_grad, rel);
      ++entries;
    }
  }
  return {"trellis exactness",
          worst_loss <= kLossTol && worst_grad <= kGradTol,
          {{"lattices", lattices},
           {"gradient_entries", entries},
           {"max_loss_error", worst_loss},
           {"max_grad_rel_error", worst_grad},
           {"loss_tolerance", kLossTol},
           {"grad_tolerance", kGradTol}}};
}

CheckResult CheckFixedDominance(int pairs, std::uint64_t seed) {
  constexpr double kTol = 1e-12;
  std::mt19937_64 rng(seed);
  int violations = 0, single_path = 0, single_path_mismatch = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int n = 0; n < pairs; ++n) {
    const int T = Draw(rng, 1, 5), U = Draw(rng, 0, 4), V = Draw(rng, 1, 3);
    const LogitLattice lattice = RandomLattice(rng, T, U, V);
    const AlignmentPath path = RandomPath(rng, T, U);
    const double fixed = FixedAlignmentLossAndGrad(lattice, path).loss;
    const double marginal = MarginalLossAndGrad(lattice, U).loss;
    const double gap = fixed - marginal;
    min_gap = std::min(min_gap, gap);
    if (gap < -kTol) ++violations;
    if (U == 0) {
      ++single_path;
      if (std::abs(gap) > kTol) ++single_path_mismatch;
    }
  }
  return {"fixed-alignment dominance",
          violations == 0 && single_path_mismatch == 0 && single_path > 0,
          {{"pairs", pairs},
           {"violations", violations},
           {"min_gap", min_gap},
           {"single_path_cases", single_path},
           {"single_path_mismatches", single_path_mismatch}}};
}

CheckResult CheckBeamOptimality(int models, std::uint64_t seed) {
  constexpr double kTol = 1e-9;
  constexpr int kMaxPerFrame = 3;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  int mismatches = 0;
  double worst = 0.0;
  long sequences = 0;
  for (int n = 0; n < models; ++n) {
    ModelConfig c;
    c.input_dim = 3;
    c.enc_dim = 4;
    c.pred_dim = 4;
    c.joint_dim = 5;
    const int labels = Draw(rng, 1, 2);
    for (int k = 0; k < labels; ++k) c.vocab.push_back(std::string(1, 'a' + k));
    c.vocab.push_back("<blank>");
    c.seed = rng();
    Parameters p = InitModel(c);
    // Sharpen the output layer so hypotheses separate clearly.
    const ParamInfo &out = p.layout.Get("joint.out");
    for (std::size_t i = 0; i < out.size(); ++i) p.values[out.offset + i] *= 2.0;
    const ModelScorer scorer(p);
    ag::Mat enc(Draw(rng, 1, 3), c.enc_dim);
    for (Eigen::Index i = 0; i < enc.size(); ++i) enc.data()[i] = normal(rng);
    const auto oracle = EnumerateLabelSequences(scorer, enc, kMaxPerFrame);
    const auto beam = BeamDecode(scorer, enc, {1 << 20, kMaxPerFrame});
    bool same = beam.size() == oracle.size();
    for (std::size_t i = 0; same && i < beam.size(); ++i) {
      same = beam[i].symbols == oracle[i].first;
      worst = std::max(worst, std::abs(beam[i].score - oracle[i].second));
    }
    if (!same) ++mismatches;
    sequences += static_cast<long>(oracle.size());
  }
  return {"beam optimality",
          mismatches == 0 && worst <= kTol,
          {{"models", models},
           {"sequences", sequences},
           {"mismatched_models", mismatches},
           {"max_score_error", worst}}};
}

}  // namespace rnnt
