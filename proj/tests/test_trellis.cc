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

#include "rnnt/trellis.h"

#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "rnnt/errors.h"
#include "test_util.h"

namespace rnnt {
namespace {

using testing::CentralDifference;
using testing::RandomLattice;
using testing::RandomPath;
using testing::RelativeError;

// Frozen from EnumerateOracle: two paths, each three emissions at 1/3.
constexpr double kTwoPathUniformLoss = 2.6026896854443837;  // -ln(2/27)

ErrorKind KindOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  FAIL("expected an rnnt::Error");
  return ErrorKind::kUsage;
}

TEST_CASE("single forced blank on a uniform node") {
  LogitLattice lattice(1, {}, 2);
  LossResult r = MarginalLossAndGrad(lattice, 0);
  CHECK(r.loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  // Softmax gradient: p_k - [k == blank].
  CHECK(r.grad[0] == doctest::Approx(1.0 / 3.0));
  CHECK(r.grad[1] == doctest::Approx(1.0 / 3.0));
  CHECK(r.grad[2] == doctest::Approx(1.0 / 3.0 - 1.0));
}

TEST_CASE("two-path uniform lattice matches the enumeration oracle") {
  LogitLattice lattice(2, {0}, 2);
  CHECK(CountPaths(2, 1) == 2);
  CHECK(EnumeratePaths(2, 1).size() == 2);
  const double oracle = EnumerateOracle(lattice);
  CHECK(oracle == doctest::Approx(kTwoPathUniformLoss).epsilon(1e-12));
  CHECK(MarginalLossAndGrad(lattice, 1).loss ==
        doctest::Approx(kTwoPathUniformLoss).epsilon(1e-12));
}

TEST_CASE("marginal loss and gradient agree with oracles on random lattices") {
  std::mt19937_64 rng(20260101);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 4);
    const int U = static_cast<int>(rng() % 4);
    const int V = 1 + static_cast<int>(rng() % 3);
    LogitLattice lattice = RandomLattice(rng, T, U, V);
    LossResult r = MarginalLossAndGrad(lattice, U);
    CHECK(std::abs(r.loss - EnumerateOracle(lattice)) <= 1e-6);
    auto &x = lattice.mutable_logits();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(r.grad[i]) <= 1e-8) continue;
      const double fd = CentralDifference(
          x, i, 1e-4, [&] { return MarginalLossAndGrad(lattice, U).loss; });
      CHECK(RelativeError(fd, r.grad[i], 1e-3) <= 1e-6);
    }
  }
}

TEST_CASE("gradient sums to zero over each occupied node") {
  std::mt19937_64 rng(7);
  LogitLattice lattice = RandomLattice(rng, 4, 3, 3);
  LossResult r = MarginalLossAndGrad(lattice, 3);
  for (int t = 0; t < 4; ++t) {
    for (int u = 0; u <= 3; ++u) {
      double sum = 0.0;
      for (int k = 0; k < 4; ++k) sum += r.grad[lattice.offset(t, u) + k];
      CHECK(std::abs(sum) <= 1e-5);
    }
  }
}

TEST_CASE("forward-backward occupancy is constant on anti-diagonals") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 6);
    const int U = static_cast<int>(rng() % 5);
    LogitLattice lattice = RandomLattice(rng, T, U, 3);
    ForwardBackward fb = ComputeForwardBackward(lattice);
    const double total = std::exp(fb.log_prob);
    for (int n = 0; n <= T - 1 + U; ++n) {
      double sum = 0.0;
      for (int t = 0; t < T; ++t) {
        const int u = n - t;
        if (u < 0 || u > U) continue;
        sum += std::exp(fb.a(t, u) + fb.b(t, u));
      }
      CHECK(std::abs(sum - total) <= 1e-6 * std::max(1.0, total));
    }
    CHECK(fb.log_prob == doctest::Approx(fb.a(T - 1, U) + fb.b(T - 1, U)));
  }
}

TEST_CASE("per-node logit shift leaves both losses unchanged") {
  std::mt19937_64 rng(13);
  LogitLattice lattice = RandomLattice(rng, 3, 2, 3);
  AlignmentPath path = RandomPath(rng, 3, 2);
  const double marginal = MarginalLossAndGrad(lattice, 2).loss;
  const double fixed = FixedAlignmentLossAndGrad(lattice, path).loss;
  for (double &x : lattice.node(1, 1)) x += 17.25;
  CHECK(std::abs(MarginalLossAndGrad(lattice, 2).loss - marginal) <= 1e-9);
  CHECK(std::abs(FixedAlignmentLossAndGrad(lattice, path).loss - fixed) <=
        1e-9);
}

TEST_CASE("32-bit lattice storage with 64-bit accumulation") {
  std::mt19937_64 rng(17);
  LogitLattice lattice = RandomLattice(rng, 4, 3, 2);
  std::vector<float> narrow(lattice.logits().begin(), lattice.logits().end());
  LogitLatticeF lattice_f(4, lattice.targets(), 2, narrow);
  std::vector<double> widened(narrow.begin(), narrow.end());
  LogitLattice reference(4, lattice.targets(), 2, widened);
  CHECK(MarginalLossAndGrad(lattice_f, 3).loss ==
        doctest::Approx(MarginalLossAndGrad(reference, 3).loss).epsilon(1e-14));
}

TEST_CASE("marginal loss error paths") {
  LogitLattice lattice(2, {0}, 2);
  lattice.at(1, 0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK(KindOf([&] { MarginalLossAndGrad(lattice, 1); }) == ErrorKind::kInput);
  LogitLattice empty(0, {}, 2);
  CHECK(KindOf([&] { MarginalLossAndGrad(empty, 0); }) == ErrorKind::kInput);
  LogitLattice ok(2, {0}, 2);
  CHECK(KindOf([&] { MarginalLossAndGrad(ok, 2); }) == ErrorKind::kInput);
  CHECK(KindOf([&] { LogitLattice(1, {5}, 2); }) == ErrorKind::kInput);
}

TEST_CASE("fixed alignment loss on uniform lattice") {
  LogitLattice lattice(2, {1}, 2);
  const AlignmentPath label_first = {Move::Label(0), Move::Blank(),
                                     Move::Blank()};
  const AlignmentPath blank_first = {Move::Blank(), Move::Label(0),
                                     Move::Blank()};
  CHECK(FixedAlignmentLossAndGrad(lattice, label_first).loss ==
        doctest::Approx(3.0 * std::log(3.0)));
  CHECK(FixedAlignmentLossAndGrad(lattice, blank_first).loss ==
        doctest::Approx(3.0 * std::log(3.0)));
}

TEST_CASE("fixed alignment on the degenerate trellis equals marginal") {
  std::mt19937_64 rng(3);
  LogitLattice lattice = RandomLattice(rng, 1, 0, 3);
  LossResult fixed = FixedAlignmentLossAndGrad(lattice, {Move::Blank()});
  LossResult marginal = MarginalLossAndGrad(lattice, 0);
  CHECK(fixed.loss == doctest::Approx(marginal.loss).epsilon(1e-15));
  for (std::size_t i = 0; i < fixed.grad.size(); ++i) {
    CHECK(fixed.grad[i] == doctest::Approx(marginal.grad[i]).epsilon(1e-15));
  }
}

TEST_CASE("fixed alignment gradient touches only visited nodes") {
  std::mt19937_64 rng(5);
  LogitLattice lattice = RandomLattice(rng, 4, 2, 2);
  const AlignmentPath path = {Move::Blank(), Move::Label(0), Move::Blank(),
                              Move::Blank(), Move::Label(1), Move::Blank()};
  LossResult r = FixedAlignmentLossAndGrad(lattice, path);
  std::vector<std::pair<int, int>> visited = {{0, 0}, {1, 0}, {1, 1},
                                              {2, 1}, {3, 1}, {3, 2}};
  for (int t = 0; t < 4; ++t) {
    for (int u = 0; u <= 2; ++u) {
      const bool on_path =
          std::find(visited.begin(), visited.end(), std::make_pair(t, u)) !=
          visited.end();
      double mass = 0.0;
      for (int k = 0; k < 3; ++k) {
        mass += std::abs(r.grad[lattice.offset(t, u) + k]);
      }
      CHECK((mass > 0.0) == on_path);
    }
  }
  auto &x = lattice.mutable_logits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double fd = CentralDifference(x, i, 1e-4, [&] {
      return FixedAlignmentLossAndGrad(lattice, path).loss;
    });
    CHECK(std::abs(fd - r.grad[i]) <= 1e-8);
  }
}

TEST_CASE("fixed alignment loss dominates the marginal loss") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 1 + static_cast<int>(rng() % 4);
    const int U = static_cast<int>(rng() % 4);
    LogitLattice lattice = RandomLattice(rng, T, U, 3);
    AlignmentPath path = RandomPath(rng, T, U);
    const double fixed = FixedAlignmentLossAndGrad(lattice, path).loss;
    CHECK(fixed >= EnumerateOracle(lattice) - 1e-12);
    CHECK(fixed >= MarginalLossAndGrad(lattice, U).loss - 1e-12);
  }
}

TEST_CASE("fixed alignment rejects invalid paths") {
  LogitLattice lattice(2, {0}, 2);
  for (const AlignmentPath &bad :
       {AlignmentPath{Move::Blank(), Move::Blank(), Move::Label(0)},
        AlignmentPath{Move::Blank(), Move::Blank()},
        AlignmentPath{Move::Label(0), Move::Label(0), Move::Blank()}}) {
    CHECK(KindOf([&] { FixedAlignmentLossAndGrad(lattice, bad); }) ==
          ErrorKind::kPath);
  }
}

TEST_CASE("enumeration counts and guard") {
  CHECK(EnumeratePaths(3, 2).size() == 6);
  CHECK(CountPaths(3, 2) == 6);
  for (int T = 1; T <= 6; ++T) {
    CHECK(EnumeratePaths(T, 0).size() == 1);
    CHECK(CountPaths(T, 0) == 1);
  }
  for (int T = 1; T <= 5; ++T) {
    for (int U = 0; U <= 5; ++U) {
      auto paths = EnumeratePaths(T, U);
      CHECK(paths.size() == CountPaths(T, U));
      for (const auto &p : paths) CHECK(ValidatePath(p, T, U));
    }
  }
  LogitLattice big(7, {0, 0, 0, 0, 0, 0}, 1);
  CHECK(KindOf([&] { EnumerateOracle(big); }) == ErrorKind::kRefusal);
  LogitLattice edge(6, {0, 0, 0, 0, 0, 0}, 1);
  CHECK_NOTHROW(EnumerateOracle(edge));
}

TEST_CASE("validate_path examples") {
  CHECK(ValidatePath({Move::Blank()}, 1, 0));
  CHECK(ValidatePath({Move::Label(0), Move::Blank(), Move::Blank()}, 2, 1));
  CHECK(ValidatePath({Move::Blank(), Move::Label(0), Move::Blank()}, 2, 1));
  CHECK_FALSE(ValidatePath({Move::Blank(), Move::Blank(), Move::Label(0)}, 2, 1));
  CHECK_FALSE(ValidatePath({}, 1, 0));
  CHECK_FALSE(ValidatePath({Move::Blank()}, 0, 0));
  CHECK_FALSE(ValidatePath({Move::Label(1), Move::Label(0), Move::Blank()}, 1, 2));
  CHECK_FALSE(ValidatePath({Move::Blank(), Move::Label(0)}, 1, 1));
}

}  // namespace
}  // namespace rnnt
