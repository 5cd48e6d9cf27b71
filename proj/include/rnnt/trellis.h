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

// Log-domain computations over the RNN-T alignment trellis.
//
// The trellis has T frames and U + 1 label-prefix positions. At node (t, u) the
// model scores V + 1 symbols; symbol V is blank. A blank move advances t, a
// label move emits targets[u] and advances u. Every complete path ends with a
// blank taken at (T - 1, U).

#ifndef RNNT_TRELLIS_H_
#define RNNT_TRELLIS_H_

#include <cstdint>
#include <span>
#include <vector>

namespace rnnt {

template <typename Scalar>
class BasicLogitLattice {
 public:
  BasicLogitLattice() = default;
  // Zero logits. `targets` must have one entry per label position, each in
  // [0, vocab_size).
  BasicLogitLattice(int frames, std::vector<int> targets, int vocab_size);
  BasicLogitLattice(int frames, std::vector<int> targets, int vocab_size,
                    std::vector<Scalar> logits);

  int frames() const { return frames_; }
  int target_len() const { return static_cast<int>(targets_.size()); }
  int vocab_size() const { return vocab_size_; }
  int num_symbols() const { return vocab_size_ + 1; }
  int blank() const { return vocab_size_; }
  const std::vector<int> &targets() const { return targets_; }

  std::size_t offset(int t, int u) const {
    return (static_cast<std::size_t>(t) * (target_len() + 1) + u) *
           num_symbols();
  }
  std::span<const Scalar> node(int t, int u) const {
    return {logits_.data() + offset(t, u),
            static_cast<std::size_t>(num_symbols())};
  }
  std::span<Scalar> node(int t, int u) {
    return {logits_.data() + offset(t, u),
            static_cast<std::size_t>(num_symbols())};
  }
  Scalar &at(int t, int u, int k) { return logits_[offset(t, u) + k]; }
  Scalar at(int t, int u, int k) const { return logits_[offset(t, u) + k]; }

  const std::vector<Scalar> &logits() const { return logits_; }
  std::vector<Scalar> &mutable_logits() { return logits_; }

 private:
  int frames_ = 0;
  int vocab_size_ = 0;
  std::vector<int> targets_;
  std::vector<Scalar> logits_;
};

using LogitLattice = BasicLogitLattice<double>;
using LogitLatticeF = BasicLogitLattice<float>;

struct Move {
  enum class Kind : std::uint8_t { kBlank, kLabel };
  Kind kind = Kind::kBlank;
  int label = -1;  // index into the target sequence for label moves

  static Move Blank() { return {Kind::kBlank, -1}; }
  static Move Label(int index) { return {Kind::kLabel, index}; }
  bool is_blank() const { return kind == Kind::kBlank; }
  bool operator==(const Move &) const = default;
};

using AlignmentPath = std::vector<Move>;

struct LossResult {
  double loss = 0.0;          // negative log-probability in nats
  std::vector<double> grad;   // d loss / d logits, laid out like the lattice
};

// Total function: true iff `path` has T blanks and U in-order labels, keeps
// the cursor inside the trellis, and terminates with a blank at (T-1, U).
bool ValidatePath(const AlignmentPath &path, int frames, int target_len);

// -log sum over all alignments, with the exact gradient w.r.t. raw logits.
template <typename Scalar>
LossResult MarginalLossAndGrad(const BasicLogitLattice<Scalar> &lattice,
                               int target_len);

// -log P(targets, path | x) for one alignment. Gradient is zero away from the
// nodes the path visits.
template <typename Scalar>
LossResult FixedAlignmentLossAndGrad(const BasicLogitLattice<Scalar> &lattice,
                                     const AlignmentPath &path);

// Log-domain forward and backward tables, row-major over (t, u).
// beta(t, u) includes every move from (t, u) to termination.
struct ForwardBackward {
  int frames = 0;
  int target_len = 0;
  std::vector<double> alpha;
  std::vector<double> beta;
  double log_prob = 0.0;  // log P(targets | x)

  double a(int t, int u) const { return alpha[t * (target_len + 1) + u]; }
  double b(int t, int u) const { return beta[t * (target_len + 1) + u]; }
};

template <typename Scalar>
ForwardBackward ComputeForwardBackward(const BasicLogitLattice<Scalar> &lattice);

// Log-probability of a single path. The path must be valid.
double PathLogProb(const LogitLattice &lattice, const AlignmentPath &path);

// Number of distinct complete paths, C(T + U - 1, U).
std::uint64_t CountPaths(int frames, int target_len);

// Every valid path in lexicographic order (label moves before blanks).
// Refuses when T + U exceeds kMaxEnumeration.
std::vector<AlignmentPath> EnumeratePaths(int frames, int target_len);

inline constexpr int kMaxEnumeration = 12;

// Test oracle: -log of the explicit sum over every path. Refuses when
// T + U > kMaxEnumeration.
double EnumerateOracle(const LogitLattice &lattice);

}  // namespace rnnt

#endif  // RNNT_TRELLIS_H_
