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
#include <utility>

#include "rnnt/errors.h"
#include "rnnt/log_math.h"

namespace rnnt {

template <typename Scalar>
BasicLogitLattice<Scalar>::BasicLogitLattice(int frames,
                                             std::vector<int> targets,
                                             int vocab_size)
    : frames_(frames), vocab_size_(vocab_size), targets_(std::move(targets)) {
  if (frames_ < 0 || vocab_size_ < 1) {
    Fail(ErrorKind::kInput, "lattice needs T >= 0 and V >= 1, got T=", frames_,
         " V=", vocab_size_);
  }
  for (int y : targets_) {
    if (y < 0 || y >= vocab_size_) {
      Fail(ErrorKind::kInput, "target symbol ", y, " outside [0, ", vocab_size_,
           ")");
    }
  }
  logits_.assign(static_cast<std::size_t>(frames_) * (target_len() + 1) *
                     num_symbols(),
                 Scalar(0));
}

template <typename Scalar>
BasicLogitLattice<Scalar>::BasicLogitLattice(int frames,
                                             std::vector<int> targets,
                                             int vocab_size,
                                             std::vector<Scalar> logits)
    : BasicLogitLattice(frames, std::move(targets), vocab_size) {
  if (logits.size() != logits_.size()) {
    Fail(ErrorKind::kInput, "lattice expects ", logits_.size(),
         " logits, got ", logits.size());
  }
  logits_ = std::move(logits);
}

namespace {

// Per-node log-softmax in double precision, laid out like the lattice.
template <typename Scalar>
std::vector<double> NodeLogProbs(const BasicLogitLattice<Scalar> &lattice) {
  if (lattice.frames() < 1) Fail(ErrorKind::kInput, "lattice has T = 0");
  for (Scalar x : lattice.logits()) {
    if (!std::isfinite(static_cast<double>(x))) {
      Fail(ErrorKind::kInput, "lattice contains non-finite logits");
    }
  }
  std::vector<double> log_probs(lattice.logits().size());
  const std::size_t width = lattice.num_symbols();
  for (int t = 0; t < lattice.frames(); ++t) {
    for (int u = 0; u <= lattice.target_len(); ++u) {
      LogSoftmaxInto<Scalar>(
          lattice.node(t, u),
          std::span<double>(log_probs.data() + lattice.offset(t, u), width));
    }
  }
  return log_probs;
}

struct Tables {
  ForwardBackward fb;
  std::vector<double> log_probs;
};

template <typename Scalar>
Tables ForwardBackwardImpl(const BasicLogitLattice<Scalar> &lattice) {
  Tables out;
  out.log_probs = NodeLogProbs(lattice);
  const int T = lattice.frames();
  const int U = lattice.target_len();
  const int blank = lattice.blank();
  const auto &y = lattice.targets();
  auto lp = [&](int t, int u, int k) {
    return out.log_probs[lattice.offset(t, u) + k];
  };
  ForwardBackward &fb = out.fb;
  fb.frames = T;
  fb.target_len = U;
  fb.alpha.assign(static_cast<std::size_t>(T) * (U + 1), kLogZero);
  fb.beta.assign(static_cast<std::size_t>(T) * (U + 1), kLogZero);
  auto idx = [U](int t, int u) { return t * (U + 1) + u; };

  fb.alpha[0] = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double a = kLogZero;
      if (t > 0) a = fb.alpha[idx(t - 1, u)] + lp(t - 1, u, blank);
      if (u > 0) a = LogAdd(a, fb.alpha[idx(t, u - 1)] + lp(t, u - 1, y[u - 1]));
      fb.alpha[idx(t, u)] = a;
    }
  }

  fb.beta[idx(T - 1, U)] = lp(T - 1, U, blank);
  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) continue;
      double b = kLogZero;
      if (t < T - 1) b = fb.beta[idx(t + 1, u)] + lp(t, u, blank);
      if (u < U) b = LogAdd(b, fb.beta[idx(t, u + 1)] + lp(t, u, y[u]));
      fb.beta[idx(t, u)] = b;
    }
  }
  fb.log_prob = fb.beta[0];
  return out;
}

}  // namespace

template <typename Scalar>
ForwardBackward ComputeForwardBackward(
    const BasicLogitLattice<Scalar> &lattice) {
  return ForwardBackwardImpl(lattice).fb;
}

template <typename Scalar>
LossResult MarginalLossAndGrad(const BasicLogitLattice<Scalar> &lattice,
                               int target_len) {
  if (target_len != lattice.target_len()) {
    Fail(ErrorKind::kInput, "target length ", target_len,
         " does not match lattice label axis ", lattice.target_len());
  }
  Tables tables = ForwardBackwardImpl(lattice);
  const ForwardBackward &fb = tables.fb;
  const int T = lattice.frames();
  const int U = lattice.target_len();
  const int K = lattice.num_symbols();
  const int blank = lattice.blank();
  const auto &y = lattice.targets();

  LossResult result;
  result.loss = -fb.log_prob;
  result.grad.assign(tables.log_probs.size(), 0.0);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const std::size_t off = lattice.offset(t, u);
      const double *lp = tables.log_probs.data() + off;
      const double a = fb.a(t, u);
      // Posterior mass leaving (t, u) through each allowed move.
      double occ_blank = 0.0;
      if (t < T - 1) {
        occ_blank = std::exp(a + lp[blank] + fb.b(t + 1, u) - fb.log_prob);
      } else if (u == U) {
        occ_blank = std::exp(a + lp[blank] - fb.log_prob);
      }
      double occ_label = 0.0;
      if (u < U) {
        occ_label = std::exp(a + lp[y[u]] + fb.b(t, u + 1) - fb.log_prob);
      }
      const double occupancy = occ_blank + occ_label;
      if (occupancy == 0.0) continue;
      double *g = result.grad.data() + off;
      for (int k = 0; k < K; ++k) g[k] = std::exp(lp[k]) * occupancy;
      g[blank] -= occ_blank;
      if (u < U) g[y[u]] -= occ_label;
    }
  }
  return result;
}

bool ValidatePath(const AlignmentPath &path, int frames, int target_len) {
  if (frames < 1 || target_len < 0) return false;
  if (path.size() != static_cast<std::size_t>(frames + target_len)) {
    return false;
  }
  int t = 0;
  int u = 0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const Move &m = path[i];
    const bool last = i + 1 == path.size();
    if (m.is_blank()) {
      if (t == frames - 1) {
        // Only the terminating blank may leave the final frame.
        if (!last || u != target_len) return false;
      }
      ++t;
    } else {
      if (m.kind != Move::Kind::kLabel) return false;
      if (u >= target_len || m.label != u || last) return false;
      ++u;
    }
  }
  return t == frames && u == target_len;
}

template <typename Scalar>
LossResult FixedAlignmentLossAndGrad(const BasicLogitLattice<Scalar> &lattice,
                                     const AlignmentPath &path) {
  const int T = lattice.frames();
  const int U = lattice.target_len();
  if (T < 1) Fail(ErrorKind::kInput, "lattice has T = 0");
  if (!ValidatePath(path, T, U)) {
    Fail(ErrorKind::kPath, "alignment path is not valid for T=", T, " U=", U);
  }
  for (Scalar x : lattice.logits()) {
    if (!std::isfinite(static_cast<double>(x))) {
      Fail(ErrorKind::kInput, "lattice contains non-finite logits");
    }
  }
  const int K = lattice.num_symbols();
  LossResult result;
  result.grad.assign(lattice.logits().size(), 0.0);
  std::vector<double> lp(K);
  int t = 0;
  int u = 0;
  for (const Move &m : path) {
    const std::size_t off = lattice.offset(t, u);
    LogSoftmaxInto<Scalar>(lattice.node(t, u), lp);
    const int k = m.is_blank() ? lattice.blank() : lattice.targets()[u];
    result.loss -= lp[k];
    double *g = result.grad.data() + off;
    for (int j = 0; j < K; ++j) g[j] += std::exp(lp[j]);
    g[k] -= 1.0;
    if (m.is_blank()) {
      ++t;
    } else {
      ++u;
    }
  }
  return result;
}

double PathLogProb(const LogitLattice &lattice, const AlignmentPath &path) {
  if (!ValidatePath(path, lattice.frames(), lattice.target_len())) {
    Fail(ErrorKind::kPath, "alignment path is not valid for the lattice");
  }
  std::vector<double> lp(lattice.num_symbols());
  double total = 0.0;
  int t = 0;
  int u = 0;
  for (const Move &m : path) {
    LogSoftmaxInto<double>(lattice.node(t, u), lp);
    if (m.is_blank()) {
      total += lp[lattice.blank()];
      ++t;
    } else {
      total += lp[lattice.targets()[u]];
      ++u;
    }
  }
  return total;
}

std::uint64_t CountPaths(int frames, int target_len) {
  if (frames < 1 || target_len < 0) return 0;
  // C(n, k) with n = T - 1 + U, k = U; exact for the sizes we enumerate.
  const std::uint64_t n = static_cast<std::uint64_t>(frames - 1 + target_len);
  std::uint64_t k = static_cast<std::uint64_t>(target_len);
  if (k > n - k) k = n - k;
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

namespace {

void EnumerateFrom(int t, int u, int frames, int target_len,
                   AlignmentPath &prefix, std::vector<AlignmentPath> &out) {
  if (t == frames - 1 && u == target_len) {
    prefix.push_back(Move::Blank());
    out.push_back(prefix);
    prefix.pop_back();
    return;
  }
  if (u < target_len) {
    prefix.push_back(Move::Label(u));
    EnumerateFrom(t, u + 1, frames, target_len, prefix, out);
    prefix.pop_back();
  }
  if (t < frames - 1) {
    prefix.push_back(Move::Blank());
    EnumerateFrom(t + 1, u, frames, target_len, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<AlignmentPath> EnumeratePaths(int frames, int target_len) {
  if (frames < 1 || target_len < 0) {
    Fail(ErrorKind::kInput, "cannot enumerate paths for T=", frames,
         " U=", target_len);
  }
  if (frames + target_len > kMaxEnumeration) {
    Fail(ErrorKind::kRefusal, "enumeration refused: T + U = ",
         frames + target_len, " exceeds ", kMaxEnumeration);
  }
  std::vector<AlignmentPath> out;
  AlignmentPath prefix;
  EnumerateFrom(0, 0, frames, target_len, prefix, out);
  return out;
}

double EnumerateOracle(const LogitLattice &lattice) {
  if (lattice.frames() + lattice.target_len() > kMaxEnumeration) {
    Fail(ErrorKind::kRefusal, "enumeration refused: T + U = ",
         lattice.frames() + lattice.target_len(), " exceeds ",
         kMaxEnumeration);
  }
  double total = kLogZero;
  for (const AlignmentPath &path :
       EnumeratePaths(lattice.frames(), lattice.target_len())) {
    total = LogAdd(total, PathLogProb(lattice, path));
  }
  return -total;
}

template class BasicLogitLattice<float>;
template class BasicLogitLattice<double>;
template LossResult MarginalLossAndGrad(const LogitLattice &, int);
template LossResult MarginalLossAndGrad(const LogitLatticeF &, int);
template LossResult FixedAlignmentLossAndGrad(const LogitLattice &,
                                              const AlignmentPath &);
template LossResult FixedAlignmentLossAndGrad(const LogitLatticeF &,
                                              const AlignmentPath &);
template ForwardBackward ComputeForwardBackward(const LogitLattice &);
template ForwardBackward ComputeForwardBackward(const LogitLatticeF &);

}  // namespace rnnt
