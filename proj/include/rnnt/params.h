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

#ifndef RNNT_PARAMS_H_
#define RNNT_PARAMS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "rnnt/autograd.h"

namespace rnnt {

enum class ParamInit { kUniform, kZero };

struct ParamInfo {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  ParamInit init = ParamInit::kUniform;
  double scale = 0.0;  // half-width of the uniform range

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Named row-major views into one flat parameter vector.
class ParamLayout {
 public:
  // Uniform init defaults to +-1/sqrt(rows) (fan-in scaling).
  void Add(std::string name, int rows, int cols,
           ParamInit init = ParamInit::kUniform, double scale = -1.0);

  const ParamInfo &Get(std::string_view name) const;
  bool Has(std::string_view name) const;
  std::size_t size() const { return size_; }
  const std::vector<ParamInfo> &entries() const { return entries_; }

 private:
  std::vector<ParamInfo> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t size_ = 0;
};

// Deterministic scaled-uniform initialization.
std::vector<double> InitializeParams(const ParamLayout &layout,
                                     std::uint64_t seed);

// Binds a named parameter to a tape leaf. `grads` may be empty for inference.
ag::Var BindParam(ag::Tape &tape, const ParamLayout &layout,
                  std::span<const double> values, std::span<double> grads,
                  std::string_view name);

// Plain matrix copy of a named parameter.
ag::Mat ParamValue(const ParamLayout &layout, std::span<const double> values,
                   std::string_view name);

// Binary parameter file: 8-byte magic, uint32 version, uint64 header length,
// JSON header, uint64 value count, then little-endian float64 values.
struct ParamFile {
  nlohmann::json header;
  std::vector<double> values;
};

void WriteParamFile(const std::string &path, std::string_view magic,
                    std::uint32_t version, const nlohmann::json &header,
                    std::span<const double> values);
// Throws kLoad on a wrong magic or version, truncation or trailing bytes.
ParamFile ReadParamFile(const std::string &path, std::string_view magic,
                        std::uint32_t version, std::string_view what);

// SplitMix64 finalizer; used to derive independent seeds from (seed, index).
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t index);

}  // namespace rnnt

#endif  // RNNT_PARAMS_H_
