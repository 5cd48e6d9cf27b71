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

#include "rnnt/params.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "rnnt/errors.h"

namespace rnnt {

void ParamLayout::Add(std::string name, int rows, int cols, ParamInit init,
                      double scale) {
  if (rows <= 0 || cols <= 0) {
    Fail(ErrorKind::kConfig, "parameter ", name, " has empty shape ", rows,
         "x", cols);
  }
  if (index_.count(name)) Fail(ErrorKind::kConfig, "duplicate parameter ", name);
  ParamInfo info;
  info.name = name;
  info.offset = size_;
  info.rows = rows;
  info.cols = cols;
  info.init = init;
  info.scale = scale > 0.0 ? scale : 1.0 / std::sqrt(double(rows));
  size_ += info.size();
  index_.emplace(std::move(name), entries_.size());
  entries_.push_back(std::move(info));
}

const ParamInfo &ParamLayout::Get(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) Fail(ErrorKind::kConfig, "no parameter named ", name);
  return entries_[it->second];
}

bool ParamLayout::Has(std::string_view name) const {
  return index_.count(std::string(name)) > 0;
}

namespace {

template <typename T>
void PutLE(std::string &out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.append(bytes, sizeof(T));
}

template <typename T>
T GetLE(const std::string &in, std::size_t &pos, std::string_view what) {
  if (pos > in.size() || in.size() - pos < sizeof(T)) {
    Fail(ErrorKind::kLoad, what, " file truncated at byte ", pos);
  }
  char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  pos += sizeof(T);
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void WriteParamFile(const std::string &path, std::string_view magic,
                    std::uint32_t version, const nlohmann::json &header,
                    std::span<const double> values) {
  const std::string text = header.dump();
  std::string bytes(magic);
  PutLE<std::uint32_t>(bytes, version);
  PutLE<std::uint64_t>(bytes, text.size());
  bytes += text;
  PutLE<std::uint64_t>(bytes, values.size());
  for (double v : values) PutLE<double>(bytes, v);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kLoad, "cannot write ", path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kLoad, "failed writing ", path);
}

ParamFile ReadParamFile(const std::string &path, std::string_view magic,
                        std::uint32_t version, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kLoad, "cannot open ", what, " file ", path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  if (bytes.size() < magic.size() ||
      std::memcmp(bytes.data(), magic.data(), magic.size()) != 0) {
    Fail(ErrorKind::kLoad, path, " is not a ", what, " file");
  }
  std::size_t pos = magic.size();
  const auto found = GetLE<std::uint32_t>(bytes, pos, what);
  if (found != version) {
    Fail(ErrorKind::kLoad, what, " format version ", found, ", expected ",
         version);
  }
  const auto header_size = GetLE<std::uint64_t>(bytes, pos, what);
  if (bytes.size() - pos < header_size) {
    Fail(ErrorKind::kLoad, what, " file truncated inside the header");
  }
  ParamFile file;
  try {
    file.header = nlohmann::json::parse(bytes.substr(pos, header_size));
  } catch (const nlohmann::json::exception &e) {
    Fail(ErrorKind::kLoad, "corrupt ", what, " header: ", e.what());
  }
  pos += header_size;
  const auto count = GetLE<std::uint64_t>(bytes, pos, what);
  if ((bytes.size() - pos) / sizeof(double) < count) {
    Fail(ErrorKind::kLoad, what, " file truncated: expected ", count,
         " values");
  }
  file.values.resize(count);
  for (auto &v : file.values) v = GetLE<double>(bytes, pos, what);
  if (pos != bytes.size()) {
    Fail(ErrorKind::kLoad, what, " file has ", bytes.size() - pos,
         " trailing bytes");
  }
  return file;
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<double> InitializeParams(const ParamLayout &layout,
                                     std::uint64_t seed) {
  std::vector<double> values(layout.size(), 0.0);
  for (std::size_t i = 0; i < layout.entries().size(); ++i) {
    const ParamInfo &p = layout.entries()[i];
    if (p.init == ParamInit::kZero) continue;
    // One stream per tensor so adding a layer does not reshuffle the others.
    std::mt19937_64 rng(MixSeed(seed, i));
    std::uniform_real_distribution<double> dist(-p.scale, p.scale);
    for (std::size_t j = 0; j < p.size(); ++j) values[p.offset + j] = dist(rng);
  }
  return values;
}

ag::Var BindParam(ag::Tape &tape, const ParamLayout &layout,
                  std::span<const double> values, std::span<double> grads,
                  std::string_view name) {
  const ParamInfo &p = layout.Get(name);
  double *grad_out = grads.empty() ? nullptr : grads.data() + p.offset;
  return tape.Param(values.data() + p.offset, grad_out, p.rows, p.cols);
}

ag::Mat ParamValue(const ParamLayout &layout, std::span<const double> values,
                   std::string_view name) {
  const ParamInfo &p = layout.Get(name);
  return Eigen::Map<const ag::Mat>(values.data() + p.offset, p.rows, p.cols);
}

}  // namespace rnnt
