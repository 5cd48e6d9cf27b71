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

#ifndef RNNT_ERRORS_H_
#define RNNT_ERRORS_H_

#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rnnt {

// Every failure raised by the library carries one of these kinds. The CLI maps
// them onto process exit codes (see ExitCodeFor).
enum class ErrorKind {
  kInput,           // malformed numeric input (non-finite logits, T = 0, ...)
  kPath,            // alignment path inconsistent with the trellis
  kRefusal,         // request exceeds a combinatorial guard
  kConfig,          // invalid configuration field
  kState,           // encoder state does not match the configuration
  kMode,            // operation not available in the requested mode
  kVocab,           // symbol or character missing from the vocabulary
  kParse,           // decorated-transcript grammar violation
  kSpec,            // invalid synthetic-data specification
  kIndex,           // index outside the valid range
  kParameter,       // invalid scalar parameter
  kGrouping,        // inconsistent word grouping
  kUndefinedMetric, // metric undefined for the given counts
  kAnnotation,      // inconsistent span annotation
  kDivergence,      // non-finite loss during training
  kLoad,            // unreadable, truncated, or version-mismatched file
  kData,            // malformed data file
  kUsage,           // command-line misuse
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + " error: " +
                           message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Exit codes used by the command-line tool: 2 usage, 3 data, 4 numeric.
int ExitCodeFor(ErrorKind kind);

namespace internal {

template <typename... Args>
std::string StrCat(const Args &...args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace internal

template <typename... Args>
[[noreturn]] void Fail(ErrorKind kind, const Args &...args) {
  throw Error(kind, internal::StrCat(args...));
}

}  // namespace rnnt

#endif  // RNNT_ERRORS_H_
