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

#include "rnnt/errors.h"

namespace rnnt {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInput: return "input";
    case ErrorKind::kPath: return "path";
    case ErrorKind::kRefusal: return "refusal";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kState: return "state";
    case ErrorKind::kMode: return "mode";
    case ErrorKind::kVocab: return "vocab";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kSpec: return "spec";
    case ErrorKind::kIndex: return "index";
    case ErrorKind::kParameter: return "parameter";
    case ErrorKind::kGrouping: return "grouping";
    case ErrorKind::kUndefinedMetric: return "undefined-metric";
    case ErrorKind::kAnnotation: return "annotation";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kLoad: return "load";
    case ErrorKind::kData: return "data";
    case ErrorKind::kUsage: return "usage";
  }
  return "unknown";
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage:
    case ErrorKind::kConfig:
    case ErrorKind::kMode:
    case ErrorKind::kParameter:
      return 2;
    case ErrorKind::kInput:
    case ErrorKind::kDivergence:
    case ErrorKind::kRefusal:
      return 4;
    default:
      return 3;
  }
}

}  // namespace rnnt
