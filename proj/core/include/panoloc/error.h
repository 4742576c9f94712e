// Copyright 2026-present the panoloc project
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
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace panoloc {

enum class ErrorCode {
  // record / vector invariants
  kDimensionMismatch,
  kNonFiniteValue,
  kZeroVector,
  kDuplicateView,
  kDuplicateId,
  // aggregation
  kEmptyInput,
  kTooManyMembers,
  kMixedModes,
  kWrongViewCount,
  // search
  kEmptyIndex,
  kInvalidConfig,
  // geoposition
  kTooFewCandidates,
  kNonPositiveMass,
  // evaluation
  kLengthMismatch,
  // persistence
  kIoFailure,
  kBadMagic,
  kVersionMismatch,
  kFormatVersionMismatch,
  kChecksumMismatch,
  kCountMismatch,
  kMissingView,
  kDuplicateRow,
  kUnsupportedDtype,
  kMalformedRow,
};

/// Stable machine-readable name, e.g. "ChecksumMismatch".
std::string_view error_name(ErrorCode code);

/// True for errors caused by malformed or inconsistent input data (CLI exit
/// status 2), false for usage/internal failures.
bool is_data_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &detail);

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace panoloc
