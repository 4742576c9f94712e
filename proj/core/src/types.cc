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
#include "panoloc/types.h"

#include <array>
#include <cmath>
#include <string>
#include <unordered_set>

#include "panoloc/error.h"

namespace panoloc {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDuplicateView: return "DuplicateView";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kTooManyMembers: return "TooManyMembers";
    case ErrorCode::kMixedModes: return "MixedModes";
    case ErrorCode::kWrongViewCount: return "WrongViewCount";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kTooFewCandidates: return "TooFewCandidates";
    case ErrorCode::kNonPositiveMass: return "NonPositiveMass";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kFormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kMissingView: return "MissingView";
    case ErrorCode::kDuplicateRow: return "DuplicateRow";
    case ErrorCode::kUnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::kMalformedRow: return "MalformedRow";
  }
  return "Unknown";
}

bool is_data_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kIoFailure:
      return false;
    default:
      return true;
  }
}

Error::Error(ErrorCode code, const std::string &detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail),
      code_(code) {}

double distance(const GeoPoint &a, const GeoPoint &b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

std::string_view mode_name(AggregationMode mode) {
  return mode == AggregationMode::kSum ? "sum" : "pinv";
}

AggregationMode parse_mode(std::string_view text) {
  if (text == "sum") return AggregationMode::kSum;
  if (text == "pinv") return AggregationMode::kPInv;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown aggregation mode '" + std::string(text) + "'");
}

std::string_view direction_name(Direction d) {
  static constexpr std::string_view kNames[] = {"N", "E", "S", "W"};
  return kNames[static_cast<int>(d)];
}

std::optional<Direction> parse_direction(std::string_view text) {
  for (Direction d : kCardinalDirections) {
    if (direction_name(d) == text) return d;
  }
  return std::nullopt;
}

void validate_point(const GeoPoint &p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw Error(ErrorCode::kNonFiniteValue, "coordinate is not finite");
  }
}

namespace {

template <typename T>
void check_values(std::span<const T> values, const char *what) {
  if (values.empty()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " has dimension 0");
  }
  double sq = 0.0;
  for (T v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteValue,
                  std::string(what) + " has a non-finite entry");
    }
    sq += static_cast<double>(v) * static_cast<double>(v);
  }
  if (!(sq > 0.0)) {
    throw Error(ErrorCode::kZeroVector, std::string(what) + " has zero norm");
  }
}

}  // namespace

void validate_feature(const FeatureVector &v) {
  check_values<float>(v.values, "feature vector");
}

void validate_memory(const MemoryVector &m) {
  check_values<double>(m.values, "memory vector");
  if (m.member_count < 1) {
    throw Error(ErrorCode::kEmptyInput, "memory vector has no members");
  }
}

const FeatureVector *PanoRecord::view(Direction d) const {
  if (!views) return nullptr;
  for (const View &v : *views) {
    if (v.direction == d) return &v.feature;
  }
  return nullptr;
}

void validate_record(const PanoRecord &record) {
  validate_point(record.location);
  validate_memory(record.memory);
  if (!record.views) return;
  std::array<bool, 4> seen{};
  for (const View &view : *record.views) {
    const auto slot = static_cast<std::size_t>(view.direction);
    if (slot >= seen.size()) {
      throw Error(ErrorCode::kMalformedRow,
                  "record '" + record.id + "' has an unknown view direction");
    }
    if (seen[slot]) {
      throw Error(ErrorCode::kDuplicateView,
                  "record '" + record.id + "' has two " +
                      std::string(direction_name(view.direction)) + " views");
    }
    seen[slot] = true;
    if (view.feature.dim() != record.memory.dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "record '" + record.id + "' view " +
                      std::string(direction_name(view.direction)) +
                      " has dim " + std::to_string(view.feature.dim()) +
                      ", memory has dim " + std::to_string(record.memory.dim()));
    }
    validate_feature(view.feature);
  }
  if (record.views->size() != 4) {
    throw Error(ErrorCode::kWrongViewCount,
                "record '" + record.id + "' has " +
                    std::to_string(record.views->size()) + " views, expected 4");
  }
}

void validate_dataset(std::span<const PanoRecord> records) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(records.size());
  const std::size_t dim = records.empty() ? 0 : records.front().memory.dim();
  for (const PanoRecord &r : records) {
    validate_record(r);
    if (r.memory.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "record '" + r.id + "' has dim " +
                      std::to_string(r.memory.dim()) + ", dataset has " +
                      std::to_string(dim));
    }
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate pano id '" + r.id + "'");
    }
  }
}

void validate_candidates(const CandidateSet &candidates) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Candidate &c = candidates[i];
    if (!(c.query_similarity >= -1.0 && c.query_similarity <= 1.0)) {
      throw Error(ErrorCode::kNonFiniteValue,
                  "similarity of '" + c.pano_id + "' outside [-1, 1]");
    }
    if (!seen.insert(c.pano_id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  "candidate '" + c.pano_id + "' appears twice");
    }
    if (i > 0) {
      const Candidate &prev = candidates[i - 1];
      if (!ranks_before(prev.query_similarity, prev.pano_id,
                        c.query_similarity, c.pano_id)) {
        throw Error(ErrorCode::kInvalidConfig,
                    "candidate set is not ordered at position " +
                        std::to_string(i));
      }
    }
  }
}

}  // namespace panoloc
