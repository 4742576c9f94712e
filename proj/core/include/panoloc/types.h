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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace panoloc {

/// Planar map coordinate in meters (east, north). No geodetic math is done
/// anywhere; distances are plain Euclidean.
struct GeoPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const GeoPoint &, const GeoPoint &) = default;
};

double distance(const GeoPoint &a, const GeoPoint &b);

/// Descriptor of one planar view, as produced by an external extractor.
struct FeatureVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const FeatureVector &, const FeatureVector &) = default;
};

enum class AggregationMode : std::uint8_t { kSum = 0, kPInv = 1 };

std::string_view mode_name(AggregationMode mode);
/// Parses "sum" / "pinv" (case-sensitive). Throws InvalidConfig otherwise.
AggregationMode parse_mode(std::string_view text);

/// Aggregate of one or more descriptors. Stored un-normalized; cosine
/// similarity folds the normalization in.
struct MemoryVector {
  std::vector<double> values;
  AggregationMode mode = AggregationMode::kPInv;
  std::uint32_t member_count = 1;
  // Set when the p-inv Gram system needed the ridge fallback.
  bool regularized = false;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const MemoryVector &, const MemoryVector &) = default;
};

enum class Direction : std::uint8_t { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

inline constexpr std::array<Direction, 4> kCardinalDirections = {
    Direction::kNorth, Direction::kEast, Direction::kSouth, Direction::kWest};

std::string_view direction_name(Direction d);  // "N", "E", "S", "W"
std::optional<Direction> parse_direction(std::string_view text);

struct View {
  Direction direction = Direction::kNorth;
  FeatureVector feature;

  friend bool operator==(const View &, const View &) = default;
};

/// One georeferenced panorama. A valid record carries either no views or
/// exactly one view per cardinal direction.
struct PanoRecord {
  std::string id;
  GeoPoint location;
  MemoryVector memory;
  std::optional<std::vector<View>> views;

  /// Feature of the given direction; nullptr when absent.
  const FeatureVector *view(Direction d) const;

  friend bool operator==(const PanoRecord &, const PanoRecord &) = default;
};

struct Candidate {
  std::string pano_id;
  GeoPoint location;
  double query_similarity = 0.0;
  MemoryVector memory;

  friend bool operator==(const Candidate &, const Candidate &) = default;
};

/// Ranked matches for one query: non-increasing similarity, ties by
/// ascending id, ids unique.
using CandidateSet = std::vector<Candidate>;

/// Strict-weak ordering used for every ranking in the library.
inline bool ranks_before(double sim_a, std::string_view id_a, double sim_b,
                         std::string_view id_b) {
  if (sim_a != sim_b) return sim_a > sim_b;
  return id_a < id_b;
}

// Validation. Each throws panoloc::Error naming the violated invariant.
void validate_point(const GeoPoint &p);
void validate_feature(const FeatureVector &v);
void validate_memory(const MemoryVector &m);
void validate_record(const PanoRecord &record);
/// Checks uniqueness of ids across a dataset and a uniform dimension.
void validate_dataset(std::span<const PanoRecord> records);
void validate_candidates(const CandidateSet &candidates);

}  // namespace panoloc
