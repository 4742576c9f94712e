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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "panoloc/aggregation.h"
#include "panoloc/geocluster.h"
#include "panoloc/types.h"

namespace panoloc {

struct SearchConfig {
  std::size_t top_k = 5;
  // Nodes kept per level during descent, pooled across expanded parents.
  std::size_t beam_width = 5;
  std::size_t granularity = 0;
};

struct SearchStats {
  std::uint64_t similarity_evaluations = 0;
  std::uint64_t nodes_visited = 0;
  std::chrono::nanoseconds wall_time{0};
};

struct SearchResult {
  CandidateSet candidates;
  SearchStats stats;
};

inline constexpr std::uint16_t kIndexFormatVersion = 1;

/// Immutable search structure over a clustered panorama database. Memory
/// vectors are held as float32 rows, so an index written to disk and read
/// back answers every query identically.
///
/// Concurrent const access from many threads is safe.
class GeoIndex {
 public:
  struct Level {
    std::vector<std::string> ids;
    std::vector<GeoPoint> centroids;
    std::vector<std::uint32_t> leaf_counts;
    std::vector<std::uint32_t> member_counts;
    std::vector<std::uint8_t> regularized;
    // Children of node i are child_index[child_offset[i] .. child_offset[i+1]).
    std::vector<std::uint32_t> child_offset;
    std::vector<std::uint32_t> child_index;
    std::vector<float> vectors;  // size() x dim, row-major
    std::vector<double> norms;

    std::size_t size() const { return ids.size(); }
    std::span<const std::uint32_t> children(std::size_t node) const {
      return {child_index.data() + child_offset[node],
              child_offset[node + 1] - child_offset[node]};
    }
  };

  static GeoIndex build(std::span<const PanoRecord> panos,
                        std::size_t cluster_size, std::size_t granularity,
                        const AggregationOptions &aggregation);
  explicit GeoIndex(const Hierarchy &hierarchy);

  /// Exact top-k by cosine similarity over every panorama.
  SearchResult full_scan(const MemoryVector &query, std::size_t top_k) const;

  /// Beam descent from `config.granularity` down to the panoramas. At
  /// granularity 0 this is full_scan(). Levels with at most beam_width
  /// candidate nodes are expanded without being scored.
  SearchResult search(const MemoryVector &query, const SearchConfig &config) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return levels_.front().size(); }
  std::size_t granularity() const { return levels_.size() - 1; }
  std::size_t cluster_size() const { return cluster_size_; }
  const AggregationOptions &aggregation() const { return aggregation_; }
  const Level &level(std::size_t l) const { return levels_.at(l); }

  std::optional<std::size_t> find(std::string_view pano_id) const;
  MemoryVector memory(std::size_t level, std::size_t node) const;

  std::vector<std::uint8_t> serialize() const;
  static GeoIndex deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path &path) const;
  static GeoIndex load(const std::filesystem::path &path);

 private:
  GeoIndex() = default;

  void finalize();
  double similarity(const Level &level, std::size_t node,
                    std::span<const double> query, double query_norm) const;
  CandidateSet to_candidates(std::span<const std::pair<double, std::uint32_t>> ranked) const;

  std::size_t dim_ = 0;
  std::size_t cluster_size_ = 0;
  AggregationOptions aggregation_;
  std::vector<Level> levels_;
};

}  // namespace panoloc
