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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "panoloc/aggregation.h"
#include "panoloc/types.h"

namespace panoloc {

/// Input to one clustering pass: a panorama (level 1) or a cluster from the
/// level below.
struct ClusterItem {
  std::string id;
  GeoPoint location;
  std::uint32_t leaf_count = 1;
};

struct Cluster {
  std::string cluster_id;
  std::vector<std::string> member_ids;  // ascending
  GeoPoint centroid;                    // mean of the members' locations
  std::uint32_t size = 0;               // leaf panoramas beneath
};

GeoPoint centroid(std::span<const GeoPoint> points);

/// Size-capped agglomerative clustering with centroid linkage.
///
/// Starting from singletons, the closest pair of clusters (centroid to
/// centroid) whose combined member count is at most `max_size` is merged
/// until no such pair remains. Distance ties go to the pair with the
/// lexicographically smallest (min id, max id). The input order does not
/// matter: items are ranked by id first.
///
/// Returns groups of indices into `locations`; `rank[i]` is the tie-break
/// rank of item i (e.g. its position in id order). Groups are sorted
/// internally by rank and ordered by their smallest rank.
std::vector<std::vector<std::size_t>> agglomerate(
    std::span<const GeoPoint> locations, std::span<const std::size_t> rank,
    std::size_t max_size);

/// Named wrapper over agglomerate(). Clusters are ordered by their smallest
/// member id and named "L<level>-<ordinal>" with a zero-padded ordinal.
std::vector<Cluster> cluster_level(std::span<const ClusterItem> items,
                                   std::size_t max_size, int level = 1);

std::string cluster_name(int level, std::size_t ordinal);

struct HierarchyNode {
  std::string id;
  GeoPoint centroid;
  std::uint32_t leaf_count = 1;
  std::vector<std::uint32_t> children;  // indices into the level below
  MemoryVector memory;
};

/// levels[0] holds one node per panorama (ascending id); levels[l] holds the
/// clusters built over levels[l - 1].
struct Hierarchy {
  std::size_t cluster_size = 0;
  std::size_t granularity = 0;
  AggregationOptions aggregation;
  std::vector<std::vector<HierarchyNode>> levels;
};

/// Clusters the panoramas `granularity` times, aggregating a memory vector
/// for every cluster from its direct members.
Hierarchy build_hierarchy(std::span<const PanoRecord> panos,
                          std::size_t cluster_size, std::size_t granularity,
                          const AggregationOptions &aggregation);

/// Throws if the parent/child structure is not a partition at every level.
void check_partition(const Hierarchy &hierarchy);

}  // namespace panoloc
