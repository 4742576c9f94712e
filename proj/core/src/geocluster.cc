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
#include "panoloc/geocluster.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <tuple>
#include <unordered_set>

#include "panoloc/error.h"

namespace panoloc {

GeoPoint centroid(std::span<const GeoPoint> points) {
  if (points.empty()) throw Error(ErrorCode::kEmptyInput, "centroid of nothing");
  double sx = 0.0, sy = 0.0;
  for (const GeoPoint &p : points) {
    sx += p.x;
    sy += p.y;
  }
  const double n = static_cast<double>(points.size());
  return {sx / n, sy / n};
}

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

struct PairKey {
  double d2 = std::numeric_limits<double>::infinity();
  std::size_t lo = kNone;
  std::size_t hi = kNone;

  bool operator<(const PairKey &o) const {
    return std::tie(d2, lo, hi) < std::tie(o.d2, o.lo, o.hi);
  }
};

struct Group {
  double sx = 0.0;
  double sy = 0.0;
  std::size_t rank = 0;  // smallest member rank
  std::vector<std::size_t> members;
  bool alive = true;

  std::size_t count() const { return members.size(); }
  GeoPoint center() const {
    const double n = static_cast<double>(members.size());
    return {sx / n, sy / n};
  }
};

class Agglomerator {
 public:
  Agglomerator(std::span<const GeoPoint> locations,
               std::span<const std::size_t> rank, std::size_t max_size)
      : item_rank_(rank.begin(), rank.end()), max_size_(max_size) {
    groups_.resize(locations.size());
    for (std::size_t i = 0; i < locations.size(); ++i) {
      groups_[i].sx = locations[i].x;
      groups_[i].sy = locations[i].y;
      groups_[i].rank = rank[i];
      groups_[i].members = {i};
    }
    nn_.assign(groups_.size(), kNone);
    nn_key_.assign(groups_.size(), PairKey{});
    centers_.resize(groups_.size());
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      centers_[i] = groups_[i].center();
      if (groups_[i].count() < max_size_) active_.push_back(i);
    }
  }

  std::vector<std::vector<std::size_t>> run() {
    for (std::size_t k : active_) refresh(k);
    for (;;) {
      std::size_t best = kNone;
      for (std::size_t k : active_) {
        if (nn_[k] == kNone) continue;
        if (best == kNone || nn_key_[k] < nn_key_[best]) best = k;
      }
      if (best == kNone) break;
      merge(best, nn_[best]);
    }
    std::vector<std::vector<std::size_t>> out;
    for (Group &g : groups_) {
      if (!g.alive) continue;
      std::sort(g.members.begin(), g.members.end(),
                [&](std::size_t a, std::size_t b) { return rank_of(a) < rank_of(b); });
      out.push_back(std::move(g.members));
    }
    std::sort(out.begin(), out.end(), [&](const auto &a, const auto &b) {
      return rank_of(a.front()) < rank_of(b.front());
    });
    return out;
  }

 private:
  std::size_t rank_of(std::size_t item) const { return item_rank_[item]; }

  PairKey key(std::size_t a, std::size_t b) const {
    const double dx = centers_[a].x - centers_[b].x;
    const double dy = centers_[a].y - centers_[b].y;
    const std::size_t ra = groups_[a].rank, rb = groups_[b].rank;
    return {dx * dx + dy * dy, std::min(ra, rb), std::max(ra, rb)};
  }

  bool admissible(std::size_t a, std::size_t b) const {
    return groups_[a].count() + groups_[b].count() <= max_size_;
  }

  void refresh(std::size_t k) {
    nn_[k] = kNone;
    nn_key_[k] = PairKey{};
    for (std::size_t j : active_) {
      if (j == k || !admissible(k, j)) continue;
      const PairKey kj = key(k, j);
      if (kj < nn_key_[k]) {
        nn_key_[k] = kj;
        nn_[k] = j;
      }
    }
  }

  void merge(std::size_t a, std::size_t b) {
    Group &ga = groups_[a];
    Group &gb = groups_[b];
    ga.sx += gb.sx;
    ga.sy += gb.sy;
    ga.rank = std::min(ga.rank, gb.rank);
    ga.members.insert(ga.members.end(), gb.members.begin(), gb.members.end());
    gb.alive = false;
    gb.members.clear();
    centers_[a] = ga.center();

    const bool full = ga.count() >= max_size_;
    std::erase_if(active_, [&](std::size_t k) { return k == b || (full && k == a); });

    if (!full) refresh(a);
    for (std::size_t k : active_) {
      if (k == a) continue;
      if (nn_[k] == a || nn_[k] == b) {
        refresh(k);
      } else if (!full && admissible(k, a)) {
        const PairKey ka = key(k, a);
        if (ka < nn_key_[k]) {
          nn_key_[k] = ka;
          nn_[k] = a;
        }
      }
    }
  }

  std::vector<std::size_t> item_rank_;
  std::size_t max_size_;
  std::vector<Group> groups_;
  std::vector<GeoPoint> centers_;
  std::vector<std::size_t> active_;
  std::vector<std::size_t> nn_;
  std::vector<PairKey> nn_key_;
};

void check_items(std::span<const ClusterItem> items) {
  if (items.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to cluster");
  std::unordered_set<std::string_view> seen;
  for (const ClusterItem &it : items) {
    validate_point(it.location);
    if (!seen.insert(it.id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate id '" + it.id + "'");
    }
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> agglomerate(
    std::span<const GeoPoint> locations, std::span<const std::size_t> rank,
    std::size_t max_size) {
  if (locations.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to cluster");
  if (rank.size() != locations.size()) {
    throw Error(ErrorCode::kLengthMismatch, "rank/location length mismatch");
  }
  if (max_size < 2) {
    throw Error(ErrorCode::kInvalidConfig, "cluster size must be at least 2");
  }
  return Agglomerator(locations, rank, max_size).run();
}

std::string cluster_name(int level, std::size_t ordinal) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "L%d-%08zu", level, ordinal);
  return buf;
}

std::vector<Cluster> cluster_level(std::span<const ClusterItem> items,
                                   std::size_t max_size, int level) {
  check_items(items);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return items[a].id < items[b].id; });
  std::vector<std::size_t> rank(items.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;

  std::vector<GeoPoint> locations;
  locations.reserve(items.size());
  for (const ClusterItem &it : items) locations.push_back(it.location);

  const auto groups = agglomerate(locations, rank, max_size);
  std::vector<Cluster> out;
  out.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Cluster c;
    c.cluster_id = cluster_name(level, g);
    std::vector<GeoPoint> pts;
    for (std::size_t i : groups[g]) {
      c.member_ids.push_back(items[i].id);
      pts.push_back(items[i].location);
      c.size += items[i].leaf_count;
    }
    c.centroid = centroid(pts);
    out.push_back(std::move(c));
  }
  return out;
}

Hierarchy build_hierarchy(std::span<const PanoRecord> panos,
                          std::size_t cluster_size, std::size_t granularity,
                          const AggregationOptions &aggregation) {
  if (panos.empty()) throw Error(ErrorCode::kEmptyInput, "no panoramas");
  if (cluster_size < 2) {
    throw Error(ErrorCode::kInvalidConfig, "cluster size must be at least 2");
  }
  validate_dataset(panos);

  std::vector<std::size_t> order(panos.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return panos[a].id < panos[b].id; });

  Hierarchy h;
  h.cluster_size = cluster_size;
  h.granularity = granularity;
  h.aggregation = aggregation;
  h.levels.reserve(granularity + 1);

  std::vector<HierarchyNode> base;
  base.reserve(panos.size());
  for (std::size_t i : order) {
    HierarchyNode node;
    node.id = panos[i].id;
    node.centroid = panos[i].location;
    node.memory = panos[i].memory;
    base.push_back(std::move(node));
  }
  h.levels.push_back(std::move(base));

  for (std::size_t level = 1; level <= granularity; ++level) {
    const auto &below = h.levels.back();
    std::vector<GeoPoint> locations;
    std::vector<std::size_t> rank(below.size());
    locations.reserve(below.size());
    for (std::size_t i = 0; i < below.size(); ++i) {
      locations.push_back(below[i].centroid);
      rank[i] = i;  // nodes are already in id order
    }
    const auto groups = agglomerate(locations, rank, cluster_size);

    std::vector<HierarchyNode> nodes;
    nodes.reserve(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      HierarchyNode node;
      node.id = cluster_name(static_cast<int>(level), g);
      node.leaf_count = 0;
      std::vector<GeoPoint> pts;
      std::vector<MemoryVector> memories;
      for (std::size_t child : groups[g]) {
        node.children.push_back(static_cast<std::uint32_t>(child));
        node.leaf_count += below[child].leaf_count;
        pts.push_back(below[child].centroid);
        memories.push_back(below[child].memory);
      }
      node.centroid = centroid(pts);
      node.memory = aggregate_memories(memories, aggregation);
      nodes.push_back(std::move(node));
    }
    h.levels.push_back(std::move(nodes));
  }
  return h;
}

void check_partition(const Hierarchy &hierarchy) {
  for (std::size_t level = 1; level < hierarchy.levels.size(); ++level) {
    const auto &below = hierarchy.levels[level - 1];
    std::vector<int> parents(below.size(), 0);
    for (const HierarchyNode &node : hierarchy.levels[level]) {
      if (node.children.empty() || node.children.size() > hierarchy.cluster_size) {
        throw Error(ErrorCode::kInvalidConfig,
                    "cluster '" + node.id + "' violates the size cap");
      }
      std::uint32_t leaves = 0;
      for (std::uint32_t c : node.children) {
        if (c >= below.size()) {
          throw Error(ErrorCode::kInvalidConfig,
                      "cluster '" + node.id + "' has a dangling child");
        }
        ++parents[c];
        leaves += below[c].leaf_count;
      }
      if (leaves != node.leaf_count) {
        throw Error(ErrorCode::kCountMismatch,
                    "cluster '" + node.id + "' leaf count is inconsistent");
      }
    }
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (parents[i] != 1) {
        throw Error(ErrorCode::kInvalidConfig,
                    "node '" + below[i].id + "' has " +
                        std::to_string(parents[i]) + " parents");
      }
    }
  }
}

}  // namespace panoloc
