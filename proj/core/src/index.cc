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
#include "panoloc/index.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "byte_io.h"
#include "panoloc/error.h"

namespace panoloc {

namespace {

using Scored = std::pair<double, std::uint32_t>;

// Node indices follow id order at every level, so comparing indices is the
// id tie-break.
bool better(const Scored &a, const Scored &b) {
  if (a.first != b.first) return a.first > b.first;
  return a.second < b.second;
}

void keep_top(std::vector<Scored> &scored, std::size_t k) {
  const std::size_t m = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(m),
                    scored.end(), better);
  scored.resize(m);
}

constexpr char kMagic[4] = {'P', 'L', 'I', 'X'};

}  // namespace

GeoIndex GeoIndex::build(std::span<const PanoRecord> panos,
                         std::size_t cluster_size, std::size_t granularity,
                         const AggregationOptions &aggregation) {
  if (panos.empty()) throw Error(ErrorCode::kEmptyIndex, "no panoramas to index");
  return GeoIndex(build_hierarchy(panos, cluster_size, granularity, aggregation));
}

GeoIndex::GeoIndex(const Hierarchy &hierarchy)
    : cluster_size_(hierarchy.cluster_size), aggregation_(hierarchy.aggregation) {
  if (hierarchy.levels.empty() || hierarchy.levels.front().empty()) {
    throw Error(ErrorCode::kEmptyIndex, "hierarchy has no panoramas");
  }
  dim_ = hierarchy.levels.front().front().memory.dim();
  levels_.reserve(hierarchy.levels.size());
  for (const auto &nodes : hierarchy.levels) {
    Level level;
    level.child_offset.push_back(0);
    level.vectors.reserve(nodes.size() * dim_);
    for (const HierarchyNode &node : nodes) {
      if (node.memory.dim() != dim_) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "node '" + node.id + "' has dim " +
                        std::to_string(node.memory.dim()));
      }
      level.ids.push_back(node.id);
      level.centroids.push_back(node.centroid);
      level.leaf_counts.push_back(node.leaf_count);
      level.member_counts.push_back(node.memory.member_count);
      level.regularized.push_back(node.memory.regularized ? 1 : 0);
      level.child_index.insert(level.child_index.end(), node.children.begin(),
                               node.children.end());
      level.child_offset.push_back(static_cast<std::uint32_t>(level.child_index.size()));
      for (double v : node.memory.values) level.vectors.push_back(static_cast<float>(v));
    }
    levels_.push_back(std::move(level));
  }
  finalize();
}

void GeoIndex::finalize() {
  for (Level &level : levels_) {
    level.norms.resize(level.size());
    for (std::size_t i = 0; i < level.size(); ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        const double v = level.vectors[i * dim_ + k];
        sq += v * v;
      }
      if (!(sq > 0.0) || !std::isfinite(sq)) {
        throw Error(ErrorCode::kZeroVector,
                    "node '" + level.ids[i] + "' has a degenerate memory vector");
      }
      level.norms[i] = std::sqrt(sq);
    }
  }
}

double GeoIndex::similarity(const Level &level, std::size_t node,
                            std::span<const double> query,
                            double query_norm) const {
  const float *row = level.vectors.data() + node * dim_;
  double dot = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) dot += query[k] * static_cast<double>(row[k]);
  return std::clamp(dot / (query_norm * level.norms[node]), -1.0, 1.0);
}

MemoryVector GeoIndex::memory(std::size_t level, std::size_t node) const {
  const Level &lv = levels_.at(level);
  MemoryVector m;
  m.values.assign(lv.vectors.begin() + static_cast<std::ptrdiff_t>(node * dim_),
                  lv.vectors.begin() + static_cast<std::ptrdiff_t>((node + 1) * dim_));
  m.mode = aggregation_.mode;
  m.member_count = lv.member_counts[node];
  m.regularized = lv.regularized[node] != 0;
  return m;
}

std::optional<std::size_t> GeoIndex::find(std::string_view pano_id) const {
  const auto &ids = levels_.front().ids;
  const auto it = std::lower_bound(ids.begin(), ids.end(), pano_id);
  if (it == ids.end() || *it != pano_id) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

CandidateSet GeoIndex::to_candidates(std::span<const Scored> ranked) const {
  const Level &panos = levels_.front();
  CandidateSet out;
  out.reserve(ranked.size());
  for (const auto &[sim, node] : ranked) {
    out.push_back({panos.ids[node], panos.centroids[node], sim, memory(0, node)});
  }
  return out;
}

namespace {

double checked_query_norm(std::span<const double> query, std::size_t dim) {
  if (query.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "query has dim " + std::to_string(query.size()) +
                    ", index has dim " + std::to_string(dim));
  }
  double sq = 0.0;
  for (double v : query) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteValue, "query is not finite");
    sq += v * v;
  }
  if (!(sq > 0.0)) throw Error(ErrorCode::kZeroVector, "query has zero norm");
  return std::sqrt(sq);
}

}  // namespace

SearchResult GeoIndex::full_scan(const MemoryVector &query, std::size_t top_k) const {
  const auto start = std::chrono::steady_clock::now();
  if (top_k < 1) throw Error(ErrorCode::kInvalidConfig, "top_k must be positive");
  const double qn = checked_query_norm(query.values, dim_);
  const Level &panos = levels_.front();

  std::vector<Scored> scored(panos.size());
  for (std::size_t i = 0; i < panos.size(); ++i) {
    scored[i] = {similarity(panos, i, query.values, qn), static_cast<std::uint32_t>(i)};
  }
  keep_top(scored, top_k);

  SearchResult result;
  result.candidates = to_candidates(scored);
  result.stats.similarity_evaluations = panos.size();
  result.stats.nodes_visited = panos.size();
  result.stats.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

SearchResult GeoIndex::search(const MemoryVector &query,
                              const SearchConfig &config) const {
  if (config.top_k < 1 || config.beam_width < 1) {
    throw Error(ErrorCode::kInvalidConfig, "top_k and beam_width must be positive");
  }
  if (config.granularity > granularity()) {
    throw Error(ErrorCode::kInvalidConfig,
                "granularity " + std::to_string(config.granularity) +
                    " exceeds index granularity " + std::to_string(granularity()));
  }
  if (config.granularity == 0) return full_scan(query, config.top_k);

  const auto start = std::chrono::steady_clock::now();
  const double qn = checked_query_norm(query.values, dim_);
  SearchResult result;

  // A level whose nodes all fit in the beam is expanded without scoring;
  // the scores could not change which nodes survive.
  std::size_t level = config.granularity;
  std::vector<std::uint32_t> nodes(levels_[level].size());
  std::iota(nodes.begin(), nodes.end(), std::uint32_t{0});
  std::vector<Scored> frontier;
  while (level > 0) {
    if (nodes.size() > config.beam_width) {
      frontier.clear();
      for (std::uint32_t node : nodes) {
        frontier.push_back({similarity(levels_[level], node, query.values, qn), node});
      }
      result.stats.similarity_evaluations += frontier.size();
      keep_top(frontier, config.beam_width);
      nodes.clear();
      for (const auto &[sim, node] : frontier) nodes.push_back(node);
    }
    const Level &parents = levels_[level];
    std::vector<std::uint32_t> next;
    for (std::uint32_t node : nodes) {
      for (std::uint32_t child : parents.children(node)) next.push_back(child);
    }
    nodes = std::move(next);
    --level;
  }
  frontier.clear();
  for (std::uint32_t node : nodes) {
    frontier.push_back({similarity(levels_[0], node, query.values, qn), node});
  }
  result.stats.similarity_evaluations += frontier.size();
  keep_top(frontier, config.top_k);

  result.candidates = to_candidates(frontier);
  result.stats.nodes_visited = result.stats.similarity_evaluations;
  result.stats.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

// Layout: "PLIX", u16 version, u32 dim, u8 mode, u32 cluster size,
// f64 ridge epsilon, u32 level count, levels, u64 FNV-1a of everything
// before it. Node: str id, f64 x, f64 y, u32 leaves, u32 members,
// u8 regularized, u32 child count, u32 children[], f32 vector[dim].
std::vector<std::uint8_t> GeoIndex::serialize() const {
  detail::ByteWriter w;
  w.bytes(kMagic, sizeof(kMagic));
  w.put<std::uint16_t>(kIndexFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dim_));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(aggregation_.mode));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cluster_size_));
  w.put<double>(aggregation_.ridge_epsilon);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(levels_.size()));
  for (const Level &level : levels_) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(level.size()));
    for (std::size_t i = 0; i < level.size(); ++i) {
      w.str(level.ids[i]);
      w.put<double>(level.centroids[i].x);
      w.put<double>(level.centroids[i].y);
      w.put<std::uint32_t>(level.leaf_counts[i]);
      w.put<std::uint32_t>(level.member_counts[i]);
      w.put<std::uint8_t>(level.regularized[i]);
      const auto kids = level.children(i);
      w.put<std::uint32_t>(static_cast<std::uint32_t>(kids.size()));
      for (std::uint32_t c : kids) w.put<std::uint32_t>(c);
      w.bytes(level.vectors.data() + i * dim_, dim_ * sizeof(float));
    }
  }
  const std::uint64_t checksum = detail::fnv1a64(w.buffer());
  w.put<std::uint64_t>(checksum);
  return std::move(w.buffer());
}

GeoIndex GeoIndex::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      !std::equal(kMagic, kMagic + sizeof(kMagic), bytes.begin())) {
    throw Error(ErrorCode::kBadMagic, "not a PLIX index");
  }
  detail::ByteReader header(bytes.subspan(sizeof(kMagic)), ErrorCode::kChecksumMismatch);
  const auto version = header.get<std::uint16_t>();
  if (version != kIndexFormatVersion) {
    throw Error(ErrorCode::kFormatVersionMismatch,
                "index format version " + std::to_string(version) +
                    ", expected " + std::to_string(kIndexFormatVersion));
  }
  if (bytes.size() < sizeof(kMagic) + 2 + 8) {
    throw Error(ErrorCode::kChecksumMismatch, "index file is truncated");
  }
  const auto body = bytes.first(bytes.size() - 8);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof(stored));
  if (detail::fnv1a64(body) != stored) {
    throw Error(ErrorCode::kChecksumMismatch, "index checksum does not match");
  }

  // The checksum vouches for the bytes; structural errors past this point
  // mean the writer was broken, reported as a count mismatch.
  detail::ByteReader r(body.subspan(sizeof(kMagic) + 2), ErrorCode::kCountMismatch);
  GeoIndex index;
  index.dim_ = r.get<std::uint32_t>();
  const auto mode = r.get<std::uint8_t>();
  if (mode > 1) throw Error(ErrorCode::kMalformedRow, "unknown aggregation mode");
  index.aggregation_.mode = static_cast<AggregationMode>(mode);
  index.cluster_size_ = r.get<std::uint32_t>();
  index.aggregation_.ridge_epsilon = r.get<double>();
  const auto level_count = r.get<std::uint32_t>();
  if (index.dim_ == 0 || level_count == 0) {
    throw Error(ErrorCode::kEmptyIndex, "index has no data");
  }
  for (std::uint32_t l = 0; l < level_count; ++l) {
    Level level;
    const auto count = r.get<std::uint32_t>();
    level.child_offset.push_back(0);
    for (std::uint32_t i = 0; i < count; ++i) {
      level.ids.push_back(r.str());
      const double x = r.get<double>();
      const double y = r.get<double>();
      level.centroids.push_back({x, y});
      level.leaf_counts.push_back(r.get<std::uint32_t>());
      level.member_counts.push_back(r.get<std::uint32_t>());
      level.regularized.push_back(r.get<std::uint8_t>());
      const auto kids = r.get<std::uint32_t>();
      for (std::uint32_t k = 0; k < kids; ++k) {
        const auto child = r.get<std::uint32_t>();
        if (l == 0 || child >= index.levels_.back().size()) {
          throw Error(ErrorCode::kCountMismatch, "child index out of range");
        }
        level.child_index.push_back(child);
      }
      level.child_offset.push_back(static_cast<std::uint32_t>(level.child_index.size()));
      const std::size_t offset = level.vectors.size();
      level.vectors.resize(offset + index.dim_);
      r.bytes(level.vectors.data() + offset, index.dim_ * sizeof(float));
    }
    if (level.ids.empty()) throw Error(ErrorCode::kEmptyIndex, "empty index level");
    index.levels_.push_back(std::move(level));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kCountMismatch, "trailing bytes after index levels");
  }
  const auto &ids = index.levels_.front().ids;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    if (!(ids[i - 1] < ids[i])) {
      throw Error(ErrorCode::kDuplicateId, "panorama ids are not strictly ordered");
    }
  }
  index.finalize();
  return index;
}

void GeoIndex::save(const std::filesystem::path &path) const {
  detail::write_file(path, serialize());
}

GeoIndex GeoIndex::load(const std::filesystem::path &path) {
  return deserialize(detail::read_file(path));
}

}  // namespace panoloc
