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
#include "panoloc/geoposition.h"

#include <algorithm>
#include <numeric>

#include "panoloc/aggregation.h"
#include "panoloc/error.h"

namespace panoloc {

namespace {

// Sums pair terms in the order given by `order` so results do not depend
// on how the caller arranged the candidates.
std::vector<double> scores_in_order(std::span<const GeoPoint> locations,
                                    std::span<const double> sim,
                                    std::span<const std::size_t> order) {
  const std::size_t n = locations.size();
  std::vector<double> r(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j : order) {
      if (j == i) continue;
      const double s = std::max(0.0, sim[i * n + j]);
      acc += s / std::max(distance(locations[i], locations[j]), kMinPairDistance);
    }
    r[i] = acc;
  }
  return r;
}

}  // namespace

std::vector<double> rank_scores(std::span<const GeoPoint> locations,
                                std::span<const double> cross_similarity) {
  const std::size_t n = locations.size();
  if (n < 2) throw Error(ErrorCode::kTooFewCandidates, "need at least 2 candidates");
  if (cross_similarity.size() != n * n) {
    throw Error(ErrorCode::kDimensionMismatch, "similarity matrix is not n x n");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return scores_in_order(locations, cross_similarity, order);
}

std::vector<RankedCandidate> rerank(const CandidateSet &candidates) {
  const std::size_t n = candidates.size();
  if (n < 2) throw Error(ErrorCode::kTooFewCandidates, "need at least 2 candidates");

  std::vector<double> sim(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = cosine_similarity(std::span<const double>(candidates[i].memory.values),
                                         std::span<const double>(candidates[j].memory.values));
      sim[i * n + j] = s;
      sim[j * n + i] = s;
    }
  }
  std::vector<GeoPoint> locations;
  locations.reserve(n);
  for (const Candidate &c : candidates) locations.push_back(c.location);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].pano_id < candidates[b].pano_id;
  });
  const std::vector<double> scores = scores_in_order(locations, sim, order);

  std::vector<RankedCandidate> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({candidates[i].pano_id, candidates[i].location,
                   candidates[i].query_similarity, scores[i], true});
  }
  return out;
}

std::vector<RankedCandidate> filter_by_mean(std::vector<RankedCandidate> ranked) {
  if (ranked.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to filter");
  double sum = 0.0;
  double best = ranked.front().rank_score;
  for (const RankedCandidate &c : ranked) {
    sum += c.rank_score;
    best = std::max(best, c.rank_score);
  }
  // Rounding in the mean must not push it above the maximum.
  const double threshold = std::min(sum / static_cast<double>(ranked.size()), best);
  for (RankedCandidate &c : ranked) c.kept = c.rank_score >= threshold;
  return ranked;
}

GeoEstimate center_of_gravity(std::span<const RankedCandidate> candidates) {
  const RankedCandidate *origin = nullptr;
  double mass = 0.0;
  for (const RankedCandidate &c : candidates) {
    if (!c.kept) continue;
    if (!(c.query_similarity > 0.0)) {
      throw Error(ErrorCode::kNonPositiveMass,
                  "candidate '" + c.pano_id + "' has non-positive similarity");
    }
    validate_point(c.location);
    if (!origin) origin = &c;
    mass += c.query_similarity;
  }
  if (!origin) throw Error(ErrorCode::kEmptyInput, "no kept candidates");

  // Weighted offsets from the first contributor: exact for a single
  // contributor or coincident locations.
  double dx = 0.0, dy = 0.0;
  GeoEstimate est;
  for (const RankedCandidate &c : candidates) {
    if (!c.kept) continue;
    dx += c.query_similarity * (c.location.x - origin->location.x);
    dy += c.query_similarity * (c.location.y - origin->location.y);
    est.contributors.push_back(c.pano_id);
  }
  est.position = {origin->location.x + dx / mass, origin->location.y + dy / mass};
  est.total_mass = mass;
  return est;
}

GeoEstimate estimate_position(const CandidateSet &candidates, bool use_rerank) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyInput, "no candidates");
  if (!use_rerank || candidates.size() == 1) {
    std::vector<RankedCandidate> all;
    all.reserve(candidates.size());
    for (const Candidate &c : candidates) {
      all.push_back({c.pano_id, c.location, c.query_similarity, 0.0, true});
    }
    return center_of_gravity(all);
  }
  const auto kept = filter_by_mean(rerank(candidates));
  return center_of_gravity(kept);
}

}  // namespace panoloc
