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

#include <span>
#include <string>
#include <vector>

#include "panoloc/types.h"

namespace panoloc {

// Pairs closer than this are treated as this far apart when scoring.
inline constexpr double kMinPairDistance = 1.0;

struct RankedCandidate {
  std::string pano_id;
  GeoPoint location;
  double query_similarity = 0.0;
  // Sum over the other candidates of max(0, cross-similarity) divided by
  // their (floored) distance. Units: similarity per meter.
  double rank_score = 0.0;
  bool kept = true;
};

struct GeoEstimate {
  GeoPoint position;
  std::vector<std::string> contributors;
  double total_mass = 0.0;
};

/// Rank scores from a precomputed cross-similarity matrix (row-major,
/// n x n; the diagonal is ignored). Exposed for callers that already hold
/// the similarities.
std::vector<double> rank_scores(std::span<const GeoPoint> locations,
                                std::span<const double> cross_similarity);

/// Scores every candidate by its geographic-visual consistency with the
/// rest of the set. Output order follows the input. Needs at least two
/// candidates.
std::vector<RankedCandidate> rerank(const CandidateSet &candidates);

/// Marks candidates whose rank score is below the mean as rejected. The
/// best-ranked candidate always survives.
std::vector<RankedCandidate> filter_by_mean(std::vector<RankedCandidate> ranked);

/// Query-similarity weighted mean of the kept candidates' locations.
/// Throws NonPositiveMass if any kept similarity is <= 0.
GeoEstimate center_of_gravity(std::span<const RankedCandidate> candidates);

/// Baseline (use_rerank = false): center of gravity over every candidate.
/// Re-ranked: one rerank + mean-threshold pass, then center of gravity over
/// the survivors.
GeoEstimate estimate_position(const CandidateSet &candidates, bool use_rerank);

}  // namespace panoloc
