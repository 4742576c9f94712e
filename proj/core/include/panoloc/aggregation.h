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

#include "panoloc/types.h"

namespace panoloc {

inline constexpr double kDefaultRidgeEpsilon = 1e-9;

struct AggregationOptions {
  AggregationMode mode = AggregationMode::kPInv;
  // Relative ridge strength for rank-deficient p-inv member sets. The ridge
  // is ridge_epsilon * trace(G) / n, applied when any Gram pivot falls
  // below that same value.
  double ridge_epsilon = kDefaultRidgeEpsilon;
};

/// dot(a, b) / (|a| |b|), clamped to [-1, 1].
/// Throws DimensionMismatch or ZeroVector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Sum of the L2-normalized members. The result is left un-normalized.
MemoryVector sum_vector(std::span<const FeatureVector> members);

/// Memory vector m with x_i . m = 1 for every normalized member x_i, i.e.
/// m = X^T (X X^T)^-1 1. Requires members.size() <= dim; falls back to a
/// ridge-regularized Gram solve (and sets `regularized`) when the members
/// are numerically rank deficient.
MemoryVector pinv_vector(std::span<const FeatureVector> members,
                         double ridge_epsilon = kDefaultRidgeEpsilon);

/// Memory vector of one panorama from its four cardinal views.
MemoryVector aggregate_panorama(std::span<const FeatureVector> views,
                                const AggregationOptions &options);
MemoryVector aggregate_panorama(const std::vector<View> &views,
                                const AggregationOptions &options);

/// Aggregates an arbitrary non-empty descriptor set with the configured mode.
MemoryVector aggregate_features(std::span<const FeatureVector> members,
                                const AggregationOptions &options);

/// Cluster-level aggregation: members are normalized and combined exactly
/// like feature vectors; member_count accumulates the members' counts.
MemoryVector aggregate_memories(std::span<const MemoryVector> members,
                                const AggregationOptions &options);

}  // namespace panoloc
