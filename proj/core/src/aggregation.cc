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
#include "panoloc/aggregation.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "panoloc/error.h"

namespace panoloc {

namespace {

template <typename A, typename B>
double cosine_impl(std::span<const A> a, std::span<const B> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine of dim " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k], y = b[k];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// Row-major n x d matrix of L2-normalized members.
struct NormalizedRows {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }
};

template <typename T>
void append_normalized(NormalizedRows &rows, std::span<const T> values) {
  if (rows.n == 0) {
    rows.dim = values.size();
  } else if (values.size() != rows.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "member " + std::to_string(rows.n) + " has dim " +
                    std::to_string(values.size()) + ", expected " +
                    std::to_string(rows.dim));
  }
  double sq = 0.0;
  for (T v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteValue,
                  "member " + std::to_string(rows.n) + " is not finite");
    }
    sq += static_cast<double>(v) * static_cast<double>(v);
  }
  if (!(sq > 0.0)) {
    throw Error(ErrorCode::kZeroVector,
                "member " + std::to_string(rows.n) + " has zero norm");
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (T v : values) rows.data.push_back(static_cast<double>(v) * inv);
  ++rows.n;
}

NormalizedRows normalize_features(std::span<const FeatureVector> members) {
  if (members.empty()) throw Error(ErrorCode::kEmptyInput, "no members");
  NormalizedRows rows;
  rows.data.reserve(members.size() * members.front().dim());
  for (const FeatureVector &f : members) {
    append_normalized<float>(rows, f.values);
  }
  return rows;
}

std::vector<double> sum_rows(const NormalizedRows &rows) {
  std::vector<double> out(rows.dim, 0.0);
  for (std::size_t i = 0; i < rows.n; ++i) {
    const auto r = rows.row(i);
    for (std::size_t k = 0; k < rows.dim; ++k) out[k] += r[k];
  }
  return out;
}

// LDL^T factorization of the symmetric n x n matrix `a` (row-major, in
// place). Returns false if any pivot falls below `min_pivot`.
bool ldlt_factor(std::vector<double> &a, std::size_t n, double min_pivot) {
  for (std::size_t j = 0; j < n; ++j) {
    double dj = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) {
      const double ljk = a[j * n + k];
      dj -= ljk * ljk * a[k * n + k];
    }
    if (!(dj >= min_pivot) || dj <= 0.0) return false;
    a[j * n + j] = dj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) {
        s -= a[i * n + k] * a[j * n + k] * a[k * n + k];
      }
      a[i * n + j] = s / dj;
    }
  }
  return true;
}

// Solves L D L^T w = 1 with the factor produced above.
std::vector<double> ldlt_solve_ones(const std::vector<double> &f,
                                    std::size_t n) {
  std::vector<double> w(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) w[i] -= f[i * n + k] * w[k];
  }
  for (std::size_t i = 0; i < n; ++i) w[i] /= f[i * n + i];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) w[i] -= f[k * n + i] * w[k];
  }
  return w;
}

struct PInvResult {
  std::vector<double> values;
  bool regularized = false;
};

PInvResult pinv_rows(const NormalizedRows &rows, double ridge_epsilon) {
  if (!(ridge_epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "ridge_epsilon must be positive");
  }
  const std::size_t n = rows.n;
  if (n > rows.dim) {
    throw Error(ErrorCode::kTooManyMembers,
                std::to_string(n) + " members exceed dimension " +
                    std::to_string(rows.dim));
  }
  std::vector<double> gram(n * n);
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ri = rows.row(i);
    for (std::size_t j = 0; j <= i; ++j) {
      const auto rj = rows.row(j);
      double dot = 0.0;
      for (std::size_t k = 0; k < rows.dim; ++k) dot += ri[k] * rj[k];
      gram[i * n + j] = dot;
      gram[j * n + i] = dot;
    }
    trace += gram[i * n + i];
  }
  const double threshold = ridge_epsilon * trace / static_cast<double>(n);

  PInvResult out;
  std::vector<double> factor = gram;
  if (!ldlt_factor(factor, n, threshold)) {
    factor = gram;
    for (std::size_t i = 0; i < n; ++i) factor[i * n + i] += threshold;
    if (!ldlt_factor(factor, n, 0.0)) {
      throw Error(ErrorCode::kNonFiniteValue, "ridge Gram solve failed");
    }
    out.regularized = true;
  }
  const std::vector<double> weights = ldlt_solve_ones(factor, n);

  out.values.assign(rows.dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = rows.row(i);
    for (std::size_t k = 0; k < rows.dim; ++k) out.values[k] += weights[i] * r[k];
  }
  return out;
}

MemoryVector aggregate_rows(const NormalizedRows &rows,
                            const AggregationOptions &options,
                            std::uint32_t member_count) {
  MemoryVector m;
  m.mode = options.mode;
  m.member_count = member_count;
  if (options.mode == AggregationMode::kSum) {
    m.values = sum_rows(rows);
  } else {
    PInvResult r = pinv_rows(rows, options.ridge_epsilon);
    m.values = std::move(r.values);
    m.regularized = r.regularized;
  }
  return m;
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  return cosine_impl(a, b);
}

MemoryVector sum_vector(std::span<const FeatureVector> members) {
  const NormalizedRows rows = normalize_features(members);
  return aggregate_rows(rows, {AggregationMode::kSum, kDefaultRidgeEpsilon},
                        static_cast<std::uint32_t>(rows.n));
}

MemoryVector pinv_vector(std::span<const FeatureVector> members,
                         double ridge_epsilon) {
  const NormalizedRows rows = normalize_features(members);
  return aggregate_rows(rows, {AggregationMode::kPInv, ridge_epsilon},
                        static_cast<std::uint32_t>(rows.n));
}

MemoryVector aggregate_features(std::span<const FeatureVector> members,
                                const AggregationOptions &options) {
  const NormalizedRows rows = normalize_features(members);
  return aggregate_rows(rows, options, static_cast<std::uint32_t>(rows.n));
}

MemoryVector aggregate_panorama(std::span<const FeatureVector> views,
                                const AggregationOptions &options) {
  if (views.size() != 4) {
    throw Error(ErrorCode::kWrongViewCount,
                "panorama has " + std::to_string(views.size()) +
                    " views, expected 4");
  }
  return aggregate_features(views, options);
}

MemoryVector aggregate_panorama(const std::vector<View> &views,
                                const AggregationOptions &options) {
  std::vector<FeatureVector> features;
  features.reserve(views.size());
  for (const View &v : views) features.push_back(v.feature);
  return aggregate_panorama(std::span<const FeatureVector>(features), options);
}

MemoryVector aggregate_memories(std::span<const MemoryVector> members,
                                const AggregationOptions &options) {
  if (members.empty()) throw Error(ErrorCode::kEmptyInput, "no members");
  NormalizedRows rows;
  rows.data.reserve(members.size() * members.front().dim());
  std::uint64_t count = 0;
  for (const MemoryVector &m : members) {
    if (m.mode != members.front().mode) {
      throw Error(ErrorCode::kMixedModes, "members mix sum and pinv vectors");
    }
    append_normalized<double>(rows, m.values);
    count += m.member_count;
  }
  return aggregate_rows(rows, options, static_cast<std::uint32_t>(count));
}

}  // namespace panoloc
