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
#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "panoloc/aggregation.h"
#include "test_util.h"

namespace panoloc {
namespace {

using testing::dot;
using testing::fv;
using testing::normalized;
using testing::random_unit;

// Independent least-squares oracle: minimum-norm solution of X m = 1 via a
// complete orthogonal decomposition.
Eigen::VectorXd lstsq_ones(std::span<const FeatureVector> members) {
  const auto n = static_cast<Eigen::Index>(members.size());
  const auto d = static_cast<Eigen::Index>(members.front().dim());
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = normalized(members[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = row[static_cast<std::size_t>(k)];
  }
  return x.completeOrthogonalDecomposition().solve(Eigen::VectorXd::Ones(n));
}

void expect_values(const MemoryVector &m, std::initializer_list<double> want, double tol) {
  ASSERT_EQ(m.dim(), want.size());
  std::size_t k = 0;
  for (double w : want) EXPECT_NEAR(m.values[k++], w, tol) << "component " << k - 1;
}

TEST(SumVector, SingleMemberIsIdentity) {
  const std::vector<FeatureVector> m = {fv({1, 0})};
  const MemoryVector s = sum_vector(m);
  expect_values(s, {1, 0}, 0);
  EXPECT_EQ(s.mode, AggregationMode::kSum);
  EXPECT_EQ(s.member_count, 1u);
}

TEST(SumVector, Orthonormal) {
  const std::vector<FeatureVector> m = {fv({1, 0}), fv({0, 1})};
  expect_values(sum_vector(m), {1, 1}, 0);
}

TEST(SumVector, NormalizesOnEntry) {
  const std::vector<FeatureVector> m = {fv({3, 4}), fv({0, 2})};
  const MemoryVector s = sum_vector(m);
  expect_values(s, {0.6, 1.8}, 1e-7);
  EXPECT_EQ(s.member_count, 2u);
}

TEST(SumVector, Errors) {
  EXPECT_PANOLOC_ERROR(sum_vector({}), ErrorCode::kEmptyInput);
  const std::vector<FeatureVector> mixed = {fv({1, 0}), fv({1, 0, 0})};
  EXPECT_PANOLOC_ERROR(sum_vector(mixed), ErrorCode::kDimensionMismatch);
  const std::vector<FeatureVector> zero = {fv({0, 0})};
  EXPECT_PANOLOC_ERROR(sum_vector(zero), ErrorCode::kZeroVector);
}

TEST(SumVector, Linearity) {
  std::mt19937_64 rng(21);
  std::vector<FeatureVector> a, b;
  for (int i = 0; i < 5; ++i) a.push_back(random_unit(12, rng));
  for (int i = 0; i < 3; ++i) b.push_back(random_unit(12, rng));
  std::vector<FeatureVector> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const MemoryVector sa = sum_vector(a), sb = sum_vector(b), sab = sum_vector(ab);
  for (std::size_t k = 0; k < 12; ++k) {
    EXPECT_NEAR(sab.values[k], sa.values[k] + sb.values[k], 1e-12);
  }
}

TEST(PinvVector, SingleUnitMember) {
  const std::vector<FeatureVector> m = {fv({0.6f, 0.8f})};
  const MemoryVector p = pinv_vector(m);
  expect_values(p, {0.6, 0.8}, 1e-7);
  EXPECT_EQ(p.mode, AggregationMode::kPInv);
  EXPECT_FALSE(p.regularized);
}

TEST(PinvVector, Orthonormal) {
  const std::vector<FeatureVector> m = {fv({1, 0}), fv({0, 1})};
  expect_values(pinv_vector(m), {1, 1}, 1e-12);
}

TEST(PinvVector, TwoByTwoSolve) {
  const float h = static_cast<float>(std::sqrt(2.0) / 2.0);
  const std::vector<FeatureVector> m = {fv({1, 0}), fv({h, h})};
  // Oracle: rows (1,0) and (1,1)/sqrt2 force m0 = 1 and m0 + m1 = sqrt2.
  expect_values(pinv_vector(m), {1.0, std::sqrt(2.0) - 1.0}, 1e-7);
  const Eigen::VectorXd o = lstsq_ones(m);
  EXPECT_NEAR(o(1), std::sqrt(2.0) - 1.0, 1e-7);
}

TEST(PinvVector, MatchesLeastSquaresOracle) {
  std::mt19937_64 rng(7);
  for (std::size_t n : {2u, 4u, 8u, 16u}) {
    for (std::size_t d : {16u, 32u}) {
      if (n > d) continue;
      std::vector<FeatureVector> m;
      for (std::size_t i = 0; i < n; ++i) m.push_back(random_unit(d, rng));
      const MemoryVector p = pinv_vector(m);
      const Eigen::VectorXd o = lstsq_ones(m);
      EXPECT_FALSE(p.regularized);
      for (std::size_t k = 0; k < d; ++k) {
        EXPECT_NEAR(p.values[k], o(static_cast<Eigen::Index>(k)), 1e-8);
      }
      for (const FeatureVector &x : m) EXPECT_NEAR(dot(normalized(x), p.values), 1.0, 1e-9);
    }
  }
}

TEST(PinvVector, ScaledMembersGiveSameVector) {
  std::mt19937_64 rng(8);
  std::vector<FeatureVector> m;
  for (int i = 0; i < 4; ++i) m.push_back(random_unit(16, rng));
  std::vector<FeatureVector> scaled = m;
  for (FeatureVector &f : scaled) {
    for (float &v : f.values) v *= 4.0f;  // power of two: exact in float
  }
  EXPECT_EQ(pinv_vector(m).values, pinv_vector(scaled).values);
}

TEST(PinvVector, DuplicateMembersFallBackToRidge) {
  std::mt19937_64 rng(9);
  const FeatureVector x = random_unit(8, rng);
  const std::vector<FeatureVector> m = {x, x, random_unit(8, rng)};
  const MemoryVector p = pinv_vector(m);
  EXPECT_TRUE(p.regularized);
  for (double v : p.values) EXPECT_TRUE(std::isfinite(v));
  // The ridge is tiny, so the duplicated pair still scores close to 1.
  EXPECT_NEAR(dot(normalized(x), p.values), 1.0, 1e-6);
}

TEST(PinvVector, Errors) {
  EXPECT_PANOLOC_ERROR(pinv_vector({}), ErrorCode::kEmptyInput);
  const std::vector<FeatureVector> many = {fv({1, 0}), fv({0, 1}), fv({1, 1})};
  EXPECT_PANOLOC_ERROR(pinv_vector(many), ErrorCode::kTooManyMembers);
  const std::vector<FeatureVector> mixed = {fv({1, 0}), fv({1, 0, 0})};
  EXPECT_PANOLOC_ERROR(pinv_vector(mixed), ErrorCode::kDimensionMismatch);
}

TEST(PinvVector, SingletonAgreesWithSum) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 20; ++t) {
    const std::vector<FeatureVector> one = {random_unit(24, rng)};
    const MemoryVector s = sum_vector(one), p = pinv_vector(one);
    for (std::size_t k = 0; k < 24; ++k) EXPECT_NEAR(s.values[k], p.values[k], 1e-12);
  }
}

TEST(Cosine, Examples) {
  const std::vector<double> e1 = {1, 0}, e2 = {0, 1}, d = {1, 1};
  EXPECT_EQ(cosine_similarity(e1, e1), 1.0);
  EXPECT_EQ(cosine_similarity(e1, e2), 0.0);
  EXPECT_NEAR(cosine_similarity(d, e1), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Cosine, Errors) {
  const std::vector<double> a = {1, 0}, z = {0, 0}, b = {1, 0, 0};
  EXPECT_PANOLOC_ERROR(cosine_similarity(a, z), ErrorCode::kZeroVector);
  EXPECT_PANOLOC_ERROR(cosine_similarity(a, b), ErrorCode::kDimensionMismatch);
}

TEST(Cosine, SymmetricAndBounded) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> a(9), b(9);
    for (double &v : a) v = u(rng);
    for (double &v : b) v = u(rng);
    const double ab = cosine_similarity(a, b);
    EXPECT_EQ(ab, cosine_similarity(b, a));
    EXPECT_LE(std::abs(ab), 1.0);
  }
  const std::vector<double> x = {1e-3, 7.0, -2.0};
  EXPECT_LE(cosine_similarity(x, x), 1.0);
}

TEST(Cosine, ScaleInvarianceOfRanking) {
  std::mt19937_64 rng(13);
  const FeatureVector q = random_unit(16, rng);
  std::vector<FeatureVector> db;
  for (int i = 0; i < 50; ++i) db.push_back(random_unit(16, rng));
  auto ranking = [&](const std::vector<FeatureVector> &set) {
    std::vector<std::pair<double, int>> s;
    for (int i = 0; i < 50; ++i) {
      const std::vector<FeatureVector> one = {set[static_cast<std::size_t>(i)]};
      s.push_back({-cosine_similarity(std::span<const double>(sum_vector(one).values),
                                      std::span<const double>(normalized(q))),
                   i});
    }
    std::sort(s.begin(), s.end());
    std::vector<int> order;
    for (auto &p : s) order.push_back(p.second);
    return order;
  };
  std::vector<FeatureVector> scaled = db;
  std::uniform_real_distribution<float> scale(0.01f, 100.0f);
  for (FeatureVector &f : scaled) {
    const float c = scale(rng);
    for (float &v : f.values) v *= c;
  }
  EXPECT_EQ(ranking(db), ranking(scaled));
}

TEST(AggregatePanorama, IdenticalViewsSum) {
  std::mt19937_64 rng(14);
  const FeatureVector x = random_unit(6, rng);
  const std::vector<FeatureVector> views = {x, x, x, x};
  const MemoryVector m = aggregate_panorama(views, {AggregationMode::kSum});
  const auto xn = normalized(x);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(m.values[k], 4.0 * xn[k], 1e-12);
  EXPECT_EQ(m.member_count, 4u);
}

TEST(AggregatePanorama, BasisPinv) {
  const std::vector<FeatureVector> views = {fv({1, 0, 0, 0, 0, 0}), fv({0, 1, 0, 0, 0, 0}),
                                            fv({0, 0, 1, 0, 0, 0}), fv({0, 0, 0, 1, 0, 0})};
  expect_values(aggregate_panorama(views, {AggregationMode::kPInv}), {1, 1, 1, 1, 0, 0}, 1e-12);
}

TEST(AggregatePanorama, RandomViewsHaveUnitInnerProducts) {
  std::mt19937_64 rng(15);
  std::vector<FeatureVector> views;
  for (int i = 0; i < 4; ++i) views.push_back(random_unit(16, rng));
  const MemoryVector m = aggregate_panorama(views, {AggregationMode::kPInv});
  const Eigen::VectorXd o = lstsq_ones(views);
  for (std::size_t k = 0; k < 16; ++k) {
    EXPECT_NEAR(m.values[k], o(static_cast<Eigen::Index>(k)), 1e-8);
  }
}

TEST(AggregatePanorama, WrongViewCount) {
  const std::vector<FeatureVector> three = {fv({1, 0}), fv({0, 1}), fv({1, 1})};
  EXPECT_PANOLOC_ERROR(aggregate_panorama(three, {AggregationMode::kSum}),
                       ErrorCode::kWrongViewCount);
}

MemoryVector memory_of(std::vector<double> v, AggregationMode mode, std::uint32_t count = 1) {
  return MemoryVector{std::move(v), mode, count, false};
}

TEST(AggregateMemories, SingleMemberNormalized) {
  const std::vector<MemoryVector> one = {memory_of({3, 4}, AggregationMode::kSum, 4)};
  const MemoryVector m = aggregate_memories(one, {AggregationMode::kSum});
  expect_values(m, {0.6, 0.8}, 1e-15);
  EXPECT_EQ(m.member_count, 4u);
}

TEST(AggregateMemories, OrthogonalSum) {
  const std::vector<MemoryVector> two = {memory_of({2, 0}, AggregationMode::kSum, 4),
                                         memory_of({0, 5}, AggregationMode::kSum, 3)};
  const MemoryVector m = aggregate_memories(two, {AggregationMode::kSum});
  expect_values(m, {1, 1}, 1e-15);
  EXPECT_EQ(m.member_count, 7u);
}

TEST(AggregateMemories, PinvUnitInnerProducts) {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> normal(0, 1);
  std::vector<MemoryVector> members;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> v(32);
    for (double &x : v) x = 3.0 * normal(rng);
    members.push_back(memory_of(v, AggregationMode::kPInv));
  }
  const MemoryVector m = aggregate_memories(members, {AggregationMode::kPInv});
  for (const MemoryVector &x : members) {
    const double nx = std::sqrt(dot(x.values, x.values));
    EXPECT_NEAR(dot(x.values, m.values) / nx, 1.0, 1e-9);
  }
}

TEST(AggregateMemories, Errors) {
  EXPECT_PANOLOC_ERROR(aggregate_memories({}, {}), ErrorCode::kEmptyInput);
  const std::vector<MemoryVector> mixed = {memory_of({1, 0}, AggregationMode::kSum),
                                           memory_of({0, 1}, AggregationMode::kPInv)};
  EXPECT_PANOLOC_ERROR(aggregate_memories(mixed, {AggregationMode::kSum}),
                       ErrorCode::kMixedModes);
  const std::vector<MemoryVector> dims = {memory_of({1, 0}, AggregationMode::kSum),
                                          memory_of({0, 1, 0}, AggregationMode::kSum)};
  EXPECT_PANOLOC_ERROR(aggregate_memories(dims, {AggregationMode::kSum}),
                       ErrorCode::kDimensionMismatch);
}

}  // namespace
}  // namespace panoloc
