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

#include <fstream>

#include "panoloc/evalbench.h"
#include "panoloc/feature_io.h"
#include "test_util.h"

namespace panoloc {
namespace {

using testing::fv;
using testing::TempDir;

std::vector<std::uint8_t> slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_text(const std::filesystem::path &p, const std::string &text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::vector<FeatureVector> eight(std::size_t n, std::uint64_t seed = 81) {
  std::mt19937_64 rng(seed);
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing::random_unit(8, rng));
  return out;
}

TEST(FeatureFile, HeaderLayout) {
  const auto bytes = encode_features(eight(4));
  ASSERT_EQ(bytes.size(), 15u + 4 * 8 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MVEC");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 4);   // count
  EXPECT_EQ(bytes[10], 8);  // dim
  EXPECT_EQ(bytes[14], 1);  // float32
}

TEST(FeatureFile, EmptyList) {
  const auto bytes = encode_features({});
  EXPECT_EQ(bytes.size(), 15u);
  const FeatureMatrix m = decode_features(bytes);
  EXPECT_TRUE(m.rows.empty());
}

TEST(FeatureFile, RoundTripIsBitExact) {
  const auto v = eight(10);
  TempDir dir;
  write_feature_file(dir / "f.mvec", v);
  const FeatureMatrix m = read_feature_file(dir / "f.mvec");
  EXPECT_EQ(m.dim, 8u);
  EXPECT_EQ(m.rows, v);
}

TEST(FeatureFile, DimensionMismatchWritesNothing) {
  TempDir dir;
  const std::vector<FeatureVector> v = {fv({1, 0}), fv({1, 0, 0})};
  EXPECT_PANOLOC_ERROR(write_feature_file(dir / "f.mvec", v), ErrorCode::kDimensionMismatch);
  EXPECT_FALSE(std::filesystem::exists(dir / "f.mvec"));
}

TEST(FeatureFile, DecodeErrors) {
  const auto good = encode_features(eight(2));
  auto magic = good;
  magic[1] = 'X';
  EXPECT_PANOLOC_ERROR(decode_features(magic), ErrorCode::kBadMagic);
  auto version = good;
  version[4] = 2;
  EXPECT_PANOLOC_ERROR(decode_features(version), ErrorCode::kVersionMismatch);
  auto dtype = good;
  dtype[14] = 2;
  EXPECT_PANOLOC_ERROR(decode_features(dtype), ErrorCode::kUnsupportedDtype);
  auto shortp = good;
  shortp.pop_back();
  EXPECT_PANOLOC_ERROR(decode_features(shortp), ErrorCode::kCountMismatch);
  auto longp = good;
  longp.push_back(0);
  EXPECT_PANOLOC_ERROR(decode_features(longp), ErrorCode::kCountMismatch);
  const std::vector<std::uint8_t> header_only(good.begin(), good.begin() + 8);
  EXPECT_PANOLOC_ERROR(decode_features(header_only), ErrorCode::kCountMismatch);
}

TEST(MetaFile, RoundTrip) {
  const std::vector<MetaRow> rows = {{"a", 0.1, 155000.123456789, RowView::kNorth},
                                     {"b", -3e-7, 463000.5, RowView::kPano}};
  TempDir dir;
  write_meta_file(dir / "m.csv", rows);
  EXPECT_EQ(read_meta_file(dir / "m.csv"), rows);
}

TEST(MetaFile, Malformed) {
  TempDir dir;
  write_text(dir / "a.csv", "id,x,y\n");
  EXPECT_PANOLOC_ERROR(read_meta_file(dir / "a.csv"), ErrorCode::kMalformedRow);
  write_text(dir / "b.csv", "id,x,y,view\np,1,2,Q\n");
  EXPECT_PANOLOC_ERROR(read_meta_file(dir / "b.csv"), ErrorCode::kMalformedRow);
  write_text(dir / "c.csv", "id,x,y,view\np,1,zz,N\n");
  EXPECT_PANOLOC_ERROR(read_meta_file(dir / "c.csv"), ErrorCode::kMalformedRow);
  write_text(dir / "d.csv", "id,x,y,view\np,1,2\n");
  EXPECT_PANOLOC_ERROR(read_meta_file(dir / "d.csv"), ErrorCode::kMalformedRow);
  EXPECT_PANOLOC_ERROR(read_meta_file(dir / "none.csv"), ErrorCode::kIoFailure);
}

class ReadFeaturesTest : public ::testing::Test {
 protected:
  void write(const std::vector<FeatureVector> &v, const std::string &meta) {
    write_feature_file(dir_ / "f.mvec", v);
    write_text(dir_ / "m.csv", "id,x,y,view\n" + meta);
  }
  std::vector<PanoRecord> read(AggregationMode mode = AggregationMode::kPInv) {
    return read_features(dir_ / "f.mvec", dir_ / "m.csv", {mode});
  }
  TempDir dir_;
};

TEST_F(ReadFeaturesTest, OnePanorama) {
  const auto v = eight(4);
  write(v, "p,10,20,N\np,10,20,E\np,10,20,S\np,10,20,W\n");
  const auto rs = read();
  ASSERT_EQ(rs.size(), 1u);
  EXPECT_EQ(rs[0].id, "p");
  EXPECT_EQ(rs[0].location, (GeoPoint{10, 20}));
  EXPECT_EQ(*rs[0].view(Direction::kSouth), v[2]);
  EXPECT_EQ(rs[0].memory, aggregate_panorama(v, {AggregationMode::kPInv}));
}

TEST_F(ReadFeaturesTest, ViewRowsInAnyOrder) {
  const auto v = eight(4);
  write(v, "p,1,2,W\np,1,2,S\np,1,2,N\np,1,2,E\n");
  const auto rs = read(AggregationMode::kSum);
  EXPECT_EQ(*rs[0].view(Direction::kNorth), v[2]);
  EXPECT_EQ(*rs[0].view(Direction::kWest), v[0]);
}

TEST_F(ReadFeaturesTest, PanoRow) {
  const auto v = eight(1);
  write(v, "q,5,5,PANO\n");
  const auto rs = read();
  EXPECT_FALSE(rs[0].views.has_value());
  EXPECT_EQ(rs[0].memory.values, std::vector<double>(v[0].values.begin(), v[0].values.end()));
}

TEST_F(ReadFeaturesTest, CountMismatch) {
  write(eight(4), "p,0,0,N\np,0,0,E\np,0,0,S\np,0,0,W\nq,0,0,PANO\n");
  EXPECT_PANOLOC_ERROR(read(), ErrorCode::kCountMismatch);
}

TEST_F(ReadFeaturesTest, MissingView) {
  write(eight(3), "p,0,0,N\np,0,0,E\np,0,0,S\n");
  EXPECT_PANOLOC_ERROR(read(), ErrorCode::kMissingView);
}

TEST_F(ReadFeaturesTest, DuplicateRow) {
  write(eight(5), "p,0,0,N\np,0,0,E\np,0,0,S\np,0,0,W\np,0,0,E\n");
  EXPECT_PANOLOC_ERROR(read(), ErrorCode::kDuplicateRow);
  write(eight(5), "p,0,0,N\np,0,0,E\np,0,0,S\np,0,0,W\np,0,0,PANO\n");
  EXPECT_PANOLOC_ERROR(read(), ErrorCode::kDuplicateRow);
}

TEST_F(ReadFeaturesTest, LocationDisagreement) {
  write(eight(4), "p,0,0,N\np,0,0,E\np,0,1,S\np,0,0,W\n");
  EXPECT_PANOLOC_ERROR(read(), ErrorCode::kMalformedRow);
}

TEST_F(ReadFeaturesTest, ZeroVectorRejected) {
  auto v = eight(4);
  for (float &x : v[1].values) x = 0;
  write(v, "p,0,0,N\np,0,0,E\np,0,0,S\np,0,0,W\n");
  EXPECT_PANOLOC_ERROR(read(), ErrorCode::kZeroVector);
}

TEST(WriteFeatures, SynthRoundTripIsBitExact) {
  SynthConfig c;
  c.pano_count = 50;
  c.dim = 16;
  const SynthDataset d = synth_dataset(c);
  TempDir dir;
  write_features(d.database, dir / "db.mvec", dir / "db.csv");
  const auto back = read_features(dir / "db.mvec", dir / "db.csv", {});
  EXPECT_EQ(back, d.database);
  // Writing the read-back records reproduces the same bytes.
  write_features(back, dir / "db2.mvec", dir / "db2.csv");
  EXPECT_EQ(slurp(dir / "db.mvec"), slurp(dir / "db2.mvec"));
  EXPECT_EQ(slurp(dir / "db.csv"), slurp(dir / "db2.csv"));
}

TEST(WriteFeatures, ValidRecordsSurviveRoundTrip) {
  // A record is valid exactly when it survives write + read unchanged.
  SynthConfig c;
  c.pano_count = 3;
  c.dim = 8;
  auto db = synth_dataset(c).database;
  TempDir dir;
  write_features(db, dir / "a.mvec", dir / "a.csv");
  EXPECT_EQ(read_features(dir / "a.mvec", dir / "a.csv", {}), db);

  (*db[1].views)[2].feature.values.pop_back();
  EXPECT_THROW(write_features(db, dir / "b.mvec", dir / "b.csv"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "b.mvec"));
  EXPECT_FALSE(std::filesystem::exists(dir / "b.csv"));
}

}  // namespace
}  // namespace panoloc
