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

// Descriptor exchange formats.
//
// Feature file (binary, little-endian):
//   "MVEC" | u16 version = 1 | u32 count | u32 dim | u8 dtype = 1 (float32)
//   followed by exactly count * dim float32 values.
//
// Meta file (CSV sidecar, header "id,x,y,view"): row i describes vector i.
// `view` is one of N, E, S, W (a planar view of panorama `id`) or PANO (a
// precomputed panorama memory vector).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panoloc/aggregation.h"
#include "panoloc/types.h"

namespace panoloc {

inline constexpr std::uint16_t kFeatureFormatVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 1;

enum class RowView : std::uint8_t { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3, kPano = 4 };

struct MetaRow {
  std::string id;
  double x = 0.0;
  double y = 0.0;
  RowView view = RowView::kPano;

  friend bool operator==(const MetaRow &, const MetaRow &) = default;
};

struct FeatureMatrix {
  std::uint32_t dim = 0;
  std::vector<FeatureVector> rows;
};

void write_feature_file(const std::filesystem::path &path,
                        std::span<const FeatureVector> vectors);
FeatureMatrix read_feature_file(const std::filesystem::path &path);

std::vector<std::uint8_t> encode_features(std::span<const FeatureVector> vectors);
FeatureMatrix decode_features(std::span<const std::uint8_t> bytes);

void write_meta_file(const std::filesystem::path &path, std::span<const MetaRow> rows);
std::vector<MetaRow> read_meta_file(const std::filesystem::path &path);

/// Rows of one id gathered from a feature/meta pair: either four cardinal
/// views or a single precomputed PANO vector.
struct FeatureGroup {
  std::string id;
  GeoPoint location;
  std::vector<View> views;  // N, E, S, W order when present
  std::optional<FeatureVector> pano;
};

/// Pairs vectors with meta rows and groups them by id (first-appearance
/// order). Throws CountMismatch, DuplicateRow, MissingView, MalformedRow.
std::vector<FeatureGroup> group_features(const FeatureMatrix &features,
                                         std::span<const MetaRow> meta);

/// Database ingestion: 4-view panoramas are aggregated with `options`, PANO
/// rows are taken as the memory vector itself.
std::vector<PanoRecord> read_features(const std::filesystem::path &feature_path,
                                      const std::filesystem::path &meta_path,
                                      const AggregationOptions &options);
std::vector<PanoRecord> records_from_groups(std::vector<FeatureGroup> groups,
                                            const AggregationOptions &options);

/// Writes records with views as four N/E/S/W rows and view-less records as
/// one PANO row (memory values rounded to float32). Everything is validated
/// before any byte is written.
void write_features(std::span<const PanoRecord> records,
                    const std::filesystem::path &feature_path,
                    const std::filesystem::path &meta_path);

}  // namespace panoloc
