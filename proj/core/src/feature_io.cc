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
#include "panoloc/feature_io.h"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "byte_io.h"
#include "panoloc/error.h"

namespace panoloc {

namespace {

constexpr char kMagic[4] = {'M', 'V', 'E', 'C'};
constexpr std::size_t kHeaderSize = 4 + 2 + 4 + 4 + 1;
constexpr std::string_view kMetaHeader = "id,x,y,view";

std::string_view row_view_name(RowView v) {
  static constexpr std::string_view kNames[] = {"N", "E", "S", "W", "PANO"};
  return kNames[static_cast<int>(v)];
}

std::optional<RowView> parse_row_view(std::string_view s) {
  for (int i = 0; i <= 4; ++i) {
    const auto v = static_cast<RowView>(i);
    if (row_view_name(v) == s) return v;
  }
  return std::nullopt;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kMalformedRow,
                "line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

void check_id(std::string_view id) {
  if (id.empty() || id.find_first_of(",\r\n\"") != std::string_view::npos) {
    throw Error(ErrorCode::kMalformedRow,
                "id '" + std::string(id) + "' is empty or contains a separator");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_features(std::span<const FeatureVector> vectors) {
  const std::size_t dim = vectors.empty() ? 0 : vectors.front().dim();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "vector " + std::to_string(i) + " has dim " +
                      std::to_string(vectors[i].dim()) + ", expected " +
                      std::to_string(dim));
    }
  }
  detail::ByteWriter w;
  w.buffer().reserve(kHeaderSize + vectors.size() * dim * sizeof(float));
  w.bytes(kMagic, sizeof(kMagic));
  w.put<std::uint16_t>(kFeatureFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(vectors.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(dim));
  w.put<std::uint8_t>(kDtypeFloat32);
  for (const FeatureVector &v : vectors) w.bytes(v.values.data(), dim * sizeof(float));
  return std::move(w.buffer());
}

FeatureMatrix decode_features(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      !std::equal(kMagic, kMagic + sizeof(kMagic), bytes.begin())) {
    throw Error(ErrorCode::kBadMagic, "not an MVEC feature file");
  }
  detail::ByteReader r(bytes.subspan(sizeof(kMagic)), ErrorCode::kCountMismatch);
  const auto version = r.get<std::uint16_t>();
  if (version != kFeatureFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "feature file version " + std::to_string(version) + ", expected " +
                    std::to_string(kFeatureFormatVersion));
  }
  const auto count = r.get<std::uint32_t>();
  const auto dim = r.get<std::uint32_t>();
  const auto dtype = r.get<std::uint8_t>();
  if (dtype != kDtypeFloat32) {
    throw Error(ErrorCode::kUnsupportedDtype, "dtype " + std::to_string(dtype));
  }
  const std::uint64_t payload = std::uint64_t{count} * dim * sizeof(float);
  if (r.remaining() != payload) {
    throw Error(ErrorCode::kCountMismatch,
                "header declares " + std::to_string(count) + " x " +
                    std::to_string(dim) + " floats, payload has " +
                    std::to_string(r.remaining()) + " bytes");
  }
  FeatureMatrix m;
  m.dim = dim;
  m.rows.resize(count);
  for (FeatureVector &v : m.rows) {
    v.values.resize(dim);
    r.bytes(v.values.data(), dim * sizeof(float));
  }
  return m;
}

void write_feature_file(const std::filesystem::path &path,
                        std::span<const FeatureVector> vectors) {
  detail::write_file(path, encode_features(vectors));
}

FeatureMatrix read_feature_file(const std::filesystem::path &path) {
  return decode_features(detail::read_file(path));
}

void write_meta_file(const std::filesystem::path &path, std::span<const MetaRow> rows) {
  std::string text(kMetaHeader);
  text += '\n';
  for (const MetaRow &row : rows) {
    check_id(row.id);
    validate_point({row.x, row.y});
    text += row.id;
    text += ',';
    text += format_double(row.x);
    text += ',';
    text += format_double(row.y);
    text += ',';
    text += row_view_name(row.view);
    text += '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot create " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
}

std::vector<MetaRow> read_meta_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<MetaRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kMetaHeader) {
        throw Error(ErrorCode::kMalformedRow, "meta header must be '" +
                                                  std::string(kMetaHeader) + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    std::array<std::string_view, 4> fields;
    std::string_view rest = line;
    for (std::size_t f = 0; f < 4; ++f) {
      const auto comma = rest.find(',');
      if ((f < 3) == (comma == std::string_view::npos)) {
        throw Error(ErrorCode::kMalformedRow,
                    "line " + std::to_string(line_no) + ": expected 4 fields");
      }
      fields[f] = rest.substr(0, comma);
      rest = f < 3 ? rest.substr(comma + 1) : std::string_view{};
    }
    MetaRow row;
    row.id = std::string(fields[0]);
    check_id(row.id);
    row.x = parse_double(fields[1], line_no);
    row.y = parse_double(fields[2], line_no);
    const auto view = parse_row_view(fields[3]);
    if (!view) {
      throw Error(ErrorCode::kMalformedRow,
                  "line " + std::to_string(line_no) + ": unknown view '" +
                      std::string(fields[3]) + "'");
    }
    row.view = *view;
    rows.push_back(std::move(row));
  }
  if (line_no == 0) throw Error(ErrorCode::kMalformedRow, "meta file is empty");
  return rows;
}

std::vector<FeatureGroup> group_features(const FeatureMatrix &features,
                                         std::span<const MetaRow> meta) {
  if (features.rows.size() != meta.size()) {
    throw Error(ErrorCode::kCountMismatch,
                "feature file holds " + std::to_string(features.rows.size()) +
                    " vectors, meta file has " + std::to_string(meta.size()) + " rows");
  }
  struct Pending {
    std::array<std::optional<std::size_t>, 5> rows;
  };
  std::vector<FeatureGroup> groups;
  std::vector<Pending> pending;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const MetaRow &row = meta[i];
    validate_point({row.x, row.y});
    auto [it, inserted] = slot.emplace(row.id, groups.size());
    if (inserted) {
      groups.push_back({row.id, {row.x, row.y}, {}, std::nullopt});
      pending.emplace_back();
    }
    FeatureGroup &g = groups[it->second];
    auto &cell = pending[it->second].rows[static_cast<std::size_t>(row.view)];
    if (cell) {
      throw Error(ErrorCode::kDuplicateRow,
                  "id '" + row.id + "' view " + std::string(row_view_name(row.view)) +
                      " appears twice");
    }
    if (g.location != GeoPoint{row.x, row.y}) {
      throw Error(ErrorCode::kMalformedRow,
                  "rows of '" + row.id + "' disagree on the location");
    }
    cell = i;
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto &rows = pending[g].rows;
    const bool has_pano = rows[4].has_value();
    std::size_t cardinal = 0;
    for (std::size_t v = 0; v < 4; ++v) cardinal += rows[v].has_value();
    if (has_pano && cardinal > 0) {
      throw Error(ErrorCode::kDuplicateRow,
                  "id '" + groups[g].id + "' has both PANO and view rows");
    }
    if (has_pano) {
      groups[g].pano = features.rows[*rows[4]];
      continue;
    }
    for (std::size_t v = 0; v < 4; ++v) {
      if (!rows[v]) {
        throw Error(ErrorCode::kMissingView,
                    "id '" + groups[g].id + "' lacks view " +
                        std::string(row_view_name(static_cast<RowView>(v))));
      }
      groups[g].views.push_back({static_cast<Direction>(v), features.rows[*rows[v]]});
    }
  }
  return groups;
}

std::vector<PanoRecord> records_from_groups(std::vector<FeatureGroup> groups,
                                            const AggregationOptions &options) {
  std::vector<PanoRecord> records;
  records.reserve(groups.size());
  for (FeatureGroup &g : groups) {
    PanoRecord r;
    r.id = std::move(g.id);
    r.location = g.location;
    if (g.pano) {
      validate_feature(*g.pano);
      r.memory.values.assign(g.pano->values.begin(), g.pano->values.end());
      r.memory.mode = options.mode;
      r.memory.member_count = 1;
    } else {
      r.memory = aggregate_panorama(g.views, options);
      r.views = std::move(g.views);
    }
    records.push_back(std::move(r));
  }
  validate_dataset(records);
  return records;
}

std::vector<PanoRecord> read_features(const std::filesystem::path &feature_path,
                                      const std::filesystem::path &meta_path,
                                      const AggregationOptions &options) {
  const FeatureMatrix features = read_feature_file(feature_path);
  const std::vector<MetaRow> meta = read_meta_file(meta_path);
  return records_from_groups(group_features(features, meta), options);
}

void write_features(std::span<const PanoRecord> records,
                    const std::filesystem::path &feature_path,
                    const std::filesystem::path &meta_path) {
  validate_dataset(records);
  std::vector<FeatureVector> vectors;
  std::vector<MetaRow> rows;
  for (const PanoRecord &r : records) {
    check_id(r.id);
    if (r.views) {
      for (Direction d : kCardinalDirections) {
        vectors.push_back(*r.view(d));
        rows.push_back({r.id, r.location.x, r.location.y, static_cast<RowView>(d)});
      }
    } else {
      FeatureVector v;
      v.values.assign(r.memory.values.begin(), r.memory.values.end());
      vectors.push_back(std::move(v));
      rows.push_back({r.id, r.location.x, r.location.y, RowView::kPano});
    }
  }
  const auto bytes = encode_features(vectors);
  write_meta_file(meta_path, rows);
  detail::write_file(feature_path, bytes);
}

}  // namespace panoloc
