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
#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "panoloc/error.h"
#include "panoloc/evalbench.h"
#include "panoloc/feature_io.h"
#include "panoloc/geoposition.h"
#include "panoloc/index.h"

namespace fs = std::filesystem;
using namespace panoloc;

namespace {

struct SynthArgs {
  SynthConfig config;
  std::string source = "database";
};

void add_synth_options(CLI::App *cmd, SynthArgs &a) {
  cmd->add_option("--count", a.config.pano_count, "database panoramas")->capture_default_str();
  cmd->add_option("--dim", a.config.dim, "descriptor dimension")->capture_default_str();
  cmd->add_option("--spacing", a.config.street_spacing, "meters between panoramas")
      ->capture_default_str();
  cmd->add_option("--street-gap", a.config.street_gap, "meters between streets")
      ->capture_default_str();
  cmd->add_option("--anchors", a.config.anchor_count, "feature field anchors (0: auto)")
      ->capture_default_str();
  cmd->add_option("--view-noise", a.config.view_noise_sigma)->capture_default_str();
  cmd->add_option("--query-noise", a.config.query_noise_sigma)->capture_default_str();
  cmd->add_option("--queries", a.config.query_count, "number of queries")->capture_default_str();
  cmd->add_option("--query-source", a.source, "database or offset")
      ->check(CLI::IsMember({"database", "offset"}))
      ->capture_default_str();
  cmd->add_option("--seed", a.config.seed)->capture_default_str();
}

SynthConfig synth_config(const SynthArgs &a) {
  SynthConfig c = a.config;
  c.query_source = a.source == "offset" ? QuerySource::kOffset : QuerySource::kDatabase;
  return c;
}

fs::path default_meta(const fs::path &features) {
  fs::path p = features;
  return p.replace_extension(".csv");
}

std::vector<QuerySample> queries_to_samples(const std::vector<FeatureGroup> &groups) {
  std::vector<QuerySample> out;
  for (const FeatureGroup &g : groups) {
    if (g.pano) {
      throw Error(ErrorCode::kMissingView,
                  "query '" + g.id + "' is a PANO row; evaluation needs four views");
    }
    out.push_back({g.id, g.location, g.views});
  }
  return out;
}

void write_queries(std::span<const QuerySample> queries, const fs::path &features,
                   const fs::path &meta) {
  std::vector<FeatureVector> vectors;
  std::vector<MetaRow> rows;
  for (const QuerySample &q : queries) {
    for (const View &v : q.views) {
      vectors.push_back(v.feature);
      rows.push_back({q.id, q.truth.x, q.truth.y, static_cast<RowView>(v.direction)});
    }
  }
  const auto bytes = encode_features(vectors);
  write_meta_file(meta, rows);
  std::ofstream out(features, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + features.string());
}

std::vector<FeatureGroup> read_query_groups(const fs::path &features,
                                            const std::string &meta) {
  const fs::path meta_path = meta.empty() ? default_meta(features) : fs::path(meta);
  return group_features(read_feature_file(features), read_meta_file(meta_path));
}

MemoryVector group_query(const FeatureGroup &g, const std::optional<Direction> &view,
                         const AggregationOptions &aggregation) {
  if (g.pano) {
    if (view) {
      throw Error(ErrorCode::kMissingView, "query '" + g.id + "' has no planar views");
    }
    validate_feature(*g.pano);
    return MemoryVector{{g.pano->values.begin(), g.pano->values.end()}, aggregation.mode, 1,
                        false};
  }
  const QuerySample s{g.id, g.location, g.views};
  return query_memory(s, view ? QueryMode::kIm2Pan : QueryMode::kPan2Pan,
                      view.value_or(Direction::kNorth), aggregation);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::size_t parse_size(std::string_view s, const std::string &what) {
  std::size_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kInvalidConfig, "bad " + what + " '" + std::string(s) + "'");
  }
  return v;
}

// "N:M:beam[:mode]" entries separated by commas.
std::vector<IndexConfig> parse_index_configs(const std::string &text, AggregationMode mode) {
  std::vector<IndexConfig> out;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
      const auto colon = item.find(':', start);
      parts.push_back(item.substr(start, colon - start));
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    if (parts.size() < 3 || parts.size() > 4) {
      throw Error(ErrorCode::kInvalidConfig,
                  "index config '" + std::string(item) + "' is not N:M:beam[:mode]");
    }
    IndexConfig c;
    c.cluster_size = parse_size(parts[0], "cluster size");
    c.granularity = parse_size(parts[1], "granularity");
    c.beam_width = parse_size(parts[2], "beam width");
    c.mode = parts.size() == 4 ? parse_mode(parts[3]) : mode;
    out.push_back(c);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidConfig, "no index configs");
  return out;
}

std::optional<Direction> view_flag(const std::string &text) {
  if (text.empty()) return std::nullopt;
  const auto d = parse_direction(text);
  if (!d) throw Error(ErrorCode::kInvalidConfig, "unknown view '" + text + "'");
  return d;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Hierarchical visual geopositioning over panorama memory vectors"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  std::string out_dir;
  auto *synth = app.add_subcommand("synth", "write a synthetic database and query set");
  add_synth_options(synth, synth_args);
  synth->add_option("--out-dir", out_dir, "output directory")->required();

  std::string features, meta, mode_text = "pinv", out_path;
  std::size_t cluster_size = 4, granularity = 1;
  auto *build = app.add_subcommand("build", "build an index file from descriptors");
  build->add_option("--features", features, "database feature file (MVEC)")->required();
  build->add_option("--meta", meta, "database meta CSV (default: features path with .csv)");
  build->add_option("--mode", mode_text, "sum or pinv")->capture_default_str();
  build->add_option("--cluster-size", cluster_size, "max cluster size N")->capture_default_str();
  build->add_option("--granularity", granularity, "clustering levels M")->capture_default_str();
  build->add_option("--out", out_path, "index file to write")->required();

  std::string index_path, query_features, query_meta, view_text;
  SearchConfig search;
  bool no_rerank = false;
  auto *query = app.add_subcommand("query", "retrieve the top candidates for each query");
  auto *estimate = app.add_subcommand("estimate", "estimate each query's position");
  for (CLI::App *cmd : {query, estimate}) {
    cmd->add_option("--index", index_path, "index file")->required();
    cmd->add_option("--query-features", query_features, "query feature file (MVEC)")
        ->required();
    cmd->add_option("--query-meta", query_meta,
                    "query meta CSV (default: features path with .csv)");
    cmd->add_option("--top-k", search.top_k)->capture_default_str();
    cmd->add_option("--beam", search.beam_width)->capture_default_str();
    cmd->add_option("--granularity", search.granularity, "start level (default: index top)");
    cmd->add_option("--im2pan-view", view_text, "query with a single view: N, E, S or W")
        ->check(CLI::IsMember({"N", "E", "S", "W"}));
  }
  estimate->add_flag("--no-rerank", no_rerank, "center of gravity over all candidates");

  SynthArgs eval_synth;
  std::string configs_text = "4:0:5,4:1:5,4:2:5", report_path, top_ks_text = "5",
              query_mode_text = "pan2pan", eval_view = "N";
  double radius = kRecallRadius;
  std::size_t threads = 0;
  bool eval_no_rerank = false;
  auto *evaluate = app.add_subcommand("evaluate", "run the retrieval and positioning benchmark");
  add_synth_options(evaluate, eval_synth);
  evaluate->add_option("--features", features, "database feature file instead of synthetic data");
  evaluate->add_option("--meta", meta, "database meta CSV");
  evaluate->add_option("--query-features", query_features, "query feature file");
  evaluate->add_option("--query-meta", query_meta, "query meta CSV");
  evaluate->add_option("--index-configs", configs_text, "N:M:beam[:mode],...")
      ->capture_default_str();
  evaluate->add_option("--mode", mode_text, "default aggregation mode")->capture_default_str();
  evaluate->add_option("--top-k", top_ks_text, "comma separated")->capture_default_str();
  evaluate->add_option("--radius", radius, "recall radius in meters")->capture_default_str();
  evaluate->add_option("--query-mode", query_mode_text, "pan2pan or im2pan")
      ->check(CLI::IsMember({"pan2pan", "im2pan"}))
      ->capture_default_str();
  evaluate->add_option("--im2pan-view", eval_view)
      ->check(CLI::IsMember({"N", "E", "S", "W"}))
      ->capture_default_str();
  evaluate->add_flag("--no-rerank", eval_no_rerank);
  evaluate->add_option("--threads", threads, "0: all cores")->capture_default_str();
  evaluate->add_option("--report", report_path, "CSV report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      const SynthDataset d = synth_dataset(synth_config(synth_args));
      const fs::path dir(out_dir);
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + dir.string());
      write_features(d.database, dir / "db.mvec", dir / "db.csv");
      write_queries(d.queries, dir / "queries.mvec", dir / "queries.csv");
      std::cout << "wrote " << d.database.size() << " panoramas and " << d.queries.size()
                << " queries to " << dir.string() << "\n";
    } else if (build->parsed()) {
      const AggregationOptions aggregation{parse_mode(mode_text)};
      const auto records = read_features(
          features, meta.empty() ? default_meta(features) : fs::path(meta), aggregation);
      const GeoIndex index = GeoIndex::build(records, cluster_size, granularity, aggregation);
      index.save(out_path);
      std::cout << "indexed " << index.size() << " panoramas, levels:";
      for (std::size_t l = 0; l <= index.granularity(); ++l) {
        std::cout << ' ' << index.level(l).size();
      }
      std::cout << "\n";
    } else if (query->parsed() || estimate->parsed()) {
      const GeoIndex index = GeoIndex::load(index_path);
      CLI::App *cmd = query->parsed() ? query : estimate;
      if (cmd->get_option("--granularity")->count() == 0) {
        search.granularity = index.granularity();
      }
      const auto view = view_flag(view_text);
      const auto groups = read_query_groups(query_features, query_meta);
      if (query->parsed()) {
        std::cout << "query,rank,id,similarity,x,y,sim_evals\n";
      } else {
        std::cout << "query,x,y,mass,contributors\n";
      }
      for (const FeatureGroup &g : groups) {
        const MemoryVector qm = group_query(g, view, index.aggregation());
        const SearchResult r = index.search(qm, search);
        if (query->parsed()) {
          for (std::size_t i = 0; i < r.candidates.size(); ++i) {
            const Candidate &c = r.candidates[i];
            std::cout << g.id << ',' << i + 1 << ',' << c.pano_id << ','
                      << fmt(c.query_similarity) << ',' << fmt(c.location.x) << ','
                      << fmt(c.location.y) << ',' << r.stats.similarity_evaluations << "\n";
          }
          continue;
        }
        CandidateSet positive;
        for (const Candidate &c : r.candidates) {
          if (c.query_similarity > 0.0) positive.push_back(c);
        }
        if (positive.empty()) {
          throw Error(ErrorCode::kNonPositiveMass,
                      "query '" + g.id + "' has no positively similar candidate");
        }
        const GeoEstimate e = estimate_position(positive, !no_rerank);
        std::string who;
        for (const std::string &id : e.contributors) who += (who.empty() ? "" : ";") + id;
        std::cout << g.id << ',' << fmt(e.position.x) << ',' << fmt(e.position.y) << ','
                  << fmt(e.total_mass) << ',' << who << "\n";
      }
    } else if (evaluate->parsed()) {
      const AggregationMode mode = parse_mode(mode_text);
      std::vector<PanoRecord> database;
      std::vector<QuerySample> queries;
      if (!features.empty()) {
        if (query_features.empty()) {
          throw Error(ErrorCode::kInvalidConfig, "--features needs --query-features");
        }
        database = read_features(features, meta.empty() ? default_meta(features) : fs::path(meta),
                                 {mode});
        queries = queries_to_samples(read_query_groups(query_features, query_meta));
      } else {
        SynthDataset d = synth_dataset(synth_config(eval_synth), {mode});
        database = std::move(d.database);
        queries = std::move(d.queries);
      }
      ExperimentOptions options;
      options.top_ks.clear();
      std::string_view rest = top_ks_text;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        options.top_ks.push_back(parse_size(rest.substr(0, comma), "top_k"));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
      options.radius = radius;
      options.query_mode = query_mode_text == "im2pan" ? QueryMode::kIm2Pan : QueryMode::kPan2Pan;
      options.im2pan_view = *parse_direction(eval_view);
      options.rerank = !eval_no_rerank;
      options.threads = threads;
      const auto reports =
          run_experiment(database, queries, parse_index_configs(configs_text, mode), options);
      std::cout << reports_to_table(reports);
      if (!report_path.empty()) {
        std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
        out << reports_to_csv(reports);
        if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + report_path);
      }
    }
  } catch (const Error &e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidConfig ? 1 : 2;
  } catch (const std::exception &e) {
    std::cerr << "Internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
