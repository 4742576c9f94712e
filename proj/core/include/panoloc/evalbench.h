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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "panoloc/aggregation.h"
#include "panoloc/index.h"
#include "panoloc/types.h"

namespace panoloc {

inline constexpr double kRecallRadius = 25.0;

enum class QuerySource : std::uint8_t {
  kDatabase,  // perturbed copies of database panoramas (same device)
  kOffset,    // re-rendered at a nearby offset location (different device)
};

/// Parameters of the synthetic city. Panoramas sit every `street_spacing`
/// meters along parallel streets `street_gap` meters apart. Descriptors come
/// from a smooth random field: `anchor_count` random unit vectors scattered
/// over the map and blended with Gaussian weights, so similarity decays with
/// geographic distance.
struct SynthConfig {
  std::size_t pano_count = 1000;
  std::size_t dim = 64;
  double street_spacing = 5.0;
  double street_gap = 100.0;
  std::size_t anchor_count = 0;  // 0 selects standard_anchor_count()
  // Noise norms relative to the unit base descriptor.
  double view_noise_sigma = 1.25;
  double query_noise_sigma = 1.25;
  std::size_t query_count = 200;
  QuerySource query_source = QuerySource::kDatabase;
  std::uint64_t seed = 1;
};

/// One anchor per (4 * street_spacing)^2 of the map's bounding box.
std::size_t standard_anchor_count(const SynthConfig &config);

struct QuerySample {
  std::string id;
  GeoPoint truth;
  std::vector<View> views;  // N, E, S, W
};

struct SynthDataset {
  std::vector<PanoRecord> database;
  std::vector<QuerySample> queries;
};

/// Deterministic for a fixed config (bit-identical output per seed).
SynthDataset synth_dataset(const SynthConfig &config,
                           const AggregationOptions &aggregation = {});

/// Fraction of queries whose first `n` candidates include one within
/// `radius` meters (inclusive) of the truth.
double recall_at_n(std::span<const CandidateSet> results,
                   std::span<const GeoPoint> truths, std::size_t n,
                   double radius = kRecallRadius);

double positioning_error(const GeoPoint &estimate, const GeoPoint &truth);

/// Lower median: element (n - 1) / 2 of the sorted values.
double median(std::span<const double> values);

enum class QueryMode : std::uint8_t {
  kPan2Pan,  // all four views aggregated into one memory vector
  kIm2Pan,   // a single planar view
};

struct IndexConfig {
  std::size_t cluster_size = 4;
  std::size_t granularity = 0;
  std::size_t beam_width = 5;
  AggregationMode mode = AggregationMode::kPInv;
};

struct ExperimentOptions {
  std::vector<std::size_t> top_ks = {5};
  std::vector<std::size_t> recall_ns = {1, 5, 10, 15, 20};
  double radius = kRecallRadius;
  QueryMode query_mode = QueryMode::kPan2Pan;
  Direction im2pan_view = Direction::kNorth;
  bool rerank = true;
  std::size_t threads = 0;  // 0: hardware concurrency
};

struct EvalReport {
  IndexConfig config;
  QueryMode query_mode = QueryMode::kPan2Pan;
  std::size_t top_k = 0;
  std::size_t query_count = 0;
  std::map<std::size_t, double> recall_at;
  double median_error_baseline = 0.0;
  double median_error_reranked = 0.0;  // equals baseline when rerank is off
  double mean_similarity_evaluations = 0.0;
  std::chrono::nanoseconds wall_time{0};  // mean search time per query
};

/// Memory vector used to query with `sample` under the given mode.
MemoryVector query_memory(const QuerySample &sample, QueryMode mode,
                          Direction im2pan_view, const AggregationOptions &aggregation);

/// Builds one index per config, answers every query and reports recall,
/// positioning error and search cost. One report per (config, top_k).
std::vector<EvalReport> run_experiment(std::span<const PanoRecord> database,
                                       std::span<const QuerySample> queries,
                                       std::span<const IndexConfig> configs,
                                       const ExperimentOptions &options);

/// Header: N,M,beam,top_k,recall@1,recall@5,recall@10,recall@15,recall@20,
/// median_error_baseline,median_error_reranked,sim_evals,wall_ms.
std::string reports_to_csv(std::span<const EvalReport> reports);
std::string reports_to_table(std::span<const EvalReport> reports);

/// Outcome of the planted-outlier geopositioning benchmark.
struct OutlierBenchmark {
  std::size_t sets = 0;
  std::size_t planted = 0;
  std::size_t planted_rejected = 0;
  // Planted sets whose re-ranked estimate is no farther from the centroid of
  // the genuine candidates than the baseline estimate.
  std::size_t planted_closer = 0;
  double median_error_baseline = 0.0;
  double median_error_reranked = 0.0;
};

struct OutlierBenchmarkOptions {
  std::size_t top_k = 10;
  double planted_fraction = 0.3;
  // The planted candidate lies at least this many times the set's spread
  // away from the set's centroid.
  double distance_factor = 10.0;
  std::uint64_t seed = 7;
};

/// Retrieves candidate sets for every query, plants one false match in a
/// fixed fraction of them, and compares baseline and re-ranked positioning
/// error. The planted candidate replaces the weakest match, carries the
/// best match's query similarity, lies distance_factor * spread from the
/// set centroid, and has a random memory vector.
OutlierBenchmark run_outlier_benchmark(const GeoIndex &index,
                                       std::span<const QuerySample> queries,
                                       const SearchConfig &search,
                                       QueryMode query_mode,
                                       const OutlierBenchmarkOptions &options);

}  // namespace panoloc
