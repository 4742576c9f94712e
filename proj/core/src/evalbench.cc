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
#include "panoloc/evalbench.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <thread>

#include "panoloc/error.h"
#include "panoloc/geoposition.h"

namespace panoloc {

namespace {

struct Layout {
  std::size_t streets = 1;
  std::size_t per_street = 1;
  double width = 0.0;
  double height = 0.0;
};

Layout street_layout(const SynthConfig &c) {
  Layout l;
  const double n = static_cast<double>(c.pano_count);
  l.streets = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(std::sqrt(n * c.street_spacing / c.street_gap))));
  l.per_street = (c.pano_count + l.streets - 1) / l.streets;
  l.width = static_cast<double>(l.per_street - 1) * c.street_spacing;
  l.height = static_cast<double>(l.streets - 1) * c.street_gap;
  return l;
}

void check_config(const SynthConfig &c) {
  if (c.pano_count < 1 || c.dim < 8 || !(c.street_spacing > 0.0) ||
      !(c.street_gap > 0.0) || !(c.view_noise_sigma >= 0.0) ||
      !(c.query_noise_sigma >= 0.0) || c.query_count < 1) {
    throw Error(ErrorCode::kInvalidConfig, "invalid synthetic dataset config");
  }
}

// Smooth descriptor field over the map. Anchors are bucketed on a grid so
// each evaluation only visits anchors within a few length scales.
class FeatureField {
 public:
  FeatureField(const SynthConfig &config, const Layout &layout, std::mt19937_64 &rng)
      : dim_(config.dim) {
    const double margin = 2.0 * config.street_spacing;
    x0_ = -margin;
    y0_ = -margin;
    const double w = layout.width + 2 * margin;
    const double h = layout.height + 2 * margin;
    const std::size_t anchors =
        config.anchor_count ? config.anchor_count : standard_anchor_count(config);
    length_ = std::sqrt(w * h / static_cast<double>(anchors));
    cell_ = length_;
    cols_ = static_cast<std::size_t>(std::ceil(w / cell_)) + 1;
    rows_ = static_cast<std::size_t>(std::ceil(h / cell_)) + 1;
    buckets_.resize(cols_ * rows_);

    std::uniform_real_distribution<double> ux(x0_, x0_ + w), uy(y0_, y0_ + h);
    std::normal_distribution<double> normal(0.0, 1.0);
    positions_.resize(anchors);
    vectors_.resize(anchors * dim_);
    for (std::size_t a = 0; a < anchors; ++a) {
      positions_[a] = {ux(rng), uy(rng)};
      double sq = 0.0;
      for (std::size_t k = 0; k < dim_; ++k) {
        const double v = normal(rng);
        vectors_[a * dim_ + k] = v;
        sq += v * v;
      }
      const double inv = 1.0 / std::sqrt(sq);
      for (std::size_t k = 0; k < dim_; ++k) vectors_[a * dim_ + k] *= inv;
      buckets_[bucket(positions_[a])].push_back(a);
    }
  }

  // Unit-norm base descriptor at p.
  std::vector<double> at(const GeoPoint &p) const {
    std::vector<double> out(dim_, 0.0);
    const long reach = 4;
    const long cx = cell_x(p.x), cy = cell_y(p.y);
    const double inv2l2 = 1.0 / (2.0 * length_ * length_);
    for (long gy = cy - reach; gy <= cy + reach; ++gy) {
      if (gy < 0 || gy >= static_cast<long>(rows_)) continue;
      for (long gx = cx - reach; gx <= cx + reach; ++gx) {
        if (gx < 0 || gx >= static_cast<long>(cols_)) continue;
        for (std::size_t a : buckets_[static_cast<std::size_t>(gy) * cols_ +
                                      static_cast<std::size_t>(gx)]) {
          const double dx = positions_[a].x - p.x, dy = positions_[a].y - p.y;
          const double wgt = std::exp(-(dx * dx + dy * dy) * inv2l2);
          for (std::size_t k = 0; k < dim_; ++k) out[k] += wgt * vectors_[a * dim_ + k];
        }
      }
    }
    normalize(out);
    return out;
  }

  static void normalize(std::vector<double> &v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (!(sq > 0.0)) {
      v.assign(v.size(), 0.0);
      v[0] = 1.0;
      return;
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (double &x : v) x *= inv;
  }

 private:
  long cell_x(double x) const { return static_cast<long>(std::floor((x - x0_) / cell_)); }
  long cell_y(double y) const { return static_cast<long>(std::floor((y - y0_) / cell_)); }
  std::size_t bucket(const GeoPoint &p) const {
    const auto gx = static_cast<std::size_t>(
        std::clamp<long>(cell_x(p.x), 0, static_cast<long>(cols_) - 1));
    const auto gy = static_cast<std::size_t>(
        std::clamp<long>(cell_y(p.y), 0, static_cast<long>(rows_) - 1));
    return gy * cols_ + gx;
  }

  std::size_t dim_;
  double x0_ = 0.0, y0_ = 0.0;
  double length_ = 1.0;
  double cell_ = 1.0;
  std::size_t cols_ = 1, rows_ = 1;
  std::vector<GeoPoint> positions_;
  std::vector<double> vectors_;
  std::vector<std::vector<std::size_t>> buckets_;
};

FeatureVector noisy_view(std::vector<double> base, double sigma, std::mt19937_64 &rng) {
  if (sigma > 0.0) {
    std::normal_distribution<double> normal(
        0.0, sigma / std::sqrt(static_cast<double>(base.size())));
    for (double &v : base) v += normal(rng);
  }
  FeatureField::normalize(base);
  FeatureVector f;
  f.values.assign(base.begin(), base.end());
  return f;
}

FeatureVector perturb(const FeatureVector &view, double sigma, std::mt19937_64 &rng) {
  if (sigma == 0.0) return view;
  return noisy_view(std::vector<double>(view.values.begin(), view.values.end()), sigma, rng);
}

std::string padded(const char *prefix, std::size_t i, std::size_t total) {
  const int width = std::max(6, static_cast<int>(std::to_string(total).size()));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%0*zu", prefix, width, i);
  return buf;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn &&fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
}

// Candidates with non-positive similarity cannot act as masses.
CandidateSet positive_prefix(const CandidateSet &set, std::size_t k) {
  CandidateSet out;
  for (std::size_t i = 0; i < std::min(k, set.size()); ++i) {
    if (set[i].query_similarity > 0.0) out.push_back(set[i]);
  }
  return out;
}

std::vector<PanoRecord> with_mode(std::span<const PanoRecord> database,
                                  const AggregationOptions &aggregation) {
  std::vector<PanoRecord> out(database.begin(), database.end());
  for (PanoRecord &r : out) {
    if (r.memory.mode == aggregation.mode) continue;
    if (!r.views) {
      throw Error(ErrorCode::kInvalidConfig,
                  "record '" + r.id + "' has no views to re-aggregate as " +
                      std::string(mode_name(aggregation.mode)));
    }
    r.memory = aggregate_panorama(*r.views, aggregation);
  }
  return out;
}

}  // namespace

std::size_t standard_anchor_count(const SynthConfig &config) {
  const Layout l = street_layout(config);
  const double margin = 2.0 * config.street_spacing;
  const double area = (l.width + 2 * margin) * (l.height + 2 * margin);
  const double cell = 4.0 * config.street_spacing;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(area / (cell * cell))));
}

SynthDataset synth_dataset(const SynthConfig &config, const AggregationOptions &aggregation) {
  check_config(config);
  const Layout layout = street_layout(config);
  std::mt19937_64 rng(config.seed);
  const FeatureField field(config, layout, rng);

  SynthDataset out;
  out.database.reserve(config.pano_count);
  for (std::size_t i = 0; i < config.pano_count; ++i) {
    PanoRecord r;
    r.id = padded("pano", i, config.pano_count);
    r.location = {static_cast<double>(i % layout.per_street) * config.street_spacing,
                  static_cast<double>(i / layout.per_street) * config.street_gap};
    const std::vector<double> base = field.at(r.location);
    std::vector<View> views;
    for (Direction d : kCardinalDirections) {
      views.push_back({d, noisy_view(base, config.view_noise_sigma, rng)});
    }
    r.memory = aggregate_panorama(views, aggregation);
    r.views = std::move(views);
    out.database.push_back(std::move(r));
  }

  // Distinct query sites drawn without replacement.
  std::vector<std::size_t> sites(config.pano_count);
  std::iota(sites.begin(), sites.end(), std::size_t{0});
  const std::size_t nq = std::min(config.query_count, config.pano_count);
  for (std::size_t i = 0; i < nq; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, sites.size() - 1);
    std::swap(sites[i], sites[pick(rng)]);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t q = 0; q < nq; ++q) {
    const PanoRecord &site = out.database[sites[q]];
    QuerySample s;
    s.id = padded("query", q, nq);
    if (config.query_source == QuerySource::kDatabase) {
      s.truth = site.location;
      for (const View &v : *site.views) {
        s.views.push_back({v.direction, perturb(v.feature, config.query_noise_sigma, rng)});
      }
    } else {
      const double r = unit(rng) * config.street_spacing;
      const double theta = unit(rng) * 2.0 * std::numbers::pi;
      s.truth = {site.location.x + r * std::cos(theta), site.location.y + r * std::sin(theta)};
      const std::vector<double> base = field.at(s.truth);
      for (Direction d : kCardinalDirections) {
        s.views.push_back({d, perturb(noisy_view(base, config.view_noise_sigma, rng),
                                      config.query_noise_sigma, rng)});
      }
    }
    out.queries.push_back(std::move(s));
  }
  return out;
}

double recall_at_n(std::span<const CandidateSet> results, std::span<const GeoPoint> truths,
                   std::size_t n, double radius) {
  if (results.size() != truths.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(results.size()) + " result sets vs " +
                    std::to_string(truths.size()) + " truths");
  }
  if (n < 1) throw Error(ErrorCode::kInvalidConfig, "recall@0 is undefined");
  if (results.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < results.size(); ++q) {
    const std::size_t m = std::min(n, results[q].size());
    for (std::size_t i = 0; i < m; ++i) {
      if (distance(results[q][i].location, truths[q]) <= radius) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double positioning_error(const GeoPoint &estimate, const GeoPoint &truth) {
  validate_point(estimate);
  validate_point(truth);
  return distance(estimate, truth);
}

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "median of nothing");
  std::vector<double> v(values.begin(), values.end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

MemoryVector query_memory(const QuerySample &sample, QueryMode mode, Direction im2pan_view,
                          const AggregationOptions &aggregation) {
  if (mode == QueryMode::kPan2Pan) return aggregate_panorama(sample.views, aggregation);
  for (const View &v : sample.views) {
    if (v.direction == im2pan_view) {
      return aggregate_features(std::span<const FeatureVector>(&v.feature, 1), aggregation);
    }
  }
  throw Error(ErrorCode::kMissingView, "query '" + sample.id + "' lacks view " +
                                           std::string(direction_name(im2pan_view)));
}

std::vector<EvalReport> run_experiment(std::span<const PanoRecord> database,
                                       std::span<const QuerySample> queries,
                                       std::span<const IndexConfig> configs,
                                       const ExperimentOptions &options) {
  if (queries.empty()) throw Error(ErrorCode::kEmptyInput, "no queries");
  if (options.top_ks.empty()) throw Error(ErrorCode::kInvalidConfig, "no top_k values");
  std::size_t retrieve = 1;
  for (std::size_t n : options.recall_ns) retrieve = std::max(retrieve, n);
  for (std::size_t k : options.top_ks) retrieve = std::max(retrieve, k);

  std::vector<GeoPoint> truths;
  for (const QuerySample &q : queries) truths.push_back(q.truth);

  std::vector<EvalReport> reports;
  for (const IndexConfig &config : configs) {
    const AggregationOptions aggregation{config.mode, kDefaultRidgeEpsilon};
    const std::vector<PanoRecord> records = with_mode(database, aggregation);
    const GeoIndex index =
        GeoIndex::build(records, config.cluster_size, config.granularity, aggregation);
    const SearchConfig search{retrieve, config.beam_width, config.granularity};

    std::vector<CandidateSet> results(queries.size());
    std::vector<SearchStats> stats(queries.size());
    parallel_for(queries.size(), options.threads, [&](std::size_t q) {
      const MemoryVector qm =
          query_memory(queries[q], options.query_mode, options.im2pan_view, aggregation);
      SearchResult r = index.search(qm, search);
      results[q] = std::move(r.candidates);
      stats[q] = r.stats;
    });

    double evals = 0.0;
    std::chrono::nanoseconds wall{0};
    for (const SearchStats &s : stats) {
      evals += static_cast<double>(s.similarity_evaluations);
      wall += s.wall_time;
    }
    const double nq = static_cast<double>(queries.size());

    for (std::size_t top_k : options.top_ks) {
      EvalReport report;
      report.config = config;
      report.query_mode = options.query_mode;
      report.top_k = top_k;
      report.query_count = queries.size();
      for (std::size_t n : options.recall_ns) {
        report.recall_at[n] = recall_at_n(results, truths, n, options.radius);
      }
      std::vector<double> base_err, rerank_err;
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const CandidateSet set = positive_prefix(results[q], top_k);
        if (set.empty()) continue;
        base_err.push_back(
            positioning_error(estimate_position(set, false).position, truths[q]));
        if (options.rerank) {
          rerank_err.push_back(
              positioning_error(estimate_position(set, true).position, truths[q]));
        }
      }
      if (!base_err.empty()) {
        report.median_error_baseline = median(base_err);
        report.median_error_reranked =
            options.rerank ? median(rerank_err) : report.median_error_baseline;
      }
      report.mean_similarity_evaluations = evals / nq;
      report.wall_time = std::chrono::nanoseconds(
          static_cast<std::int64_t>(static_cast<double>(wall.count()) / nq));
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

double recall_or_nan(const EvalReport &r, std::size_t n) {
  const auto it = r.recall_at.find(n);
  return it == r.recall_at.end() ? std::nan("") : it->second;
}

constexpr std::size_t kCsvRecallNs[] = {1, 5, 10, 15, 20};

}  // namespace

std::string reports_to_csv(std::span<const EvalReport> reports) {
  std::string out =
      "N,M,beam,top_k,recall@1,recall@5,recall@10,recall@15,recall@20,"
      "median_error_baseline,median_error_reranked,sim_evals,wall_ms\n";
  for (const EvalReport &r : reports) {
    out += std::to_string(r.config.cluster_size) + ',' +
           std::to_string(r.config.granularity) + ',' +
           std::to_string(r.config.beam_width) + ',' + std::to_string(r.top_k);
    for (std::size_t n : kCsvRecallNs) out += ',' + fixed(recall_or_nan(r, n), 6);
    out += ',' + fixed(r.median_error_baseline, 4);
    out += ',' + fixed(r.median_error_reranked, 4);
    out += ',' + fixed(r.mean_similarity_evaluations, 2);
    out += ',' + fixed(std::chrono::duration<double, std::milli>(r.wall_time).count(), 4);
    out += '\n';
  }
  return out;
}

std::string reports_to_table(std::span<const EvalReport> reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line),
                "%-8s %3s %3s %4s %5s | %7s %7s %7s %7s %7s | %9s %9s | %9s %8s\n", "query",
                "N", "M", "beam", "top_k", "R@1", "R@5", "R@10", "R@15", "R@20", "err_base",
                "err_rr", "sim_evals", "ms/query");
  out += line;
  for (const EvalReport &r : reports) {
    std::snprintf(
        line, sizeof(line),
        "%-8s %3zu %3zu %4zu %5zu | %7.2f %7.2f %7.2f %7.2f %7.2f | %9.2f %9.2f | %9.1f %8.4f\n",
        r.query_mode == QueryMode::kPan2Pan ? "Pan2Pan" : "Im2Pan", r.config.cluster_size,
        r.config.granularity, r.config.beam_width, r.top_k, 100 * recall_or_nan(r, 1),
        100 * recall_or_nan(r, 5), 100 * recall_or_nan(r, 10), 100 * recall_or_nan(r, 15),
        100 * recall_or_nan(r, 20), r.median_error_baseline, r.median_error_reranked,
        r.mean_similarity_evaluations,
        std::chrono::duration<double, std::milli>(r.wall_time).count());
    out += line;
  }
  return out;
}

OutlierBenchmark run_outlier_benchmark(const GeoIndex &index,
                                       std::span<const QuerySample> queries,
                                       const SearchConfig &search, QueryMode query_mode,
                                       const OutlierBenchmarkOptions &options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  OutlierBenchmark out;
  std::vector<double> base_err, rerank_err;
  for (const QuerySample &q : queries) {
    const MemoryVector qm =
        query_memory(q, query_mode, Direction::kNorth, index.aggregation());
    SearchConfig cfg = search;
    cfg.top_k = options.top_k;
    CandidateSet set = positive_prefix(index.search(qm, cfg).candidates, options.top_k);
    if (set.size() < 2) continue;
    ++out.sets;

    // Exactly floor(fraction * sets) sets receive a planted false match.
    const double f = options.planted_fraction;
    const bool plant = std::floor(static_cast<double>(out.sets) * f) >
                       std::floor(static_cast<double>(out.sets - 1) * f);
    std::optional<GeoPoint> group;
    if (plant) {
      std::vector<GeoPoint> pts;
      for (const Candidate &c : set) pts.push_back(c.location);
      const GeoPoint center = centroid(pts);
      double spread = kMinPairDistance;
      for (const GeoPoint &p : pts) spread = std::max(spread, distance(p, center));
      const double reach = options.distance_factor * spread;
      const double theta = unit(rng) * 2.0 * std::numbers::pi;

      // A random descriptor is nearly orthogonal to the set's memory vectors.
      MemoryVector noise;
      noise.values.resize(index.dim());
      for (double &v : noise.values) v = normal(rng);
      noise.mode = index.aggregation().mode;

      Candidate planted{"planted-" + q.id,
                        {center.x + reach * std::cos(theta), center.y + reach * std::sin(theta)},
                        set.front().query_similarity,
                        std::move(noise)};
      const std::string planted_id = planted.pano_id;
      set.pop_back();
      set.push_back(std::move(planted));
      std::stable_sort(set.begin(), set.end(), [](const Candidate &a, const Candidate &b) {
        return ranks_before(a.query_similarity, a.pano_id, b.query_similarity, b.pano_id);
      });
      ++out.planted;
      for (const RankedCandidate &c : filter_by_mean(rerank(set))) {
        if (c.pano_id == planted_id && !c.kept) ++out.planted_rejected;
      }
      pts.clear();
      for (const Candidate &c : set) {
        if (c.pano_id != planted_id) pts.push_back(c.location);
      }
      group = centroid(pts);
    }
    const GeoPoint base = estimate_position(set, false).position;
    const GeoPoint reranked = estimate_position(set, true).position;
    if (plant && distance(reranked, *group) <= distance(base, *group)) ++out.planted_closer;
    base_err.push_back(positioning_error(base, q.truth));
    rerank_err.push_back(positioning_error(reranked, q.truth));
  }
  if (!base_err.empty()) {
    out.median_error_baseline = median(base_err);
    out.median_error_reranked = median(rerank_err);
  }
  return out;
}

}  // namespace panoloc
