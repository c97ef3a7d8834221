#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "screloc/match.hpp"
#include "screloc/world.hpp"

namespace screloc {

/// Uniform random collision-free poses inside the world bounds with uniform
/// random yaw, by rejection sampling. Deterministic per seed; throws
/// DegenerateInputError when the free space is too small to place them.
std::vector<Pose2D> sample_query_poses(const World& world, std::size_t count,
                                       double footprint_radius, std::uint64_t seed);

/// A ground-truth pose and the query template extracted from its scan.
struct QuerySample {
  Pose2D pose;
  Template query;
};

std::vector<QuerySample> make_query_samples(const World& world, const LidarModel& lidar,
                                            const DescriptorParams& params,
                                            const std::vector<Pose2D>& poses,
                                            unsigned n_threads = 0);

enum class MatchMode { Cascade, Exhaustive };

MatchMode parse_match_mode(const std::string& name);  // "cascade" | "exhaustive"
const char* match_mode_name(MatchMode mode);

struct EvalParams {
  MatchMode mode = MatchMode::Cascade;
  int k = 10;  // candidate representatives per query in cascade mode
};

/// Success curve of one evaluation run: for each radius, the fraction of
/// queries whose matched template lies within that distance of the true
/// position. Yaw error is reported but never thresholded.
struct EvalReport {
  std::size_t n_queries = 0;
  std::size_t n_templates = 0;
  std::size_t n_clusters = 0;
  MatchMode mode = MatchMode::Cascade;
  int k = 10;
  std::vector<double> radii;    // meters, ascending
  std::vector<double> success;  // same length, non-decreasing, in [0, 1]
  double mean_position_error = 0.0;  // meters
  double mean_abs_yaw_error = 0.0;   // radians
  double mean_similarity = 0.0;
  double mean_candidates = 0.0;  // templates scored per query
  double mean_knn_ms = 0.0, p95_knn_ms = 0.0;
  double mean_match_ms = 0.0, p95_match_ms = 0.0;
  double mean_total_ms = 0.0, p95_total_ms = 0.0;

  /// Success fraction at one of the configured radii (must be present).
  double success_at(double radius) const;
  std::string to_text() const;
};

/// Default report radii, meters.
std::vector<double> default_radii();

/// Matches every sample and aggregates the report. index may be null in
/// exhaustive mode; per-query results are appended to *results when given.
EvalReport run_queries(const TemplateLibrary& lib, const MatchContext& ctx,
                       const CascadeIndex* index, const std::vector<QuerySample>& samples,
                       const EvalParams& params, std::vector<MatchResult>* results = nullptr);

/// One cell of the candidate-search benchmark: median single-query latency
/// of a flat KD-tree versus the hashed index over the same vectors.
struct BenchCell {
  std::size_t count = 0;
  int dim = 0;
  double kdtree_us = 0.0;
  double lsh_kdtree_us = 0.0;
};

struct BenchParams {
  std::vector<std::size_t> counts{1000, 10000, 100000};
  std::vector<int> dims{10, 20, 50, 100};
  int k = 10;
  int repeats = 25;          // timed repetitions per cell; the median is kept
  int queries_per_rep = 32;  // queries averaged inside one repetition
  std::uint64_t seed = 7;
  IndexParams index;
};

/// Times both structures over synthetic uniform vectors for every
/// (count, dim) combination. Build time is excluded; only queries are timed.
std::vector<BenchCell> bench_sweep(const BenchParams& params);

/// "count,dim,kdtree_us,lsh_kdtree_us" rows.
std::string bench_csv(const std::vector<BenchCell>& cells);

}  // namespace screloc
