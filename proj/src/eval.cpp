#include "screloc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "screloc/errors.hpp"
#include "screloc/parallel.hpp"
#include "screloc/rng.hpp"
#include "screloc/template.hpp"

namespace screloc {
namespace {

using Clock = std::chrono::steady_clock;

double percentile95(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t idx =
      std::min(v.size() - 1, static_cast<std::size_t>(std::ceil(0.95 * v.size())) - 1);
  return v[idx];
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<Pose2D> sample_query_poses(const World& world, std::size_t count,
                                       double footprint_radius, std::uint64_t seed) {
  const Bounds& b = world.bounds;
  std::mt19937_64 rng(seed);
  std::vector<Pose2D> poses;
  poses.reserve(count);
  // generous cap; a world where placement keeps failing is effectively full
  const std::size_t max_attempts = 1000 * std::max<std::size_t>(count, 1);
  std::size_t attempts = 0;
  while (poses.size() < count) {
    if (++attempts > max_attempts)
      throw DegenerateInputError("could not place query poses: free space too small");
    Pose2D p;
    p.x = uniform_range(rng, b.xmin, b.xmax);
    p.y = uniform_range(rng, b.ymin, b.ymax);
    p.yaw = uniform_range(rng, -M_PI, M_PI);
    if (!footprint_collides(world, p.x, p.y, footprint_radius)) poses.push_back(p);
  }
  return poses;
}

std::vector<QuerySample> make_query_samples(const World& world, const LidarModel& lidar,
                                            const DescriptorParams& params,
                                            const std::vector<Pose2D>& poses,
                                            unsigned n_threads) {
  std::vector<QuerySample> samples(poses.size());
  parallel_for(
      poses.size(),
      [&](std::size_t i) {
        samples[i].pose = poses[i];
        samples[i].query = make_query(raycast_scan(world, lidar, poses[i]), params);
      },
      n_threads);
  return samples;
}

MatchMode parse_match_mode(const std::string& name) {
  if (name == "cascade") return MatchMode::Cascade;
  if (name == "exhaustive") return MatchMode::Exhaustive;
  throw ConfigError("unknown match mode '" + name + "' (expected cascade or exhaustive)");
}

const char* match_mode_name(MatchMode mode) {
  return mode == MatchMode::Cascade ? "cascade" : "exhaustive";
}

double EvalReport::success_at(double radius) const {
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (radii[i] == radius) return success[i];
  throw ConfigError("success_at: radius not in the report");
}

std::vector<double> default_radii() { return {0.2, 0.4, 0.6, 0.8, 1.0}; }

std::string EvalReport::to_text() const {
  std::ostringstream out;
  char line[160];
  out << "queries            " << n_queries << "\n";
  out << "templates          " << n_templates << "\n";
  out << "clusters           " << n_clusters << "\n";
  out << "mode               " << match_mode_name(mode);
  if (mode == MatchMode::Cascade) out << " (k=" << k << ")";
  out << "\n";
  out << "success by radius\n";
  for (std::size_t i = 0; i < radii.size(); ++i) {
    std::snprintf(line, sizeof line, "  %4.2f m            %.4f\n", radii[i], success[i]);
    out << line;
  }
  std::snprintf(line, sizeof line, "mean position error  %.4f m\n", mean_position_error);
  out << line;
  std::snprintf(line, sizeof line, "mean |yaw error|     %.4f rad\n", mean_abs_yaw_error);
  out << line;
  std::snprintf(line, sizeof line, "mean similarity      %.4f\n", mean_similarity);
  out << line;
  std::snprintf(line, sizeof line, "candidates / query   %.1f\n", mean_candidates);
  out << line;
  std::snprintf(line, sizeof line, "retrieval ms         mean %.3f  p95 %.3f\n", mean_knn_ms,
                p95_knn_ms);
  out << line;
  std::snprintf(line, sizeof line, "scoring ms           mean %.3f  p95 %.3f\n", mean_match_ms,
                p95_match_ms);
  out << line;
  std::snprintf(line, sizeof line, "total ms             mean %.3f  p95 %.3f\n", mean_total_ms,
                p95_total_ms);
  out << line;
  return out.str();
}

EvalReport run_queries(const TemplateLibrary& lib, const MatchContext& ctx,
                       const CascadeIndex* index, const std::vector<QuerySample>& samples,
                       const EvalParams& params, std::vector<MatchResult>* results) {
  if (samples.empty()) throw DegenerateInputError("evaluation needs at least one query");
  if (params.mode == MatchMode::Cascade && index == nullptr)
    throw ConfigError("cascade evaluation needs a candidate index");

  EvalReport rep;
  rep.n_queries = samples.size();
  rep.n_templates = lib.templates.size();
  rep.n_clusters = lib.clusters.clusters.size();
  rep.mode = params.mode;
  rep.k = params.k;
  rep.radii = default_radii();
  rep.success.assign(rep.radii.size(), 0.0);

  std::vector<double> knn_ms, match_ms, total_ms;
  knn_ms.reserve(samples.size());
  match_ms.reserve(samples.size());
  total_ms.reserve(samples.size());

  for (const QuerySample& s : samples) {
    const MatchResult r = params.mode == MatchMode::Cascade
                              ? cascade_match(lib, ctx, *index, s.query, params.k)
                              : exhaustive_match(lib, ctx, s.query);
    const double err = std::hypot(r.position.x - s.pose.x, r.position.y - s.pose.y);
    for (std::size_t i = 0; i < rep.radii.size(); ++i)
      if (err <= rep.radii[i]) rep.success[i] += 1.0;
    rep.mean_position_error += err;
    rep.mean_abs_yaw_error += std::abs(normalize_angle(r.position.yaw - s.pose.yaw));
    rep.mean_similarity += r.similarity;
    rep.mean_candidates += static_cast<double>(r.candidates_examined);
    knn_ms.push_back(r.timings.knn_search_ms);
    match_ms.push_back(r.timings.cluster_match_ms);
    total_ms.push_back(r.timings.knn_search_ms + r.timings.cluster_match_ms);
    if (results) results->push_back(r);
  }

  const double n = static_cast<double>(samples.size());
  for (double& s : rep.success) s /= n;
  rep.mean_position_error /= n;
  rep.mean_abs_yaw_error /= n;
  rep.mean_similarity /= n;
  rep.mean_candidates /= n;
  rep.mean_knn_ms = std::accumulate(knn_ms.begin(), knn_ms.end(), 0.0) / n;
  rep.mean_match_ms = std::accumulate(match_ms.begin(), match_ms.end(), 0.0) / n;
  rep.mean_total_ms = std::accumulate(total_ms.begin(), total_ms.end(), 0.0) / n;
  rep.p95_knn_ms = percentile95(knn_ms);
  rep.p95_match_ms = percentile95(match_ms);
  rep.p95_total_ms = percentile95(total_ms);
  return rep;
}

std::vector<BenchCell> bench_sweep(const BenchParams& params) {
  if (params.counts.empty() || params.dims.empty())
    throw ConfigError("benchmark sweep needs at least one count and one dim");
  if (params.repeats < 1 || params.queries_per_rep < 1)
    throw ConfigError("benchmark repeats and queries per repetition must be positive");

  std::vector<BenchCell> cells;
  for (const std::size_t count : params.counts) {
    for (const int dim : params.dims) {
      // fresh deterministic data per cell
      std::mt19937_64 rng(params.seed ^ (count * 1000003ull) ^ static_cast<std::uint64_t>(dim));
      std::vector<std::vector<float>> vectors(count, std::vector<float>(dim));
      std::vector<float> flat(count * static_cast<std::size_t>(dim));
      std::vector<std::uint32_t> ids(count);
      for (std::size_t i = 0; i < count; ++i) {
        ids[i] = static_cast<std::uint32_t>(i);
        for (int d = 0; d < dim; ++d) {
          const float v = static_cast<float>(uniform_unit(rng));
          vectors[i][d] = v;
          flat[i * dim + d] = v;
        }
      }
      const int n_queries = params.queries_per_rep;
      std::vector<std::vector<float>> queries(n_queries, std::vector<float>(dim));
      for (auto& q : queries)
        for (int d = 0; d < dim; ++d) q[d] = static_cast<float>(uniform_unit(rng));

      const KdTree tree(std::move(flat), ids, dim);
      const CnzIndex index = CnzIndex::build(vectors, ids, dim, params.index);

      const auto time_queries = [&](auto&& run_one) {
        std::vector<double> per_query_us(params.repeats);
        for (int r = 0; r < params.repeats; ++r) {
          const auto t0 = Clock::now();
          for (const auto& q : queries) run_one(q);
          const double us = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
          per_query_us[r] = us / n_queries;
        }
        return median(std::move(per_query_us));
      };

      BenchCell cell;
      cell.count = count;
      cell.dim = dim;
      cell.kdtree_us = time_queries([&](const std::vector<float>& q) {
        volatile std::size_t sink = tree.knn(q, params.k).size();
        (void)sink;
      });
      cell.lsh_kdtree_us = time_queries([&](const std::vector<float>& q) {
        volatile std::size_t sink = index.query(q, params.k).size();
        (void)sink;
      });
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string bench_csv(const std::vector<BenchCell>& cells) {
  std::ostringstream out;
  out << "count,dim,kdtree_us,lsh_kdtree_us\n";
  char line[160];
  for (const BenchCell& c : cells) {
    std::snprintf(line, sizeof line, "%zu,%d,%.3f,%.3f\n", c.count, c.dim, c.kdtree_us,
                  c.lsh_kdtree_us);
    out << line;
  }
  return out.str();
}

}  // namespace screloc
