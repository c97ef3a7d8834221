#include "screloc/match.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "screloc/errors.hpp"
#include "screloc/parallel.hpp"

namespace screloc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Estimated query yaw: the template was aligned by its own angle, the query
/// by its own, and the residual column shift closes the loop.
double compose_yaw(const Template& matched, const Template& query, int best_shift, int cols) {
  return normalize_angle(static_cast<double>(matched.pca_angle) -
                         static_cast<double>(query.pca_angle) -
                         best_shift * (2.0 * M_PI / cols));
}

struct BestTemplate {
  double similarity = -1.0;
  std::uint32_t id = 0;
  int shift = 0;

  void offer(double s, std::uint32_t id_in, int shift_in) {
    if (s > similarity || (s == similarity && id_in < id)) {
      similarity = s;
      id = id_in;
      shift = shift_in;
    }
  }
};

MatchResult finish(const TemplateLibrary& lib, const Template& query, const BestTemplate& best,
                   std::size_t scored, MatchTimings timings) {
  const Template& matched = lib.templates[best.id];
  MatchResult out;
  out.template_id = best.id;
  out.position.x = matched.x;
  out.position.y = matched.y;
  out.position.yaw = compose_yaw(matched, query, best.shift, lib.cols);
  out.similarity = best.similarity;
  out.best_shift = best.shift;
  out.candidates_examined = scored;
  out.timings = timings;
  return out;
}

}  // namespace

MatchContext::MatchContext(const TemplateLibrary& lib, unsigned n_threads) {
  views_.resize(lib.templates.size());
  parallel_for(
      lib.templates.size(),
      [&](std::size_t i) { views_[i] = MatchView(lib.templates[i].descriptor); }, n_threads);
}

CascadeIndex::CascadeIndex(const TemplateLibrary& lib) {
  std::vector<std::vector<float>> vectors;
  std::vector<std::uint32_t> ids;
  vectors.reserve(lib.clusters.clusters.size());
  ids.reserve(lib.clusters.clusters.size());
  for (std::uint32_t c = 0; c < lib.clusters.clusters.size(); ++c) {
    const std::uint32_t rep = lib.clusters.clusters[c].representative;
    vectors.push_back(lib.templates[rep].cnz);
    ids.push_back(rep);
    rep_to_cluster_.emplace(rep, c);
  }
  index_ = CnzIndex::from_families(lib.hash_families, vectors, ids, lib.rows, lib.index_params);
}

std::uint32_t CascadeIndex::cluster_of_representative(std::uint32_t rep_id) const {
  const auto it = rep_to_cluster_.find(rep_id);
  if (it == rep_to_cluster_.end())
    throw std::invalid_argument("not a representative id: " + std::to_string(rep_id));
  return it->second;
}

std::vector<std::uint32_t> CascadeIndex::query_candidates(const CnzVector& cnz, int k) const {
  const auto hits = index_.query(cnz, k);
  std::vector<std::uint32_t> ids;
  ids.reserve(hits.size());
  for (const auto& h : hits) ids.push_back(h.id);
  return ids;
}

MatchResult cascade_match(const TemplateLibrary& lib, const MatchContext& ctx,
                          const CascadeIndex& index, const Template& query, int k) {
  if (lib.templates.empty()) throw DegenerateInputError("cannot match against an empty library");
  if (k < 1) throw std::invalid_argument("match k must be >= 1");

  const auto start_knn = Clock::now();
  const auto candidates = index.query_candidates(query.cnz, k);
  MatchTimings timings;
  timings.knn_search_ms = ms_since(start_knn);
  if (candidates.empty()) throw DegenerateInputError("candidate retrieval returned nothing");

  const auto start_match = Clock::now();
  const MatchView query_view(query.descriptor);
  const auto narrow = shift_policy(true, true, lib.cols);
  const auto full = full_shift_range(lib.cols);
  BestTemplate best;
  std::size_t scored = 0;
  for (const std::uint32_t rep : candidates) {
    const Cluster& cluster = lib.clusters.clusters[index.cluster_of_representative(rep)];
    for (const std::uint32_t id : cluster.members) {
      const Template& t = lib.templates[id];
      const auto& shifts = query.confident && t.confident ? narrow : full;
      const auto r = shifted_similarity(query_view, ctx.view(id), shifts);
      best.offer(r.s_max, id, r.best_shift);
      ++scored;
    }
  }
  timings.cluster_match_ms = ms_since(start_match);
  return finish(lib, query, best, scored, timings);
}

MatchResult cascade_match(const TemplateLibrary& lib, const CascadeIndex& index,
                          const Template& query, int k) {
  return cascade_match(lib, MatchContext(lib), index, query, k);
}

MatchResult exhaustive_match(const TemplateLibrary& lib, const MatchContext& ctx,
                             const Template& query) {
  if (lib.templates.empty()) throw DegenerateInputError("cannot match against an empty library");

  const auto start_match = Clock::now();
  const MatchView query_view(query.descriptor);
  const auto narrow = shift_policy(true, true, lib.cols);
  const auto full = full_shift_range(lib.cols);
  BestTemplate best;
  for (const Template& t : lib.templates) {
    const auto& shifts = query.confident && t.confident ? narrow : full;
    const auto r = shifted_similarity(query_view, ctx.view(t.id), shifts);
    best.offer(r.s_max, t.id, r.best_shift);
  }
  MatchTimings timings;
  timings.cluster_match_ms = ms_since(start_match);
  return finish(lib, query, best, lib.templates.size(), timings);
}

MatchResult exhaustive_match(const TemplateLibrary& lib, const Template& query) {
  return exhaustive_match(lib, MatchContext(lib), query);
}

}  // namespace screloc
