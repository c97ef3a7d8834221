#include "screloc/builder.hpp"

#include <chrono>
#include <utility>

#include "screloc/errors.hpp"
#include "screloc/parallel.hpp"
#include "screloc/template.hpp"

namespace screloc {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

TemplateLibrary build_library(const World& world, const std::vector<Pose2D>& poses,
                              const BuildParams& params, BuildStats* stats,
                              const StageCallback& on_stage) {
  params.lidar.validate();
  params.descriptor.validate();
  if (poses.size() < 2) throw DegenerateInputError("library build needs at least 2 poses");
  if (params.knn < 1) throw ConfigError("knn must be at least 1");
  if (!(params.cluster_threshold > 0.0) || params.cluster_threshold > 1.0)
    throw ConfigError("cluster threshold must lie in (0, 1]");

  BuildStats local;
  BuildStats& st = stats ? *stats : local;
  const auto stage = [&](const char* label) {
    if (on_stage) on_stage(label);
  };

  stage("scan simulation");
  auto t0 = Clock::now();
  std::vector<PointCloud> scans(poses.size());
  parallel_for(
      poses.size(), [&](std::size_t i) { scans[i] = raycast_scan(world, params.lidar, poses[i]); },
      params.n_threads);
  st.scan_ms = ms_since(t0);

  stage("descriptor extraction");
  t0 = Clock::now();
  std::vector<Template> templates(poses.size());
  parallel_for(
      poses.size(),
      [&](std::size_t i) {
        templates[i] =
            make_template(static_cast<std::uint32_t>(i), poses[i], scans[i], params.descriptor);
      },
      params.n_threads);
  scans.clear();
  scans.shrink_to_fit();
  st.descriptor_ms = ms_since(t0);
  st.n_templates = templates.size();
  for (const Template& t : templates)
    if (t.confident) ++st.n_confident;

  stage("connectivity graph");
  t0 = Clock::now();
  const NeighborGraph graph = build_neighbor_graph(templates, params.knn);
  st.graph_ms = ms_since(t0);
  st.graph_edges = graph.edge_count();

  stage("pairwise distances");
  t0 = Clock::now();
  const SparseDistances dists = sparse_descriptor_distances(templates, graph, params.n_threads);
  st.distance_ms = ms_since(t0);
  st.pair_evaluations = dists.evaluations;

  stage("clustering");
  t0 = Clock::now();
  ClusterSet clusters = agglomerate(dists, params.linkage, params.cluster_threshold);
  st.cluster_ms = ms_since(t0);
  st.n_clusters = clusters.clusters.size();

  stage("representatives");
  t0 = Clock::now();
  select_representatives(clusters, templates, params.n_threads);
  st.representative_ms = ms_since(t0);

  stage("hash index");
  t0 = Clock::now();
  std::vector<std::vector<float>> rep_cnz;
  rep_cnz.reserve(clusters.clusters.size());
  for (const Cluster& c : clusters.clusters) rep_cnz.push_back(templates[c.representative].cnz);
  bool degenerate = false;
  std::vector<HashFamily> families =
      make_hash_families(rep_cnz, params.descriptor.rows, params.index, &degenerate);
  st.lsh_pca_fallback = degenerate;
  st.index_ms = ms_since(t0);

  TemplateLibrary lib;
  lib.rows = params.descriptor.rows;
  lib.cols = params.descriptor.cols;
  lib.max_radius = static_cast<float>(params.descriptor.max_radius);
  lib.templates = std::move(templates);
  lib.clusters = std::move(clusters);
  lib.index_params = params.index;
  lib.hash_families = std::move(families);
  return lib;
}

}  // namespace screloc
