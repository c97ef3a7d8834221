#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "screloc/clustering.hpp"
#include "screloc/library_store.hpp"
#include "screloc/world.hpp"

namespace screloc {

/// Everything that controls how a library is built from a world and poses.
struct BuildParams {
  LidarModel lidar;
  DescriptorParams descriptor;
  int knn = 30;                    // neighbours per node in the connectivity graph
  Linkage linkage = Linkage::Max;
  double cluster_threshold = 0.4;  // stop merging at this linkage distance
  IndexParams index;
  unsigned n_threads = 0;          // 0 = hardware concurrency
};

/// Counters and per-stage wall times filled in by build_library.
struct BuildStats {
  std::size_t n_templates = 0;
  std::size_t n_clusters = 0;
  std::size_t graph_edges = 0;
  std::size_t pair_evaluations = 0;  // descriptor comparisons for the sparse distances
  std::size_t n_confident = 0;       // templates with a usable principal axis
  bool lsh_pca_fallback = false;     // table 0 fell back to random bases
  double scan_ms = 0.0;
  double descriptor_ms = 0.0;
  double graph_ms = 0.0;
  double distance_ms = 0.0;
  double cluster_ms = 0.0;
  double representative_ms = 0.0;
  double index_ms = 0.0;

  double total_ms() const {
    return scan_ms + descriptor_ms + graph_ms + distance_ms + cluster_ms + representative_ms +
           index_ms;
  }
};

/// Receives a short stage label as each build stage begins.
using StageCallback = std::function<void(const std::string&)>;

/// The whole offline pipeline: simulate a scan at every pose, extract
/// templates, cluster them under the connectivity constraint, pick
/// representatives, and derive the hash families over the representatives'
/// occupancy vectors. Deterministic for fixed inputs and params.
TemplateLibrary build_library(const World& world, const std::vector<Pose2D>& poses,
                              const BuildParams& params, BuildStats* stats = nullptr,
                              const StageCallback& on_stage = {});

}  // namespace screloc
