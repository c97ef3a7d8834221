#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "screloc/template.hpp"

namespace screloc {

enum class Linkage { Max, Min, Avg };

Linkage parse_linkage(const std::string& name);  // "max" | "min" | "avg"
const char* linkage_name(Linkage linkage);

/// Position-based connectivity. knn holds each template's raw K-nearest list
/// (exact Euclidean XY, ties to the smaller id); adj is the undirected union
/// of those lists and is what the distance evaluation walks.
struct NeighborGraph {
  int k = 0;
  std::vector<std::vector<std::uint32_t>> knn;
  std::vector<std::vector<std::uint32_t>> adj;  // sorted, no self loops

  std::size_t edge_count() const;
};

/// Requires >= 2 templates and k >= 1; every knn list gets exactly
/// min(k, N-1) entries. Template ids must be the dense indices 0..N-1.
NeighborGraph build_neighbor_graph(const std::vector<Template>& templates, int k);

/// Descriptor distances along graph edges only; everything else carries the
/// surrogate distance 1 (the maximum possible), so non-neighbors never look
/// attractive to the merge loop.
struct SparseDistances {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> nbrs;  // sorted by id
  std::size_t evaluations = 0;  // shifted-similarity calls == edge count
  static constexpr double kSurrogate = 1.0;

  std::size_t size() const { return nbrs.size(); }
  /// Distance between i and j under the surrogate completion (i != j).
  double at(std::uint32_t i, std::uint32_t j) const;
};

/// d = 1 - shifted_similarity under the standard shift policy per edge.
SparseDistances sparse_descriptor_distances(const std::vector<Template>& templates,
                                            const NeighborGraph& graph,
                                            unsigned n_threads = 0);

struct Cluster {
  std::vector<std::uint32_t> members;  // ascending template ids
  std::uint32_t representative = 0;    // always one of members
};

struct ClusterSet {
  std::vector<Cluster> clusters;  // ordered by smallest member id
  Linkage linkage = Linkage::Max;
  double threshold = 0.4;

  std::size_t total_members() const;
};

/// Agglomerative merging over the surrogate-completed distances: repeatedly
/// merge the cluster pair with the smallest linkage distance until that
/// minimum reaches the threshold. Linkage updates follow the Lance-Williams
/// recurrences; ties merge the pair with the lexicographically smallest
/// (min member id, other min member id). Representatives are initialized to
/// the smallest member; call select_representatives to refine them.
/// threshold must lie in (0, 1].
ClusterSet agglomerate(const SparseDistances& distances, Linkage linkage, double threshold);

/// Member with the greatest total shifted similarity to the rest of the
/// cluster (ties to the smaller id); sole member for singletons.
std::uint32_t select_representative(const std::vector<std::uint32_t>& members,
                                    const std::vector<Template>& templates);

void select_representatives(ClusterSet& set, const std::vector<Template>& templates,
                            unsigned n_threads = 0);

/// Direct linkage distance between two disjoint member sets over the
/// surrogate-completed map (no recurrences); used for checks and reports.
double linkage_between(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                       const SparseDistances& distances, Linkage linkage);

}  // namespace screloc
