#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "screloc/library_store.hpp"

namespace screloc {

struct MatchTimings {
  double knn_search_ms = 0.0;    // candidate retrieval (hashing + bucket KNN)
  double cluster_match_ms = 0.0; // descriptor scoring
};

/// Outcome of one library query.
struct MatchResult {
  std::uint32_t template_id = 0;
  Pose2D position{};  // matched template position; yaw composed from the two
                      // alignment angles and the best column shift
  double similarity = 0.0;
  int best_shift = 0;
  std::size_t candidates_examined = 0;  // templates scored by the descriptor
  MatchTimings timings{};
};

/// Precomputed per-template similarity state (column-contiguous descriptor
/// copies). Building it once and passing it in keeps repeated matching off
/// the allocator.
class MatchContext {
 public:
  explicit MatchContext(const TemplateLibrary& lib, unsigned n_threads = 0);
  const MatchView& view(std::uint32_t id) const { return views_[id]; }

 private:
  std::vector<MatchView> views_;
};

/// Candidate retrieval structure for a library: the hash tables over the
/// representatives' occupancy vectors plus the representative -> cluster map.
class CascadeIndex {
 public:
  explicit CascadeIndex(const TemplateLibrary& lib);

  /// Representative ids by ascending (CNZ distance, id), at most k.
  std::vector<std::uint32_t> query_candidates(const CnzVector& cnz, int k) const;

  std::size_t n_representatives() const { return index_.size(); }
  std::uint32_t cluster_of_representative(std::uint32_t rep_id) const;
  const CnzIndex& vectors() const { return index_; }

 private:
  CnzIndex index_;
  std::unordered_map<std::uint32_t, std::uint32_t> rep_to_cluster_;
};

/// Two-stage match: retrieve k representative candidates by occupancy
/// vector, then score every member of the candidates' clusters with the
/// shifted similarity and keep the best (ties to the smaller template id).
MatchResult cascade_match(const TemplateLibrary& lib, const MatchContext& ctx,
                          const CascadeIndex& index, const Template& query, int k);
MatchResult cascade_match(const TemplateLibrary& lib, const CascadeIndex& index,
                          const Template& query, int k);

/// Scores the query against every template; the accuracy ceiling and timing
/// baseline for the cascade.
MatchResult exhaustive_match(const TemplateLibrary& lib, const MatchContext& ctx,
                             const Template& query);
MatchResult exhaustive_match(const TemplateLibrary& lib, const Template& query);

}  // namespace screloc
