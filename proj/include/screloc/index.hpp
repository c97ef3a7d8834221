#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "screloc/kdtree.hpp"

namespace screloc {

enum class HashKind : std::uint8_t {
  PcaProjection = 0,     // bases from the principal components of the data
  RandomProjection = 1,  // seeded random unit bases
};

/// Sign-of-projection hash family: bit i of the key is 1 exactly when
/// dot(v - center, basis row i) >= 0.
struct HashFamily {
  HashKind kind = HashKind::RandomProjection;
  int dim = 0;
  int bits = 0;
  std::vector<float> center;  // dim values
  std::vector<float> basis;   // bits x dim, row-major, unit rows
};

/// Bit i of the returned key sits at bit position i.
std::uint64_t hash_key(const std::vector<float>& v, const HashFamily& family);
std::uint64_t hash_key(const float* v, const HashFamily& family);

/// Key rendered as "10110..." with bit 0 first.
std::string key_to_string(std::uint64_t key, int bits);

struct IndexParams {
  int bits = 8;              // per-table key width; must not exceed the dim
  int tables = 4;            // one data-derived table plus tables-1 random ones
  std::uint64_t seed = 42;   // for the random bases
};

/// Derives the hash families for a vector set: table 0 projects onto the top
/// principal components (center = mean), the rest onto seeded random unit
/// bases. With fewer vectors than bits the principal components are
/// meaningless, so table 0 falls back to a random basis; *pca_degenerate
/// reports that. Throws ConfigError when bits > dim.
std::vector<HashFamily> make_hash_families(const std::vector<std::vector<float>>& vectors,
                                           int dim, const IndexParams& params,
                                           bool* pca_degenerate = nullptr);

/// Hash tables over CNZ-style vectors with one exact KD-tree per bucket and
/// a global fallback tree, so a query can always be topped up to k
/// candidates.
class CnzIndex {
 public:
  CnzIndex() = default;

  /// Derives families from the data (build path).
  static CnzIndex build(const std::vector<std::vector<float>>& vectors,
                        const std::vector<std::uint32_t>& ids, int dim,
                        const IndexParams& params);

  /// Reuses existing families (load path); bucket membership only depends on
  /// the stored bases, so this reproduces the original index.
  static CnzIndex from_families(std::vector<HashFamily> families,
                                const std::vector<std::vector<float>>& vectors,
                                const std::vector<std::uint32_t>& ids, int dim,
                                const IndexParams& params);

  /// Up to k unique ids by ascending (distance, id): exact KNN inside the
  /// bucket selected per table, merged, then topped up from the fallback
  /// tree when the buckets alone cannot fill k.
  std::vector<KdTree::Hit> query(const std::vector<float>& v, int k) const;

  const std::vector<HashFamily>& families() const { return families_; }
  const IndexParams& params() const { return params_; }
  bool pca_degenerate() const { return pca_degenerate_; }
  std::size_t size() const { return size_; }
  int dim() const { return dim_; }

  /// Sorted bucket occupancy of one table (diagnostics).
  std::vector<std::size_t> bucket_sizes(int table) const;
  std::size_t bucket_count(int table) const;

 private:
  std::vector<HashFamily> families_;
  std::vector<std::unordered_map<std::uint64_t, KdTree>> tables_;
  KdTree fallback_;
  IndexParams params_;
  bool pca_degenerate_ = false;
  std::size_t size_ = 0;
  int dim_ = 0;
};

}  // namespace screloc
