#pragma once

#include <cstdint>
#include <vector>

namespace screloc {

/// Exact k-nearest-neighbor search over fixed-dimension float vectors.
/// Results are identical to a stable linear scan: ascending Euclidean
/// distance, equal distances ranked by ascending id.
class KdTree {
 public:
  struct Hit {
    std::uint32_t id = 0;
    double dist = 0.0;
  };

  KdTree() = default;

  /// points: flat row-major count x dim values; ids parallel to the rows.
  KdTree(std::vector<float> points, std::vector<std::uint32_t> ids, int dim);

  /// k >= 1; returns min(k, size()) hits, sorted as described above.
  /// Empty tree yields an empty result.
  std::vector<Hit> knn(const float* query, int k) const;
  std::vector<Hit> knn(const std::vector<float>& query, int k) const;

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  int dim() const { return dim_; }

 private:
  struct Node {
    int axis = -1;       // -1 marks a leaf
    float split = 0.f;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t begin = 0;  // leaf range into order_
    std::uint32_t end = 0;
  };

  struct Best;  // bounded worst-first candidate heap

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const float* query, int k, Best& best) const;
  const float* point(std::uint32_t row) const { return points_.data() + static_cast<std::size_t>(row) * dim_; }

  std::vector<float> points_;
  std::vector<std::uint32_t> ids_;
  std::vector<std::uint32_t> order_;  // row permutation produced by building
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
  int dim_ = 0;

  static constexpr std::uint32_t kLeafSize = 16;
};

}  // namespace screloc
