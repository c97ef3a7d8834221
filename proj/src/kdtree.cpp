#include "screloc/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace screloc {

namespace {

/// Squared distance accumulated in index order; the linear-scan oracle and
/// the tree must agree bit-for-bit, so there is exactly one formula.
double dist_sq(const float* a, const float* b, int dim) {
  double d2 = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    d2 += d * d;
  }
  return d2;
}

}  // namespace

/// Candidate set ordered worst-first by (squared distance, id).
struct KdTree::Best {
  struct Entry {
    double d2;
    std::uint32_t id;
    bool operator<(const Entry& o) const {
      return d2 < o.d2 || (d2 == o.d2 && id < o.id);  // heap keeps the worst on top
    }
  };

  explicit Best(int k) : k_(static_cast<std::size_t>(k)) {}

  bool full() const { return heap_.size() == k_; }
  const Entry& worst() const { return heap_.front(); }

  void offer(double d2, std::uint32_t id) {
    if (!full()) {
      heap_.push_back({d2, id});
      std::push_heap(heap_.begin(), heap_.end());
      return;
    }
    const Entry candidate{d2, id};
    if (candidate < worst()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = candidate;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  /// True when a subtree at plane distance planted may still contain a
  /// better candidate (equal plane distance can hide an equal-distance,
  /// smaller-id point, so it is not prunable).
  bool reachable(double plane_d2) const { return !full() || plane_d2 <= worst().d2; }

  std::vector<Entry> sorted() && {
    std::sort(heap_.begin(), heap_.end());
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Entry> heap_;
};

KdTree::KdTree(std::vector<float> points, std::vector<std::uint32_t> ids, int dim)
    : points_(std::move(points)), ids_(std::move(ids)), dim_(dim) {
  if (dim_ < 1) throw std::invalid_argument("kdtree: dim must be >= 1");
  if (points_.size() != ids_.size() * static_cast<std::size_t>(dim_))
    throw std::invalid_argument("kdtree: points/ids size mismatch");
  order_.resize(ids_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!order_.empty()) {
    nodes_.reserve(2 * order_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<std::uint32_t>(order_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const std::int32_t idx = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({});
  if (end - begin <= kLeafSize) {
    nodes_[idx].begin = begin;
    nodes_[idx].end = end;
    return idx;
  }

  // split along the widest axis of this subset
  int axis = 0;
  float best_spread = -1.f;
  for (int a = 0; a < dim_; ++a) {
    float lo = point(order_[begin])[a];
    float hi = lo;
    for (std::uint32_t i = begin + 1; i < end; ++i) {
      const float v = point(order_[i])[a];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const float spread = hi - lo;
    if (spread > best_spread) {
      best_spread = spread;
      axis = a;
    }
  }

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return point(a)[axis] < point(b)[axis]; });
  const float split = point(order_[mid])[axis];

  // left holds values <= split, right >= split; both sides non-empty
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[idx].axis = axis;
  nodes_[idx].split = split;
  nodes_[idx].left = left;
  nodes_[idx].right = right;
  return idx;
}

void KdTree::search(std::int32_t node_idx, const float* query, int k, Best& best) const {
  const Node& node = nodes_[node_idx];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t row = order_[i];
      best.offer(dist_sq(query, point(row), dim_), ids_[row]);
    }
    return;
  }

  const double delta = static_cast<double>(query[node.axis]) - static_cast<double>(node.split);
  const std::int32_t near = delta < 0.0 ? node.left : node.right;
  const std::int32_t far = delta < 0.0 ? node.right : node.left;
  search(near, query, k, best);
  if (best.reachable(delta * delta)) search(far, query, k, best);
}

std::vector<KdTree::Hit> KdTree::knn(const float* query, int k) const {
  if (k < 1) throw std::invalid_argument("kdtree: k must be >= 1");
  if (empty()) return {};
  Best best(static_cast<int>(std::min<std::size_t>(k, size())));
  search(root_, query, k, best);
  std::vector<Hit> hits;
  for (const auto& e : std::move(best).sorted()) hits.push_back({e.id, std::sqrt(e.d2)});
  return hits;
}

std::vector<KdTree::Hit> KdTree::knn(const std::vector<float>& query, int k) const {
  if (static_cast<int>(query.size()) != dim_)
    throw std::invalid_argument("kdtree: query dimension mismatch");
  return knn(query.data(), k);
}

}  // namespace screloc
