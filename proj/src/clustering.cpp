#include "screloc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_map>

#include "screloc/errors.hpp"
#include "screloc/kdtree.hpp"
#include "screloc/parallel.hpp"

namespace screloc {

Linkage parse_linkage(const std::string& name) {
  if (name == "max") return Linkage::Max;
  if (name == "min") return Linkage::Min;
  if (name == "avg") return Linkage::Avg;
  throw ConfigError("unknown linkage '" + name + "' (expected max, min, or avg)");
}

const char* linkage_name(Linkage linkage) {
  switch (linkage) {
    case Linkage::Max: return "max";
    case Linkage::Min: return "min";
    case Linkage::Avg: return "avg";
  }
  return "?";
}

std::size_t NeighborGraph::edge_count() const {
  std::size_t degree_sum = 0;
  for (const auto& list : adj) degree_sum += list.size();
  return degree_sum / 2;
}

NeighborGraph build_neighbor_graph(const std::vector<Template>& templates, int k) {
  const std::size_t n = templates.size();
  if (n < 2) throw DegenerateInputError("neighbor graph needs at least 2 templates");
  if (k < 1) throw ConfigError("neighbor graph k must be >= 1");
  for (std::size_t i = 0; i < n; ++i)
    if (templates[i].id != i)
      throw IntegrityError("template ids must be dense indices (0..N-1)");

  std::vector<float> positions(n * 2);
  std::vector<std::uint32_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    positions[2 * i] = templates[i].x;
    positions[2 * i + 1] = templates[i].y;
    ids[i] = templates[i].id;
  }
  const KdTree tree(positions, ids, 2);

  NeighborGraph graph;
  graph.k = k;
  const int per_node = static_cast<int>(std::min<std::size_t>(k, n - 1));
  graph.knn.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    // ask for one extra hit because the query point itself comes back at
    // distance zero (ranked by id among any exact duplicates)
    const float q[2] = {positions[2 * i], positions[2 * i + 1]};
    auto hits = tree.knn(q, per_node + 1);
    auto& list = graph.knn[i];
    list.reserve(per_node);
    for (const auto& h : hits) {
      if (h.id == templates[i].id) continue;
      list.push_back(h.id);
      if (static_cast<int>(list.size()) == per_node) break;
    }
  }

  graph.adj.assign(n, {});
  for (std::size_t i = 0; i < n; ++i)
    for (const std::uint32_t j : graph.knn[i]) {
      graph.adj[i].push_back(j);
      graph.adj[j].push_back(static_cast<std::uint32_t>(i));
    }
  for (auto& list : graph.adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return graph;
}

double SparseDistances::at(std::uint32_t i, std::uint32_t j) const {
  const auto& list = nbrs[i];
  const auto it = std::lower_bound(list.begin(), list.end(), j,
                                   [](const auto& e, std::uint32_t v) { return e.first < v; });
  if (it != list.end() && it->first == j) return it->second;
  return kSurrogate;
}

SparseDistances sparse_descriptor_distances(const std::vector<Template>& templates,
                                            const NeighborGraph& graph, unsigned n_threads) {
  const std::size_t n = templates.size();
  SparseDistances out;
  out.nbrs.assign(n, {});

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (const std::uint32_t j : graph.adj[i])
      if (j > i) edges.emplace_back(static_cast<std::uint32_t>(i), j);

  std::vector<MatchView> views(n);
  parallel_for(n, [&](std::size_t i) { views[i] = MatchView(templates[i].descriptor); },
               n_threads);

  const int cols = templates.front().descriptor.cols;
  const auto narrow = shift_policy(true, true, cols);
  const auto full = full_shift_range(cols);
  std::vector<double> dist(edges.size());
  parallel_for(
      edges.size(),
      [&](std::size_t e) {
        const auto [i, j] = edges[e];
        const auto& shifts = templates[i].confident && templates[j].confident ? narrow : full;
        dist[e] = 1.0 - shifted_similarity(views[i], views[j], shifts).s_max;
      },
      n_threads);

  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    out.nbrs[i].emplace_back(j, dist[e]);
    out.nbrs[j].emplace_back(i, dist[e]);
  }
  for (auto& list : out.nbrs) std::sort(list.begin(), list.end());
  out.evaluations = edges.size();
  return out;
}

std::size_t ClusterSet::total_members() const {
  std::size_t total = 0;
  for (const auto& c : clusters) total += c.members.size();
  return total;
}

namespace {

/// Live cluster state during agglomeration. Distances to clusters absent
/// from nbrs are the surrogate 1 and can never merge (threshold <= 1), so
/// only connected pairs are tracked.
struct AgglomerationState {
  struct Rec {
    bool live = true;
    std::uint32_t min_id = 0;
    std::uint32_t size = 0;
    std::uint64_t stamp = 0;
    std::vector<std::uint32_t> members;
    std::unordered_map<std::uint32_t, double> nbrs;  // cluster slot -> linkage
  };

  struct HeapEntry {
    double dist;
    std::uint32_t first_min;   // smaller of the two clusters' min member ids
    std::uint32_t second_min;  // the other one
    std::uint32_t a, b;        // cluster slots
    std::uint64_t stamp_a, stamp_b;

    bool operator>(const HeapEntry& o) const {
      if (dist != o.dist) return dist > o.dist;
      if (first_min != o.first_min) return first_min > o.first_min;
      return second_min > o.second_min;
    }
  };

  std::vector<Rec> recs;
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<HeapEntry>> heap;
  std::uint64_t next_stamp = 1;

  void push_pair(std::uint32_t a, std::uint32_t b, double dist) {
    const std::uint32_t ma = recs[a].min_id;
    const std::uint32_t mb = recs[b].min_id;
    heap.push({dist, std::min(ma, mb), std::max(ma, mb), a, b, recs[a].stamp, recs[b].stamp});
  }
};

double lance_williams(Linkage linkage, double d_ik, double d_jk, std::uint32_t size_i,
                      std::uint32_t size_j) {
  switch (linkage) {
    case Linkage::Max: return std::max(d_ik, d_jk);
    case Linkage::Min: return std::min(d_ik, d_jk);
    case Linkage::Avg:
      return (size_i * d_ik + size_j * d_jk) / static_cast<double>(size_i + size_j);
  }
  return 0.0;
}

}  // namespace

ClusterSet agglomerate(const SparseDistances& distances, Linkage linkage, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw ConfigError("cluster threshold must lie in (0, 1]");
  const std::size_t n = distances.size();

  AgglomerationState st;
  st.recs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& rec = st.recs[i];
    rec.min_id = static_cast<std::uint32_t>(i);
    rec.size = 1;
    rec.members = {static_cast<std::uint32_t>(i)};
    for (const auto& [j, d] : distances.nbrs[i]) rec.nbrs.emplace(j, d);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [j, d] : distances.nbrs[i])
      if (j > i) st.push_pair(static_cast<std::uint32_t>(i), j, d);

  while (!st.heap.empty()) {
    const auto top = st.heap.top();
    st.heap.pop();
    auto& ra = st.recs[top.a];
    auto& rb = st.recs[top.b];
    if (!ra.live || !rb.live || ra.stamp != top.stamp_a || rb.stamp != top.stamp_b)
      continue;  // stale entry
    if (top.dist >= threshold) break;  // nothing mergeable remains

    // merge b into a
    ra.stamp = st.next_stamp++;
    rb.live = false;
    const std::uint32_t old_size_a = ra.size;
    ra.min_id = std::min(ra.min_id, rb.min_id);
    ra.members.insert(ra.members.end(), rb.members.begin(), rb.members.end());

    std::vector<std::uint32_t> affected;
    affected.reserve(ra.nbrs.size() + rb.nbrs.size());
    for (const auto& [kk, d] : ra.nbrs)
      if (kk != top.b) affected.push_back(kk);
    for (const auto& [kk, d] : rb.nbrs)
      if (kk != top.a && !ra.nbrs.count(kk)) affected.push_back(kk);

    std::unordered_map<std::uint32_t, double> merged;
    merged.reserve(affected.size());
    for (const std::uint32_t kk : affected) {
      const auto it_a = ra.nbrs.find(kk);
      const auto it_b = rb.nbrs.find(kk);
      const double d_a = it_a != ra.nbrs.end() ? it_a->second : SparseDistances::kSurrogate;
      const double d_b = it_b != rb.nbrs.end() ? it_b->second : SparseDistances::kSurrogate;
      const double d = lance_williams(linkage, d_a, d_b, old_size_a, rb.size);
      auto& rk = st.recs[kk];
      rk.nbrs.erase(top.b);
      if (d < SparseDistances::kSurrogate) {
        // still mergeable: keep both sides of the pair in sync and requeue
        merged.emplace(kk, d);
        rk.nbrs[top.a] = d;
      } else {
        // reached the surrogate: indistinguishable from a non-edge from now on
        rk.nbrs.erase(top.a);
      }
    }

    ra.size += rb.size;
    ra.nbrs = std::move(merged);
    rb.nbrs.clear();
    rb.members.clear();

    for (const auto& [kk, d] : ra.nbrs) st.push_pair(top.a, kk, d);
  }

  ClusterSet set;
  set.linkage = linkage;
  set.threshold = threshold;
  for (auto& rec : st.recs) {
    if (!rec.live) continue;
    Cluster c;
    c.members = std::move(rec.members);
    std::sort(c.members.begin(), c.members.end());
    c.representative = c.members.front();
    set.clusters.push_back(std::move(c));
  }
  std::sort(set.clusters.begin(), set.clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
  return set;
}

std::uint32_t select_representative(const std::vector<std::uint32_t>& members,
                                    const std::vector<Template>& templates) {
  if (members.empty()) throw DegenerateInputError("cannot pick a representative of an empty cluster");
  if (members.size() == 1) return members.front();

  std::vector<MatchView> views;
  views.reserve(members.size());
  for (const std::uint32_t id : members) views.emplace_back(templates[id].descriptor);

  // total shifted similarity to the rest; each unordered pair evaluated once
  std::vector<double> total(members.size(), 0.0);
  const int cols = templates[members.front()].descriptor.cols;
  const auto narrow = shift_policy(true, true, cols);
  const auto full = full_shift_range(cols);
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      const auto& shifts = templates[members[i]].confident && templates[members[j]].confident
                               ? narrow
                               : full;
      const double s = shifted_similarity(views[i], views[j], shifts).s_max;
      total[i] += s;
      total[j] += s;
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < members.size(); ++i)
    if (total[i] > total[best]) best = i;  // ties keep the smaller id
  return members[best];
}

void select_representatives(ClusterSet& set, const std::vector<Template>& templates,
                            unsigned n_threads) {
  parallel_for(
      set.clusters.size(),
      [&](std::size_t c) {
        set.clusters[c].representative = select_representative(set.clusters[c].members, templates);
      },
      n_threads);
}

double linkage_between(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                       const SparseDistances& distances, Linkage linkage) {
  if (a.empty() || b.empty()) throw DegenerateInputError("linkage over an empty cluster");
  double best_max = -1.0;
  double best_min = 2.0;
  double sum = 0.0;
  for (const std::uint32_t i : a)
    for (const std::uint32_t j : b) {
      const double d = distances.at(i, j);
      best_max = std::max(best_max, d);
      best_min = std::min(best_min, d);
      sum += d;
    }
  switch (linkage) {
    case Linkage::Max: return best_max;
    case Linkage::Min: return best_min;
    case Linkage::Avg: return sum / (static_cast<double>(a.size()) * b.size());
  }
  return 0.0;
}

}  // namespace screloc
