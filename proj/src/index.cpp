#include "screloc/index.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "screloc/errors.hpp"
#include "screloc/rng.hpp"

namespace screloc {

std::uint64_t hash_key(const float* v, const HashFamily& family) {
  std::uint64_t key = 0;
  for (int b = 0; b < family.bits; ++b) {
    const float* row = family.basis.data() + static_cast<std::size_t>(b) * family.dim;
    double proj = 0.0;
    for (int d = 0; d < family.dim; ++d)
      proj += (static_cast<double>(v[d]) - static_cast<double>(family.center[d])) *
              static_cast<double>(row[d]);
    if (proj >= 0.0) key |= (std::uint64_t{1} << b);
  }
  return key;
}

std::uint64_t hash_key(const std::vector<float>& v, const HashFamily& family) {
  if (static_cast<int>(v.size()) != family.dim)
    throw std::invalid_argument("hash_key: vector dimension mismatch");
  return hash_key(v.data(), family);
}

std::string key_to_string(std::uint64_t key, int bits) {
  std::string s(static_cast<std::size_t>(bits), '0');
  for (int b = 0; b < bits; ++b)
    if (key & (std::uint64_t{1} << b)) s[b] = '1';
  return s;
}

namespace {

std::vector<float> mean_vector(const std::vector<std::vector<float>>& vectors, int dim) {
  std::vector<double> acc(dim, 0.0);
  for (const auto& v : vectors)
    for (int d = 0; d < dim; ++d) acc[d] += v[d];
  std::vector<float> mean(dim);
  const double inv = vectors.empty() ? 0.0 : 1.0 / static_cast<double>(vectors.size());
  for (int d = 0; d < dim; ++d) mean[d] = static_cast<float>(acc[d] * inv);
  return mean;
}

/// Unit rows in double, rounded once to f32 so a stored basis hashes
/// identically to a freshly built one.
void append_random_rows(std::vector<float>& basis, int rows, int dim, NormalSampler& normal) {
  for (int r = 0; r < rows; ++r) {
    std::vector<double> row(dim);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (int d = 0; d < dim; ++d) {
        row[d] = normal();
        norm += row[d] * row[d];
      }
      norm = std::sqrt(norm);
    } while (norm < 1e-12);
    for (int d = 0; d < dim; ++d) basis.push_back(static_cast<float>(row[d] / norm));
  }
}

std::vector<float> principal_basis(const std::vector<std::vector<float>>& vectors,
                                   const std::vector<float>& mean, int dim, int bits) {
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd centered(dim);
  for (const auto& v : vectors) {
    for (int d = 0; d < dim; ++d)
      centered[d] = static_cast<double>(v[d]) - static_cast<double>(mean[d]);
    cov.noalias() += centered * centered.transpose();
  }
  cov /= static_cast<double>(vectors.size());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);  // eigenvalues ascending
  std::vector<float> basis;
  basis.reserve(static_cast<std::size_t>(bits) * dim);
  for (int b = 0; b < bits; ++b) {
    Eigen::VectorXd axis = solver.eigenvectors().col(dim - 1 - b);
    // canonical sign: the largest-magnitude component points positive
    int arg = 0;
    for (int d = 1; d < dim; ++d)
      if (std::abs(axis[d]) > std::abs(axis[arg])) arg = d;
    if (axis[arg] < 0.0) axis = -axis;
    axis.normalize();
    for (int d = 0; d < dim; ++d) basis.push_back(static_cast<float>(axis[d]));
  }
  return basis;
}

}  // namespace

std::vector<HashFamily> make_hash_families(const std::vector<std::vector<float>>& vectors,
                                           int dim, const IndexParams& params,
                                           bool* pca_degenerate) {
  if (params.bits < 1 || params.bits > 64) throw ConfigError("index: bits must be in [1, 64]");
  if (params.bits > dim)
    throw ConfigError("index: bits (" + std::to_string(params.bits) +
                      ") must not exceed the vector dimension (" + std::to_string(dim) + ")");
  if (params.tables < 1) throw ConfigError("index: tables must be >= 1");
  if (vectors.empty()) throw DegenerateInputError("index: need at least one vector");
  for (const auto& v : vectors)
    if (static_cast<int>(v.size()) != dim)
      throw std::invalid_argument("index: vector dimension mismatch");

  const std::vector<float> center = mean_vector(vectors, dim);
  const bool degenerate = vectors.size() < static_cast<std::size_t>(params.bits);
  if (pca_degenerate) *pca_degenerate = degenerate;

  std::mt19937_64 rng(params.seed);
  NormalSampler normal(rng);

  std::vector<HashFamily> families;
  families.reserve(params.tables);
  for (int t = 0; t < params.tables; ++t) {
    HashFamily family;
    family.dim = dim;
    family.bits = params.bits;
    family.center = center;
    if (t == 0 && !degenerate) {
      family.kind = HashKind::PcaProjection;
      family.basis = principal_basis(vectors, center, dim, params.bits);
    } else {
      family.kind = HashKind::RandomProjection;
      append_random_rows(family.basis, params.bits, dim, normal);
    }
    families.push_back(std::move(family));
  }
  return families;
}

CnzIndex CnzIndex::build(const std::vector<std::vector<float>>& vectors,
                         const std::vector<std::uint32_t>& ids, int dim,
                         const IndexParams& params) {
  bool degenerate = false;
  auto families = make_hash_families(vectors, dim, params, &degenerate);
  CnzIndex index = from_families(std::move(families), vectors, ids, dim, params);
  index.pca_degenerate_ = degenerate;
  return index;
}

CnzIndex CnzIndex::from_families(std::vector<HashFamily> families,
                                 const std::vector<std::vector<float>>& vectors,
                                 const std::vector<std::uint32_t>& ids, int dim,
                                 const IndexParams& params) {
  if (vectors.size() != ids.size())
    throw std::invalid_argument("index: vectors/ids size mismatch");
  if (families.size() != static_cast<std::size_t>(params.tables))
    throw std::invalid_argument("index: family count does not match tables");

  CnzIndex index;
  index.params_ = params;
  index.dim_ = dim;
  index.size_ = vectors.size();
  index.families_ = std::move(families);
  index.tables_.resize(index.families_.size());

  std::vector<float> flat;
  flat.reserve(vectors.size() * dim);
  for (const auto& v : vectors) flat.insert(flat.end(), v.begin(), v.end());
  index.fallback_ = KdTree(flat, ids, dim);

  for (std::size_t t = 0; t < index.families_.size(); ++t) {
    // vectors are walked in id order, so bucket contents are deterministic
    std::unordered_map<std::uint64_t, std::pair<std::vector<float>, std::vector<std::uint32_t>>>
        groups;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const std::uint64_t key = hash_key(vectors[i].data(), index.families_[t]);
      auto& group = groups[key];
      group.first.insert(group.first.end(), vectors[i].begin(), vectors[i].end());
      group.second.push_back(ids[i]);
    }
    for (auto& [key, group] : groups)
      index.tables_[t].emplace(key, KdTree(std::move(group.first), std::move(group.second), dim));
  }
  return index;
}

std::vector<KdTree::Hit> CnzIndex::query(const std::vector<float>& v, int k) const {
  if (static_cast<int>(v.size()) != dim_)
    throw std::invalid_argument("index: query dimension mismatch");
  if (k < 1) throw std::invalid_argument("index: k must be >= 1");

  std::vector<KdTree::Hit> pool;
  auto merge = [&pool](const std::vector<KdTree::Hit>& hits) {
    for (const auto& h : hits) {
      bool seen = false;
      for (const auto& p : pool)
        if (p.id == h.id) {
          seen = true;
          break;
        }
      if (!seen) pool.push_back(h);
    }
  };

  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const std::uint64_t key = hash_key(v.data(), families_[t]);
    const auto it = tables_[t].find(key);
    if (it != tables_[t].end()) merge(it->second.knn(v, k));
  }
  if (pool.size() < static_cast<std::size_t>(k)) merge(fallback_.knn(v, k));

  std::sort(pool.begin(), pool.end(), [](const KdTree::Hit& a, const KdTree::Hit& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
  });
  if (pool.size() > static_cast<std::size_t>(k)) pool.resize(k);
  return pool;
}

std::vector<std::size_t> CnzIndex::bucket_sizes(int table) const {
  std::vector<std::size_t> sizes;
  for (const auto& [key, tree] : tables_.at(table)) sizes.push_back(tree.size());
  std::sort(sizes.begin(), sizes.end());
  return sizes;
}

std::size_t CnzIndex::bucket_count(int table) const { return tables_.at(table).size(); }

}  // namespace screloc
