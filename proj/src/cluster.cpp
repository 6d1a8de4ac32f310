// Copyright (C) 2026 The dexfreq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Centre-based, hierarchical and density clustering plus quality metrics.

#include "dexfreq/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csv.hpp"
#include "dexfreq/error.hpp"
#include "dexfreq/rng.hpp"

namespace dexfreq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t cluster_count(std::span<const int> assignment) {
  int k = 0;
  for (int a : assignment) k = std::max(k, a + 1);
  return static_cast<std::size_t>(k);
}

std::size_t distinct_clusters(std::span<const int> assignment) {
  std::vector<bool> seen(cluster_count(assignment), false);
  for (int a : assignment)
    if (a >= 0) seen[static_cast<std::size_t>(a)] = true;
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
}

void check_rows(const Matrix& points, std::span<const int> assignment) {
  if (points.rows() != assignment.size())
    throw Error(ErrorCode::kDimMismatch,
                "assignment has " + std::to_string(assignment.size()) +
                    " entries for " + std::to_string(points.rows()) + " rows");
}

void check_k(std::size_t k, std::size_t n) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  if (k > n)
    throw Error(ErrorCode::kKTooLarge, "k=" + std::to_string(k) +
                                           " exceeds row count " +
                                           std::to_string(n));
}

}  // namespace

Matrix cluster_means(const Matrix& points, std::span<const int> assignment,
                     std::size_t k) {
  check_rows(points, assignment);
  Matrix means(k, points.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t r = 0; r < points.rows(); ++r) {
    if (assignment[r] < 0) continue;
    const auto c = static_cast<std::size_t>(assignment[r]);
    ++counts[c];
    const auto row = points.row(r);
    auto m = means.row(c);
    for (std::size_t j = 0; j < row.size(); ++j) m[j] += row[j];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0)
      for (double& v : means.row(c)) v /= static_cast<double>(counts[c]);
  return means;
}

double sse(const Matrix& points, std::span<const int> assignment,
           const Matrix& centroids) {
  check_rows(points, assignment);
  if (centroids.cols() != points.cols() && points.rows() > 0)
    throw Error(ErrorCode::kDimMismatch, "centroid width differs from data");
  double total = 0.0;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    if (assignment[r] < 0) continue;
    const auto c = static_cast<std::size_t>(assignment[r]);
    if (c >= centroids.rows())
      throw Error(ErrorCode::kDimMismatch, "assignment beyond centroid count");
    total += squared_distance(points.row(r), centroids.row(c));
  }
  return total;
}

double silhouette(const DistanceMatrix& dist, std::span<const int> assignment) {
  if (dist.size() != assignment.size())
    throw Error(ErrorCode::kDimMismatch, "assignment/distance size mismatch");
  if (distinct_clusters(assignment) < 2)
    throw Error(ErrorCode::kSingleCluster,
                "silhouette needs at least two clusters");
  const auto s = kernels::omp::silhouette_samples(dist, assignment);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (assignment[i] < 0) continue;
    sum += s[i];
    ++n;
  }
  return sum / static_cast<double>(n);
}

double silhouette(const Matrix& points, std::span<const int> assignment) {
  check_rows(points, assignment);
  if (distinct_clusters(assignment) < 2)
    throw Error(ErrorCode::kSingleCluster,
                "silhouette needs at least two clusters");
  return silhouette(kernels::omp::pairwise_distances(points), assignment);
}

double ch_index(const Matrix& points, std::span<const int> assignment,
                std::vector<std::string>* diagnostics) {
  check_rows(points, assignment);
  const std::size_t k = distinct_clusters(assignment);
  std::size_t n = 0;
  for (int a : assignment) n += a >= 0;
  if (k < 2)
    throw Error(ErrorCode::kSingleCluster, "CH index needs at least two clusters");
  if (k >= n)
    throw Error(ErrorCode::kKTooLarge, "CH index needs fewer clusters than rows");

  const Matrix means = cluster_means(points, assignment, cluster_count(assignment));
  const double within = sse(points, assignment, means);
  std::vector<double> global(points.cols(), 0.0);
  for (std::size_t r = 0; r < points.rows(); ++r) {
    if (assignment[r] < 0) continue;
    const auto row = points.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) global[j] += row[j];
  }
  for (double& g : global) g /= static_cast<double>(n);
  double total = 0.0;
  for (std::size_t r = 0; r < points.rows(); ++r)
    if (assignment[r] >= 0) total += squared_distance(points.row(r), global);

  if (within == 0.0) {
    if (diagnostics != nullptr)
      diagnostics->push_back(
          "ZeroWithin: within-cluster SSE is 0; CH index is +infinity");
    return kInf;
  }
  const double between = std::max(0.0, total - within);
  return (between / within) * static_cast<double>(n - k) /
         static_cast<double>(k - 1);
}

// ---- k-means ---------------------------------------------------------------

ClusteringResult kmeans(const Matrix& points, std::size_t k,
                        std::uint64_t seed, std::size_t max_iter) {
  const std::size_t n = points.rows();
  check_k(k, n);
  Rng rng(seed);

  // k-means++ seeding.
  Matrix centroids(k, points.cols());
  std::vector<double> d2(n, kInf);
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double v : d2) total += v;
      if (total > 0.0) {
        const double target = rng.uniform() * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += d2[i];
          if (acc > target && d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
        while (d2[pick] == 0.0) --pick;  // guard against rounding at the tail
      } else {
        pick = rng.below(n);
      }
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(),
              centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
  }

  ClusteringResult result;
  result.algorithm = "kmeans";
  result.k = k;
  result.seed = seed;
  result.converged = false;
  std::vector<int> assignment;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    auto next = kernels::omp::nearest_centroid(points, centroids);
    result.history.push_back(sse(points, next, centroids));
    result.iterations = iter + 1;
    if (next == assignment) {
      result.converged = true;
      break;
    }
    assignment = std::move(next);
    centroids = cluster_means(points, assignment, k);

    // Empty clusters take over the point farthest from its centroid.
    std::vector<std::size_t> counts(k, 0);
    for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) continue;
      std::size_t far = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto own = static_cast<std::size_t>(assignment[i]);
        if (counts[own] <= 1) continue;
        const double d = squared_distance(points.row(i), centroids.row(own));
        if (d > best) {
          best = d;
          far = i;
        }
      }
      if (best < 0.0) break;
      --counts[static_cast<std::size_t>(assignment[far])];
      assignment[far] = static_cast<int>(c);
      counts[c] = 1;
      centroids = cluster_means(points, assignment, k);
      result.diagnostics.push_back("empty cluster " + std::to_string(c) +
                                   " reseeded from row " + std::to_string(far));
    }
  }
  if (!result.converged) {
    assignment = kernels::omp::nearest_centroid(points, centroids);
    result.diagnostics.push_back("max_iter reached before a fixpoint");
  }
  result.assignment = std::move(assignment);
  result.centroids = cluster_means(points, result.assignment, k);
  return result;
}

ClusteringResult kmeans_best_of(const Matrix& points, std::size_t k,
                                std::uint64_t seed, std::size_t restarts,
                                std::size_t max_iter) {
  std::optional<ClusteringResult> best;
  double best_sse = kInf;
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    auto run = kmeans(points, k, Rng::derive(seed, r), max_iter);
    const double s = sse(points, run.assignment, run.centroids);
    if (!best || s < best_sse) {
      best_sse = s;
      best = std::move(run);
    }
  }
  return std::move(*best);
}

std::vector<ElbowPoint> elbow_curve(const Matrix& points, std::size_t k_min,
                                    std::size_t k_max, std::uint64_t seed,
                                    std::size_t restarts) {
  if (k_min == 0 || k_min > k_max || k_max > points.rows())
    throw Error(ErrorCode::kKTooLarge, "k range must lie within [1, N]");
  std::vector<ElbowPoint> out;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const auto r = kmeans_best_of(points, k, seed, restarts);
    out.push_back({k, sse(points, r.assignment, r.centroids)});
  }
  return out;
}

// ---- agglomerative ---------------------------------------------------------

std::string_view linkage_name(Linkage linkage) {
  switch (linkage) {
    case Linkage::kWard: return "ward";
    case Linkage::kSingle: return "single";
    case Linkage::kComplete: return "complete";
    case Linkage::kAverage: return "average";
  }
  return "?";
}

std::optional<Linkage> parse_linkage(std::string_view text) {
  for (Linkage l : {Linkage::kWard, Linkage::kSingle, Linkage::kComplete,
                    Linkage::kAverage})
    if (linkage_name(l) == text) return l;
  return std::nullopt;
}

namespace {

struct RawMerge {
  std::size_t x;  // slots; the merged cluster lives on in slot y
  std::size_t y;
  double distance;
};

class Condensed {
 public:
  Condensed(std::size_t n, std::vector<double> data)
      : n_(n), data_(std::move(data)) {}
  double& operator()(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return data_[i * n_ - i * (i + 1) / 2 + (j - i - 1)];
  }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

// Nearest-neighbour chain over a condensed matrix of inter-cluster distances
// with initial cluster sizes. Valid for the reducible linkages used here.
std::vector<RawMerge> nn_chain(std::size_t n, std::vector<double> condensed,
                               std::vector<double> size, Linkage linkage) {
  Condensed d(n, std::move(condensed));
  std::vector<bool> active(n, true);
  std::vector<std::size_t> chain;
  std::vector<RawMerge> merges;
  std::size_t first_active = 0;
  while (merges.size() + 1 < n) {
    if (chain.empty()) {
      while (!active[first_active]) ++first_active;
      chain.push_back(first_active);
    }
    std::size_t x = 0;
    std::size_t y = 0;
    double best = kInf;
    for (;;) {
      x = chain.back();
      const bool has_prev = chain.size() >= 2;
      y = has_prev ? chain[chain.size() - 2] : n;
      best = has_prev ? d(x, y) : kInf;
      for (std::size_t z = 0; z < n; ++z) {
        if (!active[z] || z == x) continue;
        const double v = d(x, z);
        if (v < best) {
          best = v;
          y = z;
        }
      }
      if (has_prev && y == chain[chain.size() - 2]) break;
      chain.push_back(y);
    }
    chain.pop_back();
    chain.pop_back();
    if (x > y) std::swap(x, y);
    merges.push_back({x, y, best});

    const double nx = size[x];
    const double ny = size[y];
    for (std::size_t z = 0; z < n; ++z) {
      if (!active[z] || z == x || z == y) continue;
      const double dxz = d(x, z);
      const double dyz = d(y, z);
      double v = 0.0;
      switch (linkage) {
        case Linkage::kSingle: v = std::min(dxz, dyz); break;
        case Linkage::kComplete: v = std::max(dxz, dyz); break;
        case Linkage::kAverage: v = (nx * dxz + ny * dyz) / (nx + ny); break;
        case Linkage::kWard: {
          const double nz = size[z];
          const double t = nx + ny + nz;
          v = std::sqrt(std::max(
              0.0, ((nz + nx) * dxz * dxz + (nz + ny) * dyz * dyz -
                    nz * best * best) / t));
          break;
        }
      }
      d(y, z) = v;
    }
    active[x] = false;
    size[y] = nx + ny;
  }
  return merges;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  std::size_t unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    parent_[std::max(a, b)] = std::min(a, b);
    return std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

// Sorts raw merges into a dendrogram and cuts it at k groups. Group ids are
// numbered in order of each group's lowest slot.
std::vector<int> cut_tree(std::size_t n, std::vector<RawMerge> raw,
                          const std::vector<double>& size, std::size_t k,
                          std::vector<Merge>* dendrogram) {
  std::stable_sort(raw.begin(), raw.end(),
                   [](const RawMerge& a, const RawMerge& b) {
                     return a.distance < b.distance;
                   });
  if (dendrogram != nullptr) {
    UnionFind uf(n);
    std::vector<std::size_t> id(n);
    std::iota(id.begin(), id.end(), std::size_t{0});
    std::vector<double> weight = size;
    for (std::size_t s = 0; s < raw.size(); ++s) {
      const std::size_t ra = uf.find(raw[s].x);
      const std::size_t rb = uf.find(raw[s].y);
      dendrogram->push_back({s, std::min(id[ra], id[rb]),
                             std::max(id[ra], id[rb]), raw[s].distance,
                             static_cast<std::size_t>(weight[ra] + weight[rb])});
      const std::size_t root = uf.unite(ra, rb);
      weight[root] = weight[ra] + weight[rb];
      id[root] = n + s;
    }
  }

  UnionFind uf(n);
  for (std::size_t s = 0; s + k < n; ++s) uf.unite(raw[s].x, raw[s].y);
  std::vector<int> label(n, -1);
  std::vector<int> out(n);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = uf.find(i);
    if (label[r] < 0) label[r] = next++;
    out[i] = label[r];
  }
  return out;
}

}  // namespace

AgglomerativeResult agglomerative(const DistanceMatrix& dist,
                                  const Matrix& points, std::size_t k,
                                  Linkage linkage) {
  const std::size_t n = points.rows();
  check_k(k, n);
  if (dist.size() != n)
    throw Error(ErrorCode::kDimMismatch, "distance matrix size mismatch");
  const auto cd = dist.condensed();
  const std::vector<double> size(n, 1.0);
  auto raw = nn_chain(n, std::vector<double>(cd.begin(), cd.end()), size,
                      linkage);
  AgglomerativeResult out;
  out.clustering.algorithm = "agglomerative-" + std::string(linkage_name(linkage));
  out.clustering.k = k;
  out.clustering.assignment =
      cut_tree(n, std::move(raw), size, k, &out.dendrogram);
  out.clustering.centroids = cluster_means(points, out.clustering.assignment, k);
  return out;
}

AgglomerativeResult agglomerative(const Matrix& points, std::size_t k,
                                  Linkage linkage) {
  check_k(k, points.rows());
  return agglomerative(kernels::omp::pairwise_distances(points), points, k,
                       linkage);
}

// ---- BIRCH -----------------------------------------------------------------

void ClusteringFeature::add(std::span<const double> x) {
  if (ls.empty()) ls.assign(x.size(), 0.0);
  n += 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    ls[j] += x[j];
    ss += x[j] * x[j];
  }
}

void ClusteringFeature::merge(const ClusteringFeature& other) {
  if (ls.empty()) ls.assign(other.ls.size(), 0.0);
  n += other.n;
  for (std::size_t j = 0; j < ls.size(); ++j) ls[j] += other.ls[j];
  ss += other.ss;
}

std::vector<double> ClusteringFeature::centroid() const {
  std::vector<double> c(ls.size(), 0.0);
  if (n > 0.0)
    for (std::size_t j = 0; j < ls.size(); ++j) c[j] = ls[j] / n;
  return c;
}

double ClusteringFeature::radius() const {
  if (n <= 0.0) return 0.0;
  double c2 = 0.0;
  for (double v : ls) c2 += (v / n) * (v / n);
  return std::sqrt(std::max(0.0, ss / n - c2));
}

struct CfTree::Node {
  bool leaf = true;
  std::vector<ClusteringFeature> entries;
  std::vector<std::unique_ptr<Node>> children;  // parallel to entries
};

CfTree::CfTree(std::size_t dim, double threshold, std::size_t branching_factor)
    : root_(std::make_unique<Node>()),
      dim_(dim),
      threshold_(threshold),
      branching_factor_(branching_factor) {
  if (!(threshold > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "BIRCH threshold must be > 0");
  if (branching_factor < 2)
    throw Error(ErrorCode::kInvalidArgument, "branching factor must be >= 2");
}

CfTree::~CfTree() = default;
CfTree::CfTree(CfTree&&) noexcept = default;
CfTree& CfTree::operator=(CfTree&&) noexcept = default;

namespace {

double centroid_distance2(const ClusteringFeature& a,
                          std::span<const double> x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = a.ls[j] / a.n - x[j];
    s += d * d;
  }
  return s;
}

double centroid_distance2(const ClusteringFeature& a,
                          const ClusteringFeature& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.ls.size(); ++j) {
    const double d = a.ls[j] / a.n - b.ls[j] / b.n;
    s += d * d;
  }
  return s;
}

std::size_t closest_entry(const std::vector<ClusteringFeature>& entries,
                          std::span<const double> x) {
  std::size_t best = 0;
  double bd = kInf;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const double d = centroid_distance2(entries[i], x);
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

void CfTree::insert(std::span<const double> x) {
  if (x.size() != dim_)
    throw Error(ErrorCode::kDimMismatch, "point width differs from CF tree");

  // Descend, remembering the path.
  std::vector<std::pair<Node*, std::size_t>> path;
  Node* node = root_.get();
  while (!node->leaf) {
    const std::size_t i = closest_entry(node->entries, x);
    path.emplace_back(node, i);
    node = node->children[i].get();
  }

  bool absorbed = false;
  if (!node->entries.empty()) {
    const std::size_t i = closest_entry(node->entries, x);
    ClusteringFeature trial = node->entries[i];
    trial.add(x);
    if (trial.radius() <= threshold_) {
      node->entries[i] = std::move(trial);
      absorbed = true;
    }
  }
  if (!absorbed) {
    ClusteringFeature cf;
    cf.add(x);
    node->entries.push_back(std::move(cf));
    node->children.emplace_back();
  }
  ClusteringFeature point;
  point.add(x);
  for (auto& [parent, i] : path) parent->entries[i].merge(point);

  // Split overfull nodes bottom-up.
  auto split = [&](Node& full) {
    const std::size_t m = full.entries.size();
    std::size_t sa = 0;
    std::size_t sb = 1;
    double far = -1.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const double d = centroid_distance2(full.entries[i], full.entries[j]);
        if (d > far) {
          far = d;
          sa = i;
          sb = j;
        }
      }
    auto a = std::make_unique<Node>();
    auto b = std::make_unique<Node>();
    a->leaf = b->leaf = full.leaf;
    std::vector<bool> to_a(m);
    for (std::size_t i = 0; i < m; ++i)
      to_a[i] = i == sa ||
                (i != sb && centroid_distance2(full.entries[i], full.entries[sa]) <=
                                centroid_distance2(full.entries[i], full.entries[sb]));
    for (std::size_t i = 0; i < m; ++i) {
      Node& dst = to_a[i] ? *a : *b;
      dst.entries.push_back(std::move(full.entries[i]));
      dst.children.push_back(std::move(full.children[i]));
    }
    return std::pair{std::move(a), std::move(b)};
  };
  auto summary = [](const Node& nd) {
    ClusteringFeature cf;
    for (const auto& e : nd.entries) cf.merge(e);
    return cf;
  };

  Node* current = node;
  for (std::size_t level = path.size() + 1; level-- > 0;) {
    if (current->entries.size() <= branching_factor_) break;
    auto [a, b] = split(*current);
    if (level == 0) {
      auto root = std::make_unique<Node>();
      root->leaf = false;
      root->entries.push_back(summary(*a));
      root->entries.push_back(summary(*b));
      root->children.push_back(std::move(a));
      root->children.push_back(std::move(b));
      root_ = std::move(root);
      break;
    }
    auto [parent, i] = path[level - 1];
    parent->entries[i] = summary(*a);
    parent->children[i] = std::move(a);
    parent->entries.push_back(summary(*b));
    parent->children.push_back(std::move(b));
    current = parent;
  }
}

ClusteringFeature CfTree::root_summary() const {
  ClusteringFeature cf;
  cf.ls.assign(dim_, 0.0);
  for (const auto& e : root_->entries) cf.merge(e);
  return cf;
}

std::vector<ClusteringFeature> CfTree::leaf_entries() const {
  std::vector<ClusteringFeature> out;
  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* nd = stack.back();
    stack.pop_back();
    if (nd->leaf) {
      out.insert(out.end(), nd->entries.begin(), nd->entries.end());
      continue;
    }
    for (auto it = nd->children.rbegin(); it != nd->children.rend(); ++it)
      stack.push_back(it->get());
  }
  return out;
}

std::size_t CfTree::height() const {
  std::size_t h = 1;
  for (const Node* nd = root_.get(); !nd->leaf; nd = nd->children[0].get())
    ++h;
  return h;
}

ClusteringResult birch(const Matrix& points, double threshold,
                       std::size_t branching_factor, std::size_t k) {
  check_k(k, points.rows());
  CfTree tree(points.cols(), threshold, branching_factor);
  for (std::size_t r = 0; r < points.rows(); ++r) tree.insert(points.row(r));
  const auto leaves = tree.leaf_entries();
  const std::size_t m = leaves.size();
  if (m < k)
    throw Error(ErrorCode::kKTooLarge,
                "CF tree has " + std::to_string(m) + " subclusters, fewer than k=" +
                    std::to_string(k) + "; lower the threshold");

  // Weighted ward over subcluster centroids.
  std::vector<double> size(m);
  for (std::size_t i = 0; i < m; ++i) size[i] = leaves[i].n;
  std::vector<double> condensed;
  condensed.reserve(m < 2 ? 0 : m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      condensed.push_back(
          std::sqrt(2.0 * size[i] * size[j] / (size[i] + size[j]) *
                    centroid_distance2(leaves[i], leaves[j])));
  const auto group = cut_tree(
      m, m > 1 ? nn_chain(m, std::move(condensed), size, Linkage::kWard)
               : std::vector<RawMerge>{},
      size, k, nullptr);

  Matrix centroids(k, points.cols());
  std::vector<double> weight(k, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto g = static_cast<std::size_t>(group[i]);
    weight[g] += leaves[i].n;
    auto row = centroids.row(g);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += leaves[i].ls[j];
  }
  for (std::size_t g = 0; g < k; ++g)
    for (double& v : centroids.row(g)) v /= weight[g];

  ClusteringResult result;
  result.algorithm = "birch";
  result.k = k;
  result.assignment = kernels::omp::nearest_centroid(points, centroids);
  result.centroids = cluster_means(points, result.assignment, k);
  result.diagnostics.push_back(std::to_string(m) + " leaf subclusters, tree height " +
                               std::to_string(tree.height()));
  return result;
}

// ---- DBSCAN ----------------------------------------------------------------

ClusteringResult dbscan(const DistanceMatrix& dist, double eps,
                        std::size_t min_pts) {
  if (!(eps > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  if (min_pts == 0)
    throw Error(ErrorCode::kInvalidArgument, "min_pts must be >= 1");
  const std::size_t n = dist.size();
  auto neighbours = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j)
      if (dist(i, j) <= eps) out.push_back(j);
    return out;
  };

  constexpr int kUnvisited = -2;
  ClusteringResult result;
  result.algorithm = "dbscan";
  result.assignment.assign(n, kUnvisited);
  result.core.assign(n, false);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (result.assignment[i] != kUnvisited) continue;
    auto seeds = neighbours(i);
    if (seeds.size() < min_pts) {
      result.assignment[i] = kNoise;
      continue;
    }
    const int c = next++;
    result.core[i] = true;
    result.assignment[i] = c;
    std::vector<std::size_t> queue;
    for (std::size_t j : seeds)
      if (j != i) queue.push_back(j);
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t j = queue[q];
      if (result.assignment[j] == kNoise) result.assignment[j] = c;  // border
      if (result.assignment[j] != kUnvisited) continue;
      result.assignment[j] = c;
      auto more = neighbours(j);
      if (more.size() < min_pts) continue;
      result.core[j] = true;
      for (std::size_t m : more)
        if (result.assignment[m] == kUnvisited || result.assignment[m] == kNoise)
          queue.push_back(m);
    }
  }
  result.k = static_cast<std::size_t>(next);
  result.noise = static_cast<std::size_t>(
      std::count(result.assignment.begin(), result.assignment.end(), kNoise));
  return result;
}

ClusteringResult dbscan(const Matrix& points, double eps, std::size_t min_pts) {
  auto r = dbscan(kernels::omp::pairwise_distances(points), eps, min_pts);
  if (r.k > 0) r.centroids = cluster_means(points, r.assignment, r.k);
  return r;
}

// ---- GMM -------------------------------------------------------------------

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

// Per-row log of weight_c * N(x | mean_c, diag var_c), for every component.
Matrix log_joint(const Matrix& points, const ClusteringResult& m) {
  const std::size_t n = points.rows();
  const std::size_t k = m.k;
  const std::size_t d = points.cols();
  std::vector<double> norm(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    double s = 0.0;
    for (double v : m.variances.row(c)) s += std::log(v);
    norm[c] = std::log(m.weights[c]) - 0.5 * (static_cast<double>(d) * kLog2Pi + s);
  }
  Matrix out(n, k);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ri = 0; ri < rows; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    const auto x = points.row(r);
    for (std::size_t c = 0; c < k; ++c) {
      const auto mu = m.centroids.row(c);
      const auto var = m.variances.row(c);
      double q = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double t = x[j] - mu[j];
        q += t * t / var[j];
      }
      out(r, c) = norm[c] - 0.5 * q;
    }
  }
  return out;
}

double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double penalty(const ClusteringResult& m, double beta) {
  double p = 0.0;
  for (double v : m.variances.data()) p -= beta / (2.0 * v);
  return p;
}

}  // namespace

double gmm_objective(const ClusteringResult& model, const Matrix& points,
                     double reg) {
  const Matrix lj = log_joint(points, model);
  double ll = 0.0;
  for (std::size_t r = 0; r < points.rows(); ++r) ll += log_sum_exp(lj.row(r));
  return ll + penalty(model, reg * static_cast<double>(points.rows()));
}

ClusteringResult gmm(const Matrix& points, std::size_t k, std::uint64_t seed,
                     std::size_t max_iter, double reg) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  check_k(k, n);
  if (!(reg > 0.0)) throw Error(ErrorCode::kInvalidArgument, "reg must be > 0");
  const double beta = reg * static_cast<double>(n);

  ClusteringResult m;
  m.algorithm = "gmm";
  m.k = k;
  m.seed = seed;
  m.converged = false;
  m.variances = Matrix(k, d);
  m.weights.assign(k, 0.0);

  // Responsibilities start as the hard k-means partition.
  const auto init = kmeans(points, k, seed);
  Matrix resp(n, k);
  for (std::size_t r = 0; r < n; ++r)
    resp(r, static_cast<std::size_t>(init.assignment[r])) = 1.0;
  m.centroids = Matrix(k, d);

  double previous = -kInf;
  for (std::size_t iter = 0;; ++iter) {
    // M-step.
    for (std::size_t c = 0; c < k; ++c) {
      double nk = 0.0;
      std::vector<double> mu(d, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const double w = resp(r, c);
        if (w == 0.0) continue;
        nk += w;
        const auto x = points.row(r);
        for (std::size_t j = 0; j < d; ++j) mu[j] += w * x[j];
      }
      if (nk < 1e-12) {
        // Collapsed component: keep its previous parameters, tiny weight.
        m.weights[c] = std::max(nk, 1e-300) / static_cast<double>(n);
        if (iter == 0) {
          std::copy(init.centroids.row(c).begin(), init.centroids.row(c).end(),
                    m.centroids.row(c).begin());
          std::fill(m.variances.row(c).begin(), m.variances.row(c).end(), beta);
        }
        m.diagnostics.push_back("Degenerate: component " + std::to_string(c) +
                                " collapsed at iteration " + std::to_string(iter));
        continue;
      }
      for (double& v : mu) v /= nk;
      std::vector<double> s(d, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const double w = resp(r, c);
        if (w == 0.0) continue;
        const auto x = points.row(r);
        for (std::size_t j = 0; j < d; ++j) {
          const double t = x[j] - mu[j];
          s[j] += w * t * t;
        }
      }
      m.weights[c] = nk / static_cast<double>(n);
      std::copy(mu.begin(), mu.end(), m.centroids.row(c).begin());
      for (std::size_t j = 0; j < d; ++j) m.variances(c, j) = (s[j] + beta) / nk;
    }

    // E-step, which also yields the objective of the parameters just fit.
    const Matrix lj = log_joint(points, m);
    double ll = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = lj.row(r);
      const double z = log_sum_exp(row);
      ll += z;
      for (std::size_t c = 0; c < k; ++c) resp(r, c) = std::exp(row[c] - z);
    }
    const double objective = ll + penalty(m, beta);
    m.history.push_back(objective);
    m.iterations = iter + 1;
    if (std::abs(objective - previous) <=
        1e-3 * static_cast<double>(n)) {
      m.converged = true;
      break;
    }
    previous = objective;
    if (m.iterations >= max_iter) break;
  }
  if (!m.converged) m.diagnostics.push_back("max_iter reached before convergence");

  m.assignment.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = resp.row(r);
    m.assignment[r] = static_cast<int>(
        std::max_element(row.begin(), row.end()) - row.begin());
  }
  return m;
}

// ---- exports ---------------------------------------------------------------

std::string assignments_csv(std::span<const std::string> app_ids,
                            std::span<const int> assignment) {
  std::string out = "app_id,cluster\n";
  for (std::size_t i = 0; i < assignment.size(); ++i)
    out += csv::quote(app_ids[i]) + "," + std::to_string(assignment[i]) + "\n";
  return out;
}

std::string dendrogram_csv(std::span<const Merge> merges) {
  std::string out = "step,cluster_a,cluster_b,distance,size\n";
  for (const Merge& m : merges)
    out += std::to_string(m.step) + "," + std::to_string(m.a) + "," +
           std::to_string(m.b) + "," + csv::format_double(m.distance) + "," +
           std::to_string(m.size) + "\n";
  return out;
}

std::string quality_csv(std::span<const QualityRow> rows) {
  std::string out =
      "algorithm,param,silhouette,ch_index,n_clusters,noise,status\n";
  // Failed rows leave the scores empty rather than writing nan.
  auto score = [](double v) {
    return std::isnan(v) ? std::string() : csv::format_double(v);
  };
  for (const QualityRow& r : rows)
    out += csv::quote(r.algorithm) + "," + csv::quote(r.param) + "," +
           score(r.silhouette) + "," + score(r.ch_index) + "," +
           std::to_string(r.n_clusters) +
           "," + std::to_string(r.noise) + "," + csv::quote(r.status) + "\n";
  return out;
}

}  // namespace dexfreq
