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

#ifndef DEXFREQ_CLUSTER_HPP_
#define DEXFREQ_CLUSTER_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dexfreq/kernels.hpp"
#include "dexfreq/matrix.hpp"

namespace dexfreq {

inline constexpr int kNoise = -1;

struct ClusteringResult {
  std::string algorithm;
  std::vector<int> assignment;  // per row; kNoise only from DBSCAN
  std::size_t k = 0;
  Matrix centroids;  // k x d: means of centre-based methods and GMM

  // GMM only.
  Matrix variances;  // k x d diagonal covariances
  std::vector<double> weights;

  // SSE per Lloyd iteration (k-means) or penalized log-likelihood per EM
  // iteration (GMM).
  std::vector<double> history;
  std::size_t iterations = 0;
  bool converged = true;
  std::uint64_t seed = 0;

  // DBSCAN only.
  std::vector<bool> core;
  std::size_t noise = 0;

  std::vector<std::string> diagnostics;
};

// Per-cluster means; empty clusters get a zero row. Noise rows are ignored.
Matrix cluster_means(const Matrix& points, std::span<const int> assignment,
                     std::size_t k);

// Sum of squared distances from each row to its cluster's centroid.
// Throws Error{kDimMismatch}.
double sse(const Matrix& points, std::span<const int> assignment,
           const Matrix& centroids);

// Mean silhouette over non-noise rows; singleton members contribute 0.
// Throws Error{kSingleCluster} with fewer than two clusters.
double silhouette(const Matrix& points, std::span<const int> assignment);
double silhouette(const DistanceMatrix& dist, std::span<const int> assignment);

// Calinski-Harabasz over non-noise rows. When the within-cluster SSE is zero
// the result is +infinity and a ZeroWithin note is appended to `diagnostics`.
// Throws Error{kSingleCluster} for k < 2 and Error{kKTooLarge} for k >= N.
double ch_index(const Matrix& points, std::span<const int> assignment,
                std::vector<std::string>* diagnostics = nullptr);

// k-means++ seeding then Lloyd iterations to an assignment fixpoint.
// Throws Error{kKTooLarge} when k > N.
ClusteringResult kmeans(const Matrix& points, std::size_t k,
                        std::uint64_t seed, std::size_t max_iter = 300);

// Lowest final SSE over `restarts` runs with seeds derived from `seed`.
ClusteringResult kmeans_best_of(const Matrix& points, std::size_t k,
                                std::uint64_t seed, std::size_t restarts,
                                std::size_t max_iter = 300);

struct ElbowPoint {
  std::size_t k;
  double sse;
};

std::vector<ElbowPoint> elbow_curve(const Matrix& points, std::size_t k_min,
                                    std::size_t k_max, std::uint64_t seed,
                                    std::size_t restarts = 5);

enum class Linkage : std::uint8_t { kWard, kSingle, kComplete, kAverage };
std::string_view linkage_name(Linkage linkage);
std::optional<Linkage> parse_linkage(std::string_view text);

// One merge of the bottom-up hierarchy. Leaves are 0..N-1; the cluster formed
// at step s has id N + s.
struct Merge {
  std::size_t step;
  std::size_t a;  // a < b
  std::size_t b;
  double distance;
  std::size_t size;
};

struct AgglomerativeResult {
  ClusteringResult clustering;
  std::vector<Merge> dendrogram;  // N - 1 merges, distance order
};

// Nearest-neighbour-chain agglomeration with Lance-Williams updates; ward uses
// the Euclidean (not squared) merge height. Cluster ids of the cut are
// numbered by their lowest row. Throws Error{kKTooLarge}.
AgglomerativeResult agglomerative(const Matrix& points, std::size_t k,
                                  Linkage linkage = Linkage::kWard);
AgglomerativeResult agglomerative(const DistanceMatrix& dist,
                                  const Matrix& points, std::size_t k,
                                  Linkage linkage = Linkage::kWard);

// Clustering feature: count, linear sum and sum of squared norms.
struct ClusteringFeature {
  double n = 0.0;
  std::vector<double> ls;
  double ss = 0.0;

  void add(std::span<const double> x);
  void merge(const ClusteringFeature& other);
  std::vector<double> centroid() const;
  // Root-mean-square distance of members to the centroid.
  double radius() const;
};

// Height-balanced CF tree. A point joins the closest leaf subcluster when the
// merged radius stays within `threshold`; nodes split above
// `branching_factor` entries.
class CfTree {
 public:
  CfTree(std::size_t dim, double threshold, std::size_t branching_factor);
  ~CfTree();
  CfTree(CfTree&&) noexcept;
  CfTree& operator=(CfTree&&) noexcept;

  void insert(std::span<const double> x);
  ClusteringFeature root_summary() const;
  std::vector<ClusteringFeature> leaf_entries() const;
  std::size_t height() const;

 private:
  struct Node;
  std::unique_ptr<Node> root_;
  std::size_t dim_;
  double threshold_;
  std::size_t branching_factor_;
};

// CF tree build, weighted-ward agglomeration of the leaf subclusters to k
// groups, then assignment of every row to the nearest group centroid.
// Throws Error{kKTooLarge} when the tree has fewer than k subclusters.
ClusteringResult birch(const Matrix& points, double threshold,
                       std::size_t branching_factor, std::size_t k);

// Core / border / noise labelling; eps-neighbourhoods include the point
// itself. Clusters are numbered in row order of their first core point.
ClusteringResult dbscan(const Matrix& points, double eps,
                        std::size_t min_pts = 4);
ClusteringResult dbscan(const DistanceMatrix& dist, double eps,
                        std::size_t min_pts = 4);

// Diagonal-covariance EM initialized from k-means. Each variance is the MAP
// estimate under a fixed 1/v penalty of strength reg * N, so every variance
// stays above reg * N / N_k and the tracked objective (log-likelihood plus
// penalty) is non-decreasing.
ClusteringResult gmm(const Matrix& points, std::size_t k, std::uint64_t seed,
                     std::size_t max_iter = 200, double reg = 1e-6);

// Penalized objective of a fitted mixture on `points`.
double gmm_objective(const ClusteringResult& model, const Matrix& points,
                     double reg);

// `app_id,cluster`
std::string assignments_csv(std::span<const std::string> app_ids,
                            std::span<const int> assignment);
// `step,cluster_a,cluster_b,distance,size`
std::string dendrogram_csv(std::span<const Merge> merges);

struct QualityRow {
  std::string algorithm;
  std::string param;
  double silhouette = 0.0;
  double ch_index = 0.0;
  std::size_t n_clusters = 0;
  std::size_t noise = 0;
  std::string status = "ok";
};

// `algorithm,param,silhouette,ch_index,n_clusters,noise,status`
std::string quality_csv(std::span<const QualityRow> rows);

}  // namespace dexfreq

#endif  // DEXFREQ_CLUSTER_HPP_
