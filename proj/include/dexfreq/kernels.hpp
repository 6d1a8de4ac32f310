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

#ifndef DEXFREQ_KERNELS_HPP_
#define DEXFREQ_KERNELS_HPP_

// Data-parallel inner loops. Every kernel exists twice: `serial` is the plain
// reference, `omp` splits the outer loop across OpenMP threads. Both perform
// the same floating-point operations in the same order per output element, so
// results are bit-identical; the tests assert exactly that.

#include <cstddef>
#include <span>
#include <vector>

#include "dexfreq/matrix.hpp"

namespace dexfreq {

// Condensed upper-triangular Euclidean distance matrix.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n)
      : n_(n), data_(n < 2 ? 0 : n * (n - 1) / 2) {}

  std::size_t size() const noexcept { return n_; }

  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    return data_[index(i, j)];
  }
  double& at(std::size_t i, std::size_t j) { return data_[index(i, j)]; }

  std::span<const double> condensed() const noexcept { return data_; }

  friend bool operator==(const DistanceMatrix&,
                         const DistanceMatrix&) = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
  }
  std::size_t n_ = 0;
  std::vector<double> data_;
};

namespace kernels {

// Number of threads the omp kernels will use (1 when built without OpenMP).
int max_threads();

namespace serial {

DistanceMatrix pairwise_distances(const Matrix& points);

// Per-point silhouette. Members of singleton clusters get s = 0; rows with a
// negative label (noise) are skipped and left as NaN.
std::vector<double> silhouette_samples(const DistanceMatrix& dist,
                                       std::span<const int> assignment);

// Index of the nearest centroid per point; ties go to the lower index.
std::vector<int> nearest_centroid(const Matrix& points,
                                  const Matrix& centroids);

// k nearest training rows per query, ordered by (distance, row index).
std::vector<std::vector<std::size_t>> knn(const Matrix& train,
                                          const Matrix& queries,
                                          std::size_t k);

// Pearson correlation between columns; NaN where a column is constant.
Matrix correlation(const Matrix& x);

// Indices j with dist(i, j) <= eps, including i itself, ascending.
std::vector<std::vector<std::size_t>> region_query(const DistanceMatrix& dist,
                                                   double eps);

}  // namespace serial

namespace omp {

DistanceMatrix pairwise_distances(const Matrix& points);
std::vector<double> silhouette_samples(const DistanceMatrix& dist,
                                       std::span<const int> assignment);
std::vector<int> nearest_centroid(const Matrix& points,
                                  const Matrix& centroids);
std::vector<std::vector<std::size_t>> knn(const Matrix& train,
                                          const Matrix& queries,
                                          std::size_t k);
Matrix correlation(const Matrix& x);
std::vector<std::vector<std::size_t>> region_query(const DistanceMatrix& dist,
                                                   double eps);

}  // namespace omp

}  // namespace kernels
}  // namespace dexfreq

#endif  // DEXFREQ_KERNELS_HPP_
