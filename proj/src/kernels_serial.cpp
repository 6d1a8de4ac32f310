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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dexfreq/kernels.hpp"

namespace dexfreq::kernels::serial {

DistanceMatrix pairwise_distances(const Matrix& points) {
  const std::size_t n = points.rows();
  DistanceMatrix dist(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist.at(i, j) = std::sqrt(squared_distance(points.row(i), points.row(j)));
  return dist;
}

std::vector<double> silhouette_samples(const DistanceMatrix& dist,
                                       std::span<const int> assignment) {
  const std::size_t n = dist.size();
  int k = 0;
  for (int a : assignment) k = std::max(k, a + 1);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignment)
    if (a >= 0) ++sizes[static_cast<std::size_t>(a)];

  std::vector<double> s(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    const int own = assignment[i];
    if (own < 0) continue;
    if (sizes[static_cast<std::size_t>(own)] <= 1) {
      s[i] = 0.0;
      continue;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || assignment[j] < 0) continue;
      sums[static_cast<std::size_t>(assignment[j])] += dist(i, j);
    }
    const double a = sums[static_cast<std::size_t>(own)] /
                     static_cast<double>(sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own || sizes[static_cast<std::size_t>(c)] == 0) continue;
      b = std::min(b, sums[static_cast<std::size_t>(c)] /
                          static_cast<double>(sizes[static_cast<std::size_t>(c)]));
    }
    const double denom = std::max(a, b);
    s[i] = (std::isinf(b) || denom == 0.0) ? 0.0 : (b - a) / denom;
  }
  return s;
}

std::vector<int> nearest_centroid(const Matrix& points,
                                  const Matrix& centroids) {
  std::vector<int> out(points.rows(), 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(points.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        out[i] = static_cast<int>(c);
      }
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> knn(const Matrix& train,
                                          const Matrix& queries,
                                          std::size_t k) {
  const std::size_t n = train.rows();
  k = std::min(k, n);
  std::vector<std::vector<std::size_t>> out(queries.rows());
  std::vector<double> d(n);
  std::vector<std::size_t> order(n);
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    for (std::size_t i = 0; i < n; ++i)
      d[i] = squared_distance(queries.row(q), train.row(i));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end(), [&](std::size_t a, std::size_t b) {
                        return d[a] < d[b] || (d[a] == d[b] && a < b);
                      });
    out[q].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

Matrix correlation(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  // Column-major centered copy.
  std::vector<double> centered(n * d);
  std::vector<double> norm(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double v = x(r, c) - mean;
      centered[c * n + r] = v;
      norm[c] += v * v;
    }
  }
  Matrix out(d, d, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t a = 0; a < d; ++a) {
    if (norm[a] == 0.0) continue;
    out(a, a) = 1.0;
    for (std::size_t b = a + 1; b < d; ++b) {
      if (norm[b] == 0.0) continue;
      double cov = 0.0;
      const double* pa = &centered[a * n];
      const double* pb = &centered[b * n];
      for (std::size_t r = 0; r < n; ++r) cov += pa[r] * pb[r];
      const double r = std::clamp(cov / std::sqrt(norm[a] * norm[b]), -1.0, 1.0);
      out(a, b) = r;
      out(b, a) = r;
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> region_query(const DistanceMatrix& dist,
                                                   double eps) {
  const std::size_t n = dist.size();
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (dist(i, j) <= eps) out[i].push_back(j);
  return out;
}

}  // namespace dexfreq::kernels::serial
