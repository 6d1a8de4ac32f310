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

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dexfreq::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

namespace {
using Index = std::ptrdiff_t;
}

DistanceMatrix pairwise_distances(const Matrix& points) {
  const auto n = static_cast<Index>(points.rows());
  DistanceMatrix dist(points.rows());
#pragma omp parallel for schedule(dynamic, 16)
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      dist.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          std::sqrt(squared_distance(points.row(static_cast<std::size_t>(i)),
                                     points.row(static_cast<std::size_t>(j))));
  return dist;
}

std::vector<double> silhouette_samples(const DistanceMatrix& dist,
                                       std::span<const int> assignment) {
  const std::size_t n = dist.size();
  int k = 0;
  for (int a : assignment) k = std::max(k, a + 1);
  const auto uk = static_cast<std::size_t>(k);
  std::vector<std::size_t> sizes(uk, 0);
  for (int a : assignment)
    if (a >= 0) ++sizes[static_cast<std::size_t>(a)];

  std::vector<double> s(n, std::numeric_limits<double>::quiet_NaN());
#pragma omp parallel
  {
    std::vector<double> sums(uk);
#pragma omp for schedule(dynamic, 16)
    for (Index ii = 0; ii < static_cast<Index>(n); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const int own = assignment[i];
      if (own < 0) continue;
      const auto uown = static_cast<std::size_t>(own);
      if (sizes[uown] <= 1) {
        s[i] = 0.0;
        continue;
      }
      std::fill(sums.begin(), sums.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || assignment[j] < 0) continue;
        sums[static_cast<std::size_t>(assignment[j])] += dist(i, j);
      }
      const double a = sums[uown] / static_cast<double>(sizes[uown] - 1);
      double b = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < uk; ++c) {
        if (c == uown || sizes[c] == 0) continue;
        b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
      }
      const double denom = std::max(a, b);
      s[i] = (std::isinf(b) || denom == 0.0) ? 0.0 : (b - a) / denom;
    }
  }
  return s;
}

std::vector<int> nearest_centroid(const Matrix& points,
                                  const Matrix& centroids) {
  std::vector<int> out(points.rows(), 0);
#pragma omp parallel for schedule(static)
  for (Index ii = 0; ii < static_cast<Index>(points.rows()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
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
  const auto kk = static_cast<std::ptrdiff_t>(k);
  std::vector<std::vector<std::size_t>> out(queries.rows());
#pragma omp parallel
  {
    std::vector<double> d(n);
    std::vector<std::size_t> order(n);
#pragma omp for schedule(dynamic, 8)
    for (Index qq = 0; qq < static_cast<Index>(queries.rows()); ++qq) {
      const auto q = static_cast<std::size_t>(qq);
      for (std::size_t i = 0; i < n; ++i)
        d[i] = squared_distance(queries.row(q), train.row(i));
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::partial_sort(order.begin(), order.begin() + kk, order.end(),
                        [&](std::size_t a, std::size_t b) {
                          return d[a] < d[b] || (d[a] == d[b] && a < b);
                        });
      out[q].assign(order.begin(), order.begin() + kk);
    }
  }
  return out;
}

Matrix correlation(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  std::vector<double> centered(n * d);
  std::vector<double> norm(d, 0.0);
#pragma omp parallel for schedule(static)
  for (Index cc = 0; cc < static_cast<Index>(d); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = x(r, c) - mean;
      centered[c * n + r] = v;
      ss += v * v;
    }
    norm[c] = ss;
  }
  Matrix out(d, d, std::numeric_limits<double>::quiet_NaN());
#pragma omp parallel for schedule(dynamic, 4)
  for (Index aa = 0; aa < static_cast<Index>(d); ++aa) {
    const auto a = static_cast<std::size_t>(aa);
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
#pragma omp parallel for schedule(dynamic, 16)
  for (Index ii = 0; ii < static_cast<Index>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < n; ++j)
      if (dist(i, j) <= eps) out[i].push_back(j);
  }
  return out;
}

}  // namespace omp
}  // namespace dexfreq::kernels
