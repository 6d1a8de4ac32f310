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

// kNN, linear SVM and AdaBoost.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dexfreq/classic.hpp"
#include "dexfreq/kernels.hpp"
#include "dexfreq/rng.hpp"

namespace dexfreq {

namespace {

void require_both_classes(const FeatureMatrix& train, const char* who) {
  if (!train.has_both_classes())
    throw Error(ErrorCode::kSingleClass,
                std::string(who) + " needs both classes in the training set");
}

Matrix single_row(std::span<const double> row) {
  Matrix m(1, row.size());
  std::copy(row.begin(), row.end(), m.row(0).begin());
  return m;
}

}  // namespace

// ---- kNN -------------------------------------------------------------------

std::vector<std::vector<std::size_t>> KnnModel::neighbors(
    const Matrix& queries) const {
  return kernels::omp::knn(rows_, queries, k_);
}

double KnnModel::score(std::span<const double> row) const {
  return score_all(single_row(row)).front();
}

std::vector<double> KnnModel::score_all(const Matrix& rows) const {
  const auto nn = neighbors(rows);
  std::vector<double> out(nn.size());
  for (std::size_t q = 0; q < nn.size(); ++q) {
    std::size_t malware = 0;
    for (std::size_t i : nn[q]) malware += labels_[i] == Label::kMalware;
    out[q] = static_cast<double>(malware) / static_cast<double>(k_);
  }
  return out;
}

nlohmann::json KnnModel::to_json() const {
  std::vector<int> labels;
  for (Label l : labels_) labels.push_back(static_cast<int>(l));
  return {{"format_version", kModelFormatVersion},
          {"kind", model_kind_name(kind())},
          {"k", k_},
          {"cols", rows_.cols()},
          {"labels", labels},
          {"rows", std::vector<double>(rows_.data().begin(),
                                       rows_.data().end())}};
}

std::unique_ptr<KnnModel> train_knn(const FeatureMatrix& train,
                                    std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  if (train.rows() < k)
    throw Error(ErrorCode::kTooFewRows,
                "kNN with k=" + std::to_string(k) + " needs >= k rows, got " +
                    std::to_string(train.rows()));
  return std::make_unique<KnnModel>(train.values, train.labels, k);
}

// ---- linear SVM ------------------------------------------------------------

double LinearSvm::score(std::span<const double> row) const {
  double s = b_;
  for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * row[i];
  return s;
}

nlohmann::json LinearSvm::to_json() const {
  return {{"format_version", kModelFormatVersion},
          {"kind", model_kind_name(kind())},
          {"w", w_},
          {"b", b_},
          {"iterations", iterations},
          {"converged", converged}};
}

double svm_objective(const LinearSvm& model, const FeatureMatrix& train,
                     double c) {
  double reg = model.bias() * model.bias();
  for (double v : model.weights()) reg += v * v;
  double hinge = 0.0;
  for (std::size_t r = 0; r < train.rows(); ++r) {
    const double y = train.labels[r] == Label::kMalware ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - y * model.score(train.values.row(r)));
  }
  return 0.5 * reg + c * hinge;
}

std::unique_ptr<LinearSvm> train_svm_linear(const FeatureMatrix& train,
                                            double c, double tol,
                                            std::uint64_t seed,
                                            std::size_t max_iter) {
  require_both_classes(train, "SVM");
  if (!(c > 0.0) || !(tol > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "SVM needs C > 0 and tol > 0");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  const Matrix& x = train.values;

  std::vector<double> y(n);
  std::vector<double> qd(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = train.labels[i] == Label::kMalware ? 1.0 : -1.0;
    const auto row = x.row(i);
    qd[i] = 1.0 + std::inner_product(row.begin(), row.end(), row.begin(), 0.0);
  }

  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  auto objective = [&](const std::vector<double>& wv, double bv) {
    LinearSvm probe(wv, bv);
    return svm_objective(probe, train, c);
  };
  std::vector<double> best_w = w;
  double best_b = b;
  double best_obj = objective(w, b);

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t iter = 0;
  bool converged = false;
  while (iter < max_iter) {
    ++iter;
    rng.shuffle(order);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
      const auto row = x.row(i);
      double wx = b;
      for (std::size_t j = 0; j < d; ++j) wx += w[j] * row[j];
      const double g = y[i] * wx - 1.0;
      double pg = g;
      if (alpha[i] == 0.0)
        pg = std::min(g, 0.0);
      else if (alpha[i] == c)
        pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha[i];
        alpha[i] = std::clamp(old - g / qd[i], 0.0, c);
        const double delta = (alpha[i] - old) * y[i];
        for (std::size_t j = 0; j < d; ++j) w[j] += delta * row[j];
        b += delta;
      }
    }
    if (pg_max - pg_min <= tol) {
      converged = true;
      break;
    }
    const double obj = objective(w, b);
    if (obj < best_obj) {
      best_obj = obj;
      best_w = w;
      best_b = b;
    }
  }

  std::unique_ptr<LinearSvm> model;
  if (converged) {
    model = std::make_unique<LinearSvm>(std::move(w), b);
  } else {
    model = std::make_unique<LinearSvm>(std::move(best_w), best_b);
    model->warnings.push_back(
        "NoConvergence: projected-gradient spread above tol after " +
        std::to_string(max_iter) + " passes; returning the best iterate");
  }
  model->iterations = iter;
  model->converged = converged;
  return model;
}

// ---- AdaBoost (SAMME.R) ----------------------------------------------------

namespace {

constexpr double kProbClip = 1e-10;

double stump_vote(double benign, double malware) {
  const double total = benign + malware;
  double pm = total > 0.0 ? malware / total : 0.5;
  pm = std::clamp(pm, kProbClip, 1.0 - kProbClip);
  return 0.5 * std::log(pm / (1.0 - pm));
}

}  // namespace

double AdaBoostModel::decision(std::span<const double> row) const {
  double f = 0.0;
  for (const Stump& s : stumps_)
    f += learning_rate_ * (row[s.feature] <= s.threshold ? s.h_left : s.h_right);
  return f;
}

double AdaBoostModel::score(std::span<const double> row) const {
  return 1.0 / (1.0 + std::exp(-2.0 * decision(row)));
}

nlohmann::json AdaBoostModel::to_json() const {
  nlohmann::json stumps = nlohmann::json::array();
  for (const Stump& s : stumps_)
    stumps.push_back(
        {s.feature, s.threshold, s.h_left, s.h_right, s.weighted_error});
  return {{"format_version", kModelFormatVersion},
          {"kind", model_kind_name(kind())},
          {"input_dim", input_dim_},
          {"learning_rate", learning_rate_},
          {"stumps", std::move(stumps)}};
}

std::unique_ptr<AdaBoostModel> train_adaboost(const FeatureMatrix& train,
                                              std::size_t n_estimators,
                                              double learning_rate,
                                              std::uint64_t /*seed*/) {
  // The stump search is exhaustive with a deterministic tie-break, so the
  // seed has nothing to randomize; it is accepted for a uniform interface.
  require_both_classes(train, "AdaBoost");
  if (!(learning_rate > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  const Matrix& x = train.values;
  std::vector<bool> malware(n);
  for (std::size_t i = 0; i < n; ++i)
    malware[i] = train.labels[i] == Label::kMalware;

  // Rows presorted once per feature; every round only re-sweeps them.
  std::vector<std::vector<std::size_t>> sorted(d);
  for (std::size_t f = 0; f < d; ++f) {
    auto& idx = sorted[f];
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return x(a, f) < x(b, f);
    });
  }

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<Stump> stumps;
  std::size_t degenerate = 0;
  for (std::size_t round = 0; round < n_estimators; ++round) {
    double tb = 0.0;
    double tm = 0.0;
    for (std::size_t i = 0; i < n; ++i) (malware[i] ? tm : tb) += w[i];

    // Best weighted-Gini split; ties to the lower feature, lower threshold.
    // Without any varying feature the stump is a single leaf.
    Stump s;
    s.threshold = std::numeric_limits<double>::max();
    double best = -std::numeric_limits<double>::infinity();
    double best_lb = tb;
    double best_lm = tm;
    for (std::size_t f = 0; f < d; ++f) {
      const auto& idx = sorted[f];
      double lb = 0.0;
      double lm = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::size_t r = idx[k];
        (malware[r] ? lm : lb) += w[r];
        const double v = x(r, f);
        const double next = x(idx[k + 1], f);
        if (v == next) continue;
        const double rb = tb - lb;
        const double rm = tm - lm;
        const double wl = lb + lm;
        const double wr = rb + rm;
        const double score = (wl > 0.0 ? (lb * lb + lm * lm) / wl : 0.0) +
                             (wr > 0.0 ? (rb * rb + rm * rm) / wr : 0.0);
        double thr = v + (next - v) / 2.0;
        if (thr >= next) thr = v;
        if (score > best) {
          best = score;
          s.feature = f;
          s.threshold = thr;
          best_lb = lb;
          best_lm = lm;
        }
      }
    }
    const double rb = tb - best_lb;
    const double rm = tm - best_lm;
    s.h_left = stump_vote(best_lb, best_lm);
    s.h_right = stump_vote(rb, rm);
    if (best_lb == 0.0 || best_lm == 0.0 || rb == 0.0 || rm == 0.0)
      ++degenerate;
    // Majority vote per leaf; a tie votes benign.
    s.weighted_error = (best_lm > best_lb ? best_lb : best_lm) +
                       (rm > rb ? rb : rm);

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = x(i, s.feature) <= s.threshold ? s.h_left : s.h_right;
      w[i] *= std::exp(-learning_rate * (malware[i] ? h : -h));
      total += w[i];
    }
    stumps.push_back(s);
    if (!(total > 0.0) || !std::isfinite(total)) break;
    for (double& v : w) v /= total;
  }
  auto model =
      std::make_unique<AdaBoostModel>(std::move(stumps), learning_rate, d);
  model->degenerate_stumps = degenerate;
  return model;
}

}  // namespace dexfreq
