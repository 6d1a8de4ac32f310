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
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "doctest.h"
#include "dexfreq/classic.hpp"
#include "dexfreq/eval.hpp"
#include "dexfreq/features.hpp"
#include "dexfreq/synth.hpp"
#include "support/test_support.hpp"

using namespace dexfreq;

namespace {

constexpr Label B = Label::kBenign;
constexpr Label M = Label::kMalware;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

double accuracy(const Model& model, const FeatureMatrix& m) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) ok += model.predict(m.values.row(i)) == m.labels[i];
  return double(ok) / double(m.rows());
}

double gini_oracle(double b, double m) {
  const double n = b + m;
  return n == 0 ? 0 : 1 - (b / n) * (b / n) - (m / n) * (m / n);
}

struct Split {
  std::size_t feature;
  double threshold;
  double gain;
};

// Every (feature, midpoint) candidate, weighted-Gini gain, ties to the lower
// feature and then the lower threshold.
Split best_split_oracle(const FeatureMatrix& m) {
  double pb = 0, pm = 0;
  for (Label l : m.labels) (l == M ? pm : pb) += 1;
  const double parent = gini_oracle(pb, pm);
  const double n = double(m.rows());
  Split best{0, 0, -1};
  for (std::size_t f = 0; f < m.cols(); ++f) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < m.rows(); ++i) vals.push_back(m.values(i, f));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double t = (vals[k] + vals[k + 1]) / 2;
      double lb = 0, lm = 0, rb = 0, rm = 0;
      for (std::size_t i = 0; i < m.rows(); ++i) {
        const bool left = m.values(i, f) <= t;
        const bool mal = m.labels[i] == M;
        (left ? (mal ? lm : lb) : (mal ? rm : rb)) += 1;
      }
      const double gain = parent - ((lb + lm) / n) * gini_oracle(lb, lm) -
                          ((rb + rm) / n) * gini_oracle(rb, rm);
      if (gain > best.gain + 1e-12) best = {f, t, gain};
    }
  }
  return best;
}

FeatureMatrix planted_corpus(std::size_t per_class, std::uint64_t seed) {
  return normalize_rows(synth_corpus(per_class, per_class, default_profile(), seed)).matrix;
}

}  // namespace

TEST_CASE("gini") {
  CHECK(gini(5, 5) == 0.5);
  CHECK(gini(7, 0) == 0.0);
  CHECK(gini(0, 0) == 0.0);
  CHECK(gini(1, 3) == doctest::Approx(0.375));
}

TEST_CASE("decision tree") {
  const FeatureMatrix one_d = test::labelled(test::matrix_of({{0}, {1}, {10}}), {B, B, M});
  const auto dt = train_dt(one_d);
  CHECK(dt->nodes().size() == 3);
  CHECK(dt->nodes()[0].threshold == best_split_oracle(one_d).threshold);
  CHECK(accuracy(*dt, one_d) == 1.0);

  const FeatureMatrix pure = test::labelled(test::matrix_of({{0}, {1}, {2}}), {M, M, M});
  const auto leaf = train_dt(pure);
  CHECK(leaf->nodes().size() == 1);
  CHECK(leaf->nodes()[0].is_leaf());
  CHECK(leaf->score(std::vector<double>{5}) == 1.0);

  // Root split matches the exhaustive oracle on random integer data.
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix v(15, 3);
    std::vector<Label> labels;
    for (std::size_t i = 0; i < 15; ++i) {
      for (std::size_t j = 0; j < 3; ++j) v(i, j) = double(rng.below(6));
      labels.push_back(rng.below(2) ? M : B);
    }
    if (std::count(labels.begin(), labels.end(), M) % 15 == 0) continue;
    const FeatureMatrix m = test::labelled(v, labels);
    const Split want = best_split_oracle(m);
    const auto tree = train_dt(m);
    REQUIRE(!tree->nodes()[0].is_leaf());
    CHECK(std::size_t(tree->nodes()[0].feature) == want.feature);
    CHECK(tree->nodes()[0].threshold == want.threshold);
  }

  // Unrestricted depth fits duplicate-free, consistent data exactly.
  const FeatureMatrix noisy = test::labelled(test::random_matrix(80, 4, rng), [&] {
    std::vector<Label> l;
    for (int i = 0; i < 80; ++i) l.push_back(rng.below(2) ? M : B);
    return l;
  }());
  CHECK(accuracy(*train_dt(noisy), noisy) == 1.0);
}

TEST_CASE("random forest") {
  const FeatureMatrix m = planted_corpus(40, 3);
  RfOptions plain;
  plain.bootstrap = false;
  plain.max_features = m.cols();
  const auto single = train_rf(m, 1, 7, plain);
  CHECK(single->trees().front().to_json() == train_dt(m)->to_json());

  const auto rf = train_rf(m, 20, 11);
  for (double s : rf->score_all(m.values)) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  CHECK(train_rf(m, 20, 11)->to_json() == rf->to_json());
#ifdef _OPENMP
  const int before = omp_get_max_threads();
  omp_set_num_threads(3);
  CHECK(train_rf(m, 20, 11)->to_json() == rf->to_json());
  omp_set_num_threads(before);
#endif
}

TEST_CASE("RF is at least as good as DT over 10 seeds") {
  double rf_sum = 0, dt_sum = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SplitPair sp = split(planted_corpus(100, seed), 0.8, seed, true);
    const auto rf = train_rf(sp.train, 100, seed);
    const auto dt = train_dt(sp.train);
    const double rf_auc = roc_auc(sp.test.labels, rf->score_all(sp.test.values));
    const double dt_auc = roc_auc(sp.test.labels, dt->score_all(sp.test.values));
    CHECK(rf_auc >= dt_auc - 0.01);
    rf_sum += rf_auc;
    dt_sum += dt_auc;
  }
  MESSAGE("mean AUC rf " << rf_sum / 10 << " dt " << dt_sum / 10);
}

TEST_CASE("kNN") {
  const FeatureMatrix two = test::labelled(test::matrix_of({{0}, {10}}), {B, M});
  const auto k1 = train_knn(two, 1);
  CHECK(k1->predict(std::vector<double>{1}) == B);
  CHECK(k1->predict(std::vector<double>{10}) == M);
  CHECK(code_of([&] { train_knn(two, 3); }) == ErrorCode::kTooFewRows);

  Rng rng(8);
  const Matrix pts = test::random_matrix(30, 3, rng);
  std::vector<Label> labels;
  for (int i = 0; i < 30; ++i) labels.push_back(rng.below(2) ? M : B);
  const FeatureMatrix m = test::labelled(pts, labels);
  const auto knn = train_knn(m, 5);
  const Matrix queries = test::random_matrix(10, 3, rng);
  const auto nn = knn->neighbors(queries);
  for (std::size_t q = 0; q < 10; ++q) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < 30; ++i)
      all.push_back({std::sqrt(squared_distance(queries.row(q), pts.row(i))), i});
    std::sort(all.begin(), all.end());
    std::size_t mal = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(nn[q][k] == all[k].second);
      mal += labels[all[k].second] == M;
    }
    CHECK(knn->score(queries.row(q)) == double(mal) / 5);
  }

  // Training-row order does not matter without distance ties.
  const auto perm = Rng(3).permutation(30);
  const auto shuffled = train_knn(m.select_rows(perm), 5);
  CHECK(shuffled->score_all(queries) == knn->score_all(queries));
}

TEST_CASE("linear SVM") {
  const FeatureMatrix tiny = test::labelled(test::matrix_of({{0, 0}, {2, 2}}), {B, M});
  const auto svm = train_svm_linear(tiny);
  CHECK(accuracy(*svm, tiny) == 1.0);
  CHECK(svm->converged);

  Rng rng(4);
  FeatureMatrix sep = test::labelled(Matrix(), {});
  sep.feature_names = {"f0", "f1", "f2"};
  while (sep.rows() < 80) {
    std::vector<double> row{rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const double s = row[0] + row[1] - row[2] + 0.5;
    if (std::abs(s) < 1) continue;
    sep.append("r" + std::to_string(sep.rows()), s > 0 ? M : B, row);
  }
  const auto a = train_svm_linear(sep, 1.0, 1e-3, 2);
  FeatureMatrix doubled = sep;
  for (double& v : doubled.values.data()) v *= 2;
  const auto b = train_svm_linear(doubled, 1.0, 1e-3, 2);
  CHECK(a->weights() != b->weights());
  CHECK(a->predict_all(sep.values) == b->predict_all(doubled.values));

  const LinearSvm zero(std::vector<double>(3, 0.0), 0.0);
  CHECK(svm_objective(*a, sep, 1.0) <= svm_objective(zero, sep, 1.0));

  // Noisy labels still never beat the zero vector's objective.
  FeatureMatrix noisy = sep;
  for (std::size_t i = 0; i < noisy.rows(); i += 7) noisy.labels[i] = noisy.labels[i] == M ? B : M;
  const auto n = train_svm_linear(noisy, 1.0, 1e-3, 2);
  CHECK(svm_objective(*n, noisy, 1.0) <= svm_objective(zero, noisy, 1.0));

  const auto capped = train_svm_linear(noisy, 1.0, 1e-12, 2, 1);
  CHECK(!capped->converged);
  CHECK(!capped->warnings.empty());

  const FeatureMatrix single = test::labelled(test::matrix_of({{0}, {1}}), {B, B});
  CHECK(code_of([&] { train_svm_linear(single); }) == ErrorCode::kSingleClass);
}

TEST_CASE("AdaBoost") {
  const FeatureMatrix line = test::labelled(test::matrix_of({{0}, {1}, {10}, {11}}), {B, B, M, M});
  const auto perfect = train_adaboost(line, 10);
  CHECK(perfect->stumps()[0].weighted_error <= 1e-12);
  CHECK(accuracy(*perfect, line) == 1.0);

  // One stump: the model's decision is that stump's vote.
  Rng rng(6);
  const FeatureMatrix m = test::labelled(test::random_matrix(40, 3, rng), [&] {
    std::vector<Label> l;
    for (int i = 0; i < 40; ++i) l.push_back(rng.below(2) ? M : B);
    return l;
  }());
  const auto one = train_adaboost(m, 1);
  REQUIRE(one->stumps().size() == 1);
  const Stump& s = one->stumps()[0];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double h = m.values(i, s.feature) <= s.threshold ? s.h_left : s.h_right;
    CHECK(one->decision(m.values.row(i)) == doctest::Approx(h));
    CHECK(one->predict(m.values.row(i)) == (h >= 0 ? M : B));
  }

  // XOR-like quadrants with one small quadrant: an additive model of stumps
  // can get three quadrants right, a single stump cannot beat 0.75.
  FeatureMatrix x = test::labelled(Matrix(), {});
  x.feature_names = {"x", "y"};
  auto add = [&](std::size_t n, double sx, double sy, Label l) {
    for (std::size_t i = 0; i < n; ++i)
      x.append("p" + std::to_string(x.rows()), l,
               std::vector<double>{sx * rng.uniform(0.2, 1.0), sy * rng.uniform(0.2, 1.0)});
  };
  add(40, 1, 1, M);
  add(40, -1, -1, M);
  add(40, -1, 1, B);
  add(8, 1, -1, B);
  double best_stump = 0;
  for (std::size_t f = 0; f < 2; ++f)
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double t = x.values(i, f);
      std::size_t left_m = 0, left_b = 0, right_m = 0, right_b = 0;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const bool left = x.values(r, f) <= t;
        const bool mal = x.labels[r] == M;
        ++(left ? (mal ? left_m : left_b) : (mal ? right_m : right_b));
      }
      best_stump = std::max(best_stump, double(std::max(left_m, left_b) +
                                               std::max(right_m, right_b)) /
                                            double(x.rows()));
    }
  CHECK(best_stump <= 0.75);
  const auto boosted = train_adaboost(x, 100);
  CHECK(boosted->stumps().size() == 100);
  CHECK(accuracy(*boosted, x) >= 0.9);
  for (const Stump& st : boosted->stumps()) CHECK(st.weighted_error <= 0.5);

  const FeatureMatrix single = test::labelled(test::matrix_of({{0}, {1}}), {M, M});
  CHECK(code_of([&] { train_adaboost(single); }) == ErrorCode::kSingleClass);
}

TEST_CASE("every model thresholds its score and round-trips through JSON") {
  const FeatureMatrix m = planted_corpus(30, 2);
  for (ClassifierKind kind : all_classifiers()) {
    TrainerSpec spec;
    spec.kind = kind;
    spec.seed = 3;
    spec.n_trees = 10;
    spec.n_estimators = 10;
    spec.dnn_epochs = 3;
    const auto model = train_model(spec, m);
    const auto scores = model->score_all(m.values);
    const auto preds = model->predict_all(m.values);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      CHECK(preds[i] == (scores[i] >= model->threshold() ? M : B));
      CHECK(scores[i] == doctest::Approx(model->score(m.values.row(i))).epsilon(1e-12));
    }
    const auto back = model_from_json(nlohmann::json::parse(model->to_json().dump()));
    CHECK(back->kind() == model->kind());
    CHECK(back->score_all(m.values) == scores);
  }
}
