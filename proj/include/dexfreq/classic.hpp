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

#ifndef DEXFREQ_CLASSIC_HPP_
#define DEXFREQ_CLASSIC_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dexfreq/corpus.hpp"
#include "dexfreq/model.hpp"

namespace dexfreq {

// 1 - sum(p^2) over the two class weights; 0 for an empty node.
double gini(double benign, double malware);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  double benign = 0.0;  // class weight reaching the node
  double malware = 0.0;

  bool is_leaf() const { return feature < 0; }
};

class DecisionTree final : public Model {
 public:
  DecisionTree(std::vector<TreeNode> nodes, std::size_t input_dim)
      : nodes_(std::move(nodes)), input_dim_(input_dim) {}

  ModelKind kind() const override { return ModelKind::kDt; }
  // Malware fraction of the leaf the row lands in.
  double score(std::span<const double> row) const override;
  std::size_t input_dim() const override { return input_dim_; }
  nlohmann::json to_json() const override;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  static DecisionTree from_json(const nlohmann::json& doc);

 private:
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
  std::size_t input_dim_;
};

// Unrestricted-depth Gini tree; a node splits while it is impure and holds at
// least two rows with some varying feature.
std::unique_ptr<DecisionTree> train_dt(const FeatureMatrix& train);

struct RfOptions {
  bool bootstrap = true;
  // Candidate features per split; ceil(sqrt(d)) when unset.
  std::optional<std::size_t> max_features;
};

class RandomForest final : public Model {
 public:
  explicit RandomForest(std::vector<DecisionTree> trees)
      : trees_(std::move(trees)) {}

  ModelKind kind() const override { return ModelKind::kRf; }
  // Mean of the tree scores.
  double score(std::span<const double> row) const override;
  std::size_t input_dim() const override {
    return trees_.empty() ? 0 : trees_.front().input_dim();
  }
  nlohmann::json to_json() const override;

  const std::vector<DecisionTree>& trees() const { return trees_; }

 private:
  std::vector<DecisionTree> trees_;
};

// Trees are fit in parallel; tree t uses the stream derived from (seed, t), so
// the result does not depend on the worker count.
std::unique_ptr<RandomForest> train_rf(const FeatureMatrix& train,
                                       std::size_t n_trees = 100,
                                       std::uint64_t seed = 0,
                                       const RfOptions& options = {});

class KnnModel final : public Model {
 public:
  KnnModel(Matrix rows, std::vector<Label> labels, std::size_t k)
      : rows_(std::move(rows)), labels_(std::move(labels)), k_(k) {}

  ModelKind kind() const override { return ModelKind::kKnn; }
  // Malware fraction among the k nearest stored rows.
  double score(std::span<const double> row) const override;
  std::vector<double> score_all(const Matrix& rows) const override;
  std::size_t input_dim() const override { return rows_.cols(); }
  nlohmann::json to_json() const override;

  std::size_t k() const { return k_; }
  std::vector<std::vector<std::size_t>> neighbors(const Matrix& queries) const;

 private:
  Matrix rows_;
  std::vector<Label> labels_;
  std::size_t k_;
};

// Throws Error{kTooFewRows} when there are fewer than k rows.
std::unique_ptr<KnnModel> train_knn(const FeatureMatrix& train,
                                    std::size_t k = 5);

class LinearSvm final : public Model {
 public:
  LinearSvm(std::vector<double> w, double b) : w_(std::move(w)), b_(b) {}

  ModelKind kind() const override { return ModelKind::kSvm; }
  // Signed margin w.x + b.
  double score(std::span<const double> row) const override;
  double threshold() const override { return 0.0; }
  std::size_t input_dim() const override { return w_.size(); }
  nlohmann::json to_json() const override;

  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }

  // Solver diagnostics.
  std::size_t iterations = 0;
  bool converged = true;
  std::vector<std::string> warnings;

 private:
  std::vector<double> w_;
  double b_;
};

// Primal objective 0.5 (|w|^2 + b^2) + C sum(max(0, 1 - y (w.x + b))), with
// y in {-1, +1}. The bias is regularized because it is learned as the weight
// of a constant feature.
double svm_objective(const LinearSvm& model, const FeatureMatrix& train,
                     double c);

// Dual coordinate descent on the hinge loss. Stops when the projected-gradient
// spread falls to tol; after max_iter passes it returns the iterate with the
// lowest primal objective, converged = false and a warning.
// Throws Error{kSingleClass}.
std::unique_ptr<LinearSvm> train_svm_linear(const FeatureMatrix& train,
                                            double c = 1.0, double tol = 1e-3,
                                            std::uint64_t seed = 0,
                                            std::size_t max_iter = 1000);

struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  double h_left = 0.0;  // real-valued vote toward malware
  double h_right = 0.0;
  double weighted_error = 0.0;  // of the stump's majority vote, round weights
};

class AdaBoostModel final : public Model {
 public:
  AdaBoostModel(std::vector<Stump> stumps, double learning_rate,
                std::size_t input_dim)
      : stumps_(std::move(stumps)),
        learning_rate_(learning_rate),
        input_dim_(input_dim) {}

  ModelKind kind() const override { return ModelKind::kAdaBoost; }
  // logistic(2 F) where F is the sum of learning_rate * h over stumps.
  double score(std::span<const double> row) const override;
  double decision(std::span<const double> row) const;
  std::size_t input_dim() const override { return input_dim_; }
  nlohmann::json to_json() const override;

  const std::vector<Stump>& stumps() const { return stumps_; }
  double learning_rate() const { return learning_rate_; }

  // Number of stumps that had an empty class in a leaf and were clipped.
  std::size_t degenerate_stumps = 0;

 private:
  std::vector<Stump> stumps_;
  double learning_rate_;
  std::size_t input_dim_;
};

// Binary SAMME.R with weighted-Gini stumps. Leaf class probabilities are
// clipped to [1e-10, 1 - 1e-10]. Throws Error{kSingleClass}.
std::unique_ptr<AdaBoostModel> train_adaboost(const FeatureMatrix& train,
                                              std::size_t n_estimators = 100,
                                              double learning_rate = 1.0,
                                              std::uint64_t seed = 0);

}  // namespace dexfreq

#endif  // DEXFREQ_CLASSIC_HPP_
