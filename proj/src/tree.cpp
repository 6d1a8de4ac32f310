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

// Gini decision trees and the random forest built from them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "dexfreq/classic.hpp"
#include "dexfreq/rng.hpp"

namespace dexfreq {

double gini(double benign, double malware) {
  const double total = benign + malware;
  if (total <= 0.0) return 0.0;
  const double pb = benign / total;
  const double pm = malware / total;
  return 1.0 - pb * pb - pm * pm;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = -std::numeric_limits<double>::infinity();
};

// Weighted sum of squared class weights over the node weight; maximizing it
// over the two children is the same as maximizing the Gini decrease.
double purity(double b, double m) {
  const double w = b + m;
  return w > 0.0 ? (b * b + m * m) / w : 0.0;
}

bool better(double score, int feature, double threshold, const Split& best) {
  if (score != best.score) return score > best.score;
  if (feature != best.feature) return feature < best.feature;
  return threshold < best.threshold;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<Label>& y,
              const std::vector<double>& weight,
              std::optional<std::size_t> max_features, Rng* rng)
      : x_(x), y_(y), weight_(weight), max_features_(max_features), rng_(rng) {
    features_.resize(x.cols());
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    struct Pending {
      std::vector<std::size_t> rows;
      int node;
    };
    std::vector<Pending> stack;
    nodes_.push_back({});
    stack.push_back({std::move(rows), 0});
    while (!stack.empty()) {
      Pending p = std::move(stack.back());
      stack.pop_back();
      double b = 0.0;
      double m = 0.0;
      for (std::size_t r : p.rows)
        (y_[r] == Label::kMalware ? m : b) += weight_[r];
      nodes_[p.node].benign = b;
      nodes_[p.node].malware = m;
      if (b == 0.0 || m == 0.0 || b + m < 2.0) continue;

      const Split s = best_split(p.rows, b, m);
      if (s.feature < 0) continue;

      std::vector<std::size_t> left;
      std::vector<std::size_t> right;
      for (std::size_t r : p.rows)
        (x_(r, static_cast<std::size_t>(s.feature)) <= s.threshold ? left
                                                                   : right)
            .push_back(r);
      const int l = static_cast<int>(nodes_.size());
      nodes_.push_back({});
      nodes_.push_back({});
      TreeNode& node = nodes_[p.node];
      node.feature = s.feature;
      node.threshold = s.threshold;
      node.left = l;
      node.right = l + 1;
      // Right first so the left subtree is numbered before it.
      stack.push_back({std::move(right), l + 1});
      stack.push_back({std::move(left), l});
    }
    return std::move(nodes_);
  }

 private:
  Split best_split(const std::vector<std::size_t>& rows, double b, double m) {
    Split best;
    const std::size_t d = features_.size();
    const std::size_t want = max_features_ ? *max_features_ : d;
    std::size_t visited = 0;
    for (std::size_t i = 0; i < d && visited < want; ++i) {
      if (rng_ != nullptr) {
        const std::size_t j = i + rng_->below(d - i);
        std::swap(features_[i], features_[j]);
      }
      if (evaluate(features_[i], rows, b, m, best)) ++visited;
    }
    return best;
  }

  // Sweeps every midpoint of feature f; false when f is constant here.
  bool evaluate(std::size_t f, const std::vector<std::size_t>& rows, double b,
                double m, Split& best) {
    values_.clear();
    for (std::size_t r : rows) values_.emplace_back(x_(r, f), r);
    std::sort(values_.begin(), values_.end());
    if (values_.front().first == values_.back().first) return false;
    double lb = 0.0;
    double lm = 0.0;
    for (std::size_t i = 0; i + 1 < values_.size(); ++i) {
      const std::size_t r = values_[i].second;
      (y_[r] == Label::kMalware ? lm : lb) += weight_[r];
      const double v = values_[i].first;
      const double next = values_[i + 1].first;
      if (v == next) continue;
      double thr = v + (next - v) / 2.0;
      if (thr >= next) thr = v;
      const double score = purity(lb, lm) + purity(b - lb, m - lm);
      if (better(score, static_cast<int>(f), thr, best))
        best = {static_cast<int>(f), thr, score};
    }
    return true;
  }

  const Matrix& x_;
  const std::vector<Label>& y_;
  const std::vector<double>& weight_;
  std::optional<std::size_t> max_features_;
  Rng* rng_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, std::size_t>> values_;
  std::vector<TreeNode> nodes_;
};

std::vector<TreeNode> grow(const FeatureMatrix& train,
                           const std::vector<double>& weight,
                           std::optional<std::size_t> max_features, Rng* rng) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < train.rows(); ++r)
    if (weight[r] > 0.0) rows.push_back(r);
  TreeBuilder builder(train.values, train.labels, weight, max_features, rng);
  return builder.build(std::move(rows));
}

}  // namespace

double DecisionTree::score(std::span<const double> row) const {
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf())
    node = &nodes_[static_cast<std::size_t>(
        row[static_cast<std::size_t>(node->feature)] <= node->threshold
            ? node->left
            : node->right)];
  const double total = node->benign + node->malware;
  return total > 0.0 ? node->malware / total : 0.0;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  // Children always follow their parent in the node array.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(),
                    [](const TreeNode& n) { return n.is_leaf(); }));
}

nlohmann::json DecisionTree::to_json() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const TreeNode& n : nodes_)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.benign,
                     n.malware});
  return {{"format_version", kModelFormatVersion},
          {"kind", model_kind_name(kind())},
          {"input_dim", input_dim_},
          {"nodes", std::move(nodes)}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& doc) {
  std::vector<TreeNode> nodes;
  for (const auto& n : doc.at("nodes")) {
    TreeNode t;
    t.feature = n.at(0).get<int>();
    t.threshold = n.at(1).get<double>();
    t.left = n.at(2).get<int>();
    t.right = n.at(3).get<int>();
    t.benign = n.at(4).get<double>();
    t.malware = n.at(5).get<double>();
    nodes.push_back(t);
  }
  const auto dim = doc.at("input_dim").get<std::size_t>();
  const auto count = static_cast<int>(nodes.size());
  for (const TreeNode& t : nodes)
    if (!t.is_leaf() &&
        (t.left <= 0 || t.left >= count || t.right <= 0 || t.right >= count ||
         static_cast<std::size_t>(t.feature) >= dim))
      throw Error(ErrorCode::kSchemaMismatch, "corrupt tree node");
  if (nodes.empty()) throw Error(ErrorCode::kSchemaMismatch, "empty tree");
  return DecisionTree(std::move(nodes), dim);
}

std::unique_ptr<DecisionTree> train_dt(const FeatureMatrix& train) {
  if (train.rows() == 0)
    throw Error(ErrorCode::kTooFewRows, "decision tree needs >= 1 row");
  const std::vector<double> weight(train.rows(), 1.0);
  return std::make_unique<DecisionTree>(grow(train, weight, {}, nullptr),
                                        train.cols());
}

double RandomForest::score(std::span<const double> row) const {
  double s = 0.0;
  for (const DecisionTree& t : trees_) s += t.score(row);
  return trees_.empty() ? 0.0 : s / static_cast<double>(trees_.size());
}

nlohmann::json RandomForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& t : trees_) trees.push_back(t.to_json());
  return {{"format_version", kModelFormatVersion},
          {"kind", model_kind_name(kind())},
          {"trees", std::move(trees)}};
}

std::unique_ptr<RandomForest> train_rf(const FeatureMatrix& train,
                                       std::size_t n_trees, std::uint64_t seed,
                                       const RfOptions& options) {
  const std::size_t n = train.rows();
  if (n < 2) throw Error(ErrorCode::kTooFewRows, "random forest needs >= 2 rows");
  if (n_trees == 0)
    throw Error(ErrorCode::kInvalidArgument, "n_trees must be positive");
  const std::size_t d = train.cols();
  const std::size_t max_features =
      options.max_features
          ? std::clamp<std::size_t>(*options.max_features, 1, d)
          : static_cast<std::size_t>(
                std::ceil(std::sqrt(static_cast<double>(d))));

  std::vector<std::optional<DecisionTree>> trees(n_trees);
  const auto count = static_cast<std::ptrdiff_t>(n_trees);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(t)));
    std::vector<double> weight(n, options.bootstrap ? 0.0 : 1.0);
    if (options.bootstrap)
      for (std::size_t i = 0; i < n; ++i) weight[rng.below(n)] += 1.0;
    trees[static_cast<std::size_t>(t)].emplace(
        grow(train, weight, max_features, &rng), d);
  }
  std::vector<DecisionTree> out;
  out.reserve(n_trees);
  for (auto& t : trees) out.push_back(std::move(*t));
  return std::make_unique<RandomForest>(std::move(out));
}

}  // namespace dexfreq
