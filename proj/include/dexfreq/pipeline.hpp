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

#ifndef DEXFREQ_PIPELINE_HPP_
#define DEXFREQ_PIPELINE_HPP_

// Orchestration behind the command-line subcommands. Everything here is
// deterministic for a fixed seed.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dexfreq/cluster.hpp"
#include "dexfreq/corpus.hpp"
#include "dexfreq/eval.hpp"
#include "dexfreq/reduce.hpp"

namespace dexfreq {

enum class ReducerChoice : std::uint8_t { kNone, kVt, kPca, kAe1L, kAe3L };

// "none", "VT", "PCA", "AE-1L", "AE-3L"
std::string_view reducer_choice_name(ReducerChoice choice);
std::optional<ReducerChoice> parse_reducer_choice(std::string_view text);
std::vector<ReducerChoice> all_reducers();

struct SweepConfig {
  std::vector<ReducerChoice> reducers = all_reducers();
  std::vector<ClassifierKind> classifiers = all_classifiers();
  std::uint64_t seed = 1;
  double train_ratio = 0.8;
  bool normalize = false;  // row-normalize before splitting
  std::size_t vt_k = 30;
  std::size_t pca_components = 15;
  std::optional<std::size_t> ae_epochs;
  std::optional<std::size_t> dnn_epochs;
};

struct SweepResult {
  std::vector<EvalRow> rows;  // reducer-major, classifier-minor
  SplitPair split;
  std::vector<Reducer> reducers;  // fitted, one per non-"none" reducer
  std::size_t failed = 0;
};

// Splits once, fits each reducer on the training rows only, transforms both
// sides and evaluates every classifier. Cell failures become failed rows.
SweepResult run_sweep(const FeatureMatrix& matrix, const SweepConfig& config);

struct ClusterStudyConfig {
  std::vector<std::string> algorithms = {"kmeans", "agglomerative", "birch",
                                         "gmm", "dbscan"};
  std::vector<std::size_t> k_values = {2, 3, 4, 5};
  std::vector<double> eps_values = {5000, 10000, 15000, 20000};
  std::size_t min_pts = 4;
  double birch_threshold = 0.5;
  std::size_t birch_branching = 50;
  Linkage linkage = Linkage::kWard;
  std::size_t kmeans_restarts = 10;
  std::size_t elbow_max_k = 10;
  std::uint64_t seed = 1;
  bool normalize = false;
};

struct ClusterStudyResult {
  std::vector<QualityRow> rows;  // Table-2 order
  std::optional<std::size_t> recommended;  // index into rows, best silhouette
  std::vector<ElbowPoint> elbow;
  std::vector<Merge> dendrogram;  // of the agglomerative run
  std::vector<int> recommended_assignment;
};

ClusterStudyResult run_cluster_study(const FeatureMatrix& matrix,
                                     const ClusterStudyConfig& config);

struct ClusterClassifyConfig {
  double purity = 0.98;
  std::size_t min_cluster_rows = 10;
  std::size_t k = 2;
  std::size_t kmeans_restarts = 10;
  std::vector<ClassifierKind> classifiers = all_classifiers();
  std::uint64_t seed = 1;
  double train_ratio = 0.8;
  bool normalize_for_clustering = false;
  std::optional<std::size_t> dnn_epochs;
};

enum class ClusterDecision : std::uint8_t { kTrainClassifier, kDirectLabel };
std::string_view cluster_decision_name(ClusterDecision decision);

struct ClusterOutcome {
  std::size_t cluster = 0;
  std::size_t size = 0;
  std::size_t malware = 0;
  std::size_t benign = 0;
  ClusterDecision decision = ClusterDecision::kTrainClassifier;
  Label majority = Label::kBenign;
  std::vector<std::size_t> members;  // row indices into the input matrix
  std::vector<EvalRow> rows;         // empty for direct-label clusters
  std::string note;                  // free text, e.g. dominant family
  std::vector<std::string> warnings;

  double malware_share() const {
    return size ? static_cast<double>(malware) / static_cast<double>(size) : 0.0;
  }
};

struct ClusterClassifyReport {
  ClusteringResult clustering;
  std::vector<ClusterOutcome> clusters;
};

// k-means on the full feature vectors; clusters whose majority share reaches
// the purity threshold (or that are too small to split) are labelled directly,
// the rest get a fresh stratified split and every configured classifier.
ClusterClassifyReport run_cluster_classify(const FeatureMatrix& matrix,
                                           const ClusterClassifyConfig& config);

// `cluster,size,malware_pct,benign_pct,decision,label,note`
std::string cluster_summary_csv(const ClusterClassifyReport& report);
// Report CSV with a leading `cluster` column, trained clusters only.
std::string cluster_eval_csv(const ClusterClassifyReport& report);
nlohmann::json cluster_report_json(const ClusterClassifyReport& report);

// `k,sse`
std::string elbow_csv(const std::vector<ElbowPoint>& points);
// `app_id,label,pc1,pc2` from a 2-component PCA of the matrix.
std::string pca_scatter_csv(const FeatureMatrix& matrix);

}  // namespace dexfreq

#endif  // DEXFREQ_PIPELINE_HPP_
