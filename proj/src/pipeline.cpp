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

#include "dexfreq/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "csv.hpp"
#include "dexfreq/features.hpp"
#include "dexfreq/neural.hpp"

namespace dexfreq {

std::string_view reducer_choice_name(ReducerChoice choice) {
  switch (choice) {
    case ReducerChoice::kNone: return "none";
    case ReducerChoice::kVt: return "VT";
    case ReducerChoice::kPca: return "PCA";
    case ReducerChoice::kAe1L: return "AE-1L";
    case ReducerChoice::kAe3L: return "AE-3L";
  }
  return "?";
}

std::vector<ReducerChoice> all_reducers() {
  return {ReducerChoice::kNone, ReducerChoice::kVt, ReducerChoice::kPca,
          ReducerChoice::kAe1L, ReducerChoice::kAe3L};
}

std::optional<ReducerChoice> parse_reducer_choice(std::string_view text) {
  std::string key;
  for (char c : text)
    if (std::isalnum(static_cast<unsigned char>(c)))
      key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (key == "none" || key == "original") return ReducerChoice::kNone;
  if (key == "vt" || key == "variance") return ReducerChoice::kVt;
  if (key == "pca") return ReducerChoice::kPca;
  if (key == "ae1l") return ReducerChoice::kAe1L;
  if (key == "ae3l") return ReducerChoice::kAe3L;
  return std::nullopt;
}

// ---- sweep -----------------------------------------------------------------

namespace {

Reducer fit_reducer(ReducerChoice choice, const FeatureMatrix& train,
                    const SweepConfig& config) {
  switch (choice) {
    case ReducerChoice::kVt: return fit_variance_top_k(train, config.vt_k);
    case ReducerChoice::kPca: return fit_pca(train, config.pca_components);
    case ReducerChoice::kAe1L:
      return fit_autoencoder(train, AutoencoderVariant::kAe1L, config.seed,
                             config.ae_epochs);
    case ReducerChoice::kAe3L:
      return fit_autoencoder(train, AutoencoderVariant::kAe3L, config.seed,
                             config.ae_epochs);
    case ReducerChoice::kNone: break;
  }
  throw Error(ErrorCode::kInvalidArgument, "no reducer to fit");
}

}  // namespace

SweepResult run_sweep(const FeatureMatrix& matrix, const SweepConfig& config) {
  if (config.classifiers.empty())
    throw Error(ErrorCode::kInvalidArgument, "at least one classifier is required");
  SweepResult result;
  const FeatureMatrix input =
      config.normalize ? normalize_rows(matrix).matrix : matrix;
  result.split = split(input, config.train_ratio, config.seed);

  for (ReducerChoice choice : config.reducers) {
    const std::string tag(reducer_choice_name(choice));
    SplitPair reduced;
    double fit_time = 0.0;
    std::string failure;
    if (choice == ReducerChoice::kNone) {
      reduced = result.split;
    } else {
      try {
        const auto t0 = std::chrono::steady_clock::now();
        Reducer r = fit_reducer(choice, result.split.train, config);
        fit_time = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
        reduced.train = apply(r, result.split.train);
        reduced.test = apply(r, result.split.test);
        reduced.train_indices = result.split.train_indices;
        reduced.test_indices = result.split.test_indices;
        reduced.seed = result.split.seed;
        reduced.ratio = result.split.ratio;
        result.reducers.push_back(std::move(r));
      } catch (const std::exception& e) {
        failure = std::string("failed: reducer: ") + e.what();
      }
    }
    for (ClassifierKind kind : config.classifiers) {
      EvalRow row;
      if (failure.empty()) {
        TrainerSpec spec;
        spec.kind = kind;
        spec.seed = config.seed;
        spec.dnn_epochs = config.dnn_epochs;
        row = timed_fit_eval(spec, reduced, tag);
      } else {
        row.feature_reduction = tag;
        row.classifier = std::string(classifier_name(kind));
        row.status = failure;
      }
      row.reducer_fit_time_sec = fit_time;
      if (!row.ok()) ++result.failed;
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

// ---- cluster study ---------------------------------------------------------

ClusterStudyResult run_cluster_study(const FeatureMatrix& matrix,
                                     const ClusterStudyConfig& config) {
  const Matrix points =
      config.normalize ? normalize_rows(matrix).matrix.values : matrix.values;
  const DistanceMatrix dist = kernels::omp::pairwise_distances(points);
  ClusterStudyResult result;
  std::vector<std::vector<int>> assignments;
  std::optional<double> best;

  auto record = [&](std::string algorithm, std::string param, auto&& run) {
    QualityRow row;
    row.algorithm = std::move(algorithm);
    row.param = std::move(param);
    std::vector<int> assignment;
    try {
      ClusteringResult c = run();
      row.n_clusters = c.k;
      row.noise = c.noise;
      assignment = c.assignment;
      row.silhouette = silhouette(dist, assignment);
      std::vector<std::string> notes;
      row.ch_index = ch_index(points, assignment, &notes);
      if (!notes.empty()) row.status = "ok: " + notes.front();
      if (!best || row.silhouette > *best) {
        best = row.silhouette;
        result.recommended = result.rows.size();
      }
    } catch (const std::exception& e) {
      row.silhouette = std::nan("");
      row.ch_index = std::nan("");
      row.status = std::string("failed: ") + e.what();
    }
    result.rows.push_back(std::move(row));
    assignments.push_back(std::move(assignment));
  };

  const auto has = [&](std::string_view name) {
    return std::find(config.algorithms.begin(), config.algorithms.end(), name) !=
           config.algorithms.end();
  };
  for (const std::string& algo : config.algorithms)
    if (algo != "kmeans" && algo != "agglomerative" && algo != "birch" &&
        algo != "gmm" && algo != "dbscan")
      throw Error(ErrorCode::kInvalidArgument, "unknown algorithm " + algo);

  if (has("kmeans"))
    for (std::size_t k : config.k_values)
      record("kmeans", std::to_string(k), [&] {
        return kmeans_best_of(points, k, config.seed, config.kmeans_restarts);
      });
  if (has("agglomerative")) {
    for (std::size_t k : config.k_values)
      record("agglomerative", std::to_string(k), [&] {
        auto r = agglomerative(dist, points, k, config.linkage);
        if (result.dendrogram.empty()) result.dendrogram = std::move(r.dendrogram);
        return std::move(r.clustering);
      });
  }
  if (has("birch"))
    for (std::size_t k : config.k_values)
      record("birch", std::to_string(k), [&] {
        return birch(points, config.birch_threshold, config.birch_branching, k);
      });
  if (has("gmm"))
    for (std::size_t k : config.k_values)
      record("gmm", std::to_string(k),
             [&] { return gmm(points, k, config.seed); });
  if (has("dbscan"))
    for (double eps : config.eps_values)
      record("dbscan", csv::format_double(eps) + " (eps)",
             [&] { return dbscan(dist, eps, config.min_pts); });

  if (result.recommended)
    result.recommended_assignment = assignments[*result.recommended];
  const std::size_t elbow_max = std::min(config.elbow_max_k, points.rows());
  if (elbow_max >= 1)
    result.elbow = elbow_curve(points, 1, elbow_max, config.seed);
  return result;
}

// ---- cluster-then-classify -------------------------------------------------

std::string_view cluster_decision_name(ClusterDecision decision) {
  return decision == ClusterDecision::kDirectLabel ? "direct-label"
                                                   : "train-classifier";
}

namespace {

std::string percent_text(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace

ClusterClassifyReport run_cluster_classify(const FeatureMatrix& matrix,
                                           const ClusterClassifyConfig& config) {
  if (config.classifiers.empty())
    throw Error(ErrorCode::kInvalidArgument, "at least one classifier is required");
  if (!matrix.has_both_classes())
    throw Error(ErrorCode::kSingleClass, "cluster-classify needs a labelled "
                                         "matrix with both classes");
  const Matrix points = config.normalize_for_clustering
                            ? normalize_rows(matrix).matrix.values
                            : matrix.values;
  ClusterClassifyReport report;
  report.clustering =
      kmeans_best_of(points, config.k, config.seed, config.kmeans_restarts);

  report.clusters.resize(config.k);
  for (std::size_t c = 0; c < config.k; ++c) report.clusters[c].cluster = c;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    auto& out = report.clusters[static_cast<std::size_t>(
        report.clustering.assignment[r])];
    out.members.push_back(r);
    ++out.size;
    (matrix.labels[r] == Label::kMalware ? out.malware : out.benign) += 1;
  }

  for (ClusterOutcome& out : report.clusters) {
    out.majority = out.malware > out.benign ? Label::kMalware : Label::kBenign;
    const double share =
        out.size ? static_cast<double>(std::max(out.malware, out.benign)) /
                       static_cast<double>(out.size)
                 : 0.0;
    if (out.size < config.min_cluster_rows) {
      out.decision = ClusterDecision::kDirectLabel;
      out.warnings.push_back("DegenerateCluster: only " +
                             std::to_string(out.size) +
                             " rows; labelled by majority");
    } else if (share >= config.purity) {
      out.decision = ClusterDecision::kDirectLabel;
    }
    out.note = percent_text(share) + "% " + std::string(label_name(out.majority));
    if (out.decision == ClusterDecision::kDirectLabel) continue;

    const FeatureMatrix sub = matrix.select_rows(out.members);
    SplitPair inner;
    try {
      inner = split(sub, config.train_ratio, config.seed);
    } catch (const std::exception& e) {
      for (ClassifierKind kind : config.classifiers) {
        EvalRow row;
        row.classifier = std::string(classifier_name(kind));
        row.n_features = sub.cols();
        row.status = std::string("failed: split: ") + e.what();
        out.rows.push_back(std::move(row));
      }
      continue;
    }
    for (ClassifierKind kind : config.classifiers) {
      TrainerSpec spec;
      spec.kind = kind;
      spec.seed = config.seed;
      spec.dnn_epochs = config.dnn_epochs;
      out.rows.push_back(timed_fit_eval(spec, inner));
    }
  }
  return report;
}

std::string cluster_summary_csv(const ClusterClassifyReport& report) {
  std::string out = "cluster,size,malware_pct,benign_pct,decision,label,note\n";
  for (const ClusterOutcome& c : report.clusters) {
    const double m = c.malware_share();
    out += std::to_string(c.cluster) + "," + std::to_string(c.size) + "," +
           percent_text(m) + "," + percent_text(c.size ? 1.0 - m : 0.0) + "," +
           std::string(cluster_decision_name(c.decision)) + "," +
           (c.decision == ClusterDecision::kDirectLabel
                ? std::string(label_name(c.majority))
                : std::string()) +
           "," + csv::quote(c.note) + "\n";
  }
  return out;
}

std::string cluster_eval_csv(const ClusterClassifyReport& report) {
  std::string out;
  bool header = false;
  for (const ClusterOutcome& c : report.clusters) {
    const std::string body = report_table(c.rows, ReportFormat::kCsv);
    const auto ls = csv::lines(body);
    if (!header) {
      out += "cluster," + std::string(ls.front()) + "\n";
      header = true;
    }
    for (std::size_t i = 1; i < ls.size(); ++i)
      if (!ls[i].empty())
        out += std::to_string(c.cluster) + "," + std::string(ls[i]) + "\n";
  }
  if (!header) {
    const std::string empty = report_table(std::span<const EvalRow>{}, ReportFormat::kCsv);
    out = "cluster," + empty;
  }
  return out;
}

nlohmann::json cluster_report_json(const ClusterClassifyReport& report) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const ClusterOutcome& c : report.clusters) {
    nlohmann::json j = {
        {"cluster", c.cluster},
        {"size", c.size},
        {"malware", c.malware},
        {"benign", c.benign},
        {"decision", cluster_decision_name(c.decision)},
        {"note", c.note},
        {"warnings", c.warnings},
    };
    if (c.decision == ClusterDecision::kDirectLabel)
      j["label"] = label_name(c.majority);
    j["eval"] = nlohmann::json::parse(report_table(c.rows, ReportFormat::kJson));
    clusters.push_back(std::move(j));
  }
  return {{"k", report.clustering.k},
          {"kmeans_iterations", report.clustering.iterations},
          {"clusters", std::move(clusters)}};
}

std::string elbow_csv(const std::vector<ElbowPoint>& points) {
  std::string out = "k,sse\n";
  for (const ElbowPoint& p : points)
    out += std::to_string(p.k) + "," + csv::format_double(p.sse) + "\n";
  return out;
}

std::string pca_scatter_csv(const FeatureMatrix& matrix) {
  const Reducer r = fit_pca(matrix, std::min<std::size_t>(2, matrix.cols()));
  const FeatureMatrix scores = apply(r, matrix);
  std::string out = "app_id,label,pc1,pc2\n";
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    out += csv::quote(scores.app_ids[i]) + "," +
           std::string(label_name(scores.labels[i])) + "," +
           csv::format_double(scores.values(i, 0)) + "," +
           csv::format_double(scores.cols() > 1 ? scores.values(i, 1) : 0.0) +
           "\n";
  }
  return out;
}

}  // namespace dexfreq
