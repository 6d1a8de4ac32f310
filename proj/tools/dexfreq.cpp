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

// dexfreq command-line front end.
//
//   dexfreq extract --manifest apps.csv --out features.csv
//   dexfreq synth --benign 2000 --malware 2000 --seed 1 --out synth.csv
//   dexfreq features --matrix features.csv -k 15
//   dexfreq sweep --matrix features.csv --reducers none,PCA
//   dexfreq cluster-study --matrix features.csv
//   dexfreq cluster-classify --matrix features.csv --purity 0.98
//
// Exit codes: 0 success, 2 usage or input error, 3 every cell failed.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dexfreq/cluster.hpp"
#include "dexfreq/corpus.hpp"
#include "dexfreq/error.hpp"
#include "dexfreq/eval.hpp"
#include "dexfreq/features.hpp"
#include "dexfreq/opcodes.hpp"
#include "dexfreq/pipeline.hpp"
#include "dexfreq/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dexfreq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitAllFailed = 3;

struct Common {
  std::uint64_t seed = 1;
  fs::path out_dir = ".";
  bool plot_data = false;
};

// Where the feature matrix comes from: a saved CSV, a manifest to extract,
// or the synthetic generator.
struct Source {
  fs::path matrix;
  fs::path manifest;
  fs::path profile;
  bool benign_mode = false;
  std::size_t n_benign = 2000;
  std::size_t n_malware = 2000;
  int workers = 0;

  void add_options(CLI::App* cmd) {
    auto* m = cmd->add_option("--matrix", matrix, "feature-matrix CSV")
                  ->check(CLI::ExistingFile);
    cmd->add_option("--manifest", manifest, "label manifest to extract")
        ->excludes(m);
    cmd->add_option("--profile", profile, "synthetic profile file")
        ->check(CLI::ExistingFile);
    cmd->add_flag("--benign-mode", benign_mode,
                  "synthetic profile with a benign-only mode");
    cmd->add_option("--synth-benign", n_benign, "synthetic benign rows");
    cmd->add_option("--synth-malware", n_malware, "synthetic malware rows");
    cmd->add_option("--workers", workers, "extraction threads (0 = all)");
  }

  FeatureMatrix load(std::uint64_t seed) const {
    if (!matrix.empty()) return load_matrix(matrix);
    if (!manifest.empty()) {
      ExtractResult r = extract_corpus(load_manifest(manifest), workers);
      report_failures(r);
      return std::move(r.matrix);
    }
    return synth_corpus(n_benign, n_malware, synth_profile(), seed);
  }

  SynthProfile synth_profile() const {
    if (!profile.empty()) return load_profile(profile);
    return benign_mode ? benign_mode_profile() : default_profile();
  }

  static void report_failures(const ExtractResult& r) {
    for (const auto& [id, d] : r.failures) {
      std::cerr << "warning: " << id << ": " << d.message;
      if (d.offset) std::cerr << " (offset " << *d.offset << ")";
      std::cerr << "\n";
    }
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

std::vector<ReducerChoice> parse_reducers(const std::vector<std::string>& names) {
  std::vector<ReducerChoice> out;
  for (const std::string& n : names) {
    const auto r = parse_reducer_choice(n);
    if (!r) throw Error(ErrorCode::kInvalidArgument, "unknown reducer " + n);
    out.push_back(*r);
  }
  return out;
}

std::vector<ClassifierKind> parse_classifiers(
    const std::vector<std::string>& names) {
  std::vector<ClassifierKind> out;
  for (const std::string& n : names) {
    const auto c = parse_classifier(n);
    if (!c) throw Error(ErrorCode::kInvalidArgument, "unknown classifier " + n);
    out.push_back(*c);
  }
  if (out.empty())
    throw Error(ErrorCode::kInvalidArgument, "no classifiers selected");
  return out;
}

std::optional<std::size_t> positive(std::size_t v) {
  return v ? std::optional<std::size_t>(v) : std::nullopt;
}

// Top-15 differences for plotting, regardless of the report's k.
std::string top_difference_csv(const FeatureMatrix& normalized) {
  const ProminentOpcodeReport r = prominent_opcodes(normalized, 15);
  return prominent_report_csv(normalized, r);
}

int cmd_extract(const Common& common, const fs::path& manifest, fs::path out,
                int workers) {
  const ExtractResult r = extract_corpus(load_manifest(manifest), workers);
  Source::report_failures(r);
  if (out.empty()) out = common.out_dir / "features.csv";
  save_matrix(r.matrix, out);
  std::cout << "extracted " << r.matrix.rows() << " apps, "
            << r.failures.size() << " warnings -> " << out.string() << "\n";
  return kExitOk;
}

int cmd_synth(const Common& common, const Source& src, fs::path out) {
  const FeatureMatrix m =
      synth_corpus(src.n_benign, src.n_malware, src.synth_profile(), common.seed);
  if (out.empty()) out = common.out_dir / "synth.csv";
  save_matrix(m, out);
  std::cout << "wrote " << m.rows() << " rows -> " << out.string() << "\n";
  return kExitOk;
}

int cmd_features(const Common& common, const Source& src, std::size_t k,
                 std::size_t top_pairs, bool corr_normalized) {
  const FeatureMatrix raw = src.load(common.seed);
  const NormalizeResult norm = normalize_rows(raw);
  for (std::size_t r : norm.zero_rows)
    std::cerr << "warning: " << raw.app_ids[r] << " has no opcodes\n";
  const FeatureMatrix& normalized =
      raw.scale == Scale::kRawCounts ? norm.matrix : raw;

  const ProminentOpcodeReport report = prominent_opcodes(normalized, k);
  write_text(common.out_dir / "prominent_opcodes.csv",
             prominent_report_csv(normalized, report));

  const FeatureMatrix& corr_input = corr_normalized ? normalized : raw;
  std::vector<CorrelationPair> pairs;
  for (ClassFilter f : {ClassFilter::kAll, ClassFilter::kBenign,
                        ClassFilter::kMalware}) {
    try {
      auto p = correlation_pairs(corr_input, f, top_pairs);
      pairs.insert(pairs.end(), p.begin(), p.end());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTooFewRows) throw;
      std::cerr << "warning: correlation skipped for "
                << class_filter_name(f) << ": " << e.what() << "\n";
    }
  }
  write_text(common.out_dir / "correlations.csv", correlation_csv(raw, pairs));

  const std::vector<std::size_t> unused = unused_opcodes(raw);
  std::string unused_text = "opcode,mnemonic\n";
  const OpcodeTable& table = opcode_table();
  for (std::size_t c : unused) {
    const auto op = static_cast<std::uint8_t>(c);
    unused_text += opcode_column_name(op) + "," +
                   std::string(table[op].mnemonic) + "\n";
  }
  write_text(common.out_dir / "unused_opcodes.csv", unused_text);

  const bool discriminative = std::any_of(
      report.difference.begin(), report.difference.end(),
      [](double d) { return d > 0.0; });
  nlohmann::json summary = {
      {"rows", raw.rows()},
      {"benign", raw.count(Label::kBenign)},
      {"malware", raw.count(Label::kMalware)},
      {"k", k},
      {"unused_opcodes", unused.size()},
      {"zero_rows", norm.zero_rows.size()},
      {"no_discriminative_opcodes", !discriminative},
      {"correlation_scale", corr_normalized ? "normalized" : "raw"},
  };
  nlohmann::json top = nlohmann::json::array();
  for (std::size_t c : report.top())
    top.push_back(opcode_column_name(static_cast<std::uint8_t>(c)));
  summary["top"] = top;
  write_text(common.out_dir / "features_summary.json", summary.dump(2) + "\n");
  if (!discriminative) std::cout << "no discriminative opcodes\n";

  if (common.plot_data) {
    write_text(common.out_dir / "fig_top15_difference.csv",
               top_difference_csv(normalized));
    write_text(common.out_dir / "fig_pca_scatter.csv",
               pca_scatter_csv(normalized));
  }
  std::cout << "features: " << report.top().size() << " prominent, "
            << unused.size() << " unused -> " << common.out_dir.string()
            << "\n";
  return kExitOk;
}

int cmd_sweep(const Common& common, const Source& src, SweepConfig config) {
  config.seed = common.seed;
  const FeatureMatrix m = src.load(common.seed);
  const SweepResult r = run_sweep(m, config);
  write_text(common.out_dir / "sweep_report.csv",
             report_table(r.rows, ReportFormat::kCsv));
  write_text(common.out_dir / "sweep_report.json",
             report_table(r.rows, ReportFormat::kJson));
  write_text(common.out_dir / "sweep_report.md",
             report_table(r.rows, ReportFormat::kMarkdown));
  for (const EvalRow& row : r.rows)
    for (const std::string& w : row.warnings)
      std::cerr << "warning: " << row.feature_reduction << "/"
                << row.classifier << ": " << w << "\n";
  if (common.plot_data)
    write_text(common.out_dir / "fig_pca_scatter.csv", pca_scatter_csv(m));
  std::cout << "sweep: " << r.rows.size() << " cells, " << r.failed
            << " failed -> " << common.out_dir.string() << "\n";
  return !r.rows.empty() && r.failed == r.rows.size() ? kExitAllFailed
                                                      : kExitOk;
}

bool failed(const QualityRow& row) { return row.status.rfind("failed", 0) == 0; }

int cmd_cluster_study(const Common& common, const Source& src,
                      ClusterStudyConfig config) {
  config.seed = common.seed;
  const FeatureMatrix m = src.load(common.seed);
  const ClusterStudyResult r = run_cluster_study(m, config);
  write_text(common.out_dir / "cluster_quality.csv", quality_csv(r.rows));
  write_text(common.out_dir / "elbow.csv", elbow_csv(r.elbow));
  write_text(common.out_dir / "dendrogram.csv", dendrogram_csv(r.dendrogram));
  if (!r.recommended_assignment.empty())
    write_text(common.out_dir / "cluster_assignments.csv",
               assignments_csv(m.app_ids, r.recommended_assignment));

  nlohmann::json doc;
  doc["rows"] = nlohmann::json::array();
  for (const QualityRow& q : r.rows) {
    doc["rows"].push_back({{"algorithm", q.algorithm},
                           {"param", q.param},
                           {"silhouette", q.silhouette},
                           {"ch_index", q.ch_index},
                           {"n_clusters", q.n_clusters},
                           {"noise", q.noise},
                           {"status", q.status}});
  }
  if (r.recommended) {
    const QualityRow& best = r.rows[*r.recommended];
    doc["recommended"] = {{"algorithm", best.algorithm},
                          {"param", best.param},
                          {"silhouette", best.silhouette}};
    std::cout << "recommended: " << best.algorithm << " " << best.param
              << " (silhouette " << best.silhouette << ")\n";
  } else {
    doc["recommended"] = nullptr;
  }
  write_text(common.out_dir / "cluster_study.json", doc.dump(2) + "\n");
  if (common.plot_data) {
    write_text(common.out_dir / "fig_elbow.csv", elbow_csv(r.elbow));
    write_text(common.out_dir / "fig_pca_scatter.csv", pca_scatter_csv(m));
  }
  const bool all_failed =
      !r.rows.empty() && std::all_of(r.rows.begin(), r.rows.end(), failed);
  return all_failed ? kExitAllFailed : kExitOk;
}

int cmd_cluster_classify(const Common& common, const Source& src,
                         ClusterClassifyConfig config) {
  config.seed = common.seed;
  const FeatureMatrix m = src.load(common.seed);
  const ClusterClassifyReport r = run_cluster_classify(m, config);
  write_text(common.out_dir / "cluster_summary.csv", cluster_summary_csv(r));
  write_text(common.out_dir / "cluster_eval.csv", cluster_eval_csv(r));
  write_text(common.out_dir / "cluster_classify.json",
             cluster_report_json(r).dump(2) + "\n");
  write_text(common.out_dir / "cluster_assignments.csv",
             assignments_csv(m.app_ids, r.clustering.assignment));

  std::size_t cells = 0;
  std::size_t failures = 0;
  for (const ClusterOutcome& c : r.clusters) {
    for (const std::string& w : c.warnings)
      std::cerr << "warning: cluster " << c.cluster << ": " << w << "\n";
    for (const EvalRow& row : c.rows) {
      ++cells;
      if (!row.ok()) ++failures;
    }
    std::cout << "cluster " << c.cluster << ": " << c.size << " apps, "
              << cluster_decision_name(c.decision) << "\n";
  }
  return cells > 0 && failures == cells ? kExitAllFailed : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Opcode-frequency malware detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key-value config file");

  Common common;
  app.add_option("--seed", common.seed, "random seed");
  app.add_option("--out-dir", common.out_dir, "output directory");
  app.add_flag("--plot-data", common.plot_data, "also write per-figure CSVs");

  // extract
  auto* extract = app.add_subcommand("extract", "manifest -> feature matrix");
  fs::path extract_manifest;
  fs::path extract_out;
  int extract_workers = 0;
  extract->add_option("--manifest", extract_manifest, "label manifest CSV")
      ->required();
  extract->add_option("--out", extract_out, "output CSV");
  extract->add_option("--workers", extract_workers, "threads (0 = all)");

  // synth
  auto* synth = app.add_subcommand("synth", "synthetic feature matrix");
  Source synth_src;
  fs::path synth_out;
  synth->add_option("--benign", synth_src.n_benign, "benign rows");
  synth->add_option("--malware", synth_src.n_malware, "malware rows");
  synth->add_option("--profile", synth_src.profile, "profile file")
      ->check(CLI::ExistingFile);
  synth->add_flag("--benign-mode", synth_src.benign_mode,
                  "add a benign-only mode");
  synth->add_option("--out", synth_out, "output CSV");

  // features
  auto* features = app.add_subcommand("features", "prominent-opcode analysis");
  Source features_src;
  features_src.add_options(features);
  std::size_t features_k = 15;
  std::size_t features_pairs = 20;
  bool corr_normalized = false;
  features->add_option("-k", features_k, "prominent opcodes to report");
  features->add_option("--pairs", features_pairs, "top correlated pairs");
  features->add_flag("--corr-normalized", corr_normalized,
                     "correlate normalized frequencies instead of counts");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "reducer x classifier sweep");
  Source sweep_src;
  sweep_src.add_options(sweep);
  SweepConfig sweep_cfg;
  std::vector<std::string> sweep_reducers = {"none", "VT", "PCA", "AE-1L",
                                             "AE-3L"};
  std::vector<std::string> sweep_classifiers = {
      "DT", "kNN", "SVM", "RF", "AdaBoost", "DNN-2L", "DNN-4L", "DNN-7L"};
  std::size_t sweep_ae_epochs = 0;
  std::size_t sweep_dnn_epochs = 0;
  sweep->add_option("--reducers", sweep_reducers)->delimiter(',');
  sweep->add_option("--classifiers", sweep_classifiers)->delimiter(',');
  sweep->add_option("--train-ratio", sweep_cfg.train_ratio)
      ->check(CLI::Range(0.0, 1.0));
  sweep->add_flag("--normalize", sweep_cfg.normalize, "row-normalize first");
  sweep->add_option("--vt-k", sweep_cfg.vt_k);
  sweep->add_option("--pca-components", sweep_cfg.pca_components);
  sweep->add_option("--ae-epochs", sweep_ae_epochs, "0 = default");
  sweep->add_option("--dnn-epochs", sweep_dnn_epochs, "0 = default");

  // cluster-study
  auto* study = app.add_subcommand("cluster-study", "clustering quality table");
  Source study_src;
  study_src.add_options(study);
  ClusterStudyConfig study_cfg;
  std::string study_linkage = "ward";
  study->add_option("--algorithms", study_cfg.algorithms)->delimiter(',');
  study->add_option("--k", study_cfg.k_values)->delimiter(',');
  study->add_option("--eps", study_cfg.eps_values)->delimiter(',');
  study->add_option("--min-pts", study_cfg.min_pts);
  study->add_option("--birch-threshold", study_cfg.birch_threshold);
  study->add_option("--birch-branching", study_cfg.birch_branching);
  study->add_option("--linkage", study_linkage);
  study->add_option("--restarts", study_cfg.kmeans_restarts);
  study->add_option("--elbow-max-k", study_cfg.elbow_max_k);
  study->add_flag("--normalize", study_cfg.normalize);

  // cluster-classify
  auto* cc = app.add_subcommand("cluster-classify",
                                "k-means, then per-cluster classifiers");
  Source cc_src;
  cc_src.add_options(cc);
  ClusterClassifyConfig cc_cfg;
  std::vector<std::string> cc_classifiers = sweep_classifiers;
  std::size_t cc_dnn_epochs = 0;
  cc->add_option("--purity", cc_cfg.purity, "direct-label threshold");
  cc->add_option("--min-cluster-rows", cc_cfg.min_cluster_rows);
  cc->add_option("--k", cc_cfg.k);
  cc->add_option("--restarts", cc_cfg.kmeans_restarts);
  cc->add_option("--classifiers", cc_classifiers)->delimiter(',');
  cc->add_option("--train-ratio", cc_cfg.train_ratio)
      ->check(CLI::Range(0.0, 1.0));
  cc->add_flag("--normalize", cc_cfg.normalize_for_clustering,
               "cluster row-normalized vectors");
  cc->add_option("--dnn-epochs", cc_dnn_epochs, "0 = default");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*extract)
      return cmd_extract(common, extract_manifest, extract_out,
                         extract_workers);
    if (*synth) return cmd_synth(common, synth_src, synth_out);
    if (*features)
      return cmd_features(common, features_src, features_k, features_pairs,
                          corr_normalized);
    if (*sweep) {
      sweep_cfg.reducers = parse_reducers(sweep_reducers);
      sweep_cfg.classifiers = parse_classifiers(sweep_classifiers);
      sweep_cfg.ae_epochs = positive(sweep_ae_epochs);
      sweep_cfg.dnn_epochs = positive(sweep_dnn_epochs);
      return cmd_sweep(common, sweep_src, sweep_cfg);
    }
    if (*study) {
      const auto linkage = parse_linkage(study_linkage);
      if (!linkage)
        throw Error(ErrorCode::kInvalidArgument,
                    "unknown linkage " + study_linkage);
      study_cfg.linkage = *linkage;
      return cmd_cluster_study(common, study_src, study_cfg);
    }
    if (*cc) {
      cc_cfg.classifiers = parse_classifiers(cc_classifiers);
      cc_cfg.dnn_epochs = positive(cc_dnn_epochs);
      return cmd_cluster_classify(common, cc_src, cc_cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
