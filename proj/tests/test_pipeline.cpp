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

// Orchestration tests: the library entry points behind each subcommand, then
// the built command-line binary driven as a child process.
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "dexfreq/features.hpp"
#include "dexfreq/pipeline.hpp"
#include "dexfreq/synth.hpp"
#include "support/test_support.hpp"

using namespace dexfreq;
namespace fs = std::filesystem;

namespace {

constexpr Label B = Label::kBenign;
constexpr Label M = Label::kMalware;

FeatureMatrix small_corpus(std::uint64_t seed) {
  return synth_corpus(60, 60, default_profile(), seed);
}

struct Run {
  int code;
  std::string output;
};

// Runs the CLI with stdout and stderr captured into one file.
Run cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli.log";
  const std::string cmd =
      std::string("'") + DEXFREQ_CLI_PATH + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, test::read_text(log)};
}

std::size_t lines(const std::string& s) { return std::size_t(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("sweep restricted to one cell") {
  SweepConfig cfg;
  cfg.reducers = {ReducerChoice::kNone};
  cfg.classifiers = {ClassifierKind::kDt};
  const SweepResult r = run_sweep(small_corpus(1), cfg);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].feature_reduction == "none");
  CHECK(r.rows[0].classifier == "DT");
  CHECK(r.rows[0].n_features == 256);
  CHECK(r.failed == 0);
  CHECK(r.reducers.empty());
}

TEST_CASE("sweep reducer widths and order") {
  SweepConfig cfg;
  cfg.reducers = {ReducerChoice::kNone, ReducerChoice::kVt, ReducerChoice::kPca,
                  ReducerChoice::kAe1L, ReducerChoice::kAe3L};
  cfg.classifiers = {ClassifierKind::kDt, ClassifierKind::kKnn};
  cfg.ae_epochs = 2;
  cfg.normalize = true;
  const SweepResult r = run_sweep(small_corpus(2), cfg);
  REQUIRE(r.rows.size() == 10);
  const std::vector<std::pair<std::string, std::size_t>> want{
      {"none", 256}, {"VT", 30}, {"PCA", 15}, {"AE-1L", 64}, {"AE-3L", 16}};
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const EvalRow& row = r.rows[2 * i + j];
      CHECK(row.feature_reduction == want[i].first);
      CHECK(row.n_features == want[i].second);
      CHECK(row.classifier == (j == 0 ? "DT" : "kNN"));
      CHECK(row.ok());
    }
}

TEST_CASE("reducers never see test rows") {
  FeatureMatrix m = small_corpus(3);
  SweepConfig cfg;
  cfg.reducers = {ReducerChoice::kVt, ReducerChoice::kPca};
  cfg.classifiers = {ClassifierKind::kDt};
  const SweepResult base = run_sweep(m, cfg);

  // Overwrite every test row with a sentinel; the split is driven by labels
  // and the seed, so the same rows stay in test.
  const std::set<std::string> test_ids(base.split.test.app_ids.begin(),
                                       base.split.test.app_ids.end());
  FeatureMatrix poisoned = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    if (test_ids.count(m.app_ids[i]))
      for (double& v : poisoned.values.row(i)) v = 1e6;
  const SweepResult again = run_sweep(poisoned, cfg);
  REQUIRE(again.split.test.app_ids == base.split.test.app_ids);
  REQUIRE(again.reducers.size() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(reducer_to_json(again.reducers[i]) == reducer_to_json(base.reducers[i]));

  // The guard would notice: fitting on everything moves the PCA mean.
  CHECK(fit_pca(poisoned, 15).mean != base.reducers[1].mean);
}

TEST_CASE("cluster study on two blobs recommends k-means with k = 2") {
  Rng rng(4);
  const Matrix blobs = test::two_blobs(60, 4, 20, rng);
  std::vector<Label> labels;
  for (std::size_t i = 0; i < blobs.rows(); ++i) labels.push_back(i < 60 ? B : M);
  const FeatureMatrix m = test::labelled(blobs, labels, Scale::kReduced);
  ClusterStudyConfig cfg;
  cfg.eps_values = {3.0, 6.0};
  cfg.elbow_max_k = 6;
  const ClusterStudyResult r = run_cluster_study(m, cfg);
  CHECK(r.rows.size() == 4 * 4 + 2);
  REQUIRE(r.recommended);
  const QualityRow& best = r.rows[*r.recommended];
  CHECK(best.n_clusters == 2);
  MESSAGE("recommended " << best.algorithm << " " << best.param);
  // Ties in silhouette go to the earliest row, which is k-means.
  CHECK(best.algorithm == "kmeans");
  CHECK(best.param == "2");
  CHECK(r.elbow.size() == 6);
  CHECK(lines(elbow_csv(r.elbow)) == 7);
  CHECK(r.dendrogram.size() == m.rows() - 1);
  CHECK(r.recommended_assignment.size() == m.rows());
}

TEST_CASE("cluster-then-classify with a benign-only mode") {
  const FeatureMatrix m = synth_corpus(300, 300, benign_mode_profile(), 1);
  ClusterClassifyConfig cfg;
  cfg.classifiers = {ClassifierKind::kDt, ClassifierKind::kRf};
  const ClusterClassifyReport r = run_cluster_classify(m, cfg);
  REQUIRE(r.clusters.size() == 2);
  std::size_t direct = 0, total = 0;
  std::vector<int> owner(m.rows(), -1);
  for (const ClusterOutcome& c : r.clusters) {
    total += c.size;
    CHECK(c.size == c.members.size());
    CHECK(c.benign + c.malware == c.size);
    for (std::size_t row : c.members) {
      CHECK(owner[row] == -1);
      owner[row] = int(c.cluster);
      CHECK(r.clustering.assignment[row] == int(c.cluster));
    }
    if (c.decision == ClusterDecision::kDirectLabel) {
      ++direct;
      CHECK(c.rows.empty());
      CHECK(c.majority == B);
    } else {
      REQUIRE(c.rows.size() == 2);
      for (const EvalRow& row : c.rows) CHECK(row.cm.total() < c.size);
    }
  }
  CHECK(direct == 1);
  CHECK(total == m.rows());

  const std::string summary = cluster_summary_csv(r);
  CHECK(summary.rfind("cluster,size,malware_pct,benign_pct,decision,label,note\n", 0) == 0);
  CHECK(lines(summary) == 3);
  CHECK(lines(cluster_eval_csv(r)) == 3);
  CHECK(cluster_report_json(r).is_object());

  cfg.purity = 1.01;
  const ClusterClassifyReport strict = run_cluster_classify(m, cfg);
  for (const ClusterOutcome& c : strict.clusters)
    CHECK(c.decision == ClusterDecision::kTrainClassifier);
}

TEST_CASE("pca scatter and names") {
  const FeatureMatrix m = small_corpus(5);
  const std::string csv = pca_scatter_csv(m);
  CHECK(csv.rfind("app_id,label,pc1,pc2\n", 0) == 0);
  CHECK(lines(csv) == m.rows() + 1);
  for (ReducerChoice c : all_reducers()) CHECK(parse_reducer_choice(reducer_choice_name(c)) == c);
}

TEST_CASE("CLI synth is deterministic and validates counts") {
  const fs::path dir = test::scratch_dir("cli_synth");
  const std::string a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  CHECK(cli("synth --benign 100 --malware 100 --seed 1 --out '" + a + "'", dir).code == 0);
  CHECK(cli("synth --benign 100 --malware 100 --seed 1 --out '" + b + "'", dir).code == 0);
  CHECK(test::read_text(a) == test::read_text(b));
  CHECK(lines(test::read_text(a)) == 201);
  const Run zero = cli("synth --benign 0 --malware 0 --out '" + a + "'", dir);
  CHECK(zero.code == 2);
  CHECK(zero.output.find("InvalidCounts") != std::string::npos);
}

TEST_CASE("CLI extract exit codes") {
  const fs::path dir = test::scratch_dir("cli_extract");
  const fs::path fx = test::fixture_dir();
  const std::string out = (dir / "m.csv").string();

  const Run ok = cli("extract --manifest '" + (fx / "smali_manifest.csv").string() + "' --out '" +
                         out + "'",
                     dir);
  CHECK(ok.code == 0);
  CHECK(lines(test::read_text(out)) == 4);

  const Run mixed = cli("extract --manifest '" + (fx / "mixed_manifest.csv").string() +
                            "' --out '" + out + "'",
                        dir);
  CHECK(mixed.code == 0);
  CHECK(mixed.output.find("1 warnings") != std::string::npos);
  CHECK(lines(test::read_text(out)) == 3);

  const Run missing = cli("extract --manifest '" + (dir / "nope.csv").string() + "'", dir);
  CHECK(missing.code == 2);
  CHECK(missing.output.find("MissingFile") != std::string::npos);

  CHECK(cli("frobnicate", dir).code == 2);
}

TEST_CASE("CLI features outputs") {
  const fs::path dir = test::scratch_dir("cli_features");
  const std::string d = "'" + dir.string() + "'";
  REQUIRE(cli("--out-dir " + d + " synth --benign 40 --malware 40", dir).code == 0);
  const std::string matrix = "'" + (dir / "synth.csv").string() + "'";

  CHECK(cli("--out-dir " + d + " --plot-data features --matrix " + matrix, dir).code == 0);
  CHECK(lines(test::read_text(dir / "prominent_opcodes.csv")) == 16);
  CHECK(fs::exists(dir / "correlations.csv"));
  CHECK(fs::exists(dir / "unused_opcodes.csv"));
  CHECK(fs::exists(dir / "fig_top15_difference.csv"));
  const auto summary = nlohmann::json::parse(test::read_text(dir / "features_summary.json"));
  CHECK(summary["rows"] == 80);
  CHECK(summary["no_discriminative_opcodes"] == false);

  CHECK(cli("--out-dir " + d + " features -k 0 --matrix " + matrix, dir).code == 0);
  CHECK(test::read_text(dir / "prominent_opcodes.csv") == "opcode,mnemonic,F_B,F_M,D\n");

  // Identical class profiles: D is zero everywhere.
  FeatureMatrix rows = make_opcode_matrix();
  std::vector<double> hist(256, 0.0);
  hist[0x0E] = 3;
  hist[0x12] = 1;
  rows.append("b", B, hist);
  rows.append("m", M, hist);
  save_matrix(rows, dir / "twins.csv");
  CHECK(cli("--out-dir " + d + " features --matrix '" + (dir / "twins.csv").string() + "'", dir)
            .code == 0);
  const auto twins = nlohmann::json::parse(test::read_text(dir / "features_summary.json"));
  CHECK(twins["no_discriminative_opcodes"] == true);
}

TEST_CASE("CLI sweep and clustering commands") {
  const fs::path dir = test::scratch_dir("cli_sweep");
  const std::string d = "'" + dir.string() + "'";
  const Run sweep = cli("--out-dir " + d +
                            " sweep --synth-benign 60 --synth-malware 60 --reducers none,PCA"
                            " --classifiers DT,RF",
                        dir);
  CHECK(sweep.code == 0);
  CHECK(lines(test::read_text(dir / "sweep_report.csv")) == 5);
  CHECK(fs::exists(dir / "sweep_report.json"));
  CHECK(fs::exists(dir / "sweep_report.md"));
  const std::string first = test::read_text(dir / "sweep_report.csv");

  CHECK(cli("--out-dir " + d + " sweep --synth-benign 60 --synth-malware 60 --reducers bogus", dir)
            .code == 2);

  const Run study = cli("--out-dir " + d +
                            " --plot-data cluster-study --synth-benign 60 --synth-malware 60"
                            " --algorithms kmeans,agglomerative --elbow-max-k 4",
                        dir);
  CHECK(study.code == 0);
  CHECK(lines(test::read_text(dir / "cluster_quality.csv")) == 9);
  CHECK(lines(test::read_text(dir / "elbow.csv")) == 5);
  CHECK(fs::exists(dir / "dendrogram.csv"));
  CHECK(fs::exists(dir / "fig_elbow.csv"));

  const Run cc = cli("--out-dir " + d +
                         " cluster-classify --synth-benign 150 --synth-malware 150 --benign-mode"
                         " --classifiers DT",
                     dir);
  CHECK(cc.code == 0);
  CHECK(lines(test::read_text(dir / "cluster_summary.csv")) == 3);
  CHECK(lines(test::read_text(dir / "cluster_assignments.csv")) == 301);

  // Byte-identical reruns.
  CHECK(cli("--out-dir " + d +
                " sweep --synth-benign 60 --synth-malware 60 --reducers none,PCA --classifiers DT,RF",
            dir)
            .code == 0);
  const std::string second = test::read_text(dir / "sweep_report.csv");
  // Timing columns differ between runs; compare everything else.
  auto strip_times = [](const std::string& csv) {
    std::string out;
    std::size_t start = 0;
    while (start < csv.size()) {
      const std::size_t end = csv.find('\n', start);
      std::string line = csv.substr(start, end - start);
      std::vector<std::string> cells;
      std::size_t p = 0;
      for (;;) {
        const std::size_t q = line.find(',', p);
        cells.push_back(line.substr(p, q - p));
        if (q == std::string::npos) break;
        p = q + 1;
      }
      for (std::size_t i = 0; i < cells.size(); ++i)
        if (i < 8 || i == 11) out += cells[i] + ",";
      out += "\n";
      start = end + 1;
    }
    return out;
  };
  CHECK(strip_times(first) == strip_times(second));
}
