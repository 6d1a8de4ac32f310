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

#ifndef DEXFREQ_EVAL_HPP_
#define DEXFREQ_EVAL_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dexfreq/corpus.hpp"
#include "dexfreq/model.hpp"

namespace dexfreq {

// Malware is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&,
                         const ConfusionMatrix&) = default;
};

// Throws Error{kLengthMismatch} or Error{kEmptyMatrix}.
ConfusionMatrix confusion(std::span<const Label> truth,
                          std::span<const Label> predicted);

struct Metrics {
  double accuracy = 0.0;
  double tpr = 0.0;  // recall
  double tnr = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  // Set when a ratio had a zero denominator and was reported as 0.
  bool degenerate = false;
};

// F1 is 2TP / (2TP + FP + FN). Throws Error{kEmptyMatrix}.
Metrics metrics(const ConfusionMatrix& cm);

// F1 as the harmonic mean of precision and recall; 0 when both are 0.
double f1_harmonic(double precision, double recall);

// Mann-Whitney statistic over average ranks (ties count one half).
// Throws Error{kSingleClass} or Error{kLengthMismatch}.
double roc_auc(std::span<const Label> truth, std::span<const double> scores);

enum class ClassifierKind : std::uint8_t {
  kDt,
  kKnn,
  kSvm,
  kRf,
  kAdaBoost,
  kDnn2L,
  kDnn4L,
  kDnn7L,
};

// "DT", "kNN", "SVM", "RF", "AdaBoost", "DNN-2L", "DNN-4L", "DNN-7L"
std::string_view classifier_name(ClassifierKind kind);
// Case-insensitive; also accepts "dnn2l"-style spellings.
std::optional<ClassifierKind> parse_classifier(std::string_view text);
// Table-1 row order.
std::vector<ClassifierKind> all_classifiers();

struct TrainerSpec {
  ClassifierKind kind = ClassifierKind::kDt;
  std::uint64_t seed = 0;
  std::size_t n_trees = 100;
  std::size_t knn_k = 5;
  double svm_c = 1.0;
  double svm_tol = 1e-3;
  std::size_t svm_max_iter = 1000;
  std::size_t n_estimators = 100;
  double boost_learning_rate = 1.0;
  std::optional<std::size_t> dnn_epochs;  // published value when unset
};

std::unique_ptr<Model> train_model(const TrainerSpec& spec,
                                   const FeatureMatrix& train);

struct EvalRow {
  std::string feature_reduction = "none";
  std::size_t n_features = 0;
  std::string classifier;
  // Fractions in [0, 1]; reports scale them to percent.
  double accuracy = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
  double auc = 0.0;
  double f1 = 0.0;
  double train_time_sec = 0.0;
  double test_time_sec = 0.0;
  double reducer_fit_time_sec = 0.0;
  std::string status = "ok";  // "ok" or "failed: <reason>"
  ConfusionMatrix cm;
  std::vector<std::string> warnings;

  bool ok() const { return status == "ok"; }
};

// Times train_model around the fit only and score_all around test scoring
// only, with a monotonic clock. Trainer errors become a failed row.
EvalRow timed_fit_eval(const TrainerSpec& spec, const SplitPair& split,
                       std::string_view feature_reduction = "none");

enum class ReportFormat : std::uint8_t { kCsv, kJson, kMarkdown };
std::optional<ReportFormat> parse_report_format(std::string_view text);

// CSV columns: feature_reduction,n_features,classifier,accuracy,tpr,tnr,auc,
// f1,train_time_sec,test_time_sec,reducer_fit_time_sec,status. Rates are in
// percent in CSV and markdown and raw fractions in JSON.
std::string report_table(std::span<const EvalRow> rows, ReportFormat format);

// Inverse of the CSV form. Throws Error{kSchemaMismatch}.
std::vector<EvalRow> parse_report_csv(std::string_view text);

}  // namespace dexfreq

#endif  // DEXFREQ_EVAL_HPP_
