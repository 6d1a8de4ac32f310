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

#include "dexfreq/eval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>

#include "csv.hpp"
#include "dexfreq/classic.hpp"
#include "dexfreq/neural.hpp"

namespace dexfreq {

ConfusionMatrix confusion(std::span<const Label> truth,
                          std::span<const Label> predicted) {
  if (truth.size() != predicted.size())
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(truth.size()) + " labels vs " +
                    std::to_string(predicted.size()) + " predictions");
  if (truth.empty()) throw Error(ErrorCode::kEmptyMatrix, "no rows to score");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == Label::kMalware;
    const bool flagged = predicted[i] == Label::kMalware;
    if (actual && flagged) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (flagged) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyMatrix, "empty confusion matrix");
  Metrics m;
  auto ratio = [&](double num, double den) {
    if (den == 0.0) {
      m.degenerate = true;
      return 0.0;
    }
    return num / den;
  };
  const auto tp = static_cast<double>(cm.tp);
  const auto fp = static_cast<double>(cm.fp);
  const auto tn = static_cast<double>(cm.tn);
  const auto fn = static_cast<double>(cm.fn);
  m.accuracy = (tp + tn) / static_cast<double>(cm.total());
  m.tpr = ratio(tp, tp + fn);
  m.tnr = ratio(tn, tn + fp);
  m.precision = ratio(tp, tp + fp);
  m.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn);
  return m;
}

double f1_harmonic(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

double roc_auc(std::span<const Label> truth, std::span<const double> scores) {
  if (truth.size() != scores.size())
    throw Error(ErrorCode::kLengthMismatch, "labels and scores differ in length");
  const std::size_t n = truth.size();
  std::size_t positives = 0;
  for (Label l : truth) positives += l == Label::kMalware;
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw Error(ErrorCode::kSingleClass, "AUC needs both classes");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based, tie-averaged) ranks of the positives, kept doubled so
  // every quantity stays an exact integer.
  std::uint64_t rank_sum2 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t avg2 = (i + 1) + j;  // 2 * mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t)
      if (truth[order[t]] == Label::kMalware) rank_sum2 += avg2;
    i = j;
  }
  const std::uint64_t u2 = rank_sum2 - positives * (positives + 1);
  return static_cast<double>(u2) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

// ---- trainer registry ------------------------------------------------------

std::string_view classifier_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::kDt: return "DT";
    case ClassifierKind::kKnn: return "kNN";
    case ClassifierKind::kSvm: return "SVM";
    case ClassifierKind::kRf: return "RF";
    case ClassifierKind::kAdaBoost: return "AdaBoost";
    case ClassifierKind::kDnn2L: return "DNN-2L";
    case ClassifierKind::kDnn4L: return "DNN-4L";
    case ClassifierKind::kDnn7L: return "DNN-7L";
  }
  return "?";
}

std::vector<ClassifierKind> all_classifiers() {
  return {ClassifierKind::kDt,     ClassifierKind::kKnn,
          ClassifierKind::kSvm,    ClassifierKind::kRf,
          ClassifierKind::kAdaBoost, ClassifierKind::kDnn2L,
          ClassifierKind::kDnn4L,  ClassifierKind::kDnn7L};
}

namespace {

std::string squash(std::string_view text) {
  std::string out;
  for (char c : text)
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::optional<ClassifierKind> parse_classifier(std::string_view text) {
  const std::string key = squash(text);
  for (ClassifierKind k : all_classifiers())
    if (squash(classifier_name(k)) == key) return k;
  return std::nullopt;
}

std::unique_ptr<Model> train_model(const TrainerSpec& spec,
                                   const FeatureMatrix& train) {
  switch (spec.kind) {
    case ClassifierKind::kDt: return train_dt(train);
    case ClassifierKind::kKnn: return train_knn(train, spec.knn_k);
    case ClassifierKind::kSvm:
      return train_svm_linear(train, spec.svm_c, spec.svm_tol, spec.seed,
                              spec.svm_max_iter);
    case ClassifierKind::kRf: return train_rf(train, spec.n_trees, spec.seed);
    case ClassifierKind::kAdaBoost:
      return train_adaboost(train, spec.n_estimators, spec.boost_learning_rate,
                            spec.seed);
    case ClassifierKind::kDnn2L:
      return train_dnn(train, DnnVariant::kDnn2L, spec.seed, spec.dnn_epochs);
    case ClassifierKind::kDnn4L:
      return train_dnn(train, DnnVariant::kDnn4L, spec.seed, spec.dnn_epochs);
    case ClassifierKind::kDnn7L:
      return train_dnn(train, DnnVariant::kDnn7L, spec.seed, spec.dnn_epochs);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown classifier");
}

EvalRow timed_fit_eval(const TrainerSpec& spec, const SplitPair& split,
                       std::string_view feature_reduction) {
  using Clock = std::chrono::steady_clock;
  EvalRow row;
  row.feature_reduction = std::string(feature_reduction);
  row.n_features = split.train.cols();
  row.classifier = std::string(classifier_name(spec.kind));
  try {
    const auto t0 = Clock::now();
    const auto model = train_model(spec, split.train);
    const auto t1 = Clock::now();
    const auto scores = model->score_all(split.test.values);
    const auto t2 = Clock::now();
    row.train_time_sec = std::chrono::duration<double>(t1 - t0).count();
    row.test_time_sec = std::chrono::duration<double>(t2 - t1).count();

    std::vector<Label> predicted(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
      predicted[i] = scores[i] >= model->threshold() ? Label::kMalware
                                                     : Label::kBenign;
    row.cm = confusion(split.test.labels, predicted);
    const Metrics m = metrics(row.cm);
    row.accuracy = m.accuracy;
    row.tpr = m.tpr;
    row.tnr = m.tnr;
    row.f1 = m.f1;
    if (m.degenerate) row.warnings.push_back("degenerate ratio reported as 0");
    row.auc = roc_auc(split.test.labels, scores);
    if (const auto* svm = dynamic_cast<const LinearSvm*>(model.get()))
      row.warnings.insert(row.warnings.end(), svm->warnings.begin(),
                          svm->warnings.end());
  } catch (const std::exception& e) {
    row.status = std::string("failed: ") + e.what();
  }
  return row;
}

// ---- reports ---------------------------------------------------------------

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::kCsv;
  if (text == "json") return ReportFormat::kJson;
  if (text == "markdown" || text == "md") return ReportFormat::kMarkdown;
  return std::nullopt;
}

namespace {

constexpr std::string_view kHeader =
    "feature_reduction,n_features,classifier,accuracy,tpr,tnr,auc,f1,"
    "train_time_sec,test_time_sec,reducer_fit_time_sec,status";

// Ten significant digits: x / 100 * 100 cannot disturb that many, so the CSV
// round trip is exact.
std::string percent(double fraction) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, fraction * 100.0,
                                 std::chars_format::general, 10);
  return std::string(buf, res.ptr);
}

std::string fixed(double value, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value,
                                 std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

std::string csv_report(std::span<const EvalRow> rows) {
  std::string out(kHeader);
  out += '\n';
  for (const EvalRow& r : rows) {
    out += csv::quote(r.feature_reduction) + "," + std::to_string(r.n_features) +
           "," + csv::quote(r.classifier) + ",";
    if (r.ok()) {
      out += percent(r.accuracy) + "," + percent(r.tpr) + "," + percent(r.tnr) +
             "," + percent(r.auc) + "," + percent(r.f1) + "," +
             csv::format_double(r.train_time_sec) + "," +
             csv::format_double(r.test_time_sec) + ",";
    } else {
      out += ",,,,,,,";
    }
    out += csv::format_double(r.reducer_fit_time_sec) + "," +
           csv::quote(r.status) + "\n";
  }
  return out;
}

std::string json_report(std::span<const EvalRow> rows) {
  nlohmann::json doc = nlohmann::json::array();
  for (const EvalRow& r : rows) {
    nlohmann::json j = {{"feature_reduction", r.feature_reduction},
                        {"n_features", r.n_features},
                        {"classifier", r.classifier},
                        {"status", r.status},
                        {"reducer_fit_time_sec", r.reducer_fit_time_sec}};
    if (r.ok()) {
      j["accuracy"] = r.accuracy;
      j["tpr"] = r.tpr;
      j["tnr"] = r.tnr;
      j["auc"] = r.auc;
      j["f1"] = r.f1;
      j["train_time_sec"] = r.train_time_sec;
      j["test_time_sec"] = r.test_time_sec;
      j["confusion"] = {{"tp", r.cm.tp}, {"fp", r.cm.fp}, {"tn", r.cm.tn},
                        {"fn", r.cm.fn}};
    }
    if (!r.warnings.empty()) j["warnings"] = r.warnings;
    doc.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::string markdown_report(std::span<const EvalRow> rows) {
  std::string out =
      "| Feature Reduction | # Features | Classifier | Accuracy (%) | TPR (%) | "
      "TNR (%) | AUC (%) | F1 (%) | Train Time (sec) | Test Time (sec) |\n"
      "|---|---:|---|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const EvalRow& r : rows) {
    out += "| " + r.feature_reduction + " | " + std::to_string(r.n_features) +
           " | " + r.classifier + " | ";
    if (r.ok()) {
      out += fixed(r.accuracy * 100.0, 2) + " | " + fixed(r.tpr * 100.0, 2) +
             " | " + fixed(r.tnr * 100.0, 2) + " | " + fixed(r.auc * 100.0, 2) +
             " | " + fixed(r.f1 * 100.0, 2) + " | " + fixed(r.train_time_sec, 3) +
             " | " + fixed(r.test_time_sec, 3) + " |\n";
    } else {
      out += r.status + " | | | | | | |\n";
    }
  }
  return out;
}

}  // namespace

std::string report_table(std::span<const EvalRow> rows, ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv: return csv_report(rows);
    case ReportFormat::kJson: return json_report(rows);
    case ReportFormat::kMarkdown: return markdown_report(rows);
  }
  return {};
}

std::vector<EvalRow> parse_report_csv(std::string_view text) {
  const auto lines = csv::lines(text);
  if (lines.empty() || lines.front() != kHeader)
    throw Error(ErrorCode::kSchemaMismatch, "not an evaluation report");
  auto number = [](const std::string& field, std::size_t line) {
    const auto v = csv::parse_double(field);
    if (!v)
      throw Error(ErrorCode::kSchemaMismatch,
                  "line " + std::to_string(line) + ": bad number '" + field + "'");
    return *v;
  };
  std::vector<EvalRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split_line(lines[i]);
    if (f.size() != 12)
      throw Error(ErrorCode::kSchemaMismatch,
                  "line " + std::to_string(i + 1) + ": expected 12 fields");
    EvalRow r;
    r.feature_reduction = f[0];
    r.n_features = static_cast<std::size_t>(number(f[1], i + 1));
    r.classifier = f[2];
    r.status = f[11];
    r.reducer_fit_time_sec = number(f[10], i + 1);
    if (r.ok()) {
      r.accuracy = number(f[3], i + 1) / 100.0;
      r.tpr = number(f[4], i + 1) / 100.0;
      r.tnr = number(f[5], i + 1) / 100.0;
      r.auc = number(f[6], i + 1) / 100.0;
      r.f1 = number(f[7], i + 1) / 100.0;
      r.train_time_sec = number(f[8], i + 1);
      r.test_time_sec = number(f[9], i + 1);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace dexfreq
