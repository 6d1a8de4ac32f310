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

#include "dexfreq/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csv.hpp"
#include "dexfreq/kernels.hpp"

namespace dexfreq {

namespace {

// Mnemonic for opcode-named columns, the column name itself otherwise.
std::string column_label(const FeatureMatrix& m, std::size_t c) {
  const std::string& name = m.feature_names[c];
  if (name.size() == 5 && name.compare(0, 3, "op_") == 0) {
    const auto v = std::stoul(name.substr(3), nullptr, 16);
    return std::string(opcode_table()[static_cast<std::uint8_t>(v)].mnemonic);
  }
  return name;
}

}  // namespace

NormalizeResult normalize_rows(const FeatureMatrix& matrix) {
  NormalizeResult out{matrix, {}};
  out.matrix.scale = Scale::kRowNormalized;
  for (std::size_t r = 0; r < out.matrix.rows(); ++r) {
    auto row = out.matrix.values.row(r);
    double total = 0.0;
    for (double v : row) total += v;
    if (total == 0.0) {
      std::fill(row.begin(), row.end(), 0.0);
      out.zero_rows.push_back(r);
      continue;
    }
    for (double& v : row) v /= total;
  }
  return out;
}

std::vector<std::size_t> ProminentOpcodeReport::top() const {
  const std::size_t n = std::min(k, ranking.size());
  return {ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(n)};
}

ProminentOpcodeReport prominent_opcodes(const FeatureMatrix& normalized,
                                        std::size_t k) {
  const std::size_t d = normalized.cols();
  const std::size_t n_benign = normalized.count(Label::kBenign);
  const std::size_t n_malware = normalized.count(Label::kMalware);
  if (n_benign == 0 || n_malware == 0)
    throw Error(ErrorCode::kSingleClass,
                "prominent opcodes need both benign and malware rows");

  ProminentOpcodeReport report;
  report.k = k;
  report.benign_mean.assign(d, 0.0);
  report.malware_mean.assign(d, 0.0);
  for (std::size_t r = 0; r < normalized.rows(); ++r) {
    auto& target = normalized.labels[r] == Label::kMalware
                       ? report.malware_mean
                       : report.benign_mean;
    const auto row = normalized.values.row(r);
    for (std::size_t c = 0; c < d; ++c) target[c] += row[c];
  }
  report.difference.resize(d);
  for (std::size_t c = 0; c < d; ++c) {
    report.benign_mean[c] /= static_cast<double>(n_benign);
    report.malware_mean[c] /= static_cast<double>(n_malware);
    report.difference[c] =
        std::abs(report.benign_mean[c] - report.malware_mean[c]);
  }
  report.ranking.resize(d);
  std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [&](std::size_t a, std::size_t b) {
                     return report.difference[a] > report.difference[b];
                   });
  return report;
}

std::vector<std::size_t> unused_opcodes(const FeatureMatrix& matrix) {
  std::vector<bool> used(matrix.cols(), false);
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = matrix.values.row(r);
    for (std::size_t c = 0; c < row.size(); ++c)
      if (row[c] != 0.0) used[c] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < used.size(); ++c)
    if (!used[c]) out.push_back(c);
  return out;
}

std::string_view class_filter_name(ClassFilter filter) {
  switch (filter) {
    case ClassFilter::kAll: return "all";
    case ClassFilter::kBenign: return "benign";
    case ClassFilter::kMalware: return "malware";
  }
  return "all";
}

std::vector<CorrelationPair> correlation_pairs(const FeatureMatrix& matrix,
                                               ClassFilter filter,
                                               std::size_t top_n) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    if (filter == ClassFilter::kAll ||
        (filter == ClassFilter::kMalware) ==
            (matrix.labels[r] == Label::kMalware))
      rows.push_back(r);
  }
  if (rows.size() < 2)
    throw Error(ErrorCode::kTooFewRows,
                "correlation needs at least 2 rows in class " +
                    std::string(class_filter_name(filter)));

  const Matrix subset = matrix.values.select_rows(rows);
  const Matrix corr = kernels::omp::correlation(subset);
  std::vector<CorrelationPair> pairs;
  for (std::size_t a = 0; a < corr.rows(); ++a)
    for (std::size_t b = a + 1; b < corr.cols(); ++b)
      if (!std::isnan(corr(a, b))) pairs.push_back({a, b, corr(a, b), filter});

  const auto cmp = [](const CorrelationPair& x, const CorrelationPair& y) {
    if (x.r != y.r) return x.r > y.r;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  };
  const std::size_t n = std::min(top_n, pairs.size());
  std::partial_sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n),
                    pairs.end(), cmp);
  pairs.resize(n);
  return pairs;
}

std::string prominent_report_csv(const FeatureMatrix& matrix,
                                 const ProminentOpcodeReport& report) {
  std::string out = "opcode,mnemonic,F_B,F_M,D\n";
  for (std::size_t c : report.top()) {
    out += csv::quote(matrix.feature_names[c]) + ',' +
           csv::quote(column_label(matrix, c)) + ',' +
           csv::format_double(report.benign_mean[c]) + ',' +
           csv::format_double(report.malware_mean[c]) + ',' +
           csv::format_double(report.difference[c]) + '\n';
  }
  return out;
}

std::string correlation_csv(const FeatureMatrix& matrix,
                            const std::vector<CorrelationPair>& pairs) {
  std::string out = "op_a,op_b,r,class\n";
  for (const auto& p : pairs) {
    out += csv::quote(column_label(matrix, p.a)) + ',' +
           csv::quote(column_label(matrix, p.b)) + ',' +
           csv::format_double(p.r) + ',' +
           std::string(class_filter_name(p.cls)) + '\n';
  }
  return out;
}

}  // namespace dexfreq
