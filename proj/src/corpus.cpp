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

#include "dexfreq/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <unordered_set>

#include "csv.hpp"
#include "dexfreq/rng.hpp"
#include "dexfreq/smali.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dexfreq {

namespace fs = std::filesystem;

std::string_view label_name(Label label) {
  return label == Label::kMalware ? "malware" : "benign";
}

Label parse_label(std::string_view text) {
  if (text == "malware") return Label::kMalware;
  if (text == "benign") return Label::kBenign;
  throw Error(ErrorCode::kUnknownLabel,
              "label must be malware or benign, got '" + std::string(text) +
                  "'");
}

std::size_t FeatureMatrix::count(Label label) const {
  return static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), label));
}

void FeatureMatrix::validate() const {
  if (app_ids.size() != labels.size() || values.rows() != labels.size())
    throw Error(ErrorCode::kDimMismatch,
                "row count mismatch between ids, labels and values");
  if (!labels.empty() && values.cols() != feature_names.size())
    throw Error(ErrorCode::kDimMismatch,
                "value width " + std::to_string(values.cols()) +
                    " != feature count " +
                    std::to_string(feature_names.size()));
}

FeatureMatrix FeatureMatrix::select_rows(
    std::span<const std::size_t> indices) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.scale = scale;
  out.values = values.select_rows(indices);
  if (indices.empty()) out.values = Matrix(0, cols());
  out.app_ids.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.app_ids.push_back(app_ids[i]);
    out.labels.push_back(labels[i]);
  }
  return out;
}

void FeatureMatrix::append(std::string app_id, Label label,
                           std::span<const double> row) {
  if (row.size() != feature_names.size())
    throw Error(ErrorCode::kDimMismatch, "row width mismatch");
  if (values.rows() == 0) values = Matrix(0, row.size());
  values.append_row(row);
  app_ids.push_back(std::move(app_id));
  labels.push_back(label);
}

FeatureMatrix make_opcode_matrix() {
  FeatureMatrix m;
  m.feature_names.reserve(kOpcodeCount);
  for (std::size_t op = 0; op < kOpcodeCount; ++op)
    m.feature_names.push_back(
        opcode_column_name(static_cast<std::uint8_t>(op)));
  m.values = Matrix(0, kOpcodeCount);
  return m;
}

std::vector<double> histogram_row(const OpcodeHistogram& histogram) {
  std::vector<double> row(kOpcodeCount);
  for (std::size_t i = 0; i < kOpcodeCount; ++i)
    row[i] = static_cast<double>(histogram.counts[i]);
  return row;
}

LabelManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path))
    throw Error(ErrorCode::kMissingFile, "manifest not found: " + path.string());
  const std::string text = csv::read_file(path);
  const auto lines = csv::lines(text);
  if (lines.empty() || csv::split_line(lines[0]) !=
                           std::vector<std::string>{"app_id", "path", "label"})
    throw Error(ErrorCode::kBadHeader, "expected header app_id,path,label");

  LabelManifest manifest;
  std::unordered_set<std::string> ids;
  const fs::path base = path.parent_path();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = csv::split_line(lines[i]);
    if (fields.size() != 3)
      throw Error(ErrorCode::kBadHeader,
                  "line " + std::to_string(i + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected 3");
    if (!ids.insert(fields[0]).second)
      throw Error(ErrorCode::kDuplicateId, "duplicate app_id " + fields[0]);
    fs::path p = fields[1];
    if (p.is_relative()) p = base / p;
    manifest.entries.push_back({fields[0], p, parse_label(fields[2])});
  }
  return manifest;
}

namespace {

OpcodeHistogram extract_single(const fs::path& path) {
  const auto ext = path.extension().string();
  const std::string content = csv::read_file(path);
  if (ext == ".dex") {
    return parse_dex(std::span(
        reinterpret_cast<const std::uint8_t*>(content.data()), content.size()));
  }
  if (ext == ".smali") return parse_smali(content).histogram;
  throw Error(ErrorCode::kInvalidArgument,
              "unsupported input extension '" + ext + "' for " + path.string());
}

}  // namespace

OpcodeHistogram extract_file(const fs::path& path) {
  if (!fs::exists(path))
    throw Error(ErrorCode::kMissingFile, "input not found: " + path.string());
  if (!fs::is_directory(path)) return extract_single(path);

  std::set<fs::path> files;  // sorted for a stable walk
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".dex" || ext == ".smali") files.insert(entry.path());
  }
  OpcodeHistogram total;
  for (const auto& f : files) total += extract_single(f);
  return total;
}

ExtractResult extract_corpus(const LabelManifest& manifest, int workers) {
  const std::size_t n = manifest.entries.size();
  std::vector<std::optional<OpcodeHistogram>> rows(n);
  std::vector<std::optional<Diagnostic>> errors(n);

#ifdef _OPENMP
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto& entry = manifest.entries[static_cast<std::size_t>(i)];
    try {
      rows[i] = extract_file(entry.path);
    } catch (const Error& e) {
      errors[i] = Diagnostic{e.offset(), e.what()};
    } catch (const std::exception& e) {
      errors[i] = Diagnostic{std::nullopt, e.what()};
    }
  }
  (void)workers;

  ExtractResult result{make_opcode_matrix(), {}};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& entry = manifest.entries[i];
    if (rows[i]) {
      result.matrix.append(entry.app_id, entry.label, histogram_row(*rows[i]));
    } else {
      result.failures.emplace_back(entry.app_id, *errors[i]);
    }
  }
  if (result.matrix.rows() == 0 && n > 0)
    throw Error(ErrorCode::kAllFilesFailed,
                "none of " + std::to_string(n) + " inputs could be parsed");
  if (n == 0)
    throw Error(ErrorCode::kAllFilesFailed, "manifest has no entries");
  return result;
}

SplitPair split(const FeatureMatrix& matrix, double ratio, std::uint64_t seed,
                bool stratified) {
  const std::size_t n = matrix.rows();
  if (n < 2) throw Error(ErrorCode::kTooFewRows, "split needs at least 2 rows");
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw Error(ErrorCode::kInvalidArgument, "ratio must be in (0, 1]");

  Rng rng(seed);
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  auto take = [&](std::vector<std::size_t> group) {
    rng.shuffle(group);
    const auto n_train = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(group.size())));
    train.insert(train.end(), group.begin(), group.begin() + n_train);
    test.insert(test.end(), group.begin() + n_train, group.end());
  };

  if (stratified) {
    std::vector<std::size_t> benign;
    std::vector<std::size_t> malware;
    for (std::size_t i = 0; i < n; ++i)
      (matrix.labels[i] == Label::kMalware ? malware : benign).push_back(i);
    if (benign.empty() || malware.empty())
      throw Error(ErrorCode::kTooFewRows,
                  "stratified split needs at least one row of each class");
    take(std::move(benign));
    take(std::move(malware));
  } else {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    take(std::move(all));
  }
  if (train.empty() || test.empty())
    throw Error(ErrorCode::kTooFewRows,
                "split leaves an empty " +
                    std::string(train.empty() ? "train" : "test") + " side");

  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  SplitPair out;
  out.train = matrix.select_rows(train);
  out.test = matrix.select_rows(test);
  out.train_indices = std::move(train);
  out.test_indices = std::move(test);
  out.seed = seed;
  out.ratio = ratio;
  return out;
}

std::string matrix_to_csv(const FeatureMatrix& matrix) {
  matrix.validate();
  std::string out = "app_id,label";
  for (const auto& name : matrix.feature_names) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    out += csv::quote(matrix.app_ids[r]);
    out += ',';
    out += label_name(matrix.labels[r]);
    for (double v : matrix.values.row(r)) {
      out += ',';
      out += csv::format_value(v);
    }
    out += '\n';
  }
  return out;
}

void save_matrix(const FeatureMatrix& matrix, const fs::path& path) {
  csv::write_file(path, matrix_to_csv(matrix));
}

FeatureMatrix matrix_from_csv(std::string_view text) {
  const auto lines = csv::lines(text);
  if (lines.empty())
    throw Error(ErrorCode::kSchemaMismatch, "missing header line");
  const auto header = csv::split_line(lines[0]);
  FeatureMatrix m = make_opcode_matrix();
  if (header.size() != 2 + kOpcodeCount || header[0] != "app_id" ||
      header[1] != "label")
    throw Error(ErrorCode::kSchemaMismatch,
                "expected app_id,label and 256 opcode columns, got " +
                    std::to_string(header.size()) + " columns");
  for (std::size_t c = 0; c < kOpcodeCount; ++c)
    if (header[c + 2] != m.feature_names[c])
      throw Error(ErrorCode::kSchemaMismatch,
                  "column " + std::to_string(c + 2) + " is '" + header[c + 2] +
                      "', expected " + m.feature_names[c]);

  bool all_integral = true;
  std::vector<double> row(kOpcodeCount);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = csv::split_line(lines[i]);
    if (fields.size() != 2 + kOpcodeCount)
      throw Error(ErrorCode::kSchemaMismatch,
                  "line " + std::to_string(i + 1) + " has " +
                      std::to_string(fields.size()) + " columns");
    for (std::size_t c = 0; c < kOpcodeCount; ++c) {
      const auto v = csv::parse_double(fields[c + 2]);
      if (!v)
        throw Error(ErrorCode::kSchemaMismatch,
                    "line " + std::to_string(i + 1) + ": bad number '" +
                        fields[c + 2] + "'");
      row[c] = *v;
      if (*v < 0.0 || std::floor(*v) != *v) all_integral = false;
    }
    m.append(fields[0], parse_label(fields[1]), row);
  }
  m.scale = all_integral ? Scale::kRawCounts : Scale::kRowNormalized;
  return m;
}

FeatureMatrix load_matrix(const fs::path& path) {
  std::string text;
  try {
    text = csv::read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  }
  return matrix_from_csv(text);
}

}  // namespace dexfreq
