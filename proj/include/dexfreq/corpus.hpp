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

#ifndef DEXFREQ_CORPUS_HPP_
#define DEXFREQ_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dexfreq/dex.hpp"
#include "dexfreq/error.hpp"
#include "dexfreq/matrix.hpp"

namespace dexfreq {

enum class Label : std::uint8_t { kBenign = 0, kMalware = 1 };

std::string_view label_name(Label label);
// Accepts "malware" / "benign"; throws Error{kUnknownLabel} otherwise.
Label parse_label(std::string_view text);

enum class Scale : std::uint8_t { kRawCounts, kRowNormalized, kReduced };

struct FeatureMatrix {
  std::vector<std::string> app_ids;
  std::vector<Label> labels;
  std::vector<std::string> feature_names;
  Scale scale = Scale::kRawCounts;
  Matrix values;

  std::size_t rows() const { return labels.size(); }
  std::size_t cols() const { return feature_names.size(); }
  std::size_t count(Label label) const;
  bool has_both_classes() const {
    return count(Label::kBenign) > 0 && count(Label::kMalware) > 0;
  }

  // Throws Error{kDimMismatch} if any invariant is broken.
  void validate() const;

  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;
  void append(std::string app_id, Label label, std::span<const double> row);

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

// Empty matrix with the 256 opcode columns op_00..op_ff.
FeatureMatrix make_opcode_matrix();

// Row of raw counts from a histogram.
std::vector<double> histogram_row(const OpcodeHistogram& histogram);

struct ManifestEntry {
  std::string app_id;
  std::filesystem::path path;
  Label label;
};

struct LabelManifest {
  std::vector<ManifestEntry> entries;
};

// CSV with header `app_id,path,label`. Relative paths resolve against the
// manifest's directory.
LabelManifest load_manifest(const std::filesystem::path& path);

// Histogram for one input. `.dex` is parsed as DEX, `.smali` as smali text;
// a directory is walked recursively and all .dex/.smali files are summed.
OpcodeHistogram extract_file(const std::filesystem::path& path);

struct ExtractResult {
  FeatureMatrix matrix;
  std::vector<std::pair<std::string, Diagnostic>> failures;  // app_id, cause
};

// One raw-count row per manifest entry that parsed. Failed files are omitted
// and reported. Row order follows the manifest regardless of worker count.
// Throws Error{kAllFilesFailed} when no file succeeds.
ExtractResult extract_corpus(const LabelManifest& manifest, int workers = 0);

struct SplitPair {
  FeatureMatrix train;
  FeatureMatrix test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::uint64_t seed = 0;
  double ratio = 0.8;
};

// Per-class shuffled split; each class contributes round(ratio * n_c) rows
// to train. Both sides must be nonempty.
SplitPair split(const FeatureMatrix& matrix, double ratio, std::uint64_t seed,
                bool stratified = true);

// CSV `app_id,label,<feature names...>`. Integer-valued raw counts are written
// as integers, everything else with 17 significant digits.
void save_matrix(const FeatureMatrix& matrix, const std::filesystem::path& path);
std::string matrix_to_csv(const FeatureMatrix& matrix);

// Loads an opcode matrix; the header must be exactly app_id,label,op_00..op_ff.
// Scale is inferred: raw counts when every value is a non-negative integer.
FeatureMatrix load_matrix(const std::filesystem::path& path);
FeatureMatrix matrix_from_csv(std::string_view text);

}  // namespace dexfreq

#endif  // DEXFREQ_CORPUS_HPP_
