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

#ifndef DEXFREQ_FEATURES_HPP_
#define DEXFREQ_FEATURES_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dexfreq/corpus.hpp"

namespace dexfreq {

struct NormalizeResult {
  FeatureMatrix matrix;                  // row-normalized
  std::vector<std::size_t> zero_rows;    // rows left all-zero (diagnostic)
};

// Divides each row by its own total. Zero-total rows stay all-zero and are
// reported in `zero_rows`.
NormalizeResult normalize_rows(const FeatureMatrix& matrix);

struct ProminentOpcodeReport {
  std::vector<double> benign_mean;   // F_B per column
  std::vector<double> malware_mean;  // F_M per column
  std::vector<double> difference;    // D = |F_B - F_M|
  std::vector<std::size_t> ranking;  // all columns by D descending, ties low-first
  std::size_t k = 0;

  // First min(k, columns) entries of the ranking.
  std::vector<std::size_t> top() const;
};

// Class-mean difference ranking over a row-normalized matrix.
// Throws Error{kSingleClass} unless both classes are present.
ProminentOpcodeReport prominent_opcodes(const FeatureMatrix& normalized,
                                        std::size_t k);

// Columns whose every entry is zero, ascending.
std::vector<std::size_t> unused_opcodes(const FeatureMatrix& matrix);

enum class ClassFilter : std::uint8_t { kAll, kBenign, kMalware };
std::string_view class_filter_name(ClassFilter filter);

struct CorrelationPair {
  std::size_t a;  // a < b
  std::size_t b;
  double r;
  ClassFilter cls;
};

// Top `top_n` column pairs by Pearson r (descending, ties by (a, b)) over the
// rows selected by `filter`. Constant columns are excluded.
// Throws Error{kTooFewRows} when fewer than two rows are selected.
std::vector<CorrelationPair> correlation_pairs(const FeatureMatrix& matrix,
                                               ClassFilter filter,
                                               std::size_t top_n);

// Report writers: `opcode,mnemonic,F_B,F_M,D` (top-k rows only) and
// `op_a,op_b,r,class`.
std::string prominent_report_csv(const FeatureMatrix& matrix,
                                 const ProminentOpcodeReport& report);
std::string correlation_csv(const FeatureMatrix& matrix,
                            const std::vector<CorrelationPair>& pairs);

}  // namespace dexfreq

#endif  // DEXFREQ_FEATURES_HPP_
