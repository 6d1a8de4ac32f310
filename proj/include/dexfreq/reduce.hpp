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

#ifndef DEXFREQ_REDUCE_HPP_
#define DEXFREQ_REDUCE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "dexfreq/corpus.hpp"
#include "dexfreq/neural.hpp"

namespace dexfreq {

enum class ReducerKind : std::uint8_t { kVarianceTopK, kPca, kEncoder };

inline constexpr int kReducerFormatVersion = 1;

// A fitted transform from input_dim columns to output_dim columns.
struct Reducer {
  ReducerKind kind = ReducerKind::kVarianceTopK;
  std::string tag;  // "VT", "PCA", "AE-1L", "AE-3L"
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;

  // variance-top-k
  std::vector<std::size_t> selected_columns;
  std::vector<double> column_variance;  // of every input column

  // pca: score = ((x - mean) / scale) . components[i]
  std::vector<double> mean;
  std::vector<double> scale;  // empty unless standardized
  Matrix components;          // output_dim x input_dim, orthonormal rows
  std::vector<double> explained_variance;

  // encoder: first `encoder_layers` layers of a trained autoencoder
  std::optional<MlpModel> encoder;
  std::size_t encoder_layers = 0;

  std::vector<std::string> diagnostics;
};

// The k columns of largest sample variance, ties to the lower column.
// Throws Error{kTooFewRows} for fewer than two rows.
Reducer fit_variance_top_k(const FeatureMatrix& matrix, std::size_t k = 30);

// Centered (optionally standardized) PCA from the d x d sample covariance.
// Components are sorted by eigenvalue, descending; the largest-magnitude
// entry of each is made positive.
Reducer fit_pca(const FeatureMatrix& matrix, std::size_t n_components = 15,
                bool standardize = false);

// Trains AE-1L (d-64-d) or AE-3L (d-64-32-16-32-64-d) and keeps the encoder.
Reducer fit_autoencoder(const FeatureMatrix& matrix,
                        AutoencoderVariant variant, std::uint64_t seed,
                        std::optional<std::size_t> epochs = {});

// Row count, ids and labels carry through. Throws Error{kDimMismatch}.
FeatureMatrix apply(const Reducer& reducer, const FeatureMatrix& matrix);

nlohmann::json reducer_to_json(const Reducer& reducer);
Reducer reducer_from_json(const nlohmann::json& doc);

}  // namespace dexfreq

#endif  // DEXFREQ_REDUCE_HPP_
