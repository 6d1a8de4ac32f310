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

#ifndef DEXFREQ_MODEL_HPP_
#define DEXFREQ_MODEL_HPP_

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dexfreq/corpus.hpp"
#include "dexfreq/matrix.hpp"

namespace dexfreq {

enum class ModelKind : std::uint8_t { kDt, kRf, kKnn, kSvm, kAdaBoost, kDnn };

std::string_view model_kind_name(ModelKind kind);

inline constexpr int kModelFormatVersion = 1;

// A fitted binary classifier. predict() is exactly score() >= threshold().
class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual double score(std::span<const double> row) const = 0;
  // Batch scoring; overridden where a batched path is faster.
  virtual std::vector<double> score_all(const Matrix& rows) const;
  // 0.5 for fraction/probability scores, 0 for margin scores.
  virtual double threshold() const { return 0.5; }
  virtual std::size_t input_dim() const = 0;
  virtual nlohmann::json to_json() const = 0;

  Label predict(std::span<const double> row) const {
    return score(row) >= threshold() ? Label::kMalware : Label::kBenign;
  }
  std::vector<Label> predict_all(const Matrix& rows) const;
};

// Restores any model kind written by Model::to_json().
std::unique_ptr<Model> model_from_json(const nlohmann::json& doc);

}  // namespace dexfreq

#endif  // DEXFREQ_MODEL_HPP_
