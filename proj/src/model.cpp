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

#include "dexfreq/model.hpp"

#include "dexfreq/classic.hpp"
#include "dexfreq/neural.hpp"

namespace dexfreq {

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDt: return "dt";
    case ModelKind::kRf: return "rf";
    case ModelKind::kKnn: return "knn";
    case ModelKind::kSvm: return "svm";
    case ModelKind::kAdaBoost: return "adaboost";
    case ModelKind::kDnn: return "dnn";
  }
  return "?";
}

std::vector<double> Model::score_all(const Matrix& rows) const {
  std::vector<double> out(rows.rows());
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r)
    out[static_cast<std::size_t>(r)] =
        score(rows.row(static_cast<std::size_t>(r)));
  return out;
}

std::vector<Label> Model::predict_all(const Matrix& rows) const {
  const auto scores = score_all(rows);
  std::vector<Label> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    out[i] = scores[i] >= threshold() ? Label::kMalware : Label::kBenign;
  return out;
}

std::unique_ptr<Model> model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion)
      throw Error(ErrorCode::kSchemaMismatch, "unsupported model version");
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "dt")
      return std::make_unique<DecisionTree>(DecisionTree::from_json(doc));
    if (kind == "rf") {
      std::vector<DecisionTree> trees;
      for (const auto& t : doc.at("trees"))
        trees.push_back(DecisionTree::from_json(t));
      return std::make_unique<RandomForest>(std::move(trees));
    }
    if (kind == "knn") {
      const auto k = doc.at("k").get<std::size_t>();
      const auto cols = doc.at("cols").get<std::size_t>();
      const auto flat = doc.at("rows").get<std::vector<double>>();
      std::vector<Label> labels;
      for (int l : doc.at("labels").get<std::vector<int>>())
        labels.push_back(l ? Label::kMalware : Label::kBenign);
      if (cols == 0 || flat.size() != labels.size() * cols || labels.size() < k)
        throw Error(ErrorCode::kSchemaMismatch, "knn shape mismatch");
      Matrix rows(labels.size(), cols);
      std::copy(flat.begin(), flat.end(), rows.data().begin());
      return std::make_unique<KnnModel>(std::move(rows), std::move(labels), k);
    }
    if (kind == "svm") {
      auto m = std::make_unique<LinearSvm>(
          doc.at("w").get<std::vector<double>>(), doc.at("b").get<double>());
      m->iterations = doc.value("iterations", std::size_t{0});
      m->converged = doc.value("converged", true);
      return m;
    }
    if (kind == "adaboost") {
      std::vector<Stump> stumps;
      const auto dim = doc.at("input_dim").get<std::size_t>();
      for (const auto& s : doc.at("stumps")) {
        Stump st;
        st.feature = s.at(0).get<std::size_t>();
        st.threshold = s.at(1).get<double>();
        st.h_left = s.at(2).get<double>();
        st.h_right = s.at(3).get<double>();
        st.weighted_error = s.at(4).get<double>();
        if (st.feature >= dim)
          throw Error(ErrorCode::kSchemaMismatch, "stump feature out of range");
        stumps.push_back(st);
      }
      return std::make_unique<AdaBoostModel>(
          std::move(stumps), doc.at("learning_rate").get<double>(), dim);
    }
    if (kind == "dnn")
      return std::make_unique<DnnModel>(MlpModel::from_json(doc.at("mlp")));
    throw Error(ErrorCode::kSchemaMismatch, "unknown model kind " + kind);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, e.what());
  }
}

}  // namespace dexfreq
