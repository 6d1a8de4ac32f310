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

#include "dexfreq/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace dexfreq {

namespace {

std::vector<double> column_means(const Matrix& x) {
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += row[c];
  }
  for (double& m : mean) m /= static_cast<double>(x.rows());
  return mean;
}

// Sample variance (n - 1 denominator).
std::vector<double> column_variances(const Matrix& x,
                                     const std::vector<double>& mean) {
  std::vector<double> var(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = row[c] - mean[c];
      var[c] += d * d;
    }
  }
  for (double& v : var) v /= static_cast<double>(x.rows() - 1);
  return var;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%02zu", prefix, i + 1);
  return buf;
}

std::string_view kind_name(ReducerKind k) {
  switch (k) {
    case ReducerKind::kVarianceTopK: return "variance-top-k";
    case ReducerKind::kPca: return "pca";
    case ReducerKind::kEncoder: return "encoder";
  }
  return "?";
}

}  // namespace

Reducer fit_variance_top_k(const FeatureMatrix& matrix, std::size_t k) {
  if (matrix.rows() < 2)
    throw Error(ErrorCode::kTooFewRows, "variance selection needs >= 2 rows");
  const std::size_t d = matrix.cols();
  k = std::min(k, d);

  Reducer r;
  r.kind = ReducerKind::kVarianceTopK;
  r.tag = "VT";
  r.input_dim = d;
  r.output_dim = k;
  r.column_variance =
      column_variances(matrix.values, column_means(matrix.values));

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r.column_variance[a] > r.column_variance[b];
  });
  r.selected_columns.assign(order.begin(),
                            order.begin() + static_cast<std::ptrdiff_t>(k));
  if (k > 0 && r.column_variance[r.selected_columns.front()] == 0.0)
    r.diagnostics.push_back(
        "all columns have zero variance; selected the lowest column indices");
  return r;
}

Reducer fit_pca(const FeatureMatrix& matrix, std::size_t n_components,
                bool standardize) {
  const std::size_t n = matrix.rows();
  const std::size_t d = matrix.cols();
  if (n < 2) throw Error(ErrorCode::kTooFewRows, "PCA needs >= 2 rows");
  if (n_components > d)
    throw Error(ErrorCode::kDimMismatch,
                "n_components " + std::to_string(n_components) +
                    " exceeds input width " + std::to_string(d));
  if (n_components > n)
    throw Error(ErrorCode::kTooFewRows,
                "n_components " + std::to_string(n_components) +
                    " exceeds row count " + std::to_string(n));

  Reducer r;
  r.kind = ReducerKind::kPca;
  r.tag = "PCA";
  r.input_dim = d;
  r.output_dim = n_components;
  r.mean = column_means(matrix.values);
  if (standardize) {
    const auto var = column_variances(matrix.values, r.mean);
    r.scale.resize(d);
    for (std::size_t c = 0; c < d; ++c)
      r.scale[c] = var[c] > 0.0 ? std::sqrt(var[c]) : 1.0;
  }

  EigenMatrix centered = to_eigen(matrix.values);
  for (Eigen::Index i = 0; i < centered.rows(); ++i)
    for (Eigen::Index c = 0; c < centered.cols(); ++c) {
      double v = centered(i, c) - r.mean[static_cast<std::size_t>(c)];
      if (standardize) v /= r.scale[static_cast<std::size_t>(c)];
      centered(i, c) = v;
    }
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::kInvalidArgument, "eigendecomposition failed");

  r.components = Matrix(n_components, d);
  r.explained_variance.resize(n_components);
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();
  for (std::size_t i = 0; i < n_components; ++i) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - i);
    r.explained_variance[i] = std::max(0.0, values(col));
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < static_cast<Eigen::Index>(d); ++j)
      if (std::abs(vectors(j, col)) > std::abs(vectors(arg, col))) arg = j;
    const double sign = vectors(arg, col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j)
      r.components(i, j) = sign * vectors(static_cast<Eigen::Index>(j), col);
  }
  return r;
}

Reducer fit_autoencoder(const FeatureMatrix& matrix,
                        AutoencoderVariant variant, std::uint64_t seed,
                        std::optional<std::size_t> epochs) {
  MlpSpec spec = autoencoder_spec(variant, matrix.cols(), seed);
  if (epochs) spec.epochs = *epochs;
  Reducer r;
  r.kind = ReducerKind::kEncoder;
  r.tag = std::string(autoencoder_name(variant));
  r.input_dim = matrix.cols();
  r.encoder = train_mlp(spec, matrix.values, matrix.values);
  r.encoder_layers = (spec.layer_count()) / 2;
  r.output_dim = spec.layer_sizes[r.encoder_layers];
  return r;
}

FeatureMatrix apply(const Reducer& reducer, const FeatureMatrix& matrix) {
  if (matrix.cols() != reducer.input_dim)
    throw Error(ErrorCode::kDimMismatch,
                "reducer expects " + std::to_string(reducer.input_dim) +
                    " columns, matrix has " + std::to_string(matrix.cols()));
  FeatureMatrix out;
  out.app_ids = matrix.app_ids;
  out.labels = matrix.labels;
  out.scale = Scale::kReduced;
  const std::size_t n = matrix.rows();
  const std::size_t k = reducer.output_dim;
  out.values = Matrix(n, k);

  switch (reducer.kind) {
    case ReducerKind::kVarianceTopK:
      for (std::size_t c : reducer.selected_columns)
        out.feature_names.push_back(matrix.feature_names[c]);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < k; ++j)
          out.values(r, j) = matrix.values(r, reducer.selected_columns[j]);
      break;
    case ReducerKind::kPca: {
      for (std::size_t j = 0; j < k; ++j)
        out.feature_names.push_back(numbered("pc", j));
      std::vector<double> x(reducer.input_dim);
      for (std::size_t r = 0; r < n; ++r) {
        const auto row = matrix.values.row(r);
        for (std::size_t c = 0; c < x.size(); ++c) {
          x[c] = row[c] - reducer.mean[c];
          if (!reducer.scale.empty()) x[c] /= reducer.scale[c];
        }
        for (std::size_t j = 0; j < k; ++j) {
          const auto comp = reducer.components.row(j);
          double s = 0.0;
          for (std::size_t c = 0; c < x.size(); ++c) s += x[c] * comp[c];
          out.values(r, j) = s;
        }
      }
      break;
    }
    case ReducerKind::kEncoder: {
      for (std::size_t j = 0; j < k; ++j)
        out.feature_names.push_back(numbered("ae", j));
      out.values = from_eigen(reducer.encoder->forward(
          to_eigen(matrix.values), reducer.encoder_layers));
      if (n == 0) out.values = Matrix(0, k);
      break;
    }
  }
  return out;
}

nlohmann::json reducer_to_json(const Reducer& r) {
  nlohmann::json doc;
  doc["format_version"] = kReducerFormatVersion;
  doc["kind"] = kind_name(r.kind);
  doc["tag"] = r.tag;
  doc["input_dim"] = r.input_dim;
  doc["output_dim"] = r.output_dim;
  switch (r.kind) {
    case ReducerKind::kVarianceTopK:
      doc["selected_columns"] = r.selected_columns;
      doc["column_variance"] = r.column_variance;
      break;
    case ReducerKind::kPca:
      doc["mean"] = r.mean;
      doc["scale"] = r.scale;
      doc["components"] = std::vector<double>(r.components.data().begin(),
                                              r.components.data().end());
      doc["explained_variance"] = r.explained_variance;
      break;
    case ReducerKind::kEncoder:
      doc["encoder_layers"] = r.encoder_layers;
      doc["autoencoder"] = r.encoder->to_json();
      break;
  }
  return doc;
}

Reducer reducer_from_json(const nlohmann::json& doc) {
  if (doc.at("format_version").get<int>() != kReducerFormatVersion)
    throw Error(ErrorCode::kSchemaMismatch, "unsupported reducer version");
  Reducer r;
  const auto kind = doc.at("kind").get<std::string>();
  r.tag = doc.at("tag").get<std::string>();
  r.input_dim = doc.at("input_dim").get<std::size_t>();
  r.output_dim = doc.at("output_dim").get<std::size_t>();
  if (kind == "variance-top-k") {
    r.kind = ReducerKind::kVarianceTopK;
    r.selected_columns =
        doc.at("selected_columns").get<std::vector<std::size_t>>();
    r.column_variance = doc.at("column_variance").get<std::vector<double>>();
    if (r.selected_columns.size() != r.output_dim)
      throw Error(ErrorCode::kSchemaMismatch, "selection size mismatch");
  } else if (kind == "pca") {
    r.kind = ReducerKind::kPca;
    r.mean = doc.at("mean").get<std::vector<double>>();
    r.scale = doc.at("scale").get<std::vector<double>>();
    r.explained_variance =
        doc.at("explained_variance").get<std::vector<double>>();
    const auto comps = doc.at("components").get<std::vector<double>>();
    if (comps.size() != r.input_dim * r.output_dim ||
        r.mean.size() != r.input_dim)
      throw Error(ErrorCode::kSchemaMismatch, "pca shape mismatch");
    r.components = Matrix(r.output_dim, r.input_dim);
    std::copy(comps.begin(), comps.end(), r.components.data().begin());
  } else if (kind == "encoder") {
    r.kind = ReducerKind::kEncoder;
    r.encoder_layers = doc.at("encoder_layers").get<std::size_t>();
    r.encoder = MlpModel::from_json(doc.at("autoencoder"));
  } else {
    throw Error(ErrorCode::kSchemaMismatch, "unknown reducer kind " + kind);
  }
  return r;
}

}  // namespace dexfreq
