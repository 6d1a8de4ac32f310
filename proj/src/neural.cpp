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

#include "dexfreq/neural.hpp"

#include <cmath>
#include <limits>

#include "csv.hpp"
#include "dexfreq/rng.hpp"

namespace dexfreq {

namespace {

constexpr double kEluAlpha = 1.0;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void apply_activation(Activation a, const EigenMatrix& z, EigenMatrix& out) {
  switch (a) {
    case Activation::kElu:
      out = z.unaryExpr([](double v) {
        return v > 0.0 ? v : kEluAlpha * std::expm1(v);
      });
      break;
    case Activation::kSigmoid:
      out = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
    case Activation::kLinear:
      out = z;
      break;
  }
}

// dA/dZ evaluated elementwise at z.
EigenMatrix activation_derivative(Activation a, const EigenMatrix& z) {
  switch (a) {
    case Activation::kElu:
      return z.unaryExpr(
          [](double v) { return v > 0.0 ? 1.0 : kEluAlpha * std::exp(v); });
    case Activation::kSigmoid:
      return z.unaryExpr([](double v) {
        const double s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 - s);
      });
    case Activation::kLinear:
      return EigenMatrix::Ones(z.rows(), z.cols());
  }
  return {};
}

struct ForwardPass {
  std::vector<EigenMatrix> pre;   // Z per layer
  std::vector<EigenMatrix> post;  // A per layer, post[0] = inputs
};

ForwardPass run_forward(const MlpModel& model, const EigenMatrix& inputs,
                        const DropoutMasks* masks) {
  ForwardPass fp;
  const std::size_t n = model.layers.size();
  fp.pre.resize(n);
  fp.post.resize(n + 1);
  fp.post[0] = inputs;
  for (std::size_t l = 0; l < n; ++l) {
    const auto& layer = model.layers[l];
    fp.pre[l].noalias() = fp.post[l] * layer.weights;
    fp.pre[l].rowwise() += layer.bias;
    apply_activation(model.spec.activations[l], fp.pre[l], fp.post[l + 1]);
    if (masks && l < masks->size() && (*masks)[l].size() > 0)
      fp.post[l + 1].array() *= (*masks)[l].array();
  }
  return fp;
}

double loss_value(const MlpModel& model, const ForwardPass& fp,
                  const EigenMatrix& targets) {
  const auto count = static_cast<double>(targets.size());
  if (model.spec.loss == LossKind::kBinaryCrossEntropy) {
    const EigenMatrix& z = fp.pre.back();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double v = z.data()[i];
      const double y = targets.data()[i];
      sum += std::max(v, 0.0) - v * y + std::log1p(std::exp(-std::abs(v)));
    }
    return sum / count;
  }
  return (fp.post.back() - targets).squaredNorm() / count;
}

void check_shapes(const MlpSpec& spec, Eigen::Index in_cols,
                  Eigen::Index target_cols, Eigen::Index in_rows,
                  Eigen::Index target_rows) {
  if (static_cast<std::size_t>(in_cols) != spec.layer_sizes.front())
    throw Error(ErrorCode::kShapeMismatch,
                "input width " + std::to_string(in_cols) + " != " +
                    std::to_string(spec.layer_sizes.front()));
  if (static_cast<std::size_t>(target_cols) != spec.layer_sizes.back())
    throw Error(ErrorCode::kShapeMismatch,
                "target width " + std::to_string(target_cols) + " != " +
                    std::to_string(spec.layer_sizes.back()));
  if (in_rows != target_rows)
    throw Error(ErrorCode::kShapeMismatch, "input/target row count differ");
}

double binary_accuracy(const EigenMatrix& out, const EigenMatrix& targets) {
  if (out.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    correct += ((out.data()[i] >= 0.5) == (targets.data()[i] >= 0.5)) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(out.size());
}

EigenMatrix gather(const EigenMatrix& m, std::span<const std::size_t> idx) {
  EigenMatrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) =
        m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kElu: return "elu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kLinear: return "linear";
  }
  return "?";
}

std::string_view loss_name(LossKind l) {
  return l == LossKind::kMse ? "mse" : "binary-cross-entropy";
}

void MlpSpec::validate() const {
  auto fail = [](const std::string& m) {
    throw Error(ErrorCode::kShapeMismatch, "invalid MlpSpec: " + m);
  };
  if (layer_sizes.size() < 2) fail("need at least input and output layers");
  for (std::size_t s : layer_sizes)
    if (s == 0) fail("layer size 0");
  if (activations.size() != layer_count()) fail("one activation per layer");
  if (dropout.size() != layer_count()) fail("one dropout entry per layer");
  for (double p : dropout)
    if (!(p >= 0.0 && p < 1.0)) fail("dropout must be in [0, 1)");
  if (dropout.back() != 0.0) fail("no dropout on the output layer");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (batch_size == 0) fail("batch_size must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    fail("validation_fraction must be in [0, 1)");
  if (loss == LossKind::kBinaryCrossEntropy &&
      activations.back() != Activation::kSigmoid)
    fail("binary cross-entropy requires a sigmoid output");
}

EigenMatrix to_eigen(const Matrix& m) {
  EigenMatrix out(static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
  std::copy(m.data().begin(), m.data().end(), out.data());
  return out;
}

Matrix from_eigen(const EigenMatrix& m) {
  Matrix out(static_cast<std::size_t>(m.rows()),
             static_cast<std::size_t>(m.cols()));
  std::copy(m.data(), m.data() + m.size(), out.data().begin());
  return out;
}

EigenMatrix MlpModel::forward(const EigenMatrix& inputs,
                              std::size_t n_layers) const {
  EigenMatrix a = inputs;
  EigenMatrix z;
  const std::size_t n = std::min(n_layers, layers.size());
  for (std::size_t l = 0; l < n; ++l) {
    z.noalias() = a * layers[l].weights;
    z.rowwise() += layers[l].bias;
    apply_activation(spec.activations[l], z, a);
  }
  return a;
}

Matrix MlpModel::predict(const Matrix& inputs) const {
  if (inputs.cols() != spec.layer_sizes.front())
    throw Error(ErrorCode::kShapeMismatch, "predict input width mismatch");
  return from_eigen(forward(to_eigen(inputs)));
}

nlohmann::json MlpModel::to_json() const {
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["layer_sizes"] = spec.layer_sizes;
  std::vector<std::string> acts;
  for (auto a : spec.activations) acts.emplace_back(activation_name(a));
  doc["activations"] = acts;
  doc["dropout"] = spec.dropout;
  doc["loss"] = loss_name(spec.loss);
  doc["learning_rate"] = spec.learning_rate;
  doc["epochs"] = spec.epochs;
  doc["batch_size"] = spec.batch_size;
  doc["validation_fraction"] = spec.validation_fraction;
  doc["seed"] = spec.seed;
  auto& ls = doc["layers"] = nlohmann::json::array();
  for (const auto& layer : layers) {
    ls.push_back({{"weights", std::vector<double>(
                                  layer.weights.data(),
                                  layer.weights.data() + layer.weights.size())},
                  {"bias", std::vector<double>(
                               layer.bias.data(),
                               layer.bias.data() + layer.bias.size())}});
  }
  return doc;
}

MlpModel MlpModel::from_json(const nlohmann::json& doc) {
  if (doc.at("format_version").get<int>() != kModelFormatVersion)
    throw Error(ErrorCode::kSchemaMismatch, "unsupported mlp format version");
  MlpModel m;
  m.spec.layer_sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
  for (const auto& a : doc.at("activations")) {
    const auto s = a.get<std::string>();
    m.spec.activations.push_back(s == "elu"       ? Activation::kElu
                                 : s == "sigmoid" ? Activation::kSigmoid
                                                  : Activation::kLinear);
  }
  m.spec.dropout = doc.at("dropout").get<std::vector<double>>();
  m.spec.loss = doc.at("loss").get<std::string>() == "mse"
                    ? LossKind::kMse
                    : LossKind::kBinaryCrossEntropy;
  m.spec.learning_rate = doc.at("learning_rate").get<double>();
  m.spec.epochs = doc.at("epochs").get<std::size_t>();
  m.spec.batch_size = doc.at("batch_size").get<std::size_t>();
  m.spec.validation_fraction = doc.at("validation_fraction").get<double>();
  m.spec.seed = doc.at("seed").get<std::uint64_t>();
  m.spec.validate();
  const auto& ls = doc.at("layers");
  if (ls.size() != m.spec.layer_count())
    throw Error(ErrorCode::kSchemaMismatch, "layer count mismatch");
  for (std::size_t l = 0; l < ls.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(m.spec.layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(m.spec.layer_sizes[l + 1]);
    const auto w = ls[l].at("weights").get<std::vector<double>>();
    const auto b = ls[l].at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != in * out ||
        static_cast<Eigen::Index>(b.size()) != out)
      throw Error(ErrorCode::kSchemaMismatch, "layer weight shape mismatch");
    DenseLayer layer;
    layer.weights = Eigen::Map<const EigenMatrix>(w.data(), in, out);
    layer.bias = Eigen::Map<const EigenRow>(b.data(), out);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

MlpModel init_mlp(const MlpSpec& spec) {
  spec.validate();
  MlpModel model;
  model.spec = spec;
  Rng rng(Rng::derive(spec.seed, 100));
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto in = static_cast<Eigen::Index>(spec.layer_sizes[l]);
    const auto out = static_cast<Eigen::Index>(spec.layer_sizes[l + 1]);
    const double limit = std::sqrt(3.0 / static_cast<double>(in));
    DenseLayer layer;
    layer.weights.resize(in, out);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
      layer.weights.data()[i] = rng.uniform(-limit, limit);
    layer.bias = EigenRow::Zero(out);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

Gradients compute_gradients(const MlpModel& model, const EigenMatrix& inputs,
                            const EigenMatrix& targets,
                            const DropoutMasks* masks) {
  check_shapes(model.spec, inputs.cols(), targets.cols(), inputs.rows(),
               targets.rows());
  const ForwardPass fp = run_forward(model, inputs, masks);
  const std::size_t n = model.layers.size();
  const auto count = static_cast<double>(targets.size());

  Gradients g;
  g.loss = loss_value(model, fp, targets);
  g.outputs = fp.post.back();
  g.weights.resize(n);
  g.biases.resize(n);

  EigenMatrix delta;  // dL/dZ for the current layer
  if (model.spec.loss == LossKind::kBinaryCrossEntropy) {
    delta = (fp.post.back() - targets) / count;
  } else {
    delta = (2.0 / count) * (fp.post.back() - targets);
    delta.array() *=
        activation_derivative(model.spec.activations.back(), fp.pre.back())
            .array();
  }
  for (std::size_t l = n; l-- > 0;) {
    g.weights[l].noalias() = fp.post[l].transpose() * delta;
    g.biases[l] = delta.colwise().sum();
    if (l == 0) break;
    EigenMatrix upstream = delta * model.layers[l].weights.transpose();
    if (masks && l - 1 < masks->size() && (*masks)[l - 1].size() > 0)
      upstream.array() *= (*masks)[l - 1].array();
    upstream.array() *=
        activation_derivative(model.spec.activations[l - 1], fp.pre[l - 1])
            .array();
    delta = std::move(upstream);
  }
  return g;
}

double evaluate_loss(const MlpModel& model, const EigenMatrix& inputs,
                     const EigenMatrix& targets, const DropoutMasks* masks) {
  check_shapes(model.spec, inputs.cols(), targets.cols(), inputs.rows(),
               targets.rows());
  return loss_value(model, run_forward(model, inputs, masks), targets);
}

MlpModel train_mlp(const MlpSpec& spec, const Matrix& inputs,
                   const Matrix& targets) {
  spec.validate();
  check_shapes(spec, static_cast<Eigen::Index>(inputs.cols()),
               static_cast<Eigen::Index>(targets.cols()),
               static_cast<Eigen::Index>(inputs.rows()),
               static_cast<Eigen::Index>(targets.rows()));
  const std::size_t n = inputs.rows();
  if (n == 0) throw Error(ErrorCode::kShapeMismatch, "no training samples");

  MlpModel model = init_mlp(spec);
  const EigenMatrix x = to_eigen(inputs);
  const EigenMatrix y = to_eigen(targets);

  Rng split_rng(Rng::derive(spec.seed, 0));
  const auto perm = split_rng.permutation(n);
  std::size_t n_val = static_cast<std::size_t>(
      std::floor(spec.validation_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = 0;
  std::vector<std::size_t> train_idx(perm.begin(),
                                     perm.end() - static_cast<std::ptrdiff_t>(n_val));
  const std::vector<std::size_t> val_idx(
      perm.end() - static_cast<std::ptrdiff_t>(n_val), perm.end());
  const EigenMatrix x_val = gather(x, val_idx);
  const EigenMatrix y_val = gather(y, val_idx);

  const bool classifier = spec.loss == LossKind::kBinaryCrossEntropy;
  const std::size_t L = model.layers.size();
  std::vector<EigenMatrix> m_w(L), v_w(L);
  std::vector<EigenRow> m_b(L), v_b(L);
  for (std::size_t l = 0; l < L; ++l) {
    m_w[l] = v_w[l] = EigenMatrix::Zero(model.layers[l].weights.rows(),
                                        model.layers[l].weights.cols());
    m_b[l] = v_b[l] = EigenRow::Zero(model.layers[l].bias.cols());
  }

  Rng shuffle_rng(Rng::derive(spec.seed, 1));
  Rng dropout_rng(Rng::derive(spec.seed, 2));
  std::uint64_t step = 0;
  DropoutMasks masks(L);

  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    shuffle_rng.shuffle(train_idx);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < train_idx.size();
         start += spec.batch_size) {
      const std::size_t end =
          std::min(start + spec.batch_size, train_idx.size());
      const std::span<const std::size_t> batch(train_idx.data() + start,
                                               end - start);
      const EigenMatrix xb = gather(x, batch);
      const EigenMatrix yb = gather(y, batch);
      for (std::size_t l = 0; l < L; ++l) {
        const double p = spec.dropout[l];
        if (p == 0.0) {
          masks[l].resize(0, 0);
          continue;
        }
        masks[l].resize(xb.rows(), model.layers[l].weights.cols());
        const double keep_scale = 1.0 / (1.0 - p);
        for (Eigen::Index i = 0; i < masks[l].size(); ++i)
          masks[l].data()[i] = dropout_rng.uniform() < p ? 0.0 : keep_scale;
      }

      const Gradients g = compute_gradients(model, xb, yb, &masks);
      if (!std::isfinite(g.loss))
        throw Error(ErrorCode::kNonFiniteLoss,
                    "loss became " + csv::format_double(g.loss) +
                        " at epoch " + std::to_string(epoch + 1) +
                        ", batch starting " + std::to_string(start));
      loss_sum += g.loss * static_cast<double>(batch.size());
      if (classifier)
        correct += static_cast<std::size_t>(std::llround(
            binary_accuracy(g.outputs, yb) * static_cast<double>(yb.size())));

      ++step;
      const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
      const double lr = spec.learning_rate;
      for (std::size_t l = 0; l < L; ++l) {
        m_w[l] = kAdamBeta1 * m_w[l] + (1.0 - kAdamBeta1) * g.weights[l];
        v_w[l] = kAdamBeta2 * v_w[l] +
                 (1.0 - kAdamBeta2) * g.weights[l].cwiseAbs2();
        model.layers[l].weights.array() -=
            lr * (m_w[l].array() / bc1) /
            ((v_w[l].array() / bc2).sqrt() + kAdamEps);
        m_b[l] = kAdamBeta1 * m_b[l] + (1.0 - kAdamBeta1) * g.biases[l];
        v_b[l] = kAdamBeta2 * v_b[l] +
                 (1.0 - kAdamBeta2) * g.biases[l].cwiseAbs2();
        model.layers[l].bias.array() -=
            lr * (m_b[l].array() / bc1) /
            ((v_b[l].array() / bc2).sqrt() + kAdamEps);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(train_idx.size());
    rec.val_loss = n_val > 0 ? evaluate_loss(model, x_val, y_val)
                             : std::numeric_limits<double>::quiet_NaN();
    if (classifier) {
      rec.train_acc = static_cast<double>(correct) /
                      static_cast<double>(train_idx.size());
      rec.val_acc = binary_accuracy(model.forward(x_val), y_val);
    }
    model.history.push_back(rec);
  }
  return model;
}

std::string history_csv(const MlpModel& model) {
  const bool acc = !model.history.empty() && model.history[0].train_acc;
  std::string out = "epoch,train_loss,val_loss";
  if (acc) out += ",train_acc,val_acc";
  out += '\n';
  for (const auto& r : model.history) {
    out += std::to_string(r.epoch) + ',' + csv::format_double(r.train_loss) +
           ',' + csv::format_double(r.val_loss);
    if (acc)
      out += ',' + csv::format_double(r.train_acc.value_or(0.0)) + ',' +
             csv::format_double(r.val_acc.value_or(0.0));
    out += '\n';
  }
  return out;
}

std::string_view autoencoder_name(AutoencoderVariant v) {
  return v == AutoencoderVariant::kAe1L ? "AE-1L" : "AE-3L";
}

std::string_view dnn_name(DnnVariant v) {
  switch (v) {
    case DnnVariant::kDnn2L: return "DNN-2L";
    case DnnVariant::kDnn4L: return "DNN-4L";
    case DnnVariant::kDnn7L: return "DNN-7L";
  }
  return "?";
}

MlpSpec autoencoder_spec(AutoencoderVariant variant, std::size_t input_dim,
                         std::uint64_t seed) {
  MlpSpec spec;
  if (variant == AutoencoderVariant::kAe1L) {
    spec.layer_sizes = {input_dim, 64, input_dim};
    spec.dropout = {0.0, 0.0};
  } else {
    spec.layer_sizes = {input_dim, 64, 32, 16, 32, 64, input_dim};
    // Dropout on the 64/32 hidden layers, none on the 16-node bottleneck.
    spec.dropout = {0.4, 0.4, 0.0, 0.4, 0.4, 0.0};
  }
  spec.activations.assign(spec.layer_count(), Activation::kElu);
  spec.loss = LossKind::kMse;
  spec.learning_rate = 0.001;
  spec.epochs = 100;
  spec.batch_size = 32;
  spec.validation_fraction = 0.2;
  spec.seed = seed;
  return spec;
}

MlpSpec dnn_spec(DnnVariant variant, std::size_t input_dim,
                 std::uint64_t seed) {
  MlpSpec spec;
  switch (variant) {
    case DnnVariant::kDnn2L:
      spec.layer_sizes = {input_dim, 64, 1};
      break;
    case DnnVariant::kDnn4L:
      spec.layer_sizes = {input_dim, 128, 32, 8, 1};
      break;
    case DnnVariant::kDnn7L:
      spec.layer_sizes = {input_dim, 128, 64, 32, 8, 4, 1};
      break;
  }
  const std::size_t layers = spec.layer_count();
  spec.activations.assign(layers, Activation::kElu);
  spec.activations.back() = Activation::kSigmoid;
  spec.dropout.assign(layers, 0.4);
  spec.dropout.back() = 0.0;
  spec.loss = LossKind::kBinaryCrossEntropy;
  spec.learning_rate = 0.001;
  spec.epochs = 200;
  spec.batch_size = 32;
  spec.validation_fraction = 0.2;
  spec.seed = seed;
  return spec;
}

double DnnModel::score(std::span<const double> row) const {
  EigenMatrix x(1, static_cast<Eigen::Index>(row.size()));
  std::copy(row.begin(), row.end(), x.data());
  return mlp_.forward(x)(0, 0);
}

std::vector<double> DnnModel::score_all(const Matrix& rows) const {
  const EigenMatrix out = mlp_.forward(to_eigen(rows));
  return std::vector<double>(out.data(), out.data() + out.size());
}

nlohmann::json DnnModel::to_json() const {
  return {{"format_version", kModelFormatVersion},
          {"kind", model_kind_name(kind())},
          {"mlp", mlp_.to_json()}};
}

std::unique_ptr<DnnModel> train_dnn(const FeatureMatrix& train,
                                    DnnVariant variant, std::uint64_t seed,
                                    std::optional<std::size_t> epochs) {
  MlpSpec spec = dnn_spec(variant, train.cols(), seed);
  if (epochs) spec.epochs = *epochs;
  Matrix targets(train.rows(), 1);
  for (std::size_t r = 0; r < train.rows(); ++r)
    targets(r, 0) = train.labels[r] == Label::kMalware ? 1.0 : 0.0;
  return std::make_unique<DnnModel>(train_mlp(spec, train.values, targets));
}

}  // namespace dexfreq
