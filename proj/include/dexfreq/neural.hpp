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

#ifndef DEXFREQ_NEURAL_HPP_
#define DEXFREQ_NEURAL_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "dexfreq/corpus.hpp"
#include "dexfreq/matrix.hpp"
#include "dexfreq/model.hpp"

namespace dexfreq {

enum class Activation : std::uint8_t { kElu, kSigmoid, kLinear };
enum class LossKind : std::uint8_t { kMse, kBinaryCrossEntropy };

std::string_view activation_name(Activation a);
std::string_view loss_name(LossKind l);

struct MlpSpec {
  std::vector<std::size_t> layer_sizes;  // input first, output last
  std::vector<Activation> activations;   // one per weight layer
  std::vector<double> dropout;           // per weight layer, on its output
  LossKind loss = LossKind::kMse;
  double learning_rate = 0.001;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;

  std::size_t layer_count() const { return layer_sizes.size() - 1; }
  // Throws Error{kShapeMismatch} if inconsistent.
  void validate() const;
};

using EigenMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EigenRow = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct DenseLayer {
  EigenMatrix weights;  // fan_in x fan_out
  EigenRow bias;        // 1 x fan_out
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when there is no validation split
  std::optional<double> train_acc;  // running, over the epoch's batches
  std::optional<double> val_acc;
};

struct MlpModel {
  MlpSpec spec;
  std::vector<DenseLayer> layers;
  std::vector<EpochRecord> history;

  // Inference through the first `n_layers` layers (all by default); dropout
  // is never applied here.
  EigenMatrix forward(const EigenMatrix& inputs,
                      std::size_t n_layers = SIZE_MAX) const;
  Matrix predict(const Matrix& inputs) const;

  nlohmann::json to_json() const;
  static MlpModel from_json(const nlohmann::json& doc);
};

// Seeded LeCun-uniform weights (limit sqrt(3 / fan_in)), zero biases.
MlpModel init_mlp(const MlpSpec& spec);

// Mini-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) with a seeded
// validation split, per-epoch shuffle and inverted dropout.
// Throws Error{kShapeMismatch} or Error{kNonFiniteLoss}.
MlpModel train_mlp(const MlpSpec& spec, const Matrix& inputs,
                   const Matrix& targets);

// Per-layer dropout multipliers (batch x fan_out, entries 0 or 1/(1-p)).
// An empty matrix for a layer means no dropout there.
using DropoutMasks = std::vector<EigenMatrix>;

struct Gradients {
  double loss = 0.0;
  std::vector<EigenMatrix> weights;
  std::vector<EigenRow> biases;
  EigenMatrix outputs;  // network output for the batch, dropout applied
};

// Mean loss over the batch and its gradient w.r.t. every parameter.
Gradients compute_gradients(const MlpModel& model, const EigenMatrix& inputs,
                            const EigenMatrix& targets,
                            const DropoutMasks* masks = nullptr);

double evaluate_loss(const MlpModel& model, const EigenMatrix& inputs,
                     const EigenMatrix& targets,
                     const DropoutMasks* masks = nullptr);

EigenMatrix to_eigen(const Matrix& m);
Matrix from_eigen(const EigenMatrix& m);

// `epoch,train_loss,val_loss[,train_acc,val_acc]`
std::string history_csv(const MlpModel& model);

enum class AutoencoderVariant : std::uint8_t { kAe1L, kAe3L };
enum class DnnVariant : std::uint8_t { kDnn2L, kDnn4L, kDnn7L };

std::string_view autoencoder_name(AutoencoderVariant v);
std::string_view dnn_name(DnnVariant v);

MlpSpec autoencoder_spec(AutoencoderVariant variant, std::size_t input_dim,
                         std::uint64_t seed);
MlpSpec dnn_spec(DnnVariant variant, std::size_t input_dim,
                 std::uint64_t seed);

// Sigmoid-output classifier; score is the network output.
class DnnModel final : public Model {
 public:
  explicit DnnModel(MlpModel mlp) : mlp_(std::move(mlp)) {}

  ModelKind kind() const override { return ModelKind::kDnn; }
  double score(std::span<const double> row) const override;
  std::vector<double> score_all(const Matrix& rows) const override;
  std::size_t input_dim() const override { return mlp_.spec.layer_sizes[0]; }
  nlohmann::json to_json() const override;

  const MlpModel& mlp() const { return mlp_; }

 private:
  MlpModel mlp_;
};

// The published DNN architectures with the input layer sized to the data.
std::unique_ptr<DnnModel> train_dnn(const FeatureMatrix& train,
                                    DnnVariant variant, std::uint64_t seed,
                                    std::optional<std::size_t> epochs = {});

}  // namespace dexfreq

#endif  // DEXFREQ_NEURAL_HPP_
