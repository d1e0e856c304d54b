#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fluxgate/kernels.hpp"
#include "fluxgate/train_config.hpp"

namespace fluxgate {

enum class Activation { Sigmoid, Softmax, Identity };

/// output = f(W x + b), W stored row-major as outputs x inputs.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::Sigmoid;

  bool operator==(const DenseLayer&) const = default;
};

/// Feed-forward network; the last layer is a two-way softmax whose outputs
/// are (P(fast flux), P(legitimate)).
struct MlpModel {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().inputs; }
  std::size_t parameter_count() const;

  bool operator==(const MlpModel&) const = default;
};

/// Xavier-uniform initialization: sigmoid hidden layers, softmax output.
MlpModel mlp_init(std::size_t input_dim, std::span<const std::size_t> hidden_sizes,
                  std::size_t outputs, std::uint64_t seed);

std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> x);

/// P(legitimate) - P(fast flux).
double mlp_decision(const MlpModel& model, std::span<const double> x);

/// Parameters in layer order, weights before biases.
std::vector<double> mlp_parameters(const MlpModel& model);
void mlp_set_parameters(MlpModel& model, std::span<const double> params);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // same layout as mlp_parameters
};

/// Mean cross-entropy over the selected rows (all rows when indices is empty)
/// and its gradient by backpropagation. Labels map -1 -> class 0, +1 -> class 1.
LossAndGradient mlp_loss_and_gradient(const MlpModel& model, const LabeledData& data,
                                      std::span<const std::size_t> indices = {});

double mlp_loss(const MlpModel& model, const LabeledData& data);

struct MlpTrainLog {
  std::vector<double> epoch_loss;      // full-training-set loss after each accepted epoch
  std::vector<double> learning_rates;  // rate used by each accepted epoch
  std::size_t rejected_epochs = 0;     // epochs rolled back by the halving check
};

/// Mini-batch gradient descent on cross-entropy. An epoch whose full-set loss
/// exceeds the previous one is rolled back and retried at half the learning
/// rate, so the recorded loss sequence is non-increasing.
///
/// Throws Error(SingleClassData), Error(InvalidArgument) for empty
/// hidden_sizes, Error(DivergedLoss) on a non-finite loss.
MlpModel mlp_train(const LabeledData& data, const TrainConfig& cfg, MlpTrainLog* log = nullptr);

}  // namespace fluxgate
