#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fluxgate/kernels.hpp"

namespace fluxgate {

enum class RbfActivation { Gaussian, Softmax };

/// Hyperparameters shared by the three classifier families. Fields that a
/// family does not use are ignored by it.
struct TrainConfig {
  // SVM
  double C = 10.0;
  Kernel kernel{KernelType::Rbf, 0.125};
  double tolerance = 1e-3;
  std::size_t max_passes = 200;  // SMO budget: max_passes * n pair updates
  std::size_t cache_mb = 128;

  std::uint64_t seed = 1;

  // MLP
  std::vector<std::size_t> hidden_sizes{16};
  double learning_rate = 0.5;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;

  // RBF network
  std::size_t centers = 20;
  RbfActivation rbf_activation = RbfActivation::Gaussian;
  double radius_scale = 1.0;
  double ridge = 1e-8;
  std::size_t kmeans_iterations = 100;
  std::size_t max_restarts = 5;

  bool operator==(const TrainConfig&) const = default;
};

/// Throws Error(InvalidArgument) when a positive-typed field is not positive.
void validate(const TrainConfig& cfg);

}  // namespace fluxgate
