#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fluxgate/kernels.hpp"
#include "fluxgate/train_config.hpp"

namespace fluxgate {

/// Trained soft-margin SVM. Only points with alpha > 0 are stored.
struct SvmModel {
  std::size_t dim = 0;
  Kernel kernel;
  double C = 0.0;
  double bias = 0.0;
  std::vector<double> support_vectors;  // row-major, support_count() x dim
  std::vector<double> alphas;
  std::vector<int> labels;
  bool converged = true;
  std::size_t iterations = 0;

  std::size_t support_count() const noexcept { return alphas.size(); }
  std::span<const double> support_vector(std::size_t k) const {
    return {support_vectors.data() + k * dim, dim};
  }

  bool operator==(const SvmModel&) const = default;
};

/// Full dual solution over the training set, before support-vector pruning.
struct SvmSolution {
  std::vector<double> alphas;
  double bias = 0.0;
  bool converged = true;
  std::size_t iterations = 0;
};

/// Maximizes the kernelized dual
///   J(a) = sum a_k - 1/2 sum_k sum_j a_k a_j y_k y_j k(x_k, x_j)
/// subject to sum a_k y_k = 0 and 0 <= a_k <= C by sequential minimal
/// optimization. Each step updates the maximal KKT-violating pair (the pair
/// with the largest error gap |E_i - E_j| among violators) and stops once the
/// gap falls under cfg.tolerance. When the budget runs out the last iterate
/// is returned with converged = false.
///
/// Throws Error(SingleClassData) unless both labels are present.
SvmSolution svm_solve(const LabeledData& data, const TrainConfig& cfg);

SvmModel svm_train(const LabeledData& data, const TrainConfig& cfg);

/// sum_k a_k y_k k(x_k, x) + b
double svm_decision(const SvmModel& model, std::span<const double> x);

/// Dual objective of an arbitrary multiplier vector on data.
double svm_dual_objective(const LabeledData& data, const Kernel& kernel,
                          std::span<const double> alphas);

/// Largest KKT violation of a dual solution over its training data,
/// measured on y_i f(x_i) against the bound-dependent target
/// (>= 1 at a = 0, == 1 for free a, <= 1 at a = C).
double svm_max_kkt_violation(const LabeledData& data, const Kernel& kernel, double C,
                             const SvmSolution& solution);

/// Prunes a solution to its support vectors.
SvmModel svm_model_from_solution(const LabeledData& data, const TrainConfig& cfg,
                                 const SvmSolution& solution);

/// For the linear kernel: the primal weight vector sum_k a_k y_k x_k.
std::vector<double> svm_primal_weights(const SvmModel& model);

}  // namespace fluxgate
