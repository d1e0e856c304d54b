#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fluxgate/kernels.hpp"
#include "fluxgate/train_config.hpp"

namespace fluxgate {

/// Radial basis function network with an identity output layer:
///   output_o = sum_j w_oj * h_j(x),  h_j(x) = exp(-|x - c_j|^2 / r_j^2)
/// With Softmax hidden activation the h_j are normalized to sum to 1.
struct RbfNetModel {
  std::size_t dim = 0;
  std::size_t outputs = 0;
  std::vector<double> centers;  // row-major, center_count() x dim
  std::vector<double> radii;
  std::vector<double> weights;  // row-major, outputs x center_count()
  RbfActivation activation = RbfActivation::Gaussian;

  std::size_t center_count() const noexcept { return radii.size(); }
  std::span<const double> center(std::size_t j) const { return {centers.data() + j * dim, dim}; }

  bool operator==(const RbfNetModel&) const = default;
};

std::vector<double> rbfnet_hidden(const RbfNetModel& model, std::span<const double> x);
std::vector<double> rbfnet_forward(const RbfNetModel& model, std::span<const double> x);

/// out[1] - out[0] for two-output models, out[0] for single-output ones.
double rbfnet_decision(const RbfNetModel& model, std::span<const double> x);

/// k-means centers (cfg.centers of them), radii from the distance to the
/// nearest other center scaled by cfg.radius_scale, and output weights from
/// ridge-regularized least squares against one-hot class targets. A collapsed
/// clustering restarts with a derived seed up to cfg.max_restarts times
/// before throwing Error(DegenerateCenters).
RbfNetModel rbfnet_train(const LabeledData& data, const TrainConfig& cfg);

}  // namespace fluxgate
