#include "fluxgate/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "fluxgate/errors.hpp"
#include "fluxgate/train_config.hpp"

namespace fluxgate {

void LabeledData::add(std::span<const double> x, int label) {
  if (x.size() != dim_) {
    throw Error(ErrorCode::InvalidArgument, "sample dimension " + std::to_string(x.size()) +
                                                " does not match " + std::to_string(dim_));
  }
  if (label != -1 && label != 1) throw Error(ErrorCode::InvalidArgument, "labels must be -1 or +1");
  values_.insert(values_.end(), x.begin(), x.end());
  labels_.push_back(label);
}

bool LabeledData::has_both_classes() const noexcept {
  const bool neg = std::find(labels_.begin(), labels_.end(), -1) != labels_.end();
  const bool pos = std::find(labels_.begin(), labels_.end(), 1) != labels_.end();
  return neg && pos;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double gaussian_basis(double x, double c, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "radius must be positive");
  const double d = x - c;
  return std::exp(-(d * d) / (r * r));
}

double gaussian_basis(std::span<const double> x, std::span<const double> c, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::NonPositiveRadius, "radius must be positive");
  return std::exp(-squared_distance(x, c) / (r * r));
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  assert(a.size() == b.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double rbf_kernel(std::span<const double> x1, std::span<const double> x2, double gamma) noexcept {
  return std::exp(-gamma * squared_distance(x1, x2));
}

std::string_view to_string(KernelType type) noexcept {
  return type == KernelType::Linear ? "linear" : "rbf";
}

std::vector<double> gram_matrix(const LabeledData& data, const Kernel& kernel) {
  const std::size_t n = data.size();
  std::vector<double> gram(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double k = kernel(data.row(i), data.row(j));
      gram[i * n + j] = k;
      gram[j * n + i] = k;
    }
  }
  return gram;
}

void validate(const TrainConfig& cfg) {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be positive");
  };
  require(cfg.C > 0.0, "C");
  require(cfg.kernel.type == KernelType::Linear || cfg.kernel.gamma > 0.0, "gamma");
  require(cfg.tolerance > 0.0, "tolerance");
  require(cfg.max_passes > 0, "max_passes");
  require(cfg.learning_rate > 0.0, "learning_rate");
  require(cfg.epochs > 0, "epochs");
  require(cfg.batch_size > 0, "batch_size");
  require(cfg.centers > 0, "centers");
  require(cfg.radius_scale > 0.0, "radius_scale");
  require(cfg.ridge >= 0.0, "ridge");
  for (const auto width : cfg.hidden_sizes) require(width > 0, "hidden layer width");
}

}  // namespace fluxgate
