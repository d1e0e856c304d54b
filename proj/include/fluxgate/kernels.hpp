#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace fluxgate {

/// Row-major sample matrix with one ±1 label per row.
class LabeledData {
 public:
  LabeledData() = default;
  explicit LabeledData(std::size_t dim) : dim_(dim) {}

  void add(std::span<const double> x, int label);
  void reserve(std::size_t rows) {
    values_.reserve(rows * dim_);
    labels_.reserve(rows);
  }

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return labels_.empty(); }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * dim_, dim_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const noexcept { return labels_; }

  /// True when both -1 and +1 labels occur.
  bool has_both_classes() const noexcept;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::vector<int> labels_;
};

/// exp(a_i) / sum_j exp(a_j), evaluated after subtracting max(a).
std::vector<double> softmax(std::span<const double> logits);

/// exp(-(x - c)^2 / r^2). Throws Error(NonPositiveRadius) unless r > 0.
double gaussian_basis(double x, double c, double r);

/// Vector form: exp(-|x - c|^2 / r^2).
double gaussian_basis(std::span<const double> x, std::span<const double> c, double r);

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;
double dot(std::span<const double> a, std::span<const double> b) noexcept;

/// exp(-gamma * |x1 - x2|^2).
double rbf_kernel(std::span<const double> x1, std::span<const double> x2, double gamma) noexcept;

enum class KernelType { Linear, Rbf };

std::string_view to_string(KernelType type) noexcept;

struct Kernel {
  KernelType type = KernelType::Rbf;
  double gamma = 0.125;

  double operator()(std::span<const double> a, std::span<const double> b) const noexcept {
    return type == KernelType::Linear ? dot(a, b) : rbf_kernel(a, b, gamma);
  }

  bool operator==(const Kernel&) const = default;
};

/// Dense Gram matrix (row-major n x n) of the rows of data.
std::vector<double> gram_matrix(const LabeledData& data, const Kernel& kernel);

}  // namespace fluxgate
