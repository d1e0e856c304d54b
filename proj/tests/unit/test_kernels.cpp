#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fluxgate/errors.hpp"
#include "fluxgate/kernels.hpp"
#include "fluxgate/random.hpp"

namespace fluxgate {
namespace {

TEST(Softmax, SymmetricPair) {
  const std::vector<double> a = {0.0, 0.0};
  EXPECT_EQ(softmax(a), (std::vector<double>{0.5, 0.5}));
}

TEST(Softmax, ShiftInvariantUniform) {
  for (const double c : {-700.0, -3.5, 0.0, 42.0, 700.0, 1e6}) {
    const std::vector<double> a = {c, c, c};
    for (const double p : softmax(a)) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  }
}

TEST(Softmax, ClosedFormPair) {
  const std::vector<double> a = {1.0, 2.0};
  const auto p = softmax(a);
  const double e = std::exp(1.0);
  EXPECT_NEAR(p[0], 1.0 / (1.0 + e), 1e-15);
  EXPECT_NEAR(p[1], e / (1.0 + e), 1e-15);
  EXPECT_NEAR(p[0], 0.26894, 5e-6);
  EXPECT_NEAR(p[1], 0.73106, 5e-6);
}

TEST(Softmax, SumsToOneForLargeInputs) {
  Rng rng(51);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> a(rng.between(1, 10));
    for (auto& v : a) v = rng.uniform(-700.0, 700.0);
    double sum = 0.0;
    for (const double p : softmax(a)) {
      EXPECT_GE(p, 0.0);
      EXPECT_TRUE(std::isfinite(p));
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(GaussianBasis, ScalarValues) {
  EXPECT_EQ(gaussian_basis(1.5, 1.5, 0.3), 1.0);
  EXPECT_NEAR(gaussian_basis(3.0, 1.0, 2.0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(gaussian_basis(2.0, 0.0, 1.0), 0.018316, 5e-7);
  EXPECT_NEAR(gaussian_basis(2.0, 0.0, 1.0), std::exp(-4.0), 1e-15);
}

TEST(GaussianBasis, RejectsNonPositiveRadius) {
  for (const double r : {0.0, -1.0, std::nan("")}) {
    try {
      gaussian_basis(1.0, 0.0, r);
      ADD_FAILURE() << r;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonPositiveRadius);
    }
  }
  const std::vector<double> x = {1.0, 2.0};
  EXPECT_THROW(gaussian_basis(x, x, 0.0), Error);
}

TEST(GaussianBasis, VectorFormInUnitInterval) {
  Rng rng(52);
  std::vector<double> x(8), c(8);
  for (int trial = 0; trial < 1000; ++trial) {
    for (auto& v : x) v = rng.uniform(-2, 2);
    for (auto& v : c) v = rng.uniform(-2, 2);
    const double g = gaussian_basis(x, c, rng.uniform(1.0, 3.0));
    EXPECT_GT(g, 0.0);
    EXPECT_LE(g, 1.0);
  }
  EXPECT_EQ(gaussian_basis(x, x, 0.5), 1.0);
}

TEST(RbfKernel, IdentityAndUnitDistance) {
  const std::vector<double> a = {0.3, -1.0, 2.0, 0, 0, 0, 0, 0};
  EXPECT_EQ(rbf_kernel(a, a, 0.7), 1.0);
  auto b = a;
  b[3] = 1.0;
  EXPECT_NEAR(rbf_kernel(a, b, 1.0), std::exp(-1.0), 1e-15);
}

TEST(RbfKernel, MatchesNaiveLoopAndIsSymmetric) {
  Rng rng(53);
  std::vector<double> a(8), b(8);
  for (int trial = 0; trial < 5000; ++trial) {
    for (auto& v : a) v = rng.uniform(-3, 3);
    for (auto& v : b) v = rng.uniform(-3, 3);
    const double gamma = std::exp(rng.uniform(-5, 2));
    double sq = 0.0;
    for (int d = 0; d < 8; ++d) sq += (a[d] - b[d]) * (a[d] - b[d]);
    const double k = rbf_kernel(a, b, gamma);
    EXPECT_NEAR(k, std::exp(-gamma * sq), 1e-14);
    EXPECT_EQ(k, rbf_kernel(b, a, gamma));
    EXPECT_GT(k, 0.0);
    EXPECT_LE(k, 1.0);
  }
}

double min_gram_eigenvalue(const LabeledData& data, const Kernel& kernel) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto g = gram_matrix(data, kernel);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      EXPECT_EQ(g[i * n + j], g[j * n + i]);
      m(i, j) = g[i * n + j];
    }
  }
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

TEST(GramMatrix, PositiveSemidefiniteOnRandomSamples) {
  Rng rng(54);
  for (int sample = 0; sample < 100; ++sample) {
    LabeledData data(8);
    std::vector<double> x(8);
    for (int i = 0; i < 50; ++i) {
      for (auto& v : x) v = rng.uniform(0, 1);
      data.add(x, i % 2 == 0 ? -1 : 1);
    }
    const Kernel rbf{KernelType::Rbf, std::exp(rng.uniform(std::log(0.01), std::log(10.0)))};
    EXPECT_GE(min_gram_eigenvalue(data, rbf), -1e-8);
    const Kernel linear{KernelType::Linear, 0};
    EXPECT_GE(min_gram_eigenvalue(data, linear), -1e-8);
  }
}

TEST(LabeledData, ValidatesRows) {
  LabeledData data(3);
  const std::vector<double> ok = {1, 2, 3}, short_row = {1, 2};
  EXPECT_THROW(data.add(short_row, 1), Error);
  EXPECT_THROW(data.add(ok, 0), Error);
  data.add(ok, -1);
  EXPECT_FALSE(data.has_both_classes());
  data.add(ok, 1);
  EXPECT_TRUE(data.has_both_classes());
}

}  // namespace
}  // namespace fluxgate
