#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "fluxgate/errors.hpp"
#include "fluxgate/model.hpp"
#include "fluxgate/random.hpp"
#include "fluxgate/svm.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fluxgate {
namespace {

using testing::blobs;
using testing::padded;
using testing::brute_force_margin;
using testing::separable_planar_set;

TrainConfig linear_config(double C, double tolerance = 1e-6) {
  TrainConfig cfg;
  cfg.C = C;
  cfg.kernel = {KernelType::Linear, 0.0};
  cfg.tolerance = tolerance;
  cfg.max_passes = 2000;
  return cfg;
}

void expect_dual_feasible(const LabeledData& data, const SvmSolution& sol, double C) {
  double balance = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_GE(sol.alphas[i], 0.0);
    EXPECT_LE(sol.alphas[i], C);
    balance += sol.alphas[i] * data.label(i);
  }
  EXPECT_LE(std::abs(balance), 1e-6);
}

TEST(Svm, DualFeasibleAndKktOnBlobs) {
  for (const double C : {0.1, 1.0, 10.0, 100.0}) {
    for (const double gamma : {0.01, 0.125, 1.0}) {
      const auto data = blobs(300, 61);
      TrainConfig cfg;
      cfg.C = C;
      cfg.kernel.gamma = gamma;
      const auto sol = svm_solve(data, cfg);
      EXPECT_TRUE(sol.converged);
      expect_dual_feasible(data, sol, C);
      EXPECT_LE(svm_max_kkt_violation(data, cfg.kernel, C, sol), cfg.tolerance * 1.0001);
      const auto model = svm_model_from_solution(data, cfg, sol);
      for (const double a : model.alphas) {
        EXPECT_GT(a, 0.0);
        EXPECT_LE(a, C);
      }
    }
  }
}

TEST(Svm, LinearMarginMatchesBruteForceOracle) {
  Rng rng(62);
  for (int set = 0; set < 25; ++set) {
    const auto n = static_cast<std::size_t>(rng.between(6, 20));
    const auto planar = separable_planar_set(rng, n);
    const auto& pts = planar.points;
    const auto& labels = planar.labels;
    LabeledData data(8);
    for (std::size_t i = 0; i < n; ++i) data.add(padded({pts[i][0], pts[i][1]}), labels[i]);
    const auto cfg = linear_config(1e4, 1e-7);
    const auto model = svm_train(data, cfg);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(classify_decision(svm_decision(model, data.row(i))), labels[i]);
    }
    const auto w = svm_primal_weights(model);
    const double margin = 1.0 / std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    EXPECT_NEAR(margin, brute_force_margin(pts, labels), 1e-3) << "set " << set;
  }
}

LabeledData xor_data() {
  LabeledData data(8);
  data.add(padded({0, 0}), -1);
  data.add(padded({1, 1}), -1);
  data.add(padded({0, 1}), 1);
  data.add(padded({1, 0}), 1);
  return data;
}

TEST(Svm, XorNeedsTheKernel) {
  const auto data = xor_data();
  TrainConfig cfg;
  cfg.C = 10;
  cfg.kernel = {KernelType::Rbf, 1.0};
  const auto model = svm_train(data, cfg);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(classify_decision(svm_decision(model, data.row(i))), data.label(i));
  }

  // No line w.x + b separates the four points: sweep directions and offsets.
  std::size_t best = 0;
  for (int deg = 0; deg < 360; ++deg) {
    const double wx = std::cos(deg * 3.14159265358979 / 180), wy = std::sin(deg * 3.14159265358979 / 180);
    for (double b = -2.0; b <= 2.0; b += 0.01) {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < 4; ++i) {
        const auto x = data.row(i);
        correct += classify_decision(wx * x[0] + wy * x[1] + b) == data.label(i) ? 1 : 0;
      }
      best = std::max(best, correct);
    }
  }
  EXPECT_EQ(best, 3u);
}

TEST(Svm, ConflictingDuplicatesSitAtTheBound) {
  LabeledData data(8);
  data.add(padded({0.5, 0.5}), 1);
  data.add(padded({0.5, 0.5}), -1);
  data.add(padded({3, 3}), 1);
  data.add(padded({-3, -3}), -1);
  TrainConfig cfg;
  cfg.C = 2.0;
  const auto sol = svm_solve(data, cfg);
  expect_dual_feasible(data, sol, cfg.C);
  EXPECT_DOUBLE_EQ(sol.alphas[0], cfg.C);
  EXPECT_DOUBLE_EQ(sol.alphas[1], cfg.C);
}

TEST(Svm, FreeSupportVectorsSitOnTheMargin) {
  const auto data = blobs(200, 63);
  TrainConfig cfg;
  cfg.C = 1.0;
  cfg.tolerance = 1e-5;
  const auto model = svm_train(data, cfg);
  std::size_t free = 0;
  for (std::size_t k = 0; k < model.support_count(); ++k) {
    if (model.alphas[k] < model.C * (1 - 1e-9)) {
      ++free;
      EXPECT_NEAR(svm_decision(model, model.support_vector(k)), model.labels[k], 1e-4);
    }
  }
  EXPECT_GT(free, 0u);
}

TEST(Svm, SymmetricPairMidpointResolvesToFastFlux) {
  LabeledData data(8);
  data.add(padded({-1, 0}), -1);
  data.add(padded({1, 0}), 1);
  for (const auto type : {KernelType::Linear, KernelType::Rbf}) {
    TrainConfig cfg;
    cfg.kernel = {type, 0.5};
    const auto model = svm_train(data, cfg);
    const auto mid = padded({0, 0});
    EXPECT_EQ(svm_decision(model, mid), 0.0);
    EXPECT_EQ(classify_decision(svm_decision(model, mid)), -1);
  }
  EXPECT_EQ(classify_decision(0.0), -1);
  EXPECT_EQ(classify_decision(-0.0), -1);
  EXPECT_EQ(classify_decision(1e-300), 1);
}

TEST(Svm, DecisionMatchesNaiveDoubleLoop) {
  Rng rng(64);
  for (int trial = 0; trial < 50; ++trial) {
    SvmModel model;
    model.dim = 8;
    model.kernel = {rng.bernoulli(0.5) ? KernelType::Rbf : KernelType::Linear, rng.uniform(0.01, 2)};
    model.C = 10;
    model.bias = rng.uniform(-1, 1);
    const auto count = rng.between(1, 40);
    for (std::int64_t k = 0; k < count; ++k) {
      for (int d = 0; d < 8; ++d) model.support_vectors.push_back(rng.uniform(-1, 1));
      model.alphas.push_back(rng.uniform(0, 10));
      model.labels.push_back(rng.bernoulli(0.5) ? 1 : -1);
    }
    std::vector<double> x(8);
    for (auto& v : x) v = rng.uniform(-1, 1);
    double expected = model.bias;
    for (std::int64_t k = 0; k < count; ++k) {
      double kv = 0.0;
      for (int d = 0; d < 8; ++d) {
        const double a = model.support_vectors[k * 8 + d];
        kv += model.kernel.type == KernelType::Linear ? a * x[d] : (a - x[d]) * (a - x[d]);
      }
      if (model.kernel.type == KernelType::Rbf) kv = std::exp(-model.kernel.gamma * kv);
      expected += model.alphas[k] * model.labels[k] * kv;
    }
    EXPECT_NEAR(svm_decision(model, x), expected, 1e-12);
  }
}

TEST(Svm, DecisionInvariantUnderSupportVectorPermutation) {
  const auto data = blobs(200, 65);
  const auto model = svm_train(data, TrainConfig{});
  auto shuffled = model;
  std::vector<std::size_t> order(model.support_count());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(66);
  rng.shuffle(std::span<std::size_t>(order));
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto src = model.support_vector(order[k]);
    std::copy(src.begin(), src.end(), shuffled.support_vectors.begin() + static_cast<std::ptrdiff_t>(k * 8));
    shuffled.alphas[k] = model.alphas[order[k]];
    shuffled.labels[k] = model.labels[order[k]];
  }
  const auto probes = blobs(100, 67);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    EXPECT_NEAR(svm_decision(model, probes.row(i)), svm_decision(shuffled, probes.row(i)), 1e-12);
  }
}

TEST(Svm, DualObjectiveBeatsRandomFeasiblePerturbations) {
  const auto data = blobs(120, 68);
  TrainConfig cfg;
  cfg.C = 5.0;
  cfg.kernel.gamma = 0.5;
  cfg.tolerance = 1e-6;
  const auto sol = svm_solve(data, cfg);
  const double best = svm_dual_objective(data, cfg.kernel, sol.alphas);
  Rng rng(69);
  for (int trial = 0; trial < 1000; ++trial) {
    auto alphas = sol.alphas;
    double moved = 0.0;
    for (int step = 0; step < 3; ++step) {
      const auto i = rng.below(data.size()), j = rng.below(data.size());
      if (i == j) continue;
      // a_i += y_i d, a_j -= y_j d keeps sum a y fixed; clip d to the box.
      double d = rng.uniform(-0.5, 0.5);
      const double yi = data.label(i), yj = data.label(j);
      auto fits = [&](double t) {
        const double ai = alphas[i] + yi * t, aj = alphas[j] - yj * t;
        return ai >= 0 && ai <= cfg.C && aj >= 0 && aj <= cfg.C;
      };
      while (d != 0.0 && !fits(d)) d /= 2.0;
      if (std::abs(d) < 1e-12) continue;
      alphas[i] += yi * d;
      alphas[j] -= yj * d;
      moved += std::abs(d);
    }
    const double perturbed = svm_dual_objective(data, cfg.kernel, alphas);
    EXPECT_LE(perturbed, best + 2 * cfg.tolerance * moved + 1e-12);
  }
}

TEST(Svm, SameSeedSameModel) {
  const auto data = blobs(300, 70);
  EXPECT_EQ(svm_train(data, TrainConfig{}), svm_train(data, TrainConfig{}));
}

TEST(Svm, SingleClassDataRejected) {
  LabeledData data(8);
  data.add(padded({1}), 1);
  data.add(padded({2}), 1);
  try {
    svm_train(data, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClassData);
  }
}

TEST(Svm, ExhaustedBudgetReturnsFeasibleIterate) {
  const auto data = blobs(400, 71);
  TrainConfig cfg;
  cfg.C = 100;
  cfg.kernel.gamma = 10;
  cfg.tolerance = 1e-9;
  cfg.max_passes = 1;
  const auto sol = svm_solve(data, cfg);
  EXPECT_FALSE(sol.converged);
  expect_dual_feasible(data, sol, cfg.C);
}

TEST(Svm, InvalidConfigRejected) {
  const auto data = blobs(20, 72);
  TrainConfig cfg;
  cfg.C = 0;
  EXPECT_THROW(svm_train(data, cfg), Error);
  cfg = {};
  cfg.kernel.gamma = -1;
  EXPECT_THROW(svm_train(data, cfg), Error);
}

}  // namespace
}  // namespace fluxgate
