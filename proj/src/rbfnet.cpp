#include "fluxgate/rbfnet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "fluxgate/errors.hpp"
#include "fluxgate/random.hpp"

namespace fluxgate {

namespace {

struct Clustering {
  std::vector<double> centers;  // k x dim
};

/// k-means++ seeding followed by Lloyd iterations. Returns nothing when the
/// clustering collapses (an empty cluster or coincident centers).
std::optional<Clustering> kmeans(const LabeledData& data, std::size_t k, std::size_t iterations,
                                 std::uint64_t seed) {
  const std::size_t n = data.size();
  const std::size_t dim = data.dim();
  Rng rng(seed);
  std::vector<double> centers;
  centers.reserve(k * dim);
  const auto center = [&](std::size_t j) { return std::span<const double>(centers.data() + j * dim, dim); };

  const std::size_t first = static_cast<std::size_t>(rng.below(n));
  centers.insert(centers.end(), data.row(first).begin(), data.row(first).end());
  std::vector<double> nearest(n);
  for (std::size_t t = 0; t < n; ++t) nearest[t] = squared_distance(data.row(t), center(0));
  for (std::size_t j = 1; j < k; ++j) {
    double total = 0.0;
    for (const double d : nearest) total += d;
    if (!(total > 0.0)) return std::nullopt;
    double pick = rng.uniform() * total;
    std::size_t chosen = n - 1;
    for (std::size_t t = 0; t < n; ++t) {
      pick -= nearest[t];
      if (pick < 0.0) {
        chosen = t;
        break;
      }
    }
    centers.insert(centers.end(), data.row(chosen).begin(), data.row(chosen).end());
    for (std::size_t t = 0; t < n; ++t) {
      nearest[t] = std::min(nearest[t], squared_distance(data.row(t), center(j)));
    }
  }

  std::vector<std::size_t> assignment(n, k);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (std::size_t it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double d = squared_distance(data.row(t), center(j));
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (assignment[t] != best) {
        assignment[t] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t t = 0; t < n; ++t) {
      const auto x = data.row(t);
      ++counts[assignment[t]];
      for (std::size_t d = 0; d < dim; ++d) sums[assignment[t] * dim + d] += x[d];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) return std::nullopt;
      for (std::size_t d = 0; d < dim; ++d) {
        centers[j * dim + d] = sums[j * dim + d] / static_cast<double>(counts[j]);
      }
    }
  }
  return Clustering{std::move(centers)};
}

/// Radius per center: distance to the nearest other center. A lone center
/// takes the RMS distance of the data to it.
std::optional<std::vector<double>> radii_for(const LabeledData& data, std::span<const double> centers,
                                             std::size_t k, double scale) {
  const std::size_t dim = data.dim();
  std::vector<double> radii(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto cj = centers.subspan(j * dim, dim);
    double best = std::numeric_limits<double>::infinity();
    if (k == 1) {
      double sum = 0.0;
      for (std::size_t t = 0; t < data.size(); ++t) sum += squared_distance(data.row(t), cj);
      best = sum / static_cast<double>(data.size());
      if (!(best > 0.0)) best = 1.0;
    }
    for (std::size_t l = 0; l < k; ++l) {
      if (l != j) best = std::min(best, squared_distance(cj, centers.subspan(l * dim, dim)));
    }
    if (!(best > 0.0)) return std::nullopt;
    radii[j] = scale * std::sqrt(best);
  }
  return radii;
}

}  // namespace

std::vector<double> rbfnet_hidden(const RbfNetModel& model, std::span<const double> x) {
  const std::size_t k = model.center_count();
  std::vector<double> h(k);
  if (model.activation == RbfActivation::Gaussian) {
    for (std::size_t j = 0; j < k; ++j) h[j] = gaussian_basis(x, model.center(j), model.radii[j]);
    return h;
  }
  // Normalized basis: softmax over -|x - c_j|^2 / r_j^2.
  for (std::size_t j = 0; j < k; ++j) {
    const double r = model.radii[j];
    h[j] = -squared_distance(x, model.center(j)) / (r * r);
  }
  return softmax(h);
}

std::vector<double> rbfnet_forward(const RbfNetModel& model, std::span<const double> x) {
  const auto h = rbfnet_hidden(model, x);
  const std::size_t k = model.center_count();
  std::vector<double> out(model.outputs, 0.0);
  for (std::size_t o = 0; o < model.outputs; ++o) {
    for (std::size_t j = 0; j < k; ++j) out[o] += model.weights[o * k + j] * h[j];
  }
  return out;
}

double rbfnet_decision(const RbfNetModel& model, std::span<const double> x) {
  const auto out = rbfnet_forward(model, x);
  return out.size() == 1 ? out[0] : out[1] - out[0];
}

RbfNetModel rbfnet_train(const LabeledData& data, const TrainConfig& cfg) {
  validate(cfg);
  if (!data.has_both_classes()) {
    throw Error(ErrorCode::SingleClassData, "RBF network training needs examples of both classes");
  }
  const std::size_t k = cfg.centers;
  if (k > data.size()) {
    throw Error(ErrorCode::InvalidArgument, "more centers than training examples");
  }

  RbfNetModel model;
  model.dim = data.dim();
  model.outputs = 2;
  model.activation = cfg.rbf_activation;

  bool placed = false;
  for (std::size_t attempt = 0; attempt <= cfg.max_restarts && !placed; ++attempt) {
    const std::uint64_t seed = cfg.seed + attempt * 0x9e3779b97f4a7c15ULL;
    auto clustering = kmeans(data, k, cfg.kmeans_iterations, seed);
    if (!clustering) continue;
    auto radii = radii_for(data, clustering->centers, k, cfg.radius_scale);
    if (!radii) continue;
    model.centers = std::move(clustering->centers);
    model.radii = std::move(*radii);
    placed = true;
  }
  if (!placed) {
    throw Error(ErrorCode::DegenerateCenters,
                "k-means collapsed after " + std::to_string(cfg.max_restarts + 1) + " attempts");
  }

  const auto n = static_cast<Eigen::Index>(data.size());
  const auto kk = static_cast<Eigen::Index>(k);
  Eigen::MatrixXd hidden(n, kk);
  Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(n, 2);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto h = rbfnet_hidden(model, data.row(static_cast<std::size_t>(t)));
    for (Eigen::Index j = 0; j < kk; ++j) hidden(t, j) = h[static_cast<std::size_t>(j)];
    targets(t, data.label(static_cast<std::size_t>(t)) > 0 ? 1 : 0) = 1.0;
  }
  Eigen::MatrixXd gram = hidden.transpose() * hidden;
  const double lambda = cfg.ridge * std::max(1.0, gram.trace() / static_cast<double>(k));
  gram.diagonal().array() += lambda;
  const Eigen::MatrixXd solved = gram.ldlt().solve(hidden.transpose() * targets);  // k x 2

  model.weights.resize(2 * k);
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t j = 0; j < k; ++j) {
      model.weights[o * k + j] = solved(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(o));
    }
  }
  return model;
}

}  // namespace fluxgate
