#include "fluxgate/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>

#include "fluxgate/errors.hpp"

namespace fluxgate {

namespace {

constexpr double kTau = 1e-12;

/// Rows of Q (Q_ij = y_i y_j k(x_i, x_j)) with least-recently-used eviction.
class KernelRowCache {
 public:
  KernelRowCache(const LabeledData& data, const Kernel& kernel, std::size_t budget_bytes)
      : data_(data), kernel_(kernel), rows_(data.size()), where_(data.size()) {
    const std::size_t row_bytes = std::max<std::size_t>(1, data.size() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
  }

  const std::vector<double>& row(std::size_t i) {
    auto& r = rows_[i];
    if (!r.empty()) {
      lru_.splice(lru_.begin(), lru_, where_[i]);
      return r;
    }
    if (lru_.size() >= capacity_) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      std::vector<double>().swap(rows_[victim]);
    }
    const std::size_t n = data_.size();
    r.resize(n);
    const auto xi = data_.row(i);
    const int yi = data_.label(i);
    for (std::size_t t = 0; t < n; ++t) {
      r[t] = static_cast<double>(yi * data_.label(t)) * kernel_(xi, data_.row(t));
    }
    lru_.push_front(i);
    where_[i] = lru_.begin();
    return r;
  }

 private:
  const LabeledData& data_;
  Kernel kernel_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::list<std::size_t> lru_;
  std::size_t capacity_ = 2;
};

void check_trainable(const LabeledData& data, const TrainConfig& cfg) {
  validate(cfg);
  if (data.size() < 2 || !data.has_both_classes()) {
    throw Error(ErrorCode::SingleClassData, "SVM training needs examples of both classes");
  }
}

}  // namespace

SvmSolution svm_solve(const LabeledData& data, const TrainConfig& cfg) {
  check_trainable(data, cfg);
  const std::size_t n = data.size();
  const double C = cfg.C;
  const auto y = [&](std::size_t t) { return static_cast<double>(data.label(t)); };

  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  std::vector<double> diag(n);
  for (std::size_t t = 0; t < n; ++t) diag[t] = cfg.kernel(data.row(t), data.row(t));

  KernelRowCache cache(data, cfg.kernel, cfg.cache_mb << 20);
  const auto in_up = [&](std::size_t t) {
    return (y(t) > 0 && alpha[t] < C) || (y(t) < 0 && alpha[t] > 0);
  };
  const auto in_low = [&](std::size_t t) {
    return (y(t) > 0 && alpha[t] > 0) || (y(t) < 0 && alpha[t] < C);
  };

  const std::size_t budget = cfg.max_passes * std::max<std::size_t>(n, 1000);
  SvmSolution solution;
  solution.converged = false;
  std::size_t iter = 0;
  for (; iter < budget; ++iter) {
    // Maximal violating pair: i maximizes -y G over I_up, j minimizes it over I_low.
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y(t) * grad[t];
      if (in_up(t) && v > m_up) {
        m_up = v;
        i = t;
      }
      if (in_low(t) && v < m_low) {
        m_low = v;
        j = t;
      }
    }
    if (i == n || j == n || m_up - m_low < cfg.tolerance) {
      solution.converged = true;
      break;
    }

    const auto& qi = cache.row(i);
    const auto& qj = cache.row(j);
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];

    if (y(i) != y(j)) {
      double quad = diag[i] + diag[j] + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = diag[i] + diag[j] - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double di = alpha[i] - old_ai;
    const double dj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * di + qj[t] * dj;
  }
  solution.iterations = iter;

  // Bias from the free multipliers, else the midpoint of the feasible interval.
  double upper = std::numeric_limits<double>::infinity();
  double lower = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y(t) * grad[t];
    if (alpha[t] >= C) {
      if (y(t) < 0) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else if (alpha[t] <= 0.0) {
      if (y(t) > 0) upper = std::min(upper, yg);
      else lower = std::max(lower, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : (upper + lower) / 2.0;
  solution.bias = -rho;
  solution.alphas = std::move(alpha);
  return solution;
}

SvmModel svm_model_from_solution(const LabeledData& data, const TrainConfig& cfg,
                                 const SvmSolution& solution) {
  SvmModel model;
  model.dim = data.dim();
  model.kernel = cfg.kernel;
  model.C = cfg.C;
  model.bias = solution.bias;
  model.converged = solution.converged;
  model.iterations = solution.iterations;
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (solution.alphas[t] <= 0.0) continue;
    const auto x = data.row(t);
    model.support_vectors.insert(model.support_vectors.end(), x.begin(), x.end());
    model.alphas.push_back(solution.alphas[t]);
    model.labels.push_back(data.label(t));
  }
  return model;
}

SvmModel svm_train(const LabeledData& data, const TrainConfig& cfg) {
  return svm_model_from_solution(data, cfg, svm_solve(data, cfg));
}

double svm_decision(const SvmModel& model, std::span<const double> x) {
  double sum = 0.0;
  for (std::size_t k = 0; k < model.support_count(); ++k) {
    sum += model.alphas[k] * model.labels[k] * model.kernel(model.support_vector(k), x);
  }
  return sum + model.bias;
}

double svm_dual_objective(const LabeledData& data, const Kernel& kernel,
                          std::span<const double> alphas) {
  const std::size_t n = data.size();
  double linear = 0.0;
  double quadratic = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    linear += alphas[k];
    if (alphas[k] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (alphas[j] == 0.0) continue;
      quadratic += alphas[k] * alphas[j] * data.label(k) * data.label(j) *
                   kernel(data.row(k), data.row(j));
    }
  }
  return linear - 0.5 * quadratic;
}

double svm_max_kkt_violation(const LabeledData& data, const Kernel& kernel, double C,
                             const SvmSolution& solution) {
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double f = solution.bias;
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (solution.alphas[k] > 0.0) {
        f += solution.alphas[k] * data.label(k) * kernel(data.row(k), data.row(i));
      }
    }
    const double margin = data.label(i) * f;
    const double a = solution.alphas[i];
    double violation = 0.0;
    if (a <= 0.0) violation = std::max(0.0, 1.0 - margin);
    else if (a >= C) violation = std::max(0.0, margin - 1.0);
    else violation = std::abs(margin - 1.0);
    worst = std::max(worst, violation);
  }
  return worst;
}

std::vector<double> svm_primal_weights(const SvmModel& model) {
  std::vector<double> w(model.dim, 0.0);
  for (std::size_t k = 0; k < model.support_count(); ++k) {
    const auto sv = model.support_vector(k);
    for (std::size_t d = 0; d < model.dim; ++d) w[d] += model.alphas[k] * model.labels[k] * sv[d];
  }
  return w;
}

}  // namespace fluxgate
