#include "fluxgate/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include <json.hpp>

#include "binary_io.hpp"
#include "fluxgate/errors.hpp"
#include "fluxgate/random.hpp"

namespace fluxgate {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double accuracy_on(const Model& model, const LabeledData& data) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (classify_decision(decision_value(model, data.row(i))) == data.label(i)) ++correct;
  }
  return ratio(correct, data.size());
}

void normalize_importance(std::vector<double>& weights) {
  double total = 0.0;
  for (double& w : weights) {
    w = std::max(0.0, w);
    total += w;
  }
  for (double& w : weights) {
    w = total > 0.0 ? w / total : 1.0 / static_cast<double>(weights.size());
  }
}

json confusion_json(const Confusion& c) {
  return {{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}};
}

json config_json(ModelKind kind, const TrainConfig& cfg) {
  json j{{"seed", cfg.seed}};
  switch (kind) {
    case ModelKind::Svm:
      j["C"] = cfg.C;
      j["kernel"] = to_string(cfg.kernel.type);
      j["gamma"] = cfg.kernel.gamma;
      j["tolerance"] = cfg.tolerance;
      j["max_passes"] = cfg.max_passes;
      break;
    case ModelKind::Mlp:
      j["hidden_sizes"] = cfg.hidden_sizes;
      j["learning_rate"] = cfg.learning_rate;
      j["epochs"] = cfg.epochs;
      j["batch_size"] = cfg.batch_size;
      break;
    case ModelKind::RbfNet:
      j["centers"] = cfg.centers;
      j["activation"] = cfg.rbf_activation == RbfActivation::Gaussian ? "gaussian" : "softmax";
      j["radius_scale"] = cfg.radius_scale;
      j["ridge"] = cfg.ridge;
      break;
  }
  return j;
}

FoldReport run_fold(const FeatureDataset& data, const Fold& fold, std::size_t index, ModelKind kind,
                    const TrainConfig& cfg, const EvalOptions& options,
                    std::vector<double>& latencies) {
  FoldReport report;
  report.index = index;
  report.train_size = fold.train.size();
  report.test_size = fold.test.size();

  std::vector<FeatureArray> train_rows;
  train_rows.reserve(fold.train.size());
  for (const auto i : fold.train) train_rows.push_back(data.rows[i]);
  report.scaler = Scaler::fit(train_rows, options.scaler_mode);

  std::optional<Model> model;
  try {
    model = train_model(kind, scale_rows(data, report.scaler, fold.train), cfg);
  } catch (const Error& e) {
    report.failed = true;
    report.error = e.what();
    return report;
  }
  report.model_fingerprint = detail::crc32_of(serialize_model({*model, report.scaler}));

  latencies.reserve(fold.test.size());
  for (const auto i : fold.test) {
    const auto start = Clock::now();
    const auto x = report.scaler.apply(data.rows[i]);
    const double decision = decision_value(*model, x);
    const auto stop = Clock::now();
    latencies.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    report.confusion.add(data.labels[i], classify_decision(decision));
  }

  if (options.importance_repeats > 0) {
    report.importance = permutation_importance(*model, scale_rows(data, report.scaler, fold.test),
                                               options.importance_repeats, options.seed + index);
  }
  return report;
}

}  // namespace

std::vector<Fold> kfold_split(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (k < 2 || n < k) {
    throw Error(ErrorCode::TooFewExamples,
                std::to_string(n) + " examples cannot fill " + std::to_string(k) + " folds");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);

  Rng rng(seed);
  std::vector<Fold> folds(k);
  std::size_t position = 0;
  for (auto& [label, members] : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    for (const auto i : members) folds[position++ % k].test.push_back(i);
  }
  for (auto& fold : folds) {
    std::sort(fold.test.begin(), fold.test.end());
    fold.train.reserve(n - fold.test.size());
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (next < fold.test.size() && fold.test[next] == i) {
        ++next;
      } else {
        fold.train.push_back(i);
      }
    }
  }
  return folds;
}

void Confusion::add(int truth, int predicted) noexcept {
  const bool actual_flux = truth < 0;
  const bool flagged = predicted < 0;
  if (actual_flux && flagged) ++tp;
  else if (actual_flux) ++fn;
  else if (flagged) ++fp;
  else ++tn;
}

Confusion& Confusion::operator+=(const Confusion& other) noexcept {
  tp += other.tp;
  tn += other.tn;
  fp += other.fp;
  fn += other.fn;
  return *this;
}

double Confusion::accuracy_percent() const noexcept { return 100.0 * ratio(tp + tn, total()); }
double Confusion::fpr() const noexcept { return ratio(fp, fp + tn); }
double Confusion::fnr() const noexcept { return ratio(fn, fn + tp); }

LatencyStats summarize_latency(std::vector<double> samples_ms) {
  LatencyStats stats;
  stats.samples = samples_ms.size();
  if (samples_ms.empty()) return stats;
  std::sort(samples_ms.begin(), samples_ms.end());
  double sum = 0.0;
  for (const double v : samples_ms) sum += v;
  stats.mean_ms = sum / static_cast<double>(samples_ms.size());
  const auto rank = [&](double q) {
    const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples_ms.size())));
    return samples_ms[std::clamp<std::size_t>(r, 1, samples_ms.size()) - 1];
  };
  stats.median_ms = rank(0.5);
  stats.p95_ms = rank(0.95);
  return stats;
}

LabeledData scale_rows(const FeatureDataset& data, const Scaler& scaler,
                       std::span<const std::size_t> indices) {
  LabeledData out(kFeatureCount);
  out.reserve(indices.size());
  for (const auto i : indices) out.add(scaler.apply(data.rows[i]), data.labels[i]);
  return out;
}

EvaluationReport evaluate(const FeatureDataset& data, ModelKind kind, const TrainConfig& cfg,
                          const EvalOptions& options) {
  if (data.labels.size() != data.rows.size()) {
    throw Error(ErrorCode::InvalidArgument, "feature rows and labels differ in count");
  }
  for (const int label : data.labels) {
    if (label != -1 && label != 1) {
      throw Error(ErrorCode::InvalidArgument, "evaluation needs every row labeled -1 or +1");
    }
  }
  validate(cfg);

  const auto folds = kfold_split(data.labels, options.folds, options.seed);
  EvaluationReport report;
  report.kind = kind;
  report.config = cfg;
  report.folds = folds.size();
  report.seed = options.seed;
  report.per_fold.resize(folds.size());
  std::vector<std::vector<double>> latencies(folds.size());

  const std::size_t workers = std::clamp<std::size_t>(options.threads, 1, folds.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t f = next++; f < folds.size(); f = next++) {
      report.per_fold[f] = run_fold(data, folds[f], f, kind, cfg, options, latencies[f]);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  std::vector<double> all_latencies;
  std::vector<double> importance_sum;
  std::size_t importance_folds = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& fold = report.per_fold[f];
    if (fold.failed) {
      ++report.failed_folds;
      continue;
    }
    report.total += fold.confusion;
    all_latencies.insert(all_latencies.end(), latencies[f].begin(), latencies[f].end());
    if (!fold.importance.empty()) {
      importance_sum.resize(fold.importance.size(), 0.0);
      for (std::size_t i = 0; i < fold.importance.size(); ++i) importance_sum[i] += fold.importance[i];
      ++importance_folds;
    }
  }
  report.latency = summarize_latency(std::move(all_latencies));
  if (importance_folds > 0) {
    report.importance = std::move(importance_sum);
    normalize_importance(report.importance);
  }
  return report;
}

std::vector<double> permutation_importance(const Model& model, const LabeledData& held_out,
                                           std::size_t repeats, std::uint64_t seed) {
  const std::size_t dim = held_out.dim();
  std::vector<double> drops(dim, 0.0);
  if (held_out.empty() || repeats == 0) {
    normalize_importance(drops);
    return drops;
  }
  const double baseline = accuracy_on(model, held_out);
  Rng rng(seed);
  std::vector<double> column(held_out.size());
  for (std::size_t f = 0; f < dim; ++f) {
    double total_drop = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      LabeledData shuffled = held_out;
      for (std::size_t i = 0; i < column.size(); ++i) column[i] = held_out.row(i)[f];
      rng.shuffle(std::span<double>(column));
      for (std::size_t i = 0; i < column.size(); ++i) shuffled.row(i)[f] = column[i];
      total_drop += baseline - accuracy_on(model, shuffled);
    }
    drops[f] = total_drop / static_cast<double>(repeats);
  }
  normalize_importance(drops);
  return drops;
}

bool ranks_above(const EvaluationReport& a, const EvaluationReport& b) noexcept {
  if (a.accuracy_percent() != b.accuracy_percent()) return a.accuracy_percent() > b.accuracy_percent();
  if (a.fnr() != b.fnr()) return a.fnr() < b.fnr();
  return a.config.C < b.config.C;
}

GridResult grid_search(const FeatureDataset& data, ModelKind kind, std::span<const TrainConfig> grid,
                       const EvalOptions& options) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "grid search needs at least one point");
  GridResult result;
  result.grid.assign(grid.begin(), grid.end());
  for (const auto& cfg : grid) {
    result.reports.push_back(evaluate(data, kind, cfg, options));
    if (result.reports.size() > 1 && ranks_above(result.reports.back(), result.reports[result.best])) {
      result.best = result.reports.size() - 1;
    }
  }
  return result;
}

std::vector<TrainConfig> default_grid(ModelKind kind, const TrainConfig& base) {
  std::vector<TrainConfig> grid;
  switch (kind) {
    case ModelKind::Svm:
      for (const double c : {0.1, 1.0, 10.0, 100.0}) {
        for (const double gamma : {0.01, 0.1, 1.0, 10.0}) {
          TrainConfig cfg = base;
          cfg.C = c;
          cfg.kernel = Kernel{KernelType::Rbf, gamma};
          grid.push_back(cfg);
        }
      }
      break;
    case ModelKind::Mlp:
      for (const std::size_t width : {8, 16, 32}) {
        for (const double rate : {0.1, 0.5}) {
          TrainConfig cfg = base;
          cfg.hidden_sizes = {width};
          cfg.learning_rate = rate;
          grid.push_back(cfg);
        }
      }
      break;
    case ModelKind::RbfNet:
      for (const std::size_t centers : {10, 20, 40}) {
        for (const auto activation : {RbfActivation::Gaussian, RbfActivation::Softmax}) {
          TrainConfig cfg = base;
          cfg.centers = centers;
          cfg.rbf_activation = activation;
          grid.push_back(cfg);
        }
      }
      break;
  }
  return grid;
}

std::string classifier_name(ModelKind kind, const TrainConfig& cfg) {
  switch (kind) {
    case ModelKind::Svm:
      return cfg.kernel.type == KernelType::Rbf ? "SVM (RBF Kernel)" : "SVM (Linear Kernel)";
    case ModelKind::Mlp: return "MLP";
    case ModelKind::RbfNet:
      return cfg.rbf_activation == RbfActivation::Gaussian ? "RBF (Gaussian)" : "RBF (Softmax)";
  }
  return "unknown";
}

std::string report_json(const EvaluationReport& report, bool include_latency) {
  json j;
  j["classifier"] = classifier_name(report.kind, report.config);
  j["kind"] = to_string(report.kind);
  j["config"] = config_json(report.kind, report.config);
  j["folds"] = report.folds;
  j["seed"] = report.seed;
  j["accuracy"] = report.accuracy_percent();
  j["fpr"] = report.fpr();
  j["fnr"] = report.fnr();
  j["confusion"] = confusion_json(report.total);
  j["failed_folds"] = report.failed_folds;
  json folds = json::array();
  for (const auto& f : report.per_fold) {
    json fj{{"index", f.index},           {"failed", f.failed},
            {"train_size", f.train_size}, {"test_size", f.test_size},
            {"accuracy", f.confusion.accuracy_percent()},
            {"fpr", f.confusion.fpr()},   {"fnr", f.confusion.fnr()},
            {"confusion", confusion_json(f.confusion)},
            {"model_fingerprint", f.model_fingerprint}};
    if (f.failed) fj["error"] = f.error;
    folds.push_back(std::move(fj));
  }
  j["per_fold"] = std::move(folds);
  if (!report.importance.empty()) {
    json imp;
    for (std::size_t i = 0; i < report.importance.size(); ++i) {
      const std::string key = i < kFeatureCount ? std::string(feature_name(static_cast<Feature>(i)))
                                                : "x" + std::to_string(i);
      imp[key] = report.importance[i];
    }
    j["importance"] = std::move(imp);
  }
  if (include_latency) {
    j["latency_ms"] = {{"samples", report.latency.samples},
                       {"mean", report.latency.mean_ms},
                       {"median", report.latency.median_ms},
                       {"p95", report.latency.p95_ms}};
  }
  return j.dump();
}

std::string report_table(std::span<const EvaluationReport> reports) {
  std::size_t width = std::string_view("Classifier").size();
  for (const auto& r : reports) width = std::max(width, classifier_name(r.kind, r.config).size());
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %9s  %7s  %7s\n", static_cast<int>(width), "Classifier",
                "Accuracy", "FPR", "FNR");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-*s  %9.3f  %7.4f  %7.4f\n", static_cast<int>(width),
                  classifier_name(r.kind, r.config).c_str(), r.accuracy_percent(), r.fpr(), r.fnr());
    out += line;
  }
  return out;
}

}  // namespace fluxgate
