#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fluxgate/features.hpp"
#include "fluxgate/model.hpp"

namespace fluxgate {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified k-fold partition of labels.size() examples. Each class is
/// shuffled with the seed, then the classes are dealt round-robin into the
/// folds, so fold sizes and per-class counts each differ by at most one.
/// Index lists are sorted. Throws Error(TooFewExamples) unless k >= 2 and
/// n >= k.
std::vector<Fold> kfold_split(std::span<const int> labels, std::size_t k, std::uint64_t seed);

/// Confusion counts with fast flux (-1) as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  void add(int truth, int predicted) noexcept;
  Confusion& operator+=(const Confusion& other) noexcept;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  double accuracy_percent() const noexcept;
  double fpr() const noexcept;  // FP / (FP + TN)
  double fnr() const noexcept;  // FN / (FN + TP)

  bool operator==(const Confusion&) const = default;
};

struct LatencyStats {
  std::size_t samples = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

/// Nearest-rank percentiles over the samples.
LatencyStats summarize_latency(std::vector<double> samples_ms);

struct FoldReport {
  std::size_t index = 0;
  bool failed = false;
  std::string error;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  Confusion confusion;
  Scaler scaler;
  std::uint32_t model_fingerprint = 0;  // CRC-32 of the serialized fold model
  std::vector<double> importance;
};

struct EvaluationReport {
  ModelKind kind = ModelKind::Svm;
  TrainConfig config;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::vector<FoldReport> per_fold;
  std::size_t failed_folds = 0;
  Confusion total;  // summed over successful folds
  LatencyStats latency;
  std::vector<double> importance;  // mean over folds, renormalized; empty if disabled

  double accuracy_percent() const noexcept { return total.accuracy_percent(); }
  double fpr() const noexcept { return total.fpr(); }
  double fnr() const noexcept { return total.fnr(); }
};

struct EvalOptions {
  std::size_t folds = 10;
  std::uint64_t seed = 1;
  ScalerMode scaler_mode = ScalerMode::MinMax;
  std::size_t importance_repeats = 0;  // 0 disables permutation importance
  std::size_t threads = 1;             // folds evaluated concurrently
};

/// k-fold cross-validation. The scaler and model of fold i see only its
/// training rows. A fold whose training throws is marked failed and excluded
/// from the aggregate. Latency is wall-clock per test record for scaling plus
/// the decision function.
EvaluationReport evaluate(const FeatureDataset& data, ModelKind kind, const TrainConfig& cfg,
                          const EvalOptions& options = {});

/// Mean accuracy drop when each column of held_out is shuffled, floored at
/// zero and normalized to sum to one (uniform when every drop is zero).
std::vector<double> permutation_importance(const Model& model, const LabeledData& held_out,
                                           std::size_t repeats, std::uint64_t seed);

struct GridResult {
  std::vector<TrainConfig> grid;
  std::vector<EvaluationReport> reports;
  std::size_t best = 0;

  const EvaluationReport& best_report() const { return reports[best]; }
};

/// True when a ranks above b: higher accuracy, then lower FNR, then lower C.
bool ranks_above(const EvaluationReport& a, const EvaluationReport& b) noexcept;

/// Throws Error(InvalidArgument) for an empty grid.
GridResult grid_search(const FeatureDataset& data, ModelKind kind,
                       std::span<const TrainConfig> grid, const EvalOptions& options = {});

/// SVM: C in {0.1, 1, 10, 100} x gamma in {0.01, 0.1, 1, 10}.
/// MLP: hidden width x learning rate. RBF net: center count x activation.
std::vector<TrainConfig> default_grid(ModelKind kind, const TrainConfig& base = {});

/// Display name used in report tables, e.g. "SVM (RBF Kernel)".
std::string classifier_name(ModelKind kind, const TrainConfig& cfg);

/// Canonical JSON. Latency fields are omitted when include_latency is false.
std::string report_json(const EvaluationReport& report, bool include_latency = true);

/// Aligned text table with columns Classifier, Accuracy, FPR, FNR.
std::string report_table(std::span<const EvaluationReport> reports);

/// Scaled copy of the selected rows.
LabeledData scale_rows(const FeatureDataset& data, const Scaler& scaler,
                       std::span<const std::size_t> indices);

}  // namespace fluxgate
