#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fluxgate/censys_store.hpp"
#include "fluxgate/dns_ingest.hpp"
#include "fluxgate/errors.hpp"
#include "fluxgate/eval.hpp"
#include "fluxgate/features.hpp"
#include "fluxgate/geo_store.hpp"
#include "fluxgate/line_source.hpp"
#include "fluxgate/model.hpp"
#include "fluxgate/pipeline.hpp"
#include "fluxgate/synth.hpp"

namespace fs = std::filesystem;
using namespace fluxgate;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

void print_ingest(const char* what, std::size_t entries, const IngestStats& stats) {
  std::cerr << what << ": " << entries << " entries from " << stats.lines << " lines, "
            << stats.malformed << " malformed";
  if (!stats.malformed_lines.empty()) {
    std::cerr << " (lines";
    for (const auto line : stats.malformed_lines) std::cerr << ' ' << line;
    std::cerr << (stats.malformed > stats.malformed_lines.size() ? " ...)" : ")");
  }
  std::cerr << '\n';
}

/// Opens a store given either a compiled image or a raw source file.
ScanStore open_scan(const fs::path& path) { return ScanStore::open(path); }
GeoStore open_geo(const fs::path& path) { return GeoStore::open(path); }

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  if (path == "-") {
    for_each_line(std::cin, [&](std::string_view l) { lines.emplace_back(l); });
  } else {
    for_each_line(path, [&](std::string_view l) { lines.emplace_back(l); });
  }
  return lines;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  return out;
}

FeatureDataset load_features(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_feature_csv(in);
}

/// Drops rows without a known label.
FeatureDataset labeled_only(const FeatureDataset& data, std::size_t& dropped) {
  FeatureDataset out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] == 0) continue;
    out.rows.push_back(data.rows[i]);
    out.labels.push_back(data.labels[i]);
  }
  dropped = data.size() - out.size();
  return out;
}

struct TrainFlags {
  std::string scaler = "minmax";
  std::string kernel = "rbf";
  std::string activation = "gaussian";
  std::string hidden;
  TrainConfig cfg;

  void attach(CLI::App* cmd) {
    cmd->add_option("--C", cfg.C, "SVM box constraint")->capture_default_str();
    cmd->add_option("--gamma", cfg.kernel.gamma, "RBF kernel width")->capture_default_str();
    cmd->add_option("--kernel", kernel, "SVM kernel")->check(CLI::IsMember({"rbf", "linear"}))->capture_default_str();
    cmd->add_option("--tolerance", cfg.tolerance, "SMO KKT tolerance")->capture_default_str();
    cmd->add_option("--max-passes", cfg.max_passes, "SMO iteration budget multiplier")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "training seed")->capture_default_str();
    cmd->add_option("--hidden", hidden, "MLP hidden widths, comma separated (default 16)");
    cmd->add_option("--epochs", cfg.epochs, "MLP epochs")->capture_default_str();
    cmd->add_option("--lr", cfg.learning_rate, "MLP learning rate")->capture_default_str();
    cmd->add_option("--batch", cfg.batch_size, "MLP mini-batch size")->capture_default_str();
    cmd->add_option("--centers", cfg.centers, "RBF network centers")->capture_default_str();
    cmd->add_option("--activation", activation, "RBF network hidden activation")
        ->check(CLI::IsMember({"gaussian", "softmax"}))
        ->capture_default_str();
    cmd->add_option("--scaler", scaler, "feature scaling")
        ->check(CLI::IsMember({"minmax", "zscore", "none"}))
        ->capture_default_str();
  }

  TrainConfig resolve() const {
    TrainConfig out = cfg;
    out.kernel.type = kernel == "linear" ? KernelType::Linear : KernelType::Rbf;
    out.rbf_activation = activation == "softmax" ? RbfActivation::Softmax : RbfActivation::Gaussian;
    if (!hidden.empty()) {
      out.hidden_sizes.clear();
      std::stringstream ss(hidden);
      std::string part;
      while (std::getline(ss, part, ',')) {
        const auto width = std::stoul(part);
        out.hidden_sizes.push_back(width);
      }
    }
    validate(out);
    return out;
  }

  ScalerMode scaler_mode() const { return scaler == "zscore" ? ScalerMode::ZScore : ScalerMode::MinMax; }
};

bool is_training_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyTrainingSet:
    case ErrorCode::SingleClassData:
    case ErrorCode::DivergedLoss:
    case ErrorCode::DegenerateCenters:
    case ErrorCode::TooFewExamples:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluxgate: fast-flux domain detection from single DNS responses"};
  app.require_subcommand(1);

  // ingest-censys / ingest-geo
  fs::path ingest_file, ingest_out;
  bool ingest_strict = false;
  auto* ingest_censys = app.add_subcommand("ingest-censys", "Compile a scan snapshot (JSON lines, optionally .gz)");
  auto* ingest_geo = app.add_subcommand("ingest-geo", "Compile an IP range database (TSV)");
  for (auto* cmd : {ingest_censys, ingest_geo}) {
    cmd->add_option("FILE", ingest_file, "source file")->required();
    cmd->add_option("--out", ingest_out, "compiled store image");
    cmd->add_flag("--strict", ingest_strict, "fail on the first malformed line");
  }

  // extract
  fs::path obs_path, censys_path, geo_path, csv_out;
  std::size_t threshold = kDefaultSuspiciousThreshold;
  bool extract_all = false;
  auto* extract_cmd = app.add_subcommand("extract", "Compute feature vectors for labeled observations");
  extract_cmd->add_option("--obs", obs_path, "observations (JSON lines)")->required();
  extract_cmd->add_option("--censys", censys_path, "scan store or snapshot")->required();
  extract_cmd->add_option("--geo", geo_path, "geo store or TSV")->required();
  extract_cmd->add_option("--out", csv_out, "feature CSV")->required();
  extract_cmd->add_option("--threshold", threshold, "minimum A records")->capture_default_str();
  extract_cmd->add_flag("--all", extract_all, "keep records below the threshold");

  // train
  fs::path features_path, model_out;
  std::string model_kind;
  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier on a feature CSV");
  train_cmd->add_option("--features", features_path, "feature CSV")->required();
  train_cmd->add_option("--model", model_kind, "classifier family")
      ->required()
      ->check(CLI::IsMember({"svm", "mlp", "rbfnet"}));
  train_cmd->add_option("--out", model_out, "model file")->required();
  train_flags.attach(train_cmd);

  // evaluate
  TrainFlags eval_flags;
  bool eval_grid = false;
  std::size_t eval_folds = 10, importance_repeats = 0;
  std::uint64_t eval_seed = 1;
  fs::path eval_json;
  auto* eval_cmd = app.add_subcommand("evaluate", "k-fold cross-validation, optionally over a grid");
  eval_cmd->add_option("--features", features_path, "feature CSV")->required();
  eval_cmd->add_option("--model-kind", model_kind, "classifier family")
      ->required()
      ->check(CLI::IsMember({"svm", "mlp", "rbfnet"}));
  eval_cmd->add_flag("--grid", eval_grid, "search the default hyperparameter grid");
  eval_cmd->add_option("--folds", eval_folds, "number of folds")->capture_default_str();
  eval_cmd->add_option("--fold-seed", eval_seed, "fold assignment seed")->capture_default_str();
  eval_cmd->add_option("--importance", importance_repeats, "permutation importance repeats (0 = off)")
      ->capture_default_str();
  eval_cmd->add_option("--json", eval_json, "write the (best) report as JSON");
  eval_flags.attach(eval_cmd);

  // classify / serve
  fs::path model_path, socket_path, verdict_out;
  bool classify_strict = false, with_latency = false, no_features = false;
  auto* classify_cmd = app.add_subcommand("classify", "Classify a file of observations");
  auto* serve_cmd = app.add_subcommand("serve", "Classify NDJSON on stdin/stdout or a Unix socket");
  for (auto* cmd : {classify_cmd, serve_cmd}) {
    cmd->add_option("--model", model_path, "model file")->required();
    cmd->add_option("--censys", censys_path, "scan store or snapshot")->required();
    cmd->add_option("--geo", geo_path, "geo store or TSV")->required();
    cmd->add_option("--threshold", threshold, "minimum A records")->capture_default_str();
    cmd->add_flag("--strict", classify_strict, "stop at the first malformed record");
    cmd->add_flag("--with-latency", with_latency, "include per-record latency");
    cmd->add_flag("--no-features", no_features, "omit feature vectors");
  }
  classify_cmd->add_option("--obs", obs_path, "observations (JSON lines, '-' for stdin)")->required();
  classify_cmd->add_option("--out", verdict_out, "verdict file (default stdout)");
  serve_cmd->add_option("--socket", socket_path, "listen on a Unix stream socket");

  // synth
  fs::path synth_config, synth_out;
  std::optional<std::uint64_t> synth_seed;
  bool print_config = false;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labeled corpus with matching stores");
  synth_cmd->add_option("--config", synth_config, "JSON overrides of the default configuration");
  synth_cmd->add_option("--out", synth_out, "output directory");
  synth_cmd->add_option("--seed", synth_seed, "override the configured seed");
  synth_cmd->add_flag("--print-config", print_config, "print the effective configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  const bool training = train_cmd->parsed() || eval_cmd->parsed();
  try {
    if (ingest_censys->parsed()) {
      IngestStats stats;
      const auto store = ScanStore::ingest_file(ingest_file, {ingest_strict}, &stats);
      print_ingest("hosts", store.size(), stats);
      if (!ingest_out.empty()) store.save(ingest_out);
    } else if (ingest_geo->parsed()) {
      IngestStats stats;
      const auto store = GeoStore::ingest_file(ingest_file, {ingest_strict}, &stats);
      print_ingest("ranges", store.size(), stats);
      if (!ingest_out.empty()) store.save(ingest_out);
    } else if (extract_cmd->parsed()) {
      const auto scan = open_scan(censys_path);
      const auto geo = open_geo(geo_path);
      FeatureDataset data;
      std::size_t line_no = 0, skipped = 0, bad = 0;
      for_each_line(obs_path, [&](std::string_view line) {
        ++line_no;
        if (line.find_first_not_of(" \t") == std::string_view::npos) return;
        DnsObservation obs;
        try {
          obs = parse_json_record(line);
        } catch (const Error& e) {
          std::cerr << "line " << line_no << ": " << e.what() << '\n';
          ++bad;
          return;
        }
        if (!extract_all && !is_suspicious(obs, threshold)) {
          ++skipped;
          return;
        }
        data.rows.push_back(extract(obs, scan, geo).values);
        data.labels.push_back(label_to_sign(obs.label));
      });
      auto out = open_output(csv_out);
      write_feature_csv(out, data);
      std::cerr << "rows: " << data.size() << ", below threshold: " << skipped << ", malformed: " << bad
                << '\n';
    } else if (train_cmd->parsed()) {
      std::size_t dropped = 0;
      const auto data = labeled_only(load_features(features_path), dropped);
      if (data.size() == 0) throw Error(ErrorCode::EmptyTrainingSet, "no labeled rows");
      const auto cfg = train_flags.resolve();
      const auto kind = *parse_model_kind(model_kind);
      ModelBundle bundle;
      std::optional<Scaler> scaler;
      if (train_flags.scaler != "none") scaler = Scaler::fit(data.rows, train_flags.scaler_mode());
      LabeledData rows(kFeatureCount);
      for (std::size_t i = 0; i < data.size(); ++i) {
        rows.add(scaler ? scaler->apply(data.rows[i]) : data.rows[i], data.labels[i]);
      }
      bundle.model = train_model(kind, rows, cfg);
      bundle.scaler = scaler;
      save_model(bundle, model_out);
      std::cerr << "trained " << classifier_name(kind, cfg) << " on " << data.size() << " rows";
      if (dropped > 0) std::cerr << " (" << dropped << " unlabeled skipped)";
      if (const auto* svm = std::get_if<SvmModel>(&bundle.model)) {
        std::cerr << ", " << svm->support_count() << " support vectors"
                  << (svm->converged ? "" : ", iteration budget exhausted");
      }
      std::cerr << '\n';
    } else if (eval_cmd->parsed()) {
      if (eval_flags.scaler == "none") throw Error(ErrorCode::InvalidArgument, "evaluate always scales features");
      const auto cfg = eval_flags.resolve();
      const auto kind = *parse_model_kind(model_kind);
      std::size_t dropped = 0;
      const auto data = labeled_only(load_features(features_path), dropped);
      EvalOptions options;
      options.folds = eval_folds;
      options.seed = eval_seed;
      options.scaler_mode = eval_flags.scaler_mode();
      options.importance_repeats = importance_repeats;
      options.threads = threads_from_env(1);
      std::vector<EvaluationReport> reports;
      std::size_t best = 0;
      if (eval_grid) {
        const auto grid = default_grid(kind, cfg);
        auto result = grid_search(data, kind, grid, options);
        best = result.best;
        reports = std::move(result.reports);
      } else {
        reports.push_back(evaluate(data, kind, cfg, options));
      }
      std::cout << report_table(reports);
      const auto& chosen = reports[best];
      std::cout << "best: " << classifier_name(kind, chosen.config) << "  accuracy " << chosen.accuracy_percent()
                << "%  FPR " << chosen.fpr() << "  FNR " << chosen.fnr() << "  median latency "
                << chosen.latency.median_ms << " ms\n";
      if (!chosen.importance.empty()) {
        std::cout << "importance:";
        for (std::size_t f = 0; f < chosen.importance.size(); ++f) {
          std::cout << ' ' << feature_name(static_cast<Feature>(f)) << '=' << chosen.importance[f];
        }
        std::cout << '\n';
      }
      if (chosen.failed_folds > 0) std::cout << "failed folds: " << chosen.failed_folds << '\n';
      if (!eval_json.empty()) {
        auto out = open_output(eval_json);
        out << report_json(chosen) << '\n';
      }
    } else if (classify_cmd->parsed() || serve_cmd->parsed()) {
      const auto scan = open_scan(censys_path);
      const auto geo = open_geo(geo_path);
      const auto bundle = load_model(model_path);
      const Detector detector(scan, geo, bundle, threshold);
      StreamOptions options;
      options.threads = threads_from_env(1);
      options.strict = classify_strict;
      options.format.include_latency = with_latency;
      options.format.include_features = !no_features;

      if (classify_cmd->parsed()) {
        const auto lines = read_lines(obs_path);
        std::size_t next = 0;
        const LineReader read = [&]() -> std::optional<std::string> {
          if (next >= lines.size()) return std::nullopt;
          return lines[next++];
        };
        std::ofstream file;
        if (!verdict_out.empty()) file = open_output(verdict_out);
        std::ostream& out = verdict_out.empty() ? std::cout : file;
        const LineWriter write = [&](std::string_view text) { out << text << '\n'; };
        const auto stats = serve(detector, read, write, options);
        out.flush();
        std::cerr << "records: " << stats.records << ", errors: " << stats.errors << '\n';
      } else if (!socket_path.empty()) {
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cerr << "listening on " << socket_path << '\n';
        serve_socket(detector, socket_path, options, g_stop);
      } else {
        std::ios::sync_with_stdio(false);
        serve(detector, std::cin, std::cout, options);
      }
    } else if (synth_cmd->parsed()) {
      SynthConfig cfg = default_synth_config();
      if (!synth_config.empty()) {
        std::ifstream in(synth_config);
        if (!in) throw Error(ErrorCode::Io, "cannot open " + synth_config.string());
        std::stringstream text;
        text << in.rdbuf();
        cfg = synth_config_from_json(text.str());
      }
      if (synth_seed) cfg.seed = *synth_seed;
      validate(cfg);
      if (print_config) {
        std::cout << synth_config_to_json(cfg) << '\n';
        return kExitOk;
      }
      if (synth_out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
      const auto corpus = synth_dataset(cfg);
      write_corpus(corpus, synth_out);
      std::cerr << "observations: " << corpus.observations.size() << ", hosts: " << corpus.hosts.size()
                << ", ranges: " << corpus.ranges.size() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::InvalidArgument) return kExitUsage;
    if (training && is_training_failure(e.code())) return kExitTraining;
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}
