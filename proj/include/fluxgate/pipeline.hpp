#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "fluxgate/censys_store.hpp"
#include "fluxgate/dns_ingest.hpp"
#include "fluxgate/features.hpp"
#include "fluxgate/geo_store.hpp"
#include "fluxgate/model.hpp"

namespace fluxgate {

enum class VerdictLabel { FastFlux, Legitimate, NotSuspicious };

std::string_view to_string(VerdictLabel label) noexcept;

struct Verdict {
  std::string domain;
  VerdictLabel label = VerdictLabel::NotSuspicious;
  double decision_value = 0.0;
  double latency_ms = 0.0;
  FeatureVector features;
};

/// Online detector: parse -> gate -> scan lookup -> geo summary -> extract ->
/// scale -> decide. Holds references; the stores and bundle must outlive it.
/// classify() is const and safe to call concurrently.
class Detector {
 public:
  Detector(const ScanStore& scan, const GeoStore& geo, const ModelBundle& bundle,
           std::size_t threshold = kDefaultSuspiciousThreshold);

  Verdict classify(const DnsObservation& obs) const;

  /// Parses a JSON-lines record first; parse failures propagate as Error.
  /// Latency covers the whole path including parsing.
  Verdict classify_record(std::string_view json_line) const;

  std::size_t threshold() const noexcept { return threshold_; }

 private:
  Verdict decide(const DnsObservation& obs, double started_ms) const;

  const ScanStore& scan_;
  const GeoStore& geo_;
  const ModelBundle& bundle_;
  std::size_t threshold_;
};

struct VerdictFormat {
  bool include_latency = false;
  bool include_features = true;
};

std::string verdict_json(const Verdict& verdict, const VerdictFormat& format = {});
std::string error_verdict_json(std::size_t line_number, std::string_view message);

struct StreamOptions {
  std::size_t threads = 1;
  std::size_t max_in_flight = 256;
  bool strict = false;  // stop at the first malformed record
  VerdictFormat format;
};

struct StreamStats {
  std::size_t records = 0;
  std::size_t errors = 0;
};

using LineReader = std::function<std::optional<std::string>()>;
using LineWriter = std::function<void(std::string_view)>;

/// One output line per input line, in input order. Records are classified by
/// a bounded worker pool; at most max_in_flight lines are buffered between
/// the reader and the ordered writer. Malformed lines yield error verdicts;
/// in strict mode the first one is rethrown after the preceding verdicts are
/// written.
StreamStats serve(const Detector& detector, const LineReader& read, const LineWriter& write,
                  const StreamOptions& options = {});

StreamStats serve(const Detector& detector, std::istream& in, std::ostream& out,
                  const StreamOptions& options = {});

/// Accepts connections on a Unix stream socket and serves each one as an
/// independent NDJSON stream until stop becomes true.
void serve_socket(const Detector& detector, const std::filesystem::path& socket_path,
                  const StreamOptions& options, const std::atomic<bool>& stop);

/// Worker count from FLUXGATE_THREADS (>= 1), else fallback.
std::size_t threads_from_env(std::size_t fallback = 1);

}  // namespace fluxgate
