#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "fluxgate/censys_store.hpp"
#include "fluxgate/dns_ingest.hpp"
#include "fluxgate/geo_store.hpp"

namespace fluxgate {

inline constexpr std::size_t kFeatureCount = 8;

enum class Feature : std::size_t {
  DomainLength = 0,  // F1
  Regions,           // F2: distinct countries
  Ports,             // F3: distinct open ports over scan-found hosts
  IpCount,           // F4: A records in the response
  IpRatio,           // F5: scan-found / queried
  Ttl,               // F6
  AsnRatio,          // F7: distinct ASNs / F4
  RegionalSpread,    // F8: distinct countries / F4
};

std::string_view feature_name(Feature f) noexcept;

using FeatureArray = std::array<double, kFeatureCount>;

struct FeatureVector {
  FeatureArray values{};

  double operator[](Feature f) const noexcept { return values[static_cast<std::size_t>(f)]; }
  double& operator[](Feature f) noexcept { return values[static_cast<std::size_t>(f)]; }

  bool operator==(const FeatureVector&) const = default;
};

/// Builds the eight-feature vector for one response. All three inputs must
/// describe the same address list (equal query counts); otherwise throws
/// Error(InconsistentInputs).
FeatureVector extract(const DnsObservation& obs, const ScanLookupResult& scan,
                      const GeoSummary& geo);

/// Convenience: runs both store lookups for obs and extracts.
FeatureVector extract(const DnsObservation& obs, const ScanStore& scan, const GeoStore& geo);

enum class ScalerMode { MinMax, ZScore };

/// Per-feature affine scaling fitted on training data. Constant features map
/// to 0. MinMax output is clamped to [0, 1]; ZScore output is unclamped.
class Scaler {
 public:
  struct FeatureStats {
    double offset = 0.0;  // min (MinMax) or mean (ZScore)
    double scale = 1.0;   // max - min (MinMax) or stddev (ZScore)
    bool constant = false;

    bool operator==(const FeatureStats&) const = default;
  };

  Scaler() = default;

  /// Throws Error(EmptyTrainingSet) when rows is empty.
  static Scaler fit(std::span<const FeatureArray> rows, ScalerMode mode = ScalerMode::MinMax);
  static Scaler from_stats(ScalerMode mode, const std::array<FeatureStats, kFeatureCount>& stats);

  /// Throws Error(UnfittedScaler) on a default-constructed scaler.
  FeatureArray apply(const FeatureArray& v) const;
  FeatureArray apply(const FeatureVector& v) const { return apply(v.values); }

  /// Inverse map; exact for in-range values, constant features return their offset.
  FeatureArray invert(const FeatureArray& scaled) const;

  bool fitted() const noexcept { return fitted_; }
  ScalerMode mode() const noexcept { return mode_; }
  const std::array<FeatureStats, kFeatureCount>& stats() const noexcept { return stats_; }

  bool operator==(const Scaler&) const = default;

 private:
  bool fitted_ = false;
  ScalerMode mode_ = ScalerMode::MinMax;
  std::array<FeatureStats, kFeatureCount> stats_{};
};

/// Feature rows with binary labels: -1 fast flux, +1 legitimate.
struct FeatureDataset {
  std::vector<FeatureArray> rows;
  std::vector<int> labels;

  std::size_t size() const noexcept { return rows.size(); }
};

int label_to_sign(Label label);  // FastFlux -> -1, Legitimate -> +1

/// CSV with header "f1,...,f8,label". Values use shortest round-trip
/// formatting so the output is byte-stable.
void write_feature_csv(std::ostream& out, const FeatureDataset& data);
FeatureDataset read_feature_csv(std::istream& in);

}  // namespace fluxgate
