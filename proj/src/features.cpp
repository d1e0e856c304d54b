#include "fluxgate/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "fluxgate/errors.hpp"

namespace fluxgate {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "DomainLength", "Regions", "Ports", "IPCount", "IPRatio", "TTL", "ASNRatio", "RegionalSpread"};

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

[[noreturn]] void bad_csv(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::MalformedLine, why, line);
}

}  // namespace

std::string_view feature_name(Feature f) noexcept { return kNames[static_cast<std::size_t>(f)]; }

FeatureVector extract(const DnsObservation& obs, const ScanLookupResult& scan, const GeoSummary& geo) {
  const std::size_t ip_count = obs.a_records.size();
  if (ip_count == 0 || scan.queried != ip_count || geo.queried != ip_count) {
    throw Error(ErrorCode::InconsistentInputs,
                "query counts differ: a_records=" + std::to_string(ip_count) +
                    " scan=" + std::to_string(scan.queried) + " geo=" + std::to_string(geo.queried));
  }
  if (scan.found > ip_count || (scan.found == 0 && scan.distinct_ports > 0)) {
    throw Error(ErrorCode::InconsistentInputs, "scan result counts are inconsistent");
  }
  if (geo.unknown > ip_count || geo.distinct_asns > ip_count - geo.unknown ||
      geo.distinct_countries > ip_count - geo.unknown) {
    throw Error(ErrorCode::InconsistentInputs, "distinct counts exceed the located address count");
  }

  const double n = static_cast<double>(ip_count);
  FeatureVector v;
  v[Feature::DomainLength] = static_cast<double>(canonical_domain(obs.domain).size());
  v[Feature::Regions] = static_cast<double>(geo.distinct_countries);
  v[Feature::Ports] = static_cast<double>(scan.distinct_ports);
  v[Feature::IpCount] = n;
  v[Feature::IpRatio] = static_cast<double>(scan.found) / n;
  v[Feature::Ttl] = static_cast<double>(obs.ttl);
  v[Feature::AsnRatio] = static_cast<double>(geo.distinct_asns) / n;
  v[Feature::RegionalSpread] = static_cast<double>(geo.distinct_countries) / n;
  return v;
}

FeatureVector extract(const DnsObservation& obs, const ScanStore& scan, const GeoStore& geo) {
  return extract(obs, scan.lookup(obs.a_records), geo.summarize(obs.a_records));
}

Scaler Scaler::fit(std::span<const FeatureArray> rows, ScalerMode mode) {
  if (rows.empty()) throw Error(ErrorCode::EmptyTrainingSet, "cannot fit a scaler on zero rows");
  Scaler scaler;
  scaler.fitted_ = true;
  scaler.mode_ = mode;
  const double n = static_cast<double>(rows.size());
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double lo = rows.front()[f];
    double hi = lo;
    double sum = 0.0;
    for (const auto& row : rows) {
      lo = std::min(lo, row[f]);
      hi = std::max(hi, row[f]);
      sum += row[f];
    }
    auto& s = scaler.stats_[f];
    s.constant = lo == hi;
    if (mode == ScalerMode::MinMax) {
      s.offset = lo;
      s.scale = hi - lo;
    } else {
      const double mean = sum / n;
      double ss = 0.0;
      for (const auto& row : rows) ss += (row[f] - mean) * (row[f] - mean);
      s.offset = mean;
      s.scale = std::sqrt(ss / n);
      if (!(s.scale > 0.0)) s.constant = true;
    }
    if (s.constant) s.scale = 0.0;
  }
  return scaler;
}

Scaler Scaler::from_stats(ScalerMode mode, const std::array<FeatureStats, kFeatureCount>& stats) {
  Scaler scaler;
  scaler.fitted_ = true;
  scaler.mode_ = mode;
  scaler.stats_ = stats;
  return scaler;
}

FeatureArray Scaler::apply(const FeatureArray& v) const {
  if (!fitted_) throw Error(ErrorCode::UnfittedScaler, "scaler used before fit");
  FeatureArray out{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto& s = stats_[f];
    if (s.constant) continue;
    const double z = (v[f] - s.offset) / s.scale;
    out[f] = mode_ == ScalerMode::MinMax ? std::clamp(z, 0.0, 1.0) : z;
  }
  return out;
}

FeatureArray Scaler::invert(const FeatureArray& scaled) const {
  if (!fitted_) throw Error(ErrorCode::UnfittedScaler, "scaler used before fit");
  FeatureArray out{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto& s = stats_[f];
    out[f] = s.constant ? s.offset : s.offset + scaled[f] * s.scale;
  }
  return out;
}

int label_to_sign(Label label) {
  switch (label) {
    case Label::FastFlux: return -1;
    case Label::Legitimate: return 1;
    case Label::Unknown: return 0;
  }
  return 0;
}

void write_feature_csv(std::ostream& out, const FeatureDataset& data) {
  out << "f1,f2,f3,f4,f5,f6,f7,f8,label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const double v : data.rows[i]) out << format_double(v) << ',';
    out << data.labels[i] << '\n';
  }
}

FeatureDataset read_feature_csv(std::istream& in) {
  FeatureDataset data;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_number == 1) {
      if (line.rfind("f1,", 0) != 0) bad_csv(1, "missing f1..f8,label header");
      continue;
    }
    FeatureArray row{};
    std::string_view rest = line;
    for (std::size_t f = 0; f <= kFeatureCount; ++f) {
      const auto comma = rest.find(',');
      const bool last = f == kFeatureCount;
      if (last != (comma == std::string_view::npos)) bad_csv(line_number, "expected 9 columns");
      std::string_view cell = last ? rest : rest.substr(0, comma);
      if (!last) rest.remove_prefix(comma + 1);
      if (last) {
        if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
        int label = 0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), label);
        if (ec != std::errc{} || ptr != cell.data() + cell.size() || label < -1 || label > 1) {
          bad_csv(line_number, "label must be -1, 0 or +1");
        }
        data.labels.push_back(label);
      } else {
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), row[f]);
        if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(row[f])) {
          bad_csv(line_number, "non-numeric feature value");
        }
      }
    }
    data.rows.push_back(row);
  }
  return data;
}

}  // namespace fluxgate
