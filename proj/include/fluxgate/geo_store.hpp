#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluxgate/ipv4.hpp"
#include "fluxgate/line_source.hpp"

namespace fluxgate {

/// ISO-3166 alpha-2 code, or the "None" placeholder used by public range
/// files for unrouted space.
class CountryCode {
 public:
  constexpr CountryCode() = default;
  static std::optional<CountryCode> parse(std::string_view text);

  bool is_none() const noexcept { return chars_[0] == 0; }
  std::string str() const;
  std::uint16_t packed() const noexcept {
    return static_cast<std::uint16_t>((chars_[0] << 8) | chars_[1]);
  }

  friend bool operator==(const CountryCode&, const CountryCode&) = default;

 private:
  std::array<char, 2> chars_{0, 0};
};

struct GeoRange {
  Ipv4 start;
  Ipv4 end;  // inclusive
  std::uint32_t asn = 0;
  CountryCode country;

  bool operator==(const GeoRange&) const = default;
};

struct GeoLocation {
  std::uint32_t asn = 0;
  CountryCode country;

  bool operator==(const GeoLocation&) const = default;
};

struct GeoSummary {
  std::size_t queried = 0;
  std::size_t distinct_asns = 0;
  std::size_t distinct_countries = 0;
  std::size_t unknown = 0;

  bool operator==(const GeoSummary&) const = default;
};

/// IP -> (ASN, country) map over sorted, non-overlapping inclusive ranges.
class GeoStore {
 public:
  GeoStore() = default;

  /// Builds a store from already-parsed ranges, which may be unsorted.
  /// Throws Error(OverlappingRanges) naming the first colliding pair.
  static GeoStore from_ranges(std::vector<GeoRange> ranges);

  /// TSV: start<TAB>end<TAB>asn<TAB>country<TAB>description.
  static GeoStore ingest(std::istream& in, const IngestOptions& options = {},
                         IngestStats* stats = nullptr);
  static GeoStore ingest_file(const std::filesystem::path& path,
                              const IngestOptions& options = {},
                              IngestStats* stats = nullptr);

  void save(const std::filesystem::path& path) const;
  static GeoStore load(const std::filesystem::path& path);
  static bool is_compiled_file(const std::filesystem::path& path);
  static GeoStore open(const std::filesystem::path& path, const IngestOptions& options = {});

  /// Covering range's (asn, country); absent when no range covers the
  /// address or the range is unrouted (asn 0 or country "None").
  std::optional<GeoLocation> locate(Ipv4 ip) const;

  /// Distinct ASN and country counts over the locatable addresses. Throws
  /// Error(EmptyQuery) for an empty query.
  GeoSummary summarize(std::span<const Ipv4> ips) const;

  std::span<const GeoRange> ranges() const noexcept { return ranges_; }
  std::size_t size() const noexcept { return ranges_.size(); }

 private:
  std::vector<GeoRange> ranges_;
};

}  // namespace fluxgate
