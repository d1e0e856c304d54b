#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fluxgate/ipv4.hpp"

namespace fluxgate {

enum class Label { FastFlux, Legitimate, Unknown };

/// One parsed DNS response: the queried name, a single TTL and the
/// de-duplicated IPv4 answer addresses in first-seen order.
struct DnsObservation {
  std::string domain;
  std::uint32_t ttl = 0;
  std::vector<Ipv4> a_records;
  Label label = Label::Unknown;

  bool operator==(const DnsObservation&) const = default;
};

enum class RecordFormat { WireFormat, JsonRecord };

inline constexpr std::size_t kDefaultSuspiciousThreshold = 5;

/// Lowercased domain with one trailing root dot removed.
std::string canonical_domain(std::string_view domain);

/// Parses one JSON-lines record:
///   {"domain": str, "ttl": int, "a_records": [str...], "label": "fastflux"|"legit"}
/// Throws Error(MalformedRecord) or Error(NoARecords).
DnsObservation parse_json_record(std::string_view line);

/// Parses an RFC 1035 response message. The observation's domain is the
/// question name; A records are collected for the question name and every
/// name reachable from it through CNAME answers. The TTL is the minimum over
/// those A records. AAAA and other record types are ignored.
DnsObservation parse_wire_response(std::span<const std::uint8_t> message);

DnsObservation parse_observation(std::span<const std::uint8_t> input, RecordFormat format);

/// Inverse of parse_json_record; keys are emitted in canonical order.
std::string to_json_record(const DnsObservation& obs);

/// The suspicious-domain gate: true when the response carries at least
/// `threshold` A records.
bool is_suspicious(const DnsObservation& obs,
                   std::size_t threshold = kDefaultSuspiciousThreshold);

std::string_view to_string(Label label) noexcept;

}  // namespace fluxgate
