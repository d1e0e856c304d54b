#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <string_view>
#include <vector>

#include "fluxgate/ipv4.hpp"
#include "fluxgate/line_source.hpp"

namespace fluxgate {

struct ScanHostRecord {
  Ipv4 ip;
  std::vector<std::uint16_t> open_ports;  // sorted, unique
};

struct ScanLookupResult {
  std::size_t queried = 0;
  std::size_t found = 0;
  std::size_t distinct_ports = 0;

  bool operator==(const ScanLookupResult&) const = default;
};

/// Read-only snapshot of internet-wide scan results, keyed by IP.
///
/// Hosts are stored in compressed-row form: a sorted IP array, an offset
/// array and one flat port array. Lookups are binary searches; the store is
/// immutable after construction and safe for concurrent readers.
class ScanStore {
 public:
  ScanStore() = default;

  /// Snapshot line schema: {"ip": "a.b.c.d", "ports": [int, ...]}. Ports must
  /// lie in [1, 65535]. Duplicate IPs merge their port sets.
  static ScanStore ingest(std::istream& in, const IngestOptions& options = {},
                          IngestStats* stats = nullptr);
  static ScanStore ingest_file(const std::filesystem::path& path,
                               const IngestOptions& options = {},
                               IngestStats* stats = nullptr);

  /// Compact binary image used by the CLI to skip re-parsing.
  void save(const std::filesystem::path& path) const;
  static ScanStore load(const std::filesystem::path& path);
  static bool is_compiled_file(const std::filesystem::path& path);

  /// Loads either a compiled image or a JSON-lines snapshot (plain or gzip).
  static ScanStore open(const std::filesystem::path& path, const IngestOptions& options = {});

  /// Throws Error(EmptyQuery) for an empty query.
  ScanLookupResult lookup(std::span<const Ipv4> ips) const;

  bool contains(Ipv4 ip) const;
  /// Ports of a host; empty span when the host is absent or has no open ports.
  std::span<const std::uint16_t> ports_of(Ipv4 ip) const;

  std::size_t size() const noexcept { return ips_.size(); }
  std::size_t memory_bytes() const noexcept;

  /// (ip, port) pair; port 0 records a host without listing a port.
  struct HostPortPair {
    std::uint32_t ip;
    std::uint16_t port;

    auto operator<=>(const HostPortPair&) const = default;
  };

  /// Builds a store from sorted, de-duplicated pairs.
  static ScanStore from_pairs(std::span<const HostPortPair> sorted_pairs);

 private:
  std::ptrdiff_t find(Ipv4 ip) const;

  std::vector<std::uint32_t> ips_;
  std::vector<std::uint32_t> offsets_{0};
  std::vector<std::uint16_t> ports_;
};

}  // namespace fluxgate
