#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fluxgate/censys_store.hpp"
#include "fluxgate/dns_ingest.hpp"
#include "fluxgate/geo_store.hpp"

namespace fluxgate {

/// Per-class generator parameters.
///
/// A "typical" domain follows the class profile. Two minority profiles blur
/// the classes: flux domains parked on a few bulletproof networks
/// (concentrated) and legitimate multi-provider CDNs (dispersed), which only
/// the scan features tell apart. A mimic domain takes the other class's
/// profile outright and is an irreducible error.
struct ClassProfile {
  std::size_t count = 0;
  std::size_t ip_count_min = 5;
  std::size_t ip_count_max = 20;
  std::uint32_t ttl_min = 60;
  std::uint32_t ttl_max = 3600;  // TTL is log-uniform over [min, max]
  std::size_t label_length_min = 4;
  std::size_t label_length_max = 12;
  double present_probability = 0.98;  // host seen by the scanner
  double minority_fraction = 0.0;
  double mimic_fraction = 0.0;
};

struct SynthConfig {
  std::uint64_t seed = 7;
  ClassProfile flux;
  ClassProfile legit;
  std::size_t residential_networks = 3000;
  std::size_t hosting_networks = 300;
  std::size_t agent_pool = 40000;
  double unknown_ip_fraction = 0.0;  // agents placed in unrouted space
};

/// Defaults modeled on fast-flux behavior: low TTLs, many networks and
/// countries, hosts often offline, heterogeneous open ports; legitimate
/// domains sit on one or two hosting networks with uniform port exposure.
SynthConfig default_synth_config();

/// Throws Error(InvalidDistribution) on inconsistent parameters.
void validate(const SynthConfig& cfg);

SynthConfig synth_config_from_json(const std::string& text);
std::string synth_config_to_json(const SynthConfig& cfg);

struct SynthCorpus {
  std::vector<DnsObservation> observations;  // labeled
  std::vector<ScanHostRecord> hosts;         // sorted by IP
  std::vector<GeoRange> ranges;              // sorted by start
};

/// Deterministic for a given config.
SynthCorpus synth_dataset(const SynthConfig& cfg);

std::string snapshot_line(const ScanHostRecord& host);
std::string geo_tsv_line(const GeoRange& range);

/// Writes observations.jsonl, censys.jsonl and geo.tsv under dir.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace fluxgate
