#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "fluxgate/errors.hpp"
#include "fluxgate/features.hpp"
#include "fluxgate/synth.hpp"
#include "test_support.hpp"

namespace fluxgate {
namespace {

using testing::TempDir;
using testing::read_text;

SynthConfig small_config(std::size_t flux, std::size_t legit, std::uint64_t seed) {
  auto cfg = default_synth_config();
  cfg.flux.count = flux;
  cfg.legit.count = legit;
  cfg.seed = seed;
  cfg.agent_pool = 5000;
  return cfg;
}

void expect_invalid(const SynthConfig& cfg) {
  try {
    validate(cfg);
    ADD_FAILURE() << "expected InvalidDistribution";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDistribution);
  }
}

TEST(Synth, SameSeedSameBytes) {
  TempDir tmp;
  write_corpus(synth_dataset(small_config(100, 100, 7)), tmp / "a");
  write_corpus(synth_dataset(small_config(100, 100, 7)), tmp / "b");
  write_corpus(synth_dataset(small_config(100, 100, 8)), tmp / "c");
  for (const char* name : {"observations.jsonl", "censys.jsonl", "geo.tsv"}) {
    EXPECT_EQ(read_text(tmp / "a" / name), read_text(tmp / "b" / name)) << name;
  }
  EXPECT_NE(read_text(tmp / "a" / "observations.jsonl"), read_text(tmp / "c" / "observations.jsonl"));
}

TEST(Synth, ShapeOfCorpus) {
  const auto cfg = small_config(300, 200, 3);
  const auto corpus = synth_dataset(cfg);
  ASSERT_EQ(corpus.observations.size(), 500u);
  std::size_t flux = 0;
  std::set<std::string> names;
  const auto ttl_lo = std::min(cfg.flux.ttl_min, cfg.legit.ttl_min);
  const auto ttl_hi = std::max(cfg.flux.ttl_max, cfg.legit.ttl_max);
  for (const auto& obs : corpus.observations) {
    ASSERT_NE(obs.label, Label::Unknown);
    flux += obs.label == Label::FastFlux ? 1 : 0;
    EXPECT_TRUE(names.insert(canonical_domain(obs.domain)).second);
    EXPECT_GE(obs.a_records.size(), std::min(cfg.flux.ip_count_min, cfg.legit.ip_count_min));
    EXPECT_LE(obs.a_records.size(), std::max(cfg.flux.ip_count_max, cfg.legit.ip_count_max));
    std::set<std::uint32_t> distinct;
    for (const auto ip : obs.a_records) distinct.insert(ip.value);
    EXPECT_EQ(distinct.size(), obs.a_records.size());
    EXPECT_GE(obs.ttl, ttl_lo);
    EXPECT_LE(obs.ttl, ttl_hi);
    EXPECT_TRUE(is_suspicious(obs));
  }
  EXPECT_EQ(flux, 300u);

  for (std::size_t i = 1; i < corpus.hosts.size(); ++i) {
    EXPECT_LT(corpus.hosts[i - 1].ip, corpus.hosts[i].ip);
  }
  for (const auto& h : corpus.hosts) {
    EXPECT_TRUE(std::is_sorted(h.open_ports.begin(), h.open_ports.end()));
    EXPECT_EQ(std::adjacent_find(h.open_ports.begin(), h.open_ports.end()), h.open_ports.end());
  }
  for (std::size_t i = 1; i < corpus.ranges.size(); ++i) {
    EXPECT_LT(corpus.ranges[i - 1].end, corpus.ranges[i].start);
  }
}

TEST(Synth, FluxIpRatioTracksPresenceProbability) {
  auto cfg = small_config(1000, 10, 11);
  cfg.agent_pool = 40000;
  const auto corpus = synth_dataset(cfg);
  std::stringstream lines;
  for (const auto& h : corpus.hosts) lines << snapshot_line(h) << '\n';
  const auto scan = ScanStore::ingest(lines);
  const auto geo = GeoStore::from_ranges(corpus.ranges);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& obs : corpus.observations) {
    if (obs.label != Label::FastFlux) continue;
    sum += extract(obs, scan, geo)[Feature::IpRatio];
    ++n;
  }
  EXPECT_NEAR(sum / static_cast<double>(n), cfg.flux.present_probability, 0.05);
}

TEST(Synth, EveryAddressResolvesByDefault) {
  const auto corpus = synth_dataset(small_config(200, 200, 5));
  const auto geo = GeoStore::from_ranges(corpus.ranges);
  for (const auto& obs : corpus.observations) {
    EXPECT_EQ(geo.summarize(obs.a_records).unknown, 0u) << obs.domain;
  }
}

TEST(Synth, UnroutedAgentsAreUnknown) {
  auto cfg = small_config(200, 50, 5);
  cfg.unknown_ip_fraction = 0.3;
  const auto corpus = synth_dataset(cfg);
  const auto geo = GeoStore::from_ranges(corpus.ranges);
  std::size_t unknown = 0, total = 0;
  for (const auto& obs : corpus.observations) {
    const auto s = geo.summarize(obs.a_records);
    if (obs.label == Label::Legitimate) continue;
    unknown += s.unknown;
    total += s.queried;
  }
  EXPECT_NEAR(static_cast<double>(unknown) / static_cast<double>(total), 0.3, 0.05);
  EXPECT_NE(geo_tsv_line(corpus.ranges.back()).find("Not routed"), std::string::npos);
}

TEST(Synth, ClassesDifferOnAggregate) {
  const auto corpus = synth_dataset(small_config(400, 400, 9));
  const auto geo = GeoStore::from_ranges(corpus.ranges);
  double flux_ttl = 0, legit_ttl = 0, flux_asn = 0, legit_asn = 0;
  for (const auto& obs : corpus.observations) {
    const auto s = geo.summarize(obs.a_records);
    const double asn_ratio = static_cast<double>(s.distinct_asns) / static_cast<double>(s.queried);
    (obs.label == Label::FastFlux ? flux_ttl : legit_ttl) += obs.ttl;
    (obs.label == Label::FastFlux ? flux_asn : legit_asn) += asn_ratio;
  }
  EXPECT_LT(flux_ttl, legit_ttl);
  EXPECT_GT(flux_asn, legit_asn);
}

TEST(Synth, FilesReingestToTheSameStores) {
  TempDir tmp;
  const auto corpus = synth_dataset(small_config(50, 50, 2));
  write_corpus(corpus, tmp.path());
  const auto scan = ScanStore::ingest_file(tmp / "censys.jsonl");
  const auto geo = GeoStore::ingest_file(tmp / "geo.tsv");
  EXPECT_EQ(scan.size(), corpus.hosts.size());
  for (const auto& h : corpus.hosts) {
    const auto ports = scan.ports_of(h.ip);
    EXPECT_TRUE(std::equal(ports.begin(), ports.end(), h.open_ports.begin(), h.open_ports.end()));
  }
  EXPECT_TRUE(std::ranges::equal(geo.ranges(), corpus.ranges));

  std::istringstream obs(read_text(tmp / "observations.jsonl"));
  std::string line;
  std::size_t i = 0;
  while (std::getline(obs, line)) {
    const auto parsed = parse_json_record(line);
    EXPECT_EQ(parsed.domain, corpus.observations[i].domain);
    EXPECT_EQ(parsed.a_records, corpus.observations[i].a_records);
    EXPECT_EQ(parsed.label, corpus.observations[i].label);
    ++i;
  }
  EXPECT_EQ(i, corpus.observations.size());
}

TEST(Synth, LineFormats) {
  ScanHostRecord host{*parse_ipv4("1.2.3.4"), {22, 80}};
  EXPECT_EQ(snapshot_line(host), R"({"ip":"1.2.3.4","ports":[22,80]})");
  host.open_ports.clear();
  EXPECT_EQ(snapshot_line(host), R"({"ip":"1.2.3.4","ports":[]})");
  const GeoRange r{*parse_ipv4("20.0.0.0"), *parse_ipv4("20.0.255.255"), 20001, *CountryCode::parse("DE")};
  EXPECT_EQ(geo_tsv_line(r), "20.0.0.0\t20.0.255.255\t20001\tDE\tHOSTING-20001");
}

TEST(SynthConfig, JsonRoundTrip) {
  auto cfg = default_synth_config();
  cfg.seed = 99;
  cfg.flux.count = 12;
  cfg.legit.mimic_fraction = 0.25;
  cfg.unknown_ip_fraction = 0.125;
  const auto text = synth_config_to_json(cfg);
  EXPECT_EQ(synth_config_to_json(synth_config_from_json(text)), text);
}

TEST(SynthConfig, PartialOverridesKeepDefaults) {
  const auto cfg = synth_config_from_json(R"({"seed": 3, "flux": {"count": 10}})");
  const auto def = default_synth_config();
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.flux.count, 10u);
  EXPECT_EQ(cfg.flux.ttl_max, def.flux.ttl_max);
  EXPECT_EQ(cfg.legit.count, def.legit.count);
}

TEST(SynthConfig, InvalidDistributions) {
  const auto base = default_synth_config();
  EXPECT_NO_THROW(validate(base));
  auto c = base; c.flux.count = 0; expect_invalid(c);
  c = base; c.flux.ip_count_min = 0; expect_invalid(c);
  c = base; c.legit.ip_count_min = 20; c.legit.ip_count_max = 10; expect_invalid(c);
  c = base; c.flux.ip_count_max = 5000; expect_invalid(c);
  c = base; c.legit.ttl_min = 100; c.legit.ttl_max = 10; expect_invalid(c);
  c = base; c.flux.label_length_max = 64; expect_invalid(c);
  c = base; c.flux.present_probability = 1.5; expect_invalid(c);
  c = base; c.legit.mimic_fraction = -0.1; expect_invalid(c);
  c = base; c.flux.minority_fraction = 0.6; c.flux.mimic_fraction = 0.6; expect_invalid(c);
  c = base; c.hosting_networks = 2; expect_invalid(c);
  c = base; c.residential_networks = 1; expect_invalid(c);
  c = base; c.agent_pool = 3; expect_invalid(c);
  c = base; c.unknown_ip_fraction = 2.0; expect_invalid(c);
  EXPECT_THROW(synth_config_from_json("{not json"), Error);
  EXPECT_THROW(synth_config_from_json(R"({"flux": {"count": "many"}})"), Error);
  EXPECT_THROW(synth_dataset(c), Error);
}

}  // namespace
}  // namespace fluxgate
