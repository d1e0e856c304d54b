#include <gtest/gtest.h>
#include <zlib.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fluxgate/censys_store.hpp"
#include "fluxgate/errors.hpp"
#include "fluxgate/random.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fluxgate {
namespace {

using testing::random_snapshot;
using testing::ScanOracle;
using testing::scan_probe;

using testing::TempDir;

Ipv4 ip(const char* text) { return *parse_ipv4(text); }

ScanStore from_text(const std::string& text, IngestStats* stats = nullptr, bool strict = false) {
  std::istringstream in(text);
  return ScanStore::ingest(in, {strict}, stats);
}

/// The worked example: 10 addresses of hex001.info, 7 in the snapshot,
/// exposing {443, 3389, 1433, 5432, 80} between them.
struct WorkedExample {
  std::string snapshot;
  std::vector<Ipv4> flux_ips;
  std::vector<Ipv4> legit_ips;
};

WorkedExample worked_example() {
  WorkedExample ex;
  const std::vector<std::vector<int>> ports = {{443}, {3389, 443}, {1433}, {5432}, {80}, {}, {80, 443}};
  for (int i = 0; i < 10; ++i) {
    const auto addr = "198.51.100." + std::to_string(10 + i);
    ex.flux_ips.push_back(ip(addr.c_str()));
    if (i < 7) {
      nlohmann::json line{{"ip", addr}, {"ports", ports[i]}};
      ex.snapshot += line.dump() + "\n";
    }
  }
  for (int i = 0; i < 20; ++i) {
    const auto addr = "192.0.2." + std::to_string(100 + i);
    ex.legit_ips.push_back(ip(addr.c_str()));
    ex.snapshot += R"({"ip":")" + addr + R"(","ports":[443]})" + "\n";
  }
  return ex;
}

TEST(ScanStore, ThreeDistinctLines) {
  const auto store = from_text(R"({"ip":"1.1.1.1","ports":[80]}
{"ip":"2.2.2.2","ports":[]}
{"ip":"3.3.3.3","ports":[22,443]}
)");
  EXPECT_EQ(store.size(), 3u);
  EXPECT_TRUE(store.contains(ip("2.2.2.2")));
  EXPECT_TRUE(store.ports_of(ip("2.2.2.2")).empty());
}

TEST(ScanStore, DuplicateIpsMergeByUnion) {
  const auto store = from_text(R"({"ip":"9.9.9.9","ports":[80]}
{"ip":"1.0.0.1","ports":[22]}
{"ip":"9.9.9.9","ports":[443,80]}
)");
  EXPECT_EQ(store.size(), 2u);
  const auto ports = store.ports_of(ip("9.9.9.9"));
  EXPECT_EQ(std::vector<std::uint16_t>(ports.begin(), ports.end()), (std::vector<std::uint16_t>{80, 443}));
}

TEST(ScanStore, WorkedExampleRatioAndPorts) {
  const auto ex = worked_example();
  const auto store = from_text(ex.snapshot);
  const auto flux = store.lookup(ex.flux_ips);
  EXPECT_EQ(flux, (ScanLookupResult{10, 7, 5}));
  EXPECT_EQ(static_cast<double>(flux.found) / static_cast<double>(flux.queried), 0.7);
  EXPECT_EQ(store.lookup(ex.legit_ips), (ScanLookupResult{20, 20, 1}));
}

TEST(ScanStore, NoneFound) {
  const auto store = from_text(R"({"ip":"1.1.1.1","ports":[80]})");
  const std::vector<Ipv4> query = {ip("5.5.5.1"), ip("5.5.5.2"), ip("5.5.5.3"), ip("5.5.5.4"), ip("5.5.5.5")};
  EXPECT_EQ(store.lookup(query), (ScanLookupResult{5, 0, 0}));
}

TEST(ScanStore, PresentButPortlessCountsAsFound) {
  const auto store = from_text(R"({"ip":"1.1.1.1","ports":[]})");
  const std::vector<Ipv4> query = {ip("1.1.1.1")};
  EXPECT_EQ(store.lookup(query), (ScanLookupResult{1, 1, 0}));
}

TEST(ScanStore, EmptyQueryIsAnError) {
  const ScanStore store;
  try {
    store.lookup({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyQuery);
  }
}

TEST(ScanStore, MalformedLinesSkippedAndCounted) {
  IngestStats stats;
  const auto store = from_text(R"({"ip":"1.1.1.1","ports":[80]}
garbage
{"ip":"1.1.1","ports":[80]}

{"ip":"2.2.2.2","ports":[0]}
{"ip":"2.2.2.2","ports":[65536]}
{"ip":"2.2.2.2"}
{"ip":"3.3.3.3","ports":[65535]}
)",
                               &stats);
  EXPECT_EQ(store.size(), 2u);
  EXPECT_EQ(stats.malformed, 5u);
  EXPECT_EQ(stats.malformed_lines, (std::vector<std::size_t>{2, 3, 5, 6, 7}));
}

TEST(ScanStore, StrictModeAbortsWithLineNumber) {
  try {
    from_text("{\"ip\":\"1.1.1.1\",\"ports\":[80]}\n{\"ip\":5}\n", nullptr, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ScanStore, ReadsGzipByExtension) {
  const TempDir dir;
  const auto ex = worked_example();
  const auto path = dir / "snap.jsonl.gz";
  gzFile gz = gzopen(path.c_str(), "wb");
  ASSERT_NE(gz, nullptr);
  gzwrite(gz, ex.snapshot.data(), static_cast<unsigned>(ex.snapshot.size()));
  gzclose(gz);
  const auto store = ScanStore::ingest_file(path);
  EXPECT_EQ(store.lookup(ex.flux_ips), (ScanLookupResult{10, 7, 5}));
}

TEST(ScanStore, CompiledImageRoundTrip) {
  const TempDir dir;
  const auto ex = worked_example();
  const auto store = from_text(ex.snapshot);
  store.save(dir / "scan.fxs");
  EXPECT_TRUE(ScanStore::is_compiled_file(dir / "scan.fxs"));
  const auto loaded = ScanStore::open(dir / "scan.fxs");
  EXPECT_EQ(loaded.size(), store.size());
  EXPECT_EQ(loaded.lookup(ex.flux_ips), store.lookup(ex.flux_ips));

  auto bytes = testing::read_text(dir / "scan.fxs");
  bytes[bytes.size() / 2] ^= 0x5a;
  testing::write_text(dir / "bad.fxs", bytes);
  EXPECT_THROW(ScanStore::load(dir / "bad.fxs"), Error);
}

TEST(ScanStore, MatchesBruteForceUnionOracle) {
  const auto snapshot = random_snapshot(10000, 21);
  const auto store = from_text(snapshot);
  const ScanOracle oracle(snapshot);
  ASSERT_EQ(store.size(), oracle.distinct_hosts());
  Rng rng(22);
  std::size_t mismatches = 0;
  for (int q = 0; q < 300; ++q) {
    const auto query = scan_probe(rng);
    if (store.lookup(query) != oracle.lookup(query)) ++mismatches;
  }
  EXPECT_EQ(mismatches, 0u);
}

TEST(ScanStore, LookupIsOrderInsensitive) {
  const auto snapshot = random_snapshot(2000, 23);
  const auto store = from_text(snapshot);
  Rng rng(24);
  for (int q = 0; q < 200; ++q) {
    std::vector<Ipv4> query;
    for (int i = 0; i < 12; ++i) {
      query.push_back(Ipv4{0x0a000000u + static_cast<std::uint32_t>(rng.below(1u << 16))});
    }
    const auto a = store.lookup(query);
    rng.shuffle(std::span<Ipv4>(query));
    EXPECT_EQ(store.lookup(query), a);
    EXPECT_EQ(store.lookup(query), a);
  }
}

TEST(ScanStore, ReingestIsReproducible) {
  const auto snapshot = random_snapshot(3000, 25);
  const TempDir dir;
  from_text(snapshot).save(dir / "a.fxs");
  from_text(snapshot).save(dir / "b.fxs");
  EXPECT_EQ(testing::read_text(dir / "a.fxs"), testing::read_text(dir / "b.fxs"));
}

TEST(ScanStore, MillionLineIngestWithinMemoryBudget) {
  constexpr std::size_t kLines = 1'000'000;
  std::string text;
  text.reserve(kLines * 40);
  Rng rng(26);
  for (std::size_t i = 0; i < kLines; ++i) {
    text += R"({"ip":")";
    text += to_string(Ipv4{0x20000000u + static_cast<std::uint32_t>(i * 7)});
    text += R"(","ports":[)";
    text += std::to_string(rng.between(1, 1024));
    if (rng.bernoulli(0.5)) text += "," + std::to_string(rng.between(1025, 65535));
    text += "]}\n";
  }
  IngestStats stats;
  const auto store = from_text(text, &stats);
  EXPECT_EQ(store.size(), kLines);
  EXPECT_EQ(stats.malformed, 0u);
  // 32 bytes per host covers address, offset and port arrays.
  EXPECT_LE(store.memory_bytes(), kLines * 32);
}

}  // namespace
}  // namespace fluxgate
