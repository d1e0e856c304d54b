#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "fluxgate/errors.hpp"
#include "fluxgate/features.hpp"
#include "fluxgate/random.hpp"

namespace fluxgate {
namespace {

DnsObservation observation(std::string domain, std::uint32_t ttl, std::size_t ips) {
  DnsObservation obs{std::move(domain), ttl, {}, Label::Unknown};
  for (std::size_t i = 0; i < ips; ++i) obs.a_records.push_back(Ipv4{0x0a000000u + static_cast<std::uint32_t>(i)});
  return obs;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

TEST(Extract, WorkedExample) {
  const auto v = extract(observation("hex001.info", 60, 10), {10, 7, 5}, {10, 5, 4, 1});
  const FeatureArray expected = {11, 4, 5, 10, 0.7, 60, 0.5, 0.4};
  EXPECT_EQ(v.values, expected);
  EXPECT_EQ(v[Feature::IpRatio], 7.0 / 10.0);
}

TEST(Extract, DomainLengthUsesCanonicalName) {
  EXPECT_EQ(extract(observation("HEX001.info.", 60, 1), {1, 1, 0}, {1, 1, 1, 0})[Feature::DomainLength], 11.0);
}

TEST(Extract, SingleAddressDegenerateCase) {
  const auto v = extract(observation("a.b", 5, 1), {1, 1, 3}, {1, 1, 1, 0});
  EXPECT_EQ(v[Feature::IpRatio], 1.0);
  EXPECT_EQ(v[Feature::AsnRatio], 1.0);
  EXPECT_EQ(v[Feature::RegionalSpread], 1.0);
}

TEST(Extract, NothingFound) {
  const auto v = extract(observation("a.b", 5, 6), {6, 0, 0}, {6, 0, 0, 6});
  EXPECT_EQ(v[Feature::Ports], 0.0);
  EXPECT_EQ(v[Feature::IpRatio], 0.0);
  EXPECT_EQ(v[Feature::Regions], 0.0);
}

TEST(Extract, InconsistentInputs) {
  EXPECT_EQ(code_of([] { extract(observation("a", 1, 10), {9, 7, 5}, {10, 5, 4, 0}); }),
            ErrorCode::InconsistentInputs);
  EXPECT_EQ(code_of([] { extract(observation("a", 1, 10), {10, 7, 5}, {9, 5, 4, 0}); }),
            ErrorCode::InconsistentInputs);
  EXPECT_EQ(code_of([] { extract(observation("a", 1, 10), {10, 11, 5}, {10, 5, 4, 0}); }),
            ErrorCode::InconsistentInputs);
  EXPECT_EQ(code_of([] { extract(observation("a", 1, 10), {10, 0, 5}, {10, 5, 4, 0}); }),
            ErrorCode::InconsistentInputs);
  EXPECT_EQ(code_of([] { extract(observation("a", 1, 10), {10, 7, 5}, {10, 8, 4, 5}); }),
            ErrorCode::InconsistentInputs);
}

TEST(Extract, InvariantsOnRandomConsistentInputs) {
  Rng rng(41);
  for (int trial = 0; trial < 5000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(1, 40));
    const auto found = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(n)));
    const auto ports = found == 0 ? 0 : static_cast<std::size_t>(rng.between(0, 20));
    const auto unknown = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(n)));
    const auto located = n - unknown;
    const auto asns = located == 0 ? 0 : static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(located)));
    const auto countries = located == 0 ? 0 : static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(located)));
    const auto obs = observation("x.example", static_cast<std::uint32_t>(rng.below(100000)), n);
    const auto v = extract(obs, {n, found, ports}, {n, asns, countries, unknown});
    for (const double f : v.values) EXPECT_TRUE(std::isfinite(f) && f >= 0.0);
    EXPECT_GE(v[Feature::IpCount], 1.0);
    EXPECT_LE(v[Feature::IpRatio], 1.0);
    EXPECT_LE(v[Feature::AsnRatio], 1.0);
    EXPECT_LE(v[Feature::RegionalSpread], 1.0);
    EXPECT_EQ(v[Feature::AsnRatio], static_cast<double>(asns) / static_cast<double>(n));
    EXPECT_EQ(extract(obs, {n, found, ports}, {n, asns, countries, unknown}), v);
  }
}

TEST(Extract, FromStoresUsesBothLookups) {
  std::istringstream scan_text(R"({"ip":"10.0.0.0","ports":[80]}
{"ip":"10.0.0.1","ports":[443,80]}
)");
  std::istringstream geo_text("10.0.0.0\t10.0.0.0\t1\tDE\ta\n10.0.0.1\t10.0.0.3\t2\tFR\tb\n");
  const auto scan = ScanStore::ingest(scan_text);
  const auto geo = GeoStore::ingest(geo_text);
  const auto v = extract(observation("abc.de", 30, 5), scan, geo);
  const FeatureArray expected = {6, 2, 2, 5, 0.4, 30, 0.4, 0.4};
  EXPECT_EQ(v.values, expected);
}

TEST(Scaler, MinMaxRange) {
  std::vector<FeatureArray> rows(2, FeatureArray{1, 1, 1, 1, 1, 0, 1, 1});
  rows[1][5] = 100;
  const auto s = Scaler::fit(rows);
  EXPECT_EQ(s.stats()[5].offset, 0.0);
  EXPECT_EQ(s.stats()[5].scale, 100.0);
  EXPECT_FALSE(s.stats()[5].constant);
  EXPECT_TRUE(s.stats()[0].constant);
}

TEST(Scaler, AllIdenticalRowsAreConstant) {
  const std::vector<FeatureArray> rows(5, FeatureArray{3, 1, 4, 1, 0.5, 9, 0.2, 0.6});
  for (const auto mode : {ScalerMode::MinMax, ScalerMode::ZScore}) {
    const auto s = Scaler::fit(rows, mode);
    for (const auto& st : s.stats()) EXPECT_TRUE(st.constant);
    for (const double v : s.apply(rows[0])) EXPECT_EQ(v, 0.0);
  }
}

TEST(Scaler, EndpointsAndClamping) {
  const std::vector<FeatureArray> rows = {FeatureArray{0, 0, 0, 0, 0, 10, 0, 0}, FeatureArray{1, 1, 1, 1, 1, 20, 1, 1}};
  const auto s = Scaler::fit(rows);
  EXPECT_EQ(s.apply(rows[0])[5], 0.0);
  EXPECT_EQ(s.apply(rows[1])[5], 1.0);
  auto above = rows[1];
  above[5] = 1000;
  EXPECT_EQ(s.apply(above)[5], 1.0);
  auto below = rows[0];
  below[5] = -5;
  EXPECT_EQ(s.apply(below)[5], 0.0);
}

TEST(Scaler, ZScoreIsUnclamped) {
  const std::vector<FeatureArray> rows = {FeatureArray{0, 0, 0, 0, 0, 0, 0, 0}, FeatureArray{2, 2, 2, 2, 2, 2, 2, 2}};
  const auto s = Scaler::fit(rows, ScalerMode::ZScore);
  const auto out = s.apply(FeatureArray{11, 11, 11, 11, 11, 11, 11, 11});
  EXPECT_DOUBLE_EQ(out[0], 10.0);
}

TEST(Scaler, InvertRecoversInputs) {
  Rng rng(42);
  std::vector<FeatureArray> rows(200);
  for (auto& r : rows) {
    for (auto& v : r) v = rng.uniform(-50, 5000);
  }
  for (const auto mode : {ScalerMode::MinMax, ScalerMode::ZScore}) {
    const auto s = Scaler::fit(rows, mode);
    for (const auto& r : rows) {
      const auto back = s.invert(s.apply(r));
      for (std::size_t f = 0; f < kFeatureCount; ++f) EXPECT_NEAR(back[f], r[f], 1e-9 * std::max(1.0, std::abs(r[f])));
    }
  }
}

TEST(Scaler, ErrorsOnEmptyOrUnfitted) {
  EXPECT_EQ(code_of([] { Scaler::fit({}); }), ErrorCode::EmptyTrainingSet);
  EXPECT_EQ(code_of([] { Scaler().apply(FeatureArray{}); }), ErrorCode::UnfittedScaler);
}

TEST(FeatureCsv, RoundTripIsExactAndStable) {
  Rng rng(43);
  FeatureDataset data;
  for (int i = 0; i < 300; ++i) {
    FeatureArray row;
    for (auto& v : row) v = rng.uniform(0, 1000) / 7.0;
    data.rows.push_back(row);
    data.labels.push_back(static_cast<int>(rng.below(3)) - 1);
  }
  std::ostringstream first;
  write_feature_csv(first, data);
  std::istringstream in(first.str());
  const auto back = read_feature_csv(in);
  EXPECT_EQ(back.rows, data.rows);
  EXPECT_EQ(back.labels, data.labels);
  std::ostringstream second;
  write_feature_csv(second, back);
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(first.str().substr(0, first.str().find('\n')), "f1,f2,f3,f4,f5,f6,f7,f8,label");
}

TEST(FeatureCsv, RejectsBadRowsWithLineNumbers) {
  const char* cases[] = {
      "f1,f2,f3,f4,f5,f6,f7,f8,label\n1,2,3,4,5,6,7,8\n",
      "f1,f2,f3,f4,f5,f6,f7,f8,label\n1,2,3,4,5,6,7,x,1\n",
      "f1,f2,f3,f4,f5,f6,f7,f8,label\n1,2,3,4,5,6,7,8,2\n",
  };
  for (const char* text : cases) {
    std::istringstream in(text);
    try {
      read_feature_csv(in);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
      EXPECT_EQ(e.line(), 2u);
    }
  }
}

TEST(FeatureCsv, LabelSigns) {
  EXPECT_EQ(label_to_sign(Label::FastFlux), -1);
  EXPECT_EQ(label_to_sign(Label::Legitimate), 1);
  EXPECT_EQ(label_to_sign(Label::Unknown), 0);
}

TEST(FeatureNames, MatchTheFeatureTable) {
  EXPECT_EQ(feature_name(Feature::DomainLength), "DomainLength");
  EXPECT_EQ(feature_name(Feature::IpRatio), "IPRatio");
  EXPECT_EQ(feature_name(Feature::RegionalSpread), "RegionalSpread");
}

}  // namespace
}  // namespace fluxgate
