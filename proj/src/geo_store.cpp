#include "fluxgate/geo_store.hpp"

#include <algorithm>
#include <charconv>

#include "binary_io.hpp"
#include "fluxgate/errors.hpp"
#include "ingest_common.hpp"

namespace fluxgate {

namespace {

constexpr std::string_view kMagic = "FXGG\x01";

std::string describe(const GeoRange& r) {
  return to_string(r.start) + "-" + to_string(r.end);
}

std::optional<GeoRange> parse_range_line(std::string_view line) {
  std::array<std::string_view, 4> fields;
  for (auto& field : fields) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) return std::nullopt;
    field = line.substr(0, tab);
    line.remove_prefix(tab + 1);
  }
  // The remainder is the free-text AS description; it is not stored.

  GeoRange range;
  const auto start = parse_ipv4(fields[0]);
  const auto end = parse_ipv4(fields[1]);
  if (!start || !end || end->value < start->value) return std::nullopt;
  range.start = *start;
  range.end = *end;

  const auto asn_text = fields[2];
  const auto [ptr, ec] = std::from_chars(asn_text.data(), asn_text.data() + asn_text.size(), range.asn);
  if (asn_text.empty() || ec != std::errc{} || ptr != asn_text.data() + asn_text.size()) {
    return std::nullopt;
  }

  const auto country = CountryCode::parse(fields[3]);
  if (!country) return std::nullopt;
  range.country = *country;
  return range;
}

GeoStore build_store(const detail::LineFeed& feed, const IngestOptions& options, IngestStats* stats) {
  std::vector<GeoRange> ranges;
  detail::LineIngest counter(options, stats);
  feed([&](std::string_view line) {
    counter.handle(line, [&](std::string_view l) {
      auto range = parse_range_line(l);
      if (range) ranges.push_back(*range);
      return range.has_value();
    });
  });
  GeoStore store = GeoStore::from_ranges(std::move(ranges));
  counter.finish(store.size());
  return store;
}

}  // namespace

std::optional<CountryCode> CountryCode::parse(std::string_view text) {
  if (text == "None") return CountryCode{};
  if (text.size() != 2) return std::nullopt;
  CountryCode code;
  for (std::size_t i = 0; i < 2; ++i) {
    char c = text[i];
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    if (c < 'A' || c > 'Z') return std::nullopt;
    code.chars_[i] = c;
  }
  return code;
}

std::string CountryCode::str() const {
  if (is_none()) return "None";
  return std::string(chars_.data(), 2);
}

GeoStore GeoStore::from_ranges(std::vector<GeoRange> ranges) {
  std::sort(ranges.begin(), ranges.end(), [](const GeoRange& a, const GeoRange& b) {
    return a.start != b.start ? a.start < b.start : a.end < b.end;
  });
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].start <= ranges[i - 1].end) {
      throw Error(ErrorCode::OverlappingRanges,
                  describe(ranges[i - 1]) + " overlaps " + describe(ranges[i]));
    }
  }
  GeoStore store;
  store.ranges_ = std::move(ranges);
  return store;
}

GeoStore GeoStore::ingest(std::istream& in, const IngestOptions& options, IngestStats* stats) {
  return build_store([&](const LineVisitor& visit) { for_each_line(in, visit); }, options, stats);
}

GeoStore GeoStore::ingest_file(const std::filesystem::path& path, const IngestOptions& options,
                               IngestStats* stats) {
  return build_store([&](const LineVisitor& visit) { for_each_line(path, visit); }, options, stats);
}

void GeoStore::save(const std::filesystem::path& path) const {
  std::vector<std::uint32_t> starts, ends, asns;
  std::vector<std::uint16_t> countries;
  for (const auto& r : ranges_) {
    starts.push_back(r.start.value);
    ends.push_back(r.end.value);
    asns.push_back(r.asn);
    countries.push_back(r.country.packed());
  }
  detail::ByteWriter body;
  body.put_array<std::uint32_t>(starts);
  body.put_array<std::uint32_t>(ends);
  body.put_array<std::uint32_t>(asns);
  body.put_array<std::uint16_t>(countries);
  detail::write_binary_file(path, detail::seal(kMagic, body));
}

GeoStore GeoStore::load(const std::filesystem::path& path) {
  const auto bytes = detail::read_binary_file(path);
  detail::ByteReader in(detail::unseal(kMagic, bytes));
  const auto starts = in.get_array<std::uint32_t>();
  const auto ends = in.get_array<std::uint32_t>();
  const auto asns = in.get_array<std::uint32_t>();
  const auto countries = in.get_array<std::uint16_t>();
  const std::size_t n = starts.size();
  if (!in.at_end() || ends.size() != n || asns.size() != n || countries.size() != n) {
    throw Error(ErrorCode::CorruptModel, "inconsistent geo store image " + path.string());
  }
  std::vector<GeoRange> ranges(n);
  for (std::size_t i = 0; i < n; ++i) {
    ranges[i].start = Ipv4{starts[i]};
    ranges[i].end = Ipv4{ends[i]};
    ranges[i].asn = asns[i];
    if (countries[i] != 0) {
      const char code[2] = {static_cast<char>(countries[i] >> 8), static_cast<char>(countries[i] & 0xff)};
      const auto country = CountryCode::parse(std::string_view(code, 2));
      if (!country) throw Error(ErrorCode::CorruptModel, "bad country code in " + path.string());
      ranges[i].country = *country;
    }
  }
  return from_ranges(std::move(ranges));
}

bool GeoStore::is_compiled_file(const std::filesystem::path& path) {
  return detail::has_magic(path, kMagic);
}

GeoStore GeoStore::open(const std::filesystem::path& path, const IngestOptions& options) {
  return is_compiled_file(path) ? load(path) : ingest_file(path, options);
}

std::optional<GeoLocation> GeoStore::locate(Ipv4 ip) const {
  // Last range whose start is <= ip.
  const auto it = std::upper_bound(ranges_.begin(), ranges_.end(), ip,
                                   [](Ipv4 value, const GeoRange& r) { return value < r.start; });
  if (it == ranges_.begin()) return std::nullopt;
  const GeoRange& range = *std::prev(it);
  if (ip > range.end || range.asn == 0 || range.country.is_none()) return std::nullopt;
  return GeoLocation{range.asn, range.country};
}

GeoSummary GeoStore::summarize(std::span<const Ipv4> ips) const {
  if (ips.empty()) throw Error(ErrorCode::EmptyQuery, "geo summary with no addresses");
  GeoSummary summary;
  summary.queried = ips.size();
  std::vector<std::uint32_t> asns;
  std::vector<std::uint16_t> countries;
  for (const Ipv4 ip : ips) {
    const auto loc = locate(ip);
    if (!loc) {
      ++summary.unknown;
      continue;
    }
    asns.push_back(loc->asn);
    countries.push_back(loc->country.packed());
  }
  std::sort(asns.begin(), asns.end());
  std::sort(countries.begin(), countries.end());
  summary.distinct_asns = static_cast<std::size_t>(std::unique(asns.begin(), asns.end()) - asns.begin());
  summary.distinct_countries =
      static_cast<std::size_t>(std::unique(countries.begin(), countries.end()) - countries.begin());
  return summary;
}

}  // namespace fluxgate
