#include "fluxgate/censys_store.hpp"

#include <algorithm>

#include <json.hpp>

#include "binary_io.hpp"
#include "fluxgate/errors.hpp"
#include "ingest_common.hpp"

namespace fluxgate {

namespace {

constexpr std::string_view kMagic = "FXGS\x01";

using HostPort = ScanStore::HostPortPair;

bool parse_snapshot_line(std::string_view line, std::vector<HostPort>& out) {
  nlohmann::json doc = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return false;
  const auto ip_field = doc.find("ip");
  const auto ports_field = doc.find("ports");
  if (ip_field == doc.end() || !ip_field->is_string()) return false;
  if (ports_field == doc.end() || !ports_field->is_array()) return false;
  const auto ip = parse_ipv4(ip_field->get_ref<const std::string&>());
  if (!ip) return false;

  const std::size_t mark = out.size();
  out.push_back({ip->value, 0});
  for (const auto& p : *ports_field) {
    if (!p.is_number_integer()) {
      out.resize(mark);
      return false;
    }
    const auto port = p.get<std::int64_t>();
    if (port < 1 || port > 65535) {
      out.resize(mark);
      return false;
    }
    out.push_back({ip->value, static_cast<std::uint16_t>(port)});
  }
  return true;
}

ScanStore build_store(const detail::LineFeed& feed, const IngestOptions& options,
                      IngestStats* stats);

}  // namespace

ScanStore ScanStore::ingest(std::istream& in, const IngestOptions& options, IngestStats* stats) {
  return build_store([&](const LineVisitor& visit) { for_each_line(in, visit); }, options, stats);
}

ScanStore ScanStore::ingest_file(const std::filesystem::path& path, const IngestOptions& options,
                                 IngestStats* stats) {
  return build_store([&](const LineVisitor& visit) { for_each_line(path, visit); }, options, stats);
}

namespace {

ScanStore build_store(const detail::LineFeed& feed, const IngestOptions& options,
                      IngestStats* stats) {
  std::vector<HostPort> pairs;
  detail::LineIngest counter(options, stats);
  feed([&](std::string_view line) {
    counter.handle(line, [&](std::string_view l) { return parse_snapshot_line(l, pairs); });
  });

  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  ScanStore store = ScanStore::from_pairs(pairs);
  counter.finish(store.size());
  return store;
}

}  // namespace

ScanStore ScanStore::from_pairs(std::span<const HostPortPair> pairs) {
  ScanStore store;
  store.ips_.reserve(pairs.size());
  store.ports_.reserve(pairs.size());
  for (const auto& [ip, port] : pairs) {
    if (store.ips_.empty() || store.ips_.back() != ip) {
      store.ips_.push_back(ip);
      store.offsets_.push_back(store.offsets_.back());
    }
    if (port != 0) {
      store.ports_.push_back(port);
      ++store.offsets_.back();
    }
  }
  store.ips_.shrink_to_fit();
  store.ports_.shrink_to_fit();
  return store;
}

void ScanStore::save(const std::filesystem::path& path) const {
  detail::ByteWriter body;
  body.put_array<std::uint32_t>(ips_);
  body.put_array<std::uint32_t>(offsets_);
  body.put_array<std::uint16_t>(ports_);
  detail::write_binary_file(path, detail::seal(kMagic, body));
}

ScanStore ScanStore::load(const std::filesystem::path& path) {
  const auto bytes = detail::read_binary_file(path);
  detail::ByteReader in(detail::unseal(kMagic, bytes));
  ScanStore store;
  store.ips_ = in.get_array<std::uint32_t>();
  store.offsets_ = in.get_array<std::uint32_t>();
  store.ports_ = in.get_array<std::uint16_t>();
  if (!in.at_end() || store.offsets_.size() != store.ips_.size() + 1 ||
      store.offsets_.back() != store.ports_.size() ||
      !std::is_sorted(store.offsets_.begin(), store.offsets_.end())) {
    throw Error(ErrorCode::CorruptModel, "inconsistent scan store image " + path.string());
  }
  return store;
}

bool ScanStore::is_compiled_file(const std::filesystem::path& path) {
  return detail::has_magic(path, kMagic);
}

ScanStore ScanStore::open(const std::filesystem::path& path, const IngestOptions& options) {
  return is_compiled_file(path) ? load(path) : ingest_file(path, options);
}

std::ptrdiff_t ScanStore::find(Ipv4 ip) const {
  const auto it = std::lower_bound(ips_.begin(), ips_.end(), ip.value);
  if (it == ips_.end() || *it != ip.value) return -1;
  return it - ips_.begin();
}

ScanLookupResult ScanStore::lookup(std::span<const Ipv4> ips) const {
  if (ips.empty()) throw Error(ErrorCode::EmptyQuery, "scan lookup with no addresses");
  ScanLookupResult result;
  result.queried = ips.size();
  std::vector<std::uint16_t> seen;
  for (const Ipv4 ip : ips) {
    const auto idx = find(ip);
    if (idx < 0) continue;
    ++result.found;
    const auto i = static_cast<std::size_t>(idx);
    seen.insert(seen.end(), ports_.begin() + offsets_[i], ports_.begin() + offsets_[i + 1]);
  }
  std::sort(seen.begin(), seen.end());
  result.distinct_ports =
      static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
  return result;
}

bool ScanStore::contains(Ipv4 ip) const { return find(ip) >= 0; }

std::span<const std::uint16_t> ScanStore::ports_of(Ipv4 ip) const {
  const auto idx = find(ip);
  if (idx < 0) return {};
  const auto i = static_cast<std::size_t>(idx);
  return std::span<const std::uint16_t>(ports_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

std::size_t ScanStore::memory_bytes() const noexcept {
  return ips_.capacity() * sizeof(std::uint32_t) + offsets_.capacity() * sizeof(std::uint32_t) +
         ports_.capacity() * sizeof(std::uint16_t);
}

}  // namespace fluxgate
