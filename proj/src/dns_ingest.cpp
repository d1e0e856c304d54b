#include "fluxgate/dns_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "fluxgate/errors.hpp"

namespace fluxgate {

namespace {

using nlohmann::json;

constexpr std::uint16_t kTypeA = 1;
constexpr std::uint16_t kTypeCname = 5;
constexpr std::uint16_t kClassIn = 1;
constexpr std::size_t kHeaderSize = 12;
constexpr std::size_t kMaxNameLength = 255;

[[noreturn]] void malformed(const std::string& why) { throw Error(ErrorCode::MalformedRecord, why); }

void append_unique(std::vector<Ipv4>& out, std::unordered_set<std::uint32_t>& seen, Ipv4 ip) {
  if (seen.insert(ip.value).second) out.push_back(ip);
}

void require_domain(const std::string& domain) {
  if (canonical_domain(domain).empty()) malformed("empty domain");
}

// Bounds-checked big-endian reader over a DNS message.
class WireReader {
 public:
  explicit WireReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t pos() const noexcept { return pos_; }
  void seek(std::size_t pos) {
    if (pos > data_.size()) malformed("offset past end of message");
    pos_ = pos;
  }
  void skip(std::size_t n) { seek(need(n) + n); }

  std::uint8_t u8() { return data_[need(1)]; }
  std::uint16_t u16() {
    const std::size_t p = need(2);
    return static_cast<std::uint16_t>((data_[p] << 8) | data_[p + 1]);
  }
  std::uint32_t u32() {
    const std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }

  /// Reads a possibly compressed name starting at the cursor and leaves the
  /// cursor after its in-place encoding. Compression pointers must point
  /// strictly backwards, which bounds the walk.
  std::string name() {
    std::string out;
    std::size_t cursor = pos_;
    std::size_t resume = 0;
    bool jumped = false;
    std::size_t wire_length = 0;
    for (;;) {
      if (cursor >= data_.size()) malformed("name runs past end of message");
      const std::uint8_t len = data_[cursor];
      if ((len & 0xc0) == 0xc0) {
        if (cursor + 1 >= data_.size()) malformed("truncated compression pointer");
        const std::size_t target = static_cast<std::size_t>((len & 0x3f) << 8) | data_[cursor + 1];
        if (target >= cursor) malformed("forward compression pointer");
        if (!jumped) resume = cursor + 2;
        jumped = true;
        cursor = target;
        continue;
      }
      if ((len & 0xc0) != 0) malformed("unsupported label type");
      if (len == 0) {
        ++cursor;
        break;
      }
      if (cursor + 1 + len > data_.size()) malformed("label runs past end of message");
      wire_length += len + 1u;
      if (wire_length + 1 > kMaxNameLength) malformed("name longer than 255 octets");
      for (std::size_t i = 0; i < len; ++i) append_label_byte(out, data_[cursor + 1 + i]);
      out += '.';
      cursor += 1u + len;
    }
    if (out.empty()) out = ".";
    pos_ = jumped ? resume : cursor;
    return out;
  }

 private:
  std::size_t need(std::size_t n) {
    if (data_.size() - pos_ < n) malformed("truncated message");
    const std::size_t p = pos_;
    pos_ += n;
    return p;
  }

  // Presentation-format escaping of bytes that are not plain hostname text.
  static void append_label_byte(std::string& out, std::uint8_t b) {
    if (b > 0x20 && b < 0x7f && b != '.' && b != '\\') {
      out += static_cast<char>(b);
      return;
    }
    out += '\\';
    out += static_cast<char>('0' + b / 100);
    out += static_cast<char>('0' + (b / 10) % 10);
    out += static_cast<char>('0' + b % 10);
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

struct AnswerRecord {
  std::string owner;  // canonical
  std::uint16_t type = 0;
  std::uint32_t ttl = 0;
  Ipv4 address;
  std::string cname_target;  // canonical
};

}  // namespace

std::string canonical_domain(std::string_view domain) {
  if (!domain.empty() && domain.back() == '.') domain.remove_suffix(1);
  std::string out(domain);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

DnsObservation parse_json_record(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) malformed("record is not a JSON object");

  DnsObservation obs;
  const auto domain = doc.find("domain");
  if (domain == doc.end() || !domain->is_string()) malformed("missing string field 'domain'");
  obs.domain = domain->get<std::string>();
  require_domain(obs.domain);

  const auto ttl = doc.find("ttl");
  if (ttl == doc.end() || !ttl->is_number_integer()) malformed("missing integer field 'ttl'");
  if (ttl->is_number_unsigned()) {
    const auto v = ttl->get<std::uint64_t>();
    if (v > std::numeric_limits<std::uint32_t>::max()) malformed("ttl out of range");
    obs.ttl = static_cast<std::uint32_t>(v);
  } else {
    const auto v = ttl->get<std::int64_t>();
    if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) malformed("ttl out of range");
    obs.ttl = static_cast<std::uint32_t>(v);
  }

  const auto records = doc.find("a_records");
  if (records == doc.end() || !records->is_array()) malformed("missing array field 'a_records'");
  std::unordered_set<std::uint32_t> seen;
  for (const auto& entry : *records) {
    if (!entry.is_string()) malformed("a_records entry is not a string");
    const auto ip = parse_ipv4(entry.get_ref<const std::string&>());
    if (!ip) malformed("invalid IPv4 address '" + entry.get<std::string>() + "'");
    append_unique(obs.a_records, seen, *ip);
  }
  if (obs.a_records.empty()) throw Error(ErrorCode::NoARecords, "a_records is empty");

  const auto label = doc.find("label");
  if (label != doc.end() && !label->is_null()) {
    if (!label->is_string()) malformed("label is not a string");
    const auto& text = label->get_ref<const std::string&>();
    if (text == "fastflux") {
      obs.label = Label::FastFlux;
    } else if (text == "legit") {
      obs.label = Label::Legitimate;
    } else {
      malformed("unknown label '" + text + "'");
    }
  }
  return obs;
}

DnsObservation parse_wire_response(std::span<const std::uint8_t> message) {
  if (message.size() < kHeaderSize) malformed("message shorter than header");
  WireReader in(message);
  in.skip(2);  // id
  const std::uint16_t flags = in.u16();
  if ((flags & 0x8000) == 0) malformed("message is a query, not a response");
  const std::uint16_t qdcount = in.u16();
  const std::uint16_t ancount = in.u16();
  in.skip(4);  // nscount, arcount
  if (qdcount == 0) malformed("response carries no question");

  DnsObservation obs;
  for (std::uint16_t i = 0; i < qdcount; ++i) {
    std::string qname = in.name();
    in.skip(4);  // qtype, qclass
    if (i == 0) obs.domain = std::move(qname);
  }
  require_domain(obs.domain);

  std::vector<AnswerRecord> answers;
  answers.reserve(ancount);
  for (std::uint16_t i = 0; i < ancount; ++i) {
    AnswerRecord rr;
    rr.owner = canonical_domain(in.name());
    rr.type = in.u16();
    const std::uint16_t rclass = in.u16();
    rr.ttl = in.u32();
    // RFC 2181 section 8: a TTL with the top bit set is treated as zero.
    if (rr.ttl & 0x80000000u) rr.ttl = 0;
    const std::uint16_t rdlength = in.u16();
    const std::size_t rdata = in.pos();
    in.skip(rdlength);
    if (rclass != kClassIn) continue;
    if (rr.type == kTypeA) {
      if (rdlength != 4) malformed("A record with rdlength " + std::to_string(rdlength));
      rr.address = Ipv4(message[rdata], message[rdata + 1], message[rdata + 2], message[rdata + 3]);
    } else if (rr.type == kTypeCname) {
      WireReader target(message);
      target.seek(rdata);
      rr.cname_target = canonical_domain(target.name());
      if (target.pos() != rdata + rdlength) malformed("CNAME rdata length mismatch");
    } else {
      continue;
    }
    answers.push_back(std::move(rr));
  }

  // Names reachable from the question through CNAME answers.
  std::unordered_set<std::string> chain{canonical_domain(obs.domain)};
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& rr : answers) {
      if (rr.type == kTypeCname && chain.contains(rr.owner) && chain.insert(rr.cname_target).second) {
        grew = true;
      }
    }
  }

  std::unordered_set<std::uint32_t> seen;
  std::uint32_t min_ttl = std::numeric_limits<std::uint32_t>::max();
  for (const auto& rr : answers) {
    if (rr.type != kTypeA || !chain.contains(rr.owner)) continue;
    append_unique(obs.a_records, seen, rr.address);
    min_ttl = std::min(min_ttl, rr.ttl);
  }
  if (obs.a_records.empty()) throw Error(ErrorCode::NoARecords, "no A records for " + obs.domain);
  obs.ttl = min_ttl;
  return obs;
}

DnsObservation parse_observation(std::span<const std::uint8_t> input, RecordFormat format) {
  if (format == RecordFormat::WireFormat) return parse_wire_response(input);
  return parse_json_record(
      std::string_view(reinterpret_cast<const char*>(input.data()), input.size()));
}

std::string to_json_record(const DnsObservation& obs) {
  nlohmann::ordered_json doc;
  doc["domain"] = obs.domain;
  doc["ttl"] = obs.ttl;
  auto& records = doc["a_records"] = nlohmann::ordered_json::array();
  for (const auto ip : obs.a_records) records.push_back(to_string(ip));
  if (obs.label == Label::FastFlux) doc["label"] = "fastflux";
  if (obs.label == Label::Legitimate) doc["label"] = "legit";
  return doc.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

bool is_suspicious(const DnsObservation& obs, std::size_t threshold) {
  return obs.a_records.size() >= threshold;
}

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::FastFlux: return "fastflux";
    case Label::Legitimate: return "legit";
    case Label::Unknown: return "unknown";
  }
  return "unknown";
}

}  // namespace fluxgate
