#include "fluxgate/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "fluxgate/errors.hpp"
#include "fluxgate/random.hpp"

namespace fluxgate {

namespace {

using nlohmann::json;

constexpr std::uint32_t kBlockBase = 0x14000000;  // 20.0.0.0
constexpr std::uint32_t kBlockSize = 1u << 16;
constexpr std::uint32_t kHostingAsnBase = 20000;
constexpr std::uint32_t kResidentialAsnBase = 100000;

constexpr std::array<std::string_view, 48> kResidentialCountries = {
    "US", "BR", "IN", "RU", "UA", "CN", "VN", "TR", "ID", "MX", "AR", "CO", "PE", "RO", "PL", "IT",
    "ES", "FR", "DE", "GB", "EG", "MA", "NG", "ZA", "KE", "PK", "BD", "TH", "MY", "PH", "KR", "TW",
    "IR", "IQ", "SA", "KZ", "BY", "RS", "BG", "HU", "CZ", "GR", "PT", "CL", "VE", "EC", "DZ", "TN"};
constexpr std::array<std::string_view, 16> kHostingCountries = {
    "US", "US", "US", "US", "US", "DE", "DE", "NL", "NL", "GB", "FR", "IE", "JP", "SG", "CA", "SE"};
constexpr std::array<std::uint16_t, 20> kAgentPorts = {80,   443,  22,   23,   21,   25,   445,
                                                       1433, 3389, 5432, 8080, 8443, 7547, 3306,
                                                       139,  135,  5900, 8000, 53,   110};
constexpr std::array<std::string_view, 8> kFluxTlds = {"info", "ru", "com", "net", "biz", "su", "xyz", "top"};
constexpr std::array<std::string_view, 7> kLegitTlds = {"com", "org", "net", "de", "io", "co.uk", "fr"};

struct Network {
  std::uint32_t base = 0;
  std::uint32_t asn = 0;
  std::string_view country;
  std::uint32_t cursor = 1;  // next sequential host offset for hosting blocks
};

struct Host {
  bool present = false;
  std::vector<std::uint16_t> ports;
};

enum class Shape { FluxTypical, FluxConcentrated, LegitTypical, LegitDispersed };

class Generator {
 public:
  explicit Generator(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    const std::size_t total = cfg.hosting_networks + cfg.residential_networks;
    for (std::size_t g = 0; g < total; ++g) {
      Network net;
      net.base = kBlockBase + static_cast<std::uint32_t>(g) * kBlockSize;
      const bool hosting = g < cfg.hosting_networks;
      if (hosting) {
        net.asn = kHostingAsnBase + static_cast<std::uint32_t>(g);
        net.country = kHostingCountries[rng_.below(kHostingCountries.size())];
      } else {
        net.asn = kResidentialAsnBase + static_cast<std::uint32_t>(g - cfg.hosting_networks);
        net.country = kResidentialCountries[rng_.below(kResidentialCountries.size())];
      }
      networks_.push_back(net);
    }
    unrouted_base_ = kBlockBase + static_cast<std::uint32_t>(total) * kBlockSize;
    build_agent_pool();
  }

  SynthCorpus run() {
    SynthCorpus corpus;
    for (std::size_t i = 0; i < cfg_.flux.count; ++i) {
      corpus.observations.push_back(make_domain(Label::FastFlux));
    }
    for (std::size_t i = 0; i < cfg_.legit.count; ++i) {
      corpus.observations.push_back(make_domain(Label::Legitimate));
    }
    rng_.shuffle(std::span<DnsObservation>(corpus.observations));

    for (const auto& [ip, host] : hosts_) {
      if (host.present) corpus.hosts.push_back({Ipv4{ip}, host.ports});
    }
    for (const auto& net : networks_) {
      GeoRange r;
      r.start = Ipv4{net.base};
      r.end = Ipv4{net.base + kBlockSize - 1};
      r.asn = net.asn;
      r.country = *CountryCode::parse(net.country);
      corpus.ranges.push_back(r);
    }
    if (cfg_.unknown_ip_fraction > 0.0) {
      corpus.ranges.push_back({Ipv4{unrouted_base_}, Ipv4{unrouted_base_ + kBlockSize - 1}, 0, {}});
    }
    return corpus;
  }

 private:
  const ClassProfile& profile(Label label) const {
    return label == Label::FastFlux ? cfg_.flux : cfg_.legit;
  }

  std::size_t residential_index() {
    // Skewed toward low indices.
    const double u = rng_.uniform();
    const auto r = static_cast<std::size_t>(u * u * static_cast<double>(cfg_.residential_networks));
    return cfg_.hosting_networks + std::min(r, cfg_.residential_networks - 1);
  }

  std::vector<std::uint16_t> agent_ports() {
    std::vector<std::uint16_t> ports;
    if (rng_.bernoulli(0.05)) return ports;
    const auto count = rng_.between(1, 3);
    for (std::int64_t p = 0; p < count; ++p) ports.push_back(kAgentPorts[rng_.below(kAgentPorts.size())]);
    std::sort(ports.begin(), ports.end());
    ports.erase(std::unique(ports.begin(), ports.end()), ports.end());
    return ports;
  }

  /// A fresh compromised host inside the given block.
  std::uint32_t new_agent(std::uint32_t base, double present_probability) {
    for (;;) {
      const std::uint32_t ip = base + 1 + static_cast<std::uint32_t>(rng_.below(kBlockSize - 2));
      if (hosts_.contains(ip)) continue;
      Host host;
      host.present = rng_.bernoulli(present_probability);
      if (host.present) host.ports = agent_ports();
      hosts_.emplace(ip, std::move(host));
      return ip;
    }
  }

  void build_agent_pool() {
    agents_.reserve(cfg_.agent_pool);
    for (std::size_t a = 0; a < cfg_.agent_pool; ++a) {
      const bool unrouted = rng_.bernoulli(cfg_.unknown_ip_fraction);
      const std::uint32_t base = unrouted ? unrouted_base_ : networks_[residential_index()].base;
      agents_.push_back(new_agent(base, cfg_.flux.present_probability));
    }
  }

  std::uint32_t log_uniform_ttl(const ClassProfile& p) {
    const double lo = std::log(static_cast<double>(p.ttl_min) + 1.0);
    const double hi = std::log(static_cast<double>(p.ttl_max) + 1.0);
    const double v = std::exp(rng_.uniform(lo, hi)) - 1.0;
    return std::clamp(static_cast<std::uint32_t>(std::lround(v)), p.ttl_min, p.ttl_max);
  }

  std::string domain_name(Label label) {
    const auto& p = profile(label);
    static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";
    for (;;) {
      const auto length = static_cast<std::size_t>(
          rng_.between(static_cast<std::int64_t>(p.label_length_min), static_cast<std::int64_t>(p.label_length_max)));
      std::string name;
      const std::size_t letters = label == Label::FastFlux ? kAlphabet.size() : 26;
      for (std::size_t i = 0; i < length; ++i) name += kAlphabet[rng_.below(letters)];
      name += '.';
      name += label == Label::FastFlux ? kFluxTlds[rng_.below(kFluxTlds.size())]
                                       : kLegitTlds[rng_.below(kLegitTlds.size())];
      name += '.';
      if (domains_.insert(name).second) return name;
    }
  }

  std::size_t ip_count(const ClassProfile& p) {
    return static_cast<std::size_t>(
        rng_.between(static_cast<std::int64_t>(p.ip_count_min), static_cast<std::int64_t>(p.ip_count_max)));
  }

  /// Consecutive server addresses in a hosting block sharing one port profile.
  void add_servers(Network& net, std::size_t count, const std::vector<std::uint16_t>& ports,
                   double present_probability, std::vector<Ipv4>& out) {
    for (std::size_t i = 0; i < count; ++i) {
      if (net.cursor >= kBlockSize - 1) net.cursor = 1;
      const std::uint32_t ip = net.base + net.cursor++;
      auto [it, inserted] = hosts_.try_emplace(ip);
      if (inserted) {
        it->second.present = rng_.bernoulli(present_probability);
        if (it->second.present) {
          it->second.ports = ports;
          if (rng_.bernoulli(0.03)) it->second.ports.push_back(22);
          std::sort(it->second.ports.begin(), it->second.ports.end());
        }
      }
      out.push_back(Ipv4{ip});
    }
  }

  std::vector<std::uint16_t> server_ports() {
    const double u = rng_.uniform();
    if (u < 0.55) return {443};
    if (u < 0.95) return {80, 443};
    return {80};
  }

  Network& hosting_network() { return networks_[rng_.below(cfg_.hosting_networks)]; }

  std::vector<Ipv4> addresses(Shape shape, const ClassProfile& p) {
    std::vector<Ipv4> ips;
    switch (shape) {
      case Shape::FluxTypical: {
        const std::size_t n = std::min(ip_count(p), agents_.size());
        std::unordered_set<std::size_t> picked;
        while (picked.size() < n) {
          const auto a = static_cast<std::size_t>(rng_.below(agents_.size()));
          if (picked.insert(a).second) ips.push_back(Ipv4{agents_[a]});
        }
        break;
      }
      case Shape::FluxConcentrated: {
        // Agents parked on one or two networks.
        const std::size_t n = ip_count(p);
        const std::size_t first = residential_index();
        const std::size_t second = rng_.bernoulli(0.5) ? residential_index() : first;
        for (std::size_t i = 0; i < n; ++i) {
          const auto& net = networks_[i % 2 == 0 ? first : second];
          ips.push_back(Ipv4{new_agent(net.base, cfg_.flux.present_probability)});
        }
        break;
      }
      case Shape::LegitTypical: {
        const std::size_t n = ip_count(p);
        const auto ports = server_ports();
        Network& primary = hosting_network();
        if (rng_.bernoulli(0.3) && n >= 2) {
          const std::size_t half = n / 2;
          add_servers(primary, n - half, ports, p.present_probability, ips);
          add_servers(hosting_network(), half, ports, p.present_probability, ips);
        } else {
          add_servers(primary, n, ports, p.present_probability, ips);
        }
        break;
      }
      case Shape::LegitDispersed: {
        // Multi-provider CDN edge set: many networks, uniform exposure.
        const std::size_t n = std::max<std::size_t>(ip_count(p), 8);
        const auto providers = static_cast<std::size_t>(rng_.between(3, 8));
        const auto ports = server_ports();
        std::vector<std::size_t> nets;
        while (nets.size() < providers) {
          const auto g = static_cast<std::size_t>(rng_.below(cfg_.hosting_networks));
          if (std::find(nets.begin(), nets.end(), g) == nets.end()) nets.push_back(g);
        }
        for (std::size_t i = 0; i < n; ++i) {
          add_servers(networks_[nets[i % providers]], 1, ports, p.present_probability, ips);
        }
        break;
      }
    }
    return ips;
  }

  DnsObservation make_domain(Label label) {
    const auto& p = profile(label);
    const double u = rng_.uniform();
    const bool mimic = u < p.mimic_fraction;
    const bool minority = !mimic && u < p.mimic_fraction + p.minority_fraction;

    // A mimic is generated entirely from the other class's typical profile.
    const Label look = mimic ? (label == Label::FastFlux ? Label::Legitimate : Label::FastFlux) : label;
    const auto& lp = profile(look);
    Shape shape = look == Label::FastFlux ? Shape::FluxTypical : Shape::LegitTypical;
    if (minority) shape = label == Label::FastFlux ? Shape::FluxConcentrated : Shape::LegitDispersed;

    DnsObservation obs;
    obs.label = label;
    obs.domain = domain_name(look);
    obs.a_records = addresses(shape, lp);
    switch (shape) {
      case Shape::FluxConcentrated: obs.ttl = log_uniform_ttl(cfg_.legit); break;
      case Shape::LegitDispersed: obs.ttl = log_uniform_ttl(cfg_.flux); break;
      default: obs.ttl = log_uniform_ttl(lp); break;
    }
    return obs;
  }

  const SynthConfig& cfg_;
  Rng rng_;
  std::vector<Network> networks_;
  std::uint32_t unrouted_base_ = 0;
  std::vector<std::uint32_t> agents_;
  std::map<std::uint32_t, Host> hosts_;
  std::unordered_set<std::string> domains_;
};

[[noreturn]] void invalid(const std::string& why) { throw Error(ErrorCode::InvalidDistribution, why); }

void validate_profile(const ClassProfile& p, const char* name) {
  const std::string prefix = std::string(name) + ": ";
  if (p.count < 1) invalid(prefix + "count must be >= 1");
  if (p.ip_count_min < 1 || p.ip_count_min > p.ip_count_max || p.ip_count_max > 1000) {
    invalid(prefix + "need 1 <= ip_count_min <= ip_count_max <= 1000");
  }
  if (p.ttl_min > p.ttl_max) invalid(prefix + "ttl_min exceeds ttl_max");
  if (p.label_length_min < 1 || p.label_length_min > p.label_length_max || p.label_length_max > 63) {
    invalid(prefix + "need 1 <= label_length_min <= label_length_max <= 63");
  }
  const auto probability = [&](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) invalid(prefix + what + " must lie in [0, 1]");
  };
  probability(p.present_probability, "present_probability");
  probability(p.minority_fraction, "minority_fraction");
  probability(p.mimic_fraction, "mimic_fraction");
  if (p.minority_fraction + p.mimic_fraction > 1.0) invalid(prefix + "minority + mimic fractions exceed 1");
}

void read_profile(const json& j, ClassProfile& p) {
  p.count = j.value("count", p.count);
  p.ip_count_min = j.value("ip_count_min", p.ip_count_min);
  p.ip_count_max = j.value("ip_count_max", p.ip_count_max);
  p.ttl_min = j.value("ttl_min", p.ttl_min);
  p.ttl_max = j.value("ttl_max", p.ttl_max);
  p.label_length_min = j.value("label_length_min", p.label_length_min);
  p.label_length_max = j.value("label_length_max", p.label_length_max);
  p.present_probability = j.value("present_probability", p.present_probability);
  p.minority_fraction = j.value("minority_fraction", p.minority_fraction);
  p.mimic_fraction = j.value("mimic_fraction", p.mimic_fraction);
}

json write_profile(const ClassProfile& p) {
  return {{"count", p.count},
          {"ip_count_min", p.ip_count_min},
          {"ip_count_max", p.ip_count_max},
          {"ttl_min", p.ttl_min},
          {"ttl_max", p.ttl_max},
          {"label_length_min", p.label_length_min},
          {"label_length_max", p.label_length_max},
          {"present_probability", p.present_probability},
          {"minority_fraction", p.minority_fraction},
          {"mimic_fraction", p.mimic_fraction}};
}

}  // namespace

SynthConfig default_synth_config() {
  SynthConfig cfg;
  cfg.flux.count = 5062;
  cfg.flux.ip_count_min = 5;
  cfg.flux.ip_count_max = 25;
  cfg.flux.ttl_min = 30;
  cfg.flux.ttl_max = 900;
  cfg.flux.label_length_min = 6;
  cfg.flux.label_length_max = 18;
  cfg.flux.present_probability = 0.7;
  cfg.flux.minority_fraction = 0.08;
  cfg.flux.mimic_fraction = 0.003;

  cfg.legit.count = 3087;
  cfg.legit.ip_count_min = 5;
  cfg.legit.ip_count_max = 16;
  cfg.legit.ttl_min = 60;
  cfg.legit.ttl_max = 86400;
  cfg.legit.label_length_min = 3;
  cfg.legit.label_length_max = 12;
  cfg.legit.present_probability = 0.98;
  cfg.legit.minority_fraction = 0.10;
  cfg.legit.mimic_fraction = 0.003;
  return cfg;
}

void validate(const SynthConfig& cfg) {
  validate_profile(cfg.flux, "flux");
  validate_profile(cfg.legit, "legit");
  if (cfg.hosting_networks < 8) invalid("hosting_networks must be >= 8");
  if (cfg.residential_networks < 2) invalid("residential_networks must be >= 2");
  if (cfg.hosting_networks + cfg.residential_networks > 40000) invalid("too many networks");
  if (cfg.agent_pool < cfg.flux.ip_count_max) invalid("agent_pool smaller than flux ip_count_max");
  if (cfg.agent_pool > 4'000'000) invalid("agent_pool too large");
  if (!(cfg.unknown_ip_fraction >= 0.0 && cfg.unknown_ip_fraction <= 1.0)) {
    invalid("unknown_ip_fraction must lie in [0, 1]");
  }
}

SynthConfig synth_config_from_json(const std::string& text) {
  SynthConfig cfg = default_synth_config();
  try {
    const json j = json::parse(text);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("flux")) read_profile(j.at("flux"), cfg.flux);
    if (j.contains("legit")) read_profile(j.at("legit"), cfg.legit);
    cfg.residential_networks = j.value("residential_networks", cfg.residential_networks);
    cfg.hosting_networks = j.value("hosting_networks", cfg.hosting_networks);
    cfg.agent_pool = j.value("agent_pool", cfg.agent_pool);
    cfg.unknown_ip_fraction = j.value("unknown_ip_fraction", cfg.unknown_ip_fraction);
  } catch (const json::exception& e) {
    invalid(std::string("bad synth config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::string synth_config_to_json(const SynthConfig& cfg) {
  const json j{{"seed", cfg.seed},
               {"flux", write_profile(cfg.flux)},
               {"legit", write_profile(cfg.legit)},
               {"residential_networks", cfg.residential_networks},
               {"hosting_networks", cfg.hosting_networks},
               {"agent_pool", cfg.agent_pool},
               {"unknown_ip_fraction", cfg.unknown_ip_fraction}};
  return j.dump(2);
}

SynthCorpus synth_dataset(const SynthConfig& cfg) {
  validate(cfg);
  return Generator(cfg).run();
}

std::string snapshot_line(const ScanHostRecord& host) {
  std::string line = "{\"ip\":\"" + to_string(host.ip) + "\",\"ports\":[";
  for (std::size_t i = 0; i < host.open_ports.size(); ++i) {
    if (i > 0) line += ',';
    line += std::to_string(host.open_ports[i]);
  }
  line += "]}";
  return line;
}

std::string geo_tsv_line(const GeoRange& range) {
  const std::string description =
      range.asn == 0 ? "Not routed"
      : range.asn >= kResidentialAsnBase ? "RESIDENTIAL-NET-" + std::to_string(range.asn)
                                         : "HOSTING-" + std::to_string(range.asn);
  return to_string(range.start) + '\t' + to_string(range.end) + '\t' + std::to_string(range.asn) +
         '\t' + range.country.str() + '\t' + description;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto write = [&](const char* name, const auto& items, const auto& format) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot create " + (dir / name).string());
    for (const auto& item : items) out << format(item) << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed for " + (dir / name).string());
  };
  write("observations.jsonl", corpus.observations, [](const DnsObservation& o) { return to_json_record(o); });
  write("censys.jsonl", corpus.hosts, [](const ScanHostRecord& h) { return snapshot_line(h); });
  write("geo.tsv", corpus.ranges, [](const GeoRange& r) { return geo_tsv_line(r); });
}

}  // namespace fluxgate
