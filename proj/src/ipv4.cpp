#include "fluxgate/ipv4.hpp"

#include <array>

namespace fluxgate {

std::optional<Ipv4> parse_ipv4(std::string_view text) {
  std::uint32_t value = 0;
  std::size_t pos = 0;
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (pos >= text.size() || text[pos] != '.') return std::nullopt;
      ++pos;
    }
    const std::size_t begin = pos;
    std::uint32_t part = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9' && pos - begin < 3) {
      part = part * 10 + static_cast<std::uint32_t>(text[pos] - '0');
      ++pos;
    }
    const std::size_t digits = pos - begin;
    if (digits == 0 || part > 255) return std::nullopt;
    if (digits > 1 && text[begin] == '0') return std::nullopt;
    value = (value << 8) | part;
  }
  if (pos != text.size()) return std::nullopt;
  return Ipv4{value};
}

std::string to_string(Ipv4 ip) {
  std::string out;
  out.reserve(15);
  for (int shift = 24; shift >= 0; shift -= 8) {
    out += std::to_string((ip.value >> shift) & 0xffu);
    if (shift > 0) out += '.';
  }
  return out;
}

}  // namespace fluxgate
