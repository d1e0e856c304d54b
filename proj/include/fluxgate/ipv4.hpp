#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace fluxgate {

/// IPv4 address as a host-order 32-bit integer; ordering is numeric.
struct Ipv4 {
  std::uint32_t value = 0;

  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t v) : value(v) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) |
              std::uint32_t{d}) {}

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;
};

/// Strict dotted-quad parse: four decimal octets, no leading zeros, no
/// surrounding whitespace.
std::optional<Ipv4> parse_ipv4(std::string_view text);

std::string to_string(Ipv4 ip);

}  // namespace fluxgate
