#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace potl {

// 64-bit FNV-1a. Stable across platforms; used for digests, instance ids
// and per-DoF rng stream derivation.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t seed);

std::string to_hex(std::uint64_t value);

/// 128-bit content id rendered as 32 hex chars (two independent fnv streams).
std::string hash128_hex(std::string_view data);

std::string trim(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

/// Seconds since the Unix epoch <-> "YYYY-MM-DDTHH:MM:SSZ".
/// Only the UTC "Z" form is accepted; fractional seconds are truncated.
std::optional<std::int64_t> parse_iso8601(std::string_view text);
std::string format_iso8601(std::int64_t epoch_seconds);

std::string read_file(const std::string& path);  // throws IoError
void write_file(const std::string& path, std::string_view content);

std::string html_escape(std::string_view text);

}  // namespace potl
