#ifndef SEIARD_RANDOM_HPP
#define SEIARD_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace seiard {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stable per-component seed from a master seed and a component name.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view component) noexcept {
  return splitmix64(master ^ splitmix64(fnv1a(component)));
}

/// Stable seed for an indexed sub-stream, e.g. (seed, series, day).
inline constexpr std::uint64_t derive_seed(std::uint64_t master,
                                           std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

}  // namespace seiard

#endif  // SEIARD_RANDOM_HPP
