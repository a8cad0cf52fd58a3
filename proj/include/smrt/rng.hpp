#pragma once

// Seed derivation helpers. Every stochastic component draws from its own
// generator seeded by mixing the run seed with a stream tag, so adding or
// removing one consumer never shifts another's random stream.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace smrt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

inline std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t hash_tokens(const std::vector<int>& toks) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int t : toks) h = splitmix64(h ^ static_cast<std::uint64_t>(t));
  return h;
}

// Stream-scoped generator: seed + tag (+ optional indices).
inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view tag, std::uint64_t i0 = 0,
                                std::uint64_t i1 = 0) {
  std::uint64_t s = mix_seed(seed, hash_tag(tag));
  s = mix_seed(s, i0);
  s = mix_seed(s, i1);
  return std::mt19937_64(s);
}

}  // namespace smrt
