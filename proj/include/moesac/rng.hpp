#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>

namespace moesac {

namespace detail {

// splitmix64 finalizer, used to turn (seed, stream tag) pairs into
// well-separated engine seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

// Seeded random stream. The engine is std::mt19937_64 (bit-exact by the
// standard); the real-valued draws are built directly on raw 64-bit output
// so that sequences do not depend on the standard library's distribution
// implementations.
//
// Single-owner by convention: never share one stream between threads.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Independent child stream identified by a tag. Derivation depends only on
  // this stream's seed, not on how much has been drawn from it.
  SeededRng derive(std::uint64_t stream_tag) const {
    return SeededRng(detail::mix64(seed_ ^ detail::mix64(stream_tag)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform_real(double lo, double hi) {
    return lo + uniform01() * (hi - lo);
  }

  // Inclusive integer range. The modulo bias is < range/2^64 and irrelevant
  // for the ranges used here.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Box-Muller; always consumes exactly two 64-bit draws.
  double normal(double mean, double stddev) {
    double u1 = uniform01();
    const double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Categorical draw; probs must sum to 1. Accumulated float slack falls
  // through to the last index.
  std::size_t categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("categorical: empty");
    const double u = uniform01();
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return i;
    }
    return probs.size() - 1;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace moesac
