#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace fairsel::rng {

/// SplitMix64 finalizer. Also the mixing function of the counter-based stream.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: the value at position `counter` of the stream
/// keyed by `key`. Independent of evaluation order.
constexpr std::uint64_t counter_bits(std::uint64_t key,
                                     std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(key) ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
}

/// Top 53 bits mapped to [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double counter_uniform(std::uint64_t key,
                                 std::uint64_t counter) noexcept {
  return to_unit(counter_bits(key, counter));
}

/// Derives an independent child seed from a parent seed and a path of tags.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a,
                                    std::uint64_t b = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(parent) ^ a) + b);
}

/// Sequential engine. mt19937_64's output sequence is fixed by the standard;
/// the conversions below are done by hand so results do not depend on the
/// standard library's distribution implementations.
class Engine {
 public:
  explicit Engine(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  double uniform() { return to_unit(gen_()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return x % n;
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace fairsel::rng
