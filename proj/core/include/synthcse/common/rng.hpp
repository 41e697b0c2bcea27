#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace synthcse {

// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

// Seeded generator with platform-stable draws. std::mt19937_64 output is
// fully specified by the standard, but the std:: distributions are not, so
// the conversions below are done by hand.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n). Modulo bias is below 2^-40 for the sizes used here.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

  // k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace synthcse
