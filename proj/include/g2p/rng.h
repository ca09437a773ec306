#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace g2p {

// 64-bit linear congruential generator (Knuth MMIX constants):
//   state <- 6364136223846793005 * state + 1442695040888963407  (mod 2^64)
// The state starts at the seed; each draw advances once and returns the new
// state. Every random decision in the library (dataset splits, parameter
// init, batch shuffling) goes through this generator so that results are
// reproducible across implementations.
class Lcg64 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg64(std::uint64_t seed = 0) : state_(seed) {}

  std::uint64_t next() {
    state_ = kMultiplier * state_ + kIncrement;
    return state_;
  }

  // Uniform integer in [0, bound) from the upper 32 bits (bound < 2^32).
  std::uint32_t below(std::uint32_t bound) {
    return static_cast<std::uint32_t>((next() >> 32) % bound);
  }

  // Uniform real in [0, 1) from the upper 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Fisher-Yates, i from n-1 down to 1, swapping i with rng.below(i + 1).
template <typename T>
void shuffle(std::vector<T>& items, Lcg64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.below(static_cast<std::uint32_t>(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace g2p
