#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace vms {

// Counter-based generator: the k-th output (k = 1, 2, ...) is
// finalize(seed + k * 0x9E3779B97F4A7C15), where finalize is the SplitMix64
// output mix. The stream is therefore exactly SplitMix64 seeded with `seed`,
// and can be reproduced in any language from the two constants below.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  static constexpr std::uint64_t finalize(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
    ++counter_;
    return finalize(seed_ + counter_ * kGolden);
  }

  // Unbiased integer in [0, bound) by rejection of the low remainder range.
  std::uint64_t below(std::uint64_t bound);

  // 53-bit uniform double in [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (consumes two outputs per call).
  double normal() noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Independent substream keyed by `stream`; does not advance this generator.
  CounterRng derive(std::uint64_t stream) const noexcept {
    return CounterRng(finalize(seed_ ^ finalize(stream + kGolden)));
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// In-place Fisher-Yates, walking i from n-1 down to 1 and swapping with
// below(i + 1). This is the only shuffle used anywhere in the library.
template <typename T>
void fisher_yates(std::span<T> items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace vms
