#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace parlstance {

/// Seeded generator used for every shuffle in the project.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Standard distributions and std::shuffle are not portable across
/// library implementations, so bounded draws use rejection sampling on the
/// raw 64-bit output and shuffling is an explicit Fisher-Yates pass.
class SplitRng {
public:
  explicit SplitRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, bound]. Rejects draws from the incomplete top
  /// bucket so every value is equally likely.
  std::uint64_t uniform_inclusive(std::uint64_t bound) {
    if (bound == UINT64_MAX) return engine_();
    const std::uint64_t range = bound + 1;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return draw % range;
  }

  /// Fisher-Yates (Durstenfeld): for i = n-1 down to 1, swap i with a
  /// uniform j in [0, i].
  template <typename T>
  void shuffle(std::vector<T>& items) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
      auto j = static_cast<std::size_t>(uniform_inclusive(i));
      std::swap(items[i], items[j]);
    }
  }

  /// Shuffled permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(idx);
    return idx;
  }

  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

}  // namespace parlstance
