#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace microsynth {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer (Steele/Lea/Flood via Vigna). Full avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Counter-based stream: the key is derived by hashing (seed, id0, id1, ...),
// so stream(seed, column, row) can be re-created statelessly anywhere in a
// parallel schedule and always yields the same sequence.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t k = mix64(seed + kGolden);
    std::uint64_t salt = kGolden;
    for (std::uint64_t id : ids) {
      salt += kGolden;
      k = mix64(k ^ mix64(id + salt));
    }
    key_ = k;
  }

  std::uint64_t next_u64() {
    counter_ += kGolden;
    return mix64(key_ + counter_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform in [0, n). Lemire's multiply-shift rejection.
  std::uint64_t next_below(std::uint64_t n) {
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = static_cast<__uint128_t>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Index draw proportional to cumulative weights (strictly increasing,
// cum.back() = total). Returns first i with u < cum[i].
std::size_t pick_by_cumulative_weight(const std::vector<double>& cum, double u);

}  // namespace microsynth
