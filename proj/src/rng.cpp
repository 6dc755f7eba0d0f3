#include "microsynth/rng.hpp"

#include <algorithm>
#include <cstddef>

namespace microsynth {

std::size_t pick_by_cumulative_weight(const std::vector<double>& cum, double u) {
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  const std::size_t idx = static_cast<std::size_t>(it - cum.begin());
  return idx < cum.size() ? idx : cum.size() - 1;
}

}  // namespace microsynth
