#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "microsynth/table.hpp"

namespace microsynth {

struct ExactMatchAudit {
  std::vector<std::string> quasi_identifiers;
  std::size_t n_synthetic = 0;
  std::size_t n_matching = 0;         // synthetic rows whose tuple occurs in original
  std::size_t n_matching_unique = 0;  // ... whose tuple is unique in the original
  double match_rate = 0.0;
  double unique_match_rate = 0.0;     // the re-identification-relevant figure
};

// Compares quasi-identifier tuples by value (category code text and exact
// numeric bytes), so the two tables may encode categories in different order.
ExactMatchAudit exact_match_audit(const Table& original, const Table& synthetic,
                                  const std::vector<std::string>& quasi_identifiers);

}  // namespace microsynth
