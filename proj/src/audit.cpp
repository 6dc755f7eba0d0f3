#include "microsynth/audit.hpp"

#include <unordered_map>

#include "microsynth/errors.hpp"

namespace microsynth {

namespace {

std::string tuple_key(const Table& t, const std::vector<std::size_t>& cols, std::size_t row) {
  std::string key;
  for (auto c : cols) {
    key += t.cell_text(row, c);
    key += '\x1f';  // unit separator keeps adjacent cells unambiguous
  }
  return key;
}

}  // namespace

ExactMatchAudit exact_match_audit(const Table& original, const Table& synthetic,
                                  const std::vector<std::string>& quasi_identifiers) {
  if (quasi_identifiers.empty()) {
    throw ConfigError("exact-match audit needs at least one quasi-identifier column");
  }
  std::vector<std::size_t> orig_cols, synth_cols;
  for (const auto& name : quasi_identifiers) {
    orig_cols.push_back(static_cast<std::size_t>(original.require_column(name)));
    synth_cols.push_back(static_cast<std::size_t>(synthetic.require_column(name)));
  }

  std::unordered_map<std::string, std::size_t> counts;
  counts.reserve(original.n_rows());
  for (std::size_t r = 0; r < original.n_rows(); ++r) {
    ++counts[tuple_key(original, orig_cols, r)];
  }

  ExactMatchAudit out;
  out.quasi_identifiers = quasi_identifiers;
  out.n_synthetic = synthetic.n_rows();
  for (std::size_t r = 0; r < synthetic.n_rows(); ++r) {
    const auto it = counts.find(tuple_key(synthetic, synth_cols, r));
    if (it == counts.end()) continue;
    ++out.n_matching;
    if (it->second == 1) ++out.n_matching_unique;
  }
  if (out.n_synthetic > 0) {
    out.match_rate = static_cast<double>(out.n_matching) / static_cast<double>(out.n_synthetic);
    out.unique_match_rate =
        static_cast<double>(out.n_matching_unique) / static_cast<double>(out.n_synthetic);
  }
  return out;
}

}  // namespace microsynth
