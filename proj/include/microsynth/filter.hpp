#pragma once

#include <limits>
#include <string>
#include <vector>

#include "microsynth/table.hpp"

namespace microsynth {

enum class FilterOp {
  eq,
  ne,
  in_set,
  not_in_set,
  in_range,      // numeric, inclusive on both ends
  not_in_range,
};

struct FilterAtom {
  std::string column;
  FilterOp op = FilterOp::eq;
  // Categorical operands (codes); eq/ne use values[0].
  std::vector<std::string> values;
  // Numeric operands.
  double number = 0.0;  // eq/ne
  bool number_set = false;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  FilterAtom negated() const;
};

// Conjunction of atoms. Empty predicate matches every row.
struct FilterPredicate {
  std::vector<FilterAtom> atoms;

  FilterPredicate() = default;
  explicit FilterPredicate(std::vector<FilterAtom> a) : atoms(std::move(a)) {}
};

// Predicate resolved against a table: columns bound, operand types checked,
// range bounds validated.
class CompiledPredicate {
 public:
  CompiledPredicate(const Table& table, const FilterPredicate& predicate);
  bool matches(std::size_t row) const;

 private:
  struct BoundAtom {
    int col;
    bool numeric;
    FilterOp op;
    std::vector<std::int32_t> category_ids;  // sorted; unseen codes omitted
    double number, lo, hi;
  };
  const Table* table_;
  std::vector<BoundAtom> atoms_;
};

Table filter_rows(const Table& table, const FilterPredicate& predicate);
// 0/1 per row; shared by filters, conditional comparisons and consistency checks.
std::vector<char> filter_mask(const Table& table, const FilterPredicate& predicate);

}  // namespace microsynth
