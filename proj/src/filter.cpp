#include "microsynth/filter.hpp"

#include <algorithm>
#include <cmath>

#include "microsynth/errors.hpp"

namespace microsynth {

FilterAtom FilterAtom::negated() const {
  FilterAtom out = *this;
  switch (op) {
    case FilterOp::eq: out.op = FilterOp::ne; break;
    case FilterOp::ne: out.op = FilterOp::eq; break;
    case FilterOp::in_set: out.op = FilterOp::not_in_set; break;
    case FilterOp::not_in_set: out.op = FilterOp::in_set; break;
    case FilterOp::in_range: out.op = FilterOp::not_in_range; break;
    case FilterOp::not_in_range: out.op = FilterOp::in_range; break;
  }
  return out;
}

CompiledPredicate::CompiledPredicate(const Table& table, const FilterPredicate& predicate)
    : table_(&table) {
  for (const auto& atom : predicate.atoms) {
    BoundAtom b;
    b.col = table.require_column(atom.column);
    b.numeric = table.is_numeric(b.col);
    b.op = atom.op;
    b.number = atom.number;
    b.lo = atom.lo;
    b.hi = atom.hi;
    if (b.op == FilterOp::in_range || b.op == FilterOp::not_in_range) {
      if (!b.numeric) {
        throw ConfigError("range predicate on categorical column '" + atom.column + "'");
      }
      if (!(b.lo <= b.hi)) {
        throw ConfigError("range bounds out of order for column '" + atom.column + "'");
      }
    } else if (b.numeric) {
      if (b.op == FilterOp::in_set || b.op == FilterOp::not_in_set) {
        throw ConfigError("set predicate on numeric column '" + atom.column +
                          "' (use a range)");
      }
      if (!atom.number_set) {
        throw ConfigError("eq/ne on numeric column '" + atom.column +
                          "' needs a numeric operand");
      }
    } else {
      // Operand codes not present in the schema simply never match.
      const auto& sch = table.schema(b.col);
      auto add = [&](const std::string& code) {
        const auto idx = sch.category_index(code);
        if (idx >= 0) b.category_ids.push_back(idx);
      };
      if (b.op == FilterOp::eq || b.op == FilterOp::ne) {
        if (atom.values.size() != 1) {
          throw ConfigError("eq/ne on column '" + atom.column + "' needs exactly one value");
        }
        add(atom.values[0]);
      } else {
        for (const auto& v : atom.values) add(v);
      }
      std::sort(b.category_ids.begin(), b.category_ids.end());
    }
    atoms_.push_back(std::move(b));
  }
}

bool CompiledPredicate::matches(std::size_t row) const {
  for (const auto& a : atoms_) {
    bool hit;
    if (a.numeric) {
      const double x = table_->numeric(a.col)[row];
      switch (a.op) {
        case FilterOp::eq: hit = (x == a.number); break;
        case FilterOp::ne: hit = (x != a.number); break;
        case FilterOp::in_range: hit = (x >= a.lo && x <= a.hi); break;
        case FilterOp::not_in_range: hit = !(x >= a.lo && x <= a.hi); break;
        default: hit = false; break;
      }
    } else {
      const std::int32_t x = table_->categorical(a.col)[row];
      const bool in = std::binary_search(a.category_ids.begin(), a.category_ids.end(), x);
      switch (a.op) {
        case FilterOp::eq:
        case FilterOp::in_set: hit = in; break;
        case FilterOp::ne:
        case FilterOp::not_in_set: hit = !in; break;
        default: hit = false; break;
      }
    }
    if (!hit) return false;
  }
  return true;
}

std::vector<char> filter_mask(const Table& table, const FilterPredicate& predicate) {
  const CompiledPredicate compiled(table, predicate);
  std::vector<char> mask(table.n_rows());
  for (std::size_t r = 0; r < table.n_rows(); ++r) mask[r] = compiled.matches(r) ? 1 : 0;
  return mask;
}

Table filter_rows(const Table& table, const FilterPredicate& predicate) {
  const auto mask = filter_mask(table, predicate);
  std::vector<std::uint32_t> rows;
  for (std::size_t r = 0; r < mask.size(); ++r) {
    if (mask[r]) rows.push_back(static_cast<std::uint32_t>(r));
  }
  return table.select_rows(rows);
}

}  // namespace microsynth
