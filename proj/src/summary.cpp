#include "microsynth/summary.hpp"

#include <algorithm>
#include <cmath>

#include "microsynth/errors.hpp"

namespace microsynth {

std::vector<ColumnSummary> summarize(const Table& table,
                                     const std::vector<std::string>& columns,
                                     bool weighted) {
  if (weighted && !table.weighted()) {
    throw ConfigError("weighted summary requested but the table has no weight column");
  }
  std::vector<std::string> names = columns;
  if (names.empty()) {
    for (const auto& s : table.schema()) names.push_back(s.name);
  }

  std::vector<ColumnSummary> out;
  out.reserve(names.size());
  for (const auto& name : names) {
    const auto col = static_cast<std::size_t>(table.require_column(name));
    const auto& sch = table.schema(col);
    ColumnSummary s;
    s.name = sch.name;
    s.kind = sch.kind;

    if (sch.kind == ColumnKind::numeric) {
      const auto& xs = table.numeric(col);
      double wsum = 0.0;
      double wx = 0.0;
      for (std::size_t r = 0; r < xs.size(); ++r) {
        if (std::isnan(xs[r])) {
          ++s.n_missing;
          continue;
        }
        const double w = weighted ? table.weight(r) : 1.0;
        wsum += w;
        wx += w * xs[r];
        ++s.n;
      }
      s.weight_total = wsum;
      s.mean = wsum > 0.0 ? wx / wsum : std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto& xs = table.categorical(col);
      std::vector<double> mass(sch.categories.size(), 0.0);
      double wsum = 0.0;
      for (std::size_t r = 0; r < xs.size(); ++r) {
        const double w = weighted ? table.weight(r) : 1.0;
        mass[static_cast<std::size_t>(xs[r])] += w;
        wsum += w;
        ++s.n;
      }
      s.weight_total = wsum;
      s.shares.reserve(sch.categories.size());
      for (std::size_t c = 0; c < sch.categories.size(); ++c) {
        CategoryShare cs;
        cs.code = sch.categories[c];
        cs.share = wsum > 0.0 ? mass[c] / wsum : 0.0;
        cs.is_nr = std::find(sch.nr_codes.begin(), sch.nr_codes.end(), cs.code) !=
                   sch.nr_codes.end();
        s.shares.push_back(std::move(cs));
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace microsynth
