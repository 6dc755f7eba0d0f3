#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "microsynth/rng.hpp"
#include "microsynth/table.hpp"

namespace testfix {

struct Col {
  microsynth::ColumnSchema schema;
  microsynth::ColumnData data;
};

inline Col cat(std::string name, const std::vector<std::string>& cells,
               std::vector<std::string> categories = {}) {
  if (categories.empty()) {
    for (const auto& c : cells) {
      bool seen = false;
      for (const auto& k : categories) seen = seen || k == c;
      if (!seen) categories.push_back(c);
    }
  }
  microsynth::CategoricalColumn codes;
  codes.reserve(cells.size());
  for (const auto& c : cells) {
    std::int32_t code = -1;
    for (std::size_t i = 0; i < categories.size(); ++i) {
      if (categories[i] == c) code = static_cast<std::int32_t>(i);
    }
    if (code < 0) throw std::runtime_error("fixture cell '" + c + "' not in categories");
    codes.push_back(code);
  }
  Col col;
  col.schema.name = std::move(name);
  col.schema.kind = microsynth::ColumnKind::categorical;
  col.schema.categories = std::move(categories);
  col.data = std::move(codes);
  return col;
}

inline Col num(std::string name, std::vector<double> cells) {
  Col col;
  col.schema.name = std::move(name);
  col.schema.kind = microsynth::ColumnKind::numeric;
  col.data = microsynth::NumericColumn(std::move(cells));
  return col;
}

inline microsynth::Table table(std::vector<Col> cols, std::string weight_column = "") {
  std::vector<microsynth::ColumnSchema> schema;
  std::vector<microsynth::ColumnData> data;
  for (auto& c : cols) {
    schema.push_back(std::move(c.schema));
    data.push_back(std::move(c.data));
  }
  return microsynth::Table(std::move(schema), std::move(data), std::move(weight_column));
}

// Mixed-kind table with small category sets and small numeric value pools,
// deterministic in the seed. Cells may be NaN when nan_share > 0.
inline microsynth::Table random_table(std::uint64_t seed, std::size_t n_rows,
                                      std::size_t n_cat_cols, std::size_t n_num_cols,
                                      double nan_share = 0.0) {
  microsynth::RngStream rng(seed, {0xF1});
  std::vector<Col> cols;
  for (std::size_t c = 0; c < n_cat_cols; ++c) {
    const std::size_t n_cats = 2 + rng.next_below(5);
    std::vector<std::string> cats;
    for (std::size_t i = 0; i < n_cats; ++i) cats.push_back("k" + std::to_string(i));
    std::vector<std::string> cells;
    cells.reserve(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      cells.push_back(cats[rng.next_below(n_cats)]);
    }
    cols.push_back(cat("c" + std::to_string(c), cells, cats));
  }
  for (std::size_t c = 0; c < n_num_cols; ++c) {
    const std::size_t pool_n = 2 + rng.next_below(5);
    std::vector<double> pool;
    for (std::size_t i = 0; i < pool_n; ++i) {
      pool.push_back(static_cast<double>(rng.next_below(40)) * 0.25 - 3.0);
    }
    std::vector<double> cells;
    cells.reserve(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (nan_share > 0.0 && rng.next_unit() < nan_share) {
        cells.push_back(std::numeric_limits<double>::quiet_NaN());
      } else {
        cells.push_back(pool[rng.next_below(pool_n)]);
      }
    }
    cols.push_back(num("x" + std::to_string(c), std::move(cells)));
  }
  return table(std::move(cols));
}

// Same column names and kinds, but no value in common with t: category codes
// are renamed and numeric cells are all NaN, so every joint bin is disjoint
// from t's support.
inline microsynth::Table disjoint_partner(const microsynth::Table& t) {
  std::vector<Col> cols;
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    const auto& sch = t.schema(c);
    if (sch.kind == microsynth::ColumnKind::categorical) {
      std::vector<std::string> cats;
      for (const auto& k : sch.categories) cats.push_back("zz_" + k);
      std::vector<std::string> cells;
      cells.reserve(t.n_rows());
      for (std::int32_t code : t.categorical(c)) {
        cells.push_back(cats[static_cast<std::size_t>(code)]);
      }
      cols.push_back(cat(sch.name, cells, cats));
    } else {
      std::vector<double> cells(t.n_rows(), std::numeric_limits<double>::quiet_NaN());
      cols.push_back(num(sch.name, std::move(cells)));
    }
  }
  return table(std::move(cols));
}

// 10-variable business microdata sampler with a known dependence chain:
// region -> sector -> employer -> size_class; exporter depends on sector and
// size, wage is 10 + 2*sector + size + noise. Every variable takes at most
// 14 distinct values so binned joint distributions concentrate fast.
inline microsynth::Table business_table(std::uint64_t seed, std::size_t n_rows) {
  microsynth::RngStream rng(seed, {0xB5});
  const auto draw = [&rng](const std::vector<double>& probs) {
    double u = rng.next_unit();
    std::size_t i = 0;
    for (; i + 1 < probs.size(); ++i) {
      if (u < probs[i]) break;
      u -= probs[i];
    }
    return i;
  };
  const std::vector<std::vector<double>> sector_p = {
      {0.6, 0.3, 0.1}, {0.3, 0.5, 0.2}, {0.2, 0.3, 0.5}, {0.1, 0.2, 0.7}};
  const std::vector<std::vector<double>> employer_p = {{0.7, 0.3}, {0.45, 0.55}, {0.2, 0.8}};
  const std::vector<std::vector<double>> size_p = {
      {0.5, 0.3, 0.1, 0.07, 0.03}, {0.1, 0.2, 0.3, 0.25, 0.15}};
  const std::vector<double> size_pool = {1.0, 2.0, 3.0, 5.0, 8.0};
  const std::vector<std::vector<double>> age_p = {{0.3, 0.3, 0.2, 0.1, 0.1},
                                                  {0.1, 0.2, 0.4, 0.2, 0.1},
                                                  {0.2, 0.2, 0.2, 0.2, 0.2},
                                                  {0.05, 0.15, 0.3, 0.3, 0.2}};
  const std::vector<double> age_pool = {25.0, 35.0, 45.0, 55.0, 65.0};
  const std::vector<double> female_p = {0.5, 0.35, 0.2};
  const std::vector<double> urban_p = {0.8, 0.6, 0.4, 0.3};
  const std::vector<std::vector<double>> coop_p = {{0.6, 0.3, 0.1}, {0.2, 0.4, 0.4}};

  std::vector<std::string> region, sector, employer, exporter, female, urban, coop;
  std::vector<double> size_class, owner_age, wage;
  region.reserve(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::size_t rg = draw({0.4, 0.3, 0.2, 0.1});
    const std::size_t sc = draw(sector_p[rg]);
    const std::size_t em = draw(employer_p[sc]);
    const double size = size_pool[draw(size_p[em])];
    const double age = age_pool[draw(age_p[rg])];
    const double exp_logit = -2.2 + 0.9 * static_cast<double>(sc) + 0.35 * size;
    const bool exp_flag = rng.next_unit() < 1.0 / (1.0 + std::exp(-exp_logit));
    const bool fem_flag = rng.next_unit() < female_p[sc];
    const bool urb_flag = rng.next_unit() < urban_p[rg];
    const std::size_t cp = draw(coop_p[em]);
    const double w = 10.0 + 2.0 * static_cast<double>(sc) + size +
                     static_cast<double>(rng.next_below(3));
    region.push_back("r" + std::to_string(rg));
    sector.push_back("s" + std::to_string(sc));
    employer.push_back(em == 1 ? "1" : "0");
    size_class.push_back(size);
    owner_age.push_back(age);
    exporter.push_back(exp_flag ? "1" : "0");
    female.push_back(fem_flag ? "1" : "0");
    urban.push_back(urb_flag ? "1" : "0");
    coop.push_back("t" + std::to_string(cp));
    wage.push_back(w);
  }
  return table({cat("region", region, {"r0", "r1", "r2", "r3"}),
                cat("sector", sector, {"s0", "s1", "s2"}),
                cat("employer", employer, {"0", "1"}),
                num("size_class", std::move(size_class)),
                num("owner_age", std::move(owner_age)),
                cat("exporter", exporter, {"0", "1"}),
                cat("female", female, {"0", "1"}),
                cat("urban", urban, {"0", "1"}),
                cat("coop_type", coop, {"t0", "t1", "t2"}),
                num("wage", std::move(wage))});
}

inline std::vector<std::string> business_feature_names() {
  return {"region", "sector", "employer", "size_class", "owner_age",
          "exporter", "female", "urban", "coop_type", "wage"};
}

}  // namespace testfix
