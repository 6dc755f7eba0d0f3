#include "microsynth/design.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "microsynth/errors.hpp"

namespace microsynth {

namespace {

using CellFn = std::function<double(std::size_t)>;

// Numeric columns read as-is; categorical columns must be 0/1-coded so a
// stray multi-level factor cannot silently enter as its code index.
CellFn value_reader(const Table& t, const std::string& name, const std::string& model) {
  const auto col = static_cast<std::size_t>(t.require_column(name));
  if (t.is_numeric(col)) {
    const auto* xs = &t.numeric(col);
    return [xs](std::size_t r) { return (*xs)[r]; };
  }
  const auto& sch = t.schema(col);
  std::vector<double> code_value(sch.categories.size());
  for (std::size_t i = 0; i < sch.categories.size(); ++i) {
    if (sch.categories[i] == "0") {
      code_value[i] = 0.0;
    } else if (sch.categories[i] == "1") {
      code_value[i] = 1.0;
    } else {
      throw ConfigError("model '" + model + "': categorical column '" + name +
                        "' is not 0/1-coded; expand it through a dummy block");
    }
  }
  const auto* xs = &t.categorical(col);
  return [xs, code_value = std::move(code_value)](std::size_t r) {
    return code_value[static_cast<std::size_t>((*xs)[r])];
  };
}

}  // namespace

DesignMatrix build_design(const Table& t, const ModelSpec& spec) {
  const Table filtered = filter_rows(t, spec.filter);
  const Table derived = apply_recode(filtered, spec.recodes);

  DesignMatrix d;
  d.model = spec.name;
  d.kind = spec.kind;
  d.response = spec.response;
  d.n_filtered_out = t.n_rows() - filtered.n_rows();

  struct NamedReader {
    std::string name;
    CellFn read;
  };
  std::vector<NamedReader> readers;
  readers.push_back({"intercept", [](std::size_t) { return 1.0; }});
  for (const auto& name : spec.predictors) {
    readers.push_back({name, value_reader(derived, name, spec.name)});
  }
  for (const auto& inter : spec.interactions) {
    if (inter.factors.size() < 2) {
      throw ConfigError("model '" + spec.name + "': interaction '" + inter.name +
                        "' needs at least two factors");
    }
    std::vector<CellFn> parts;
    for (const auto& f : inter.factors) parts.push_back(value_reader(derived, f, spec.name));
    readers.push_back({inter.name, [parts = std::move(parts)](std::size_t r) {
                         double acc = 1.0;
                         for (const auto& p : parts) acc *= p(r);
                         return acc;
                       }});
  }
  for (const auto& block : spec.dummy_blocks) {
    const auto col = static_cast<std::size_t>(derived.require_column(block.source));
    if (derived.is_numeric(col)) {
      throw ConfigError("model '" + spec.name + "': dummy block source '" + block.source +
                        "' is numeric");
    }
    const auto& sch = derived.schema(col);
    const auto ref = sch.category_index(block.reference);
    if (ref < 0) {
      throw ConfigError("model '" + spec.name + "': dummy block reference '" + block.reference +
                        "' is not a category of '" + block.source + "'");
    }
    const std::string prefix = block.prefix.empty() ? block.source + "_" : block.prefix;
    const auto* xs = &derived.categorical(col);
    for (std::size_t c = 0; c < sch.categories.size(); ++c) {
      if (static_cast<std::int32_t>(c) == ref) continue;
      readers.push_back({prefix + sch.categories[c], [xs, c](std::size_t r) {
                           return (*xs)[static_cast<std::size_t>(r)] ==
                                          static_cast<std::int32_t>(c)
                                      ? 1.0
                                      : 0.0;
                         }});
    }
  }

  CellFn read_y = value_reader(derived, spec.response, spec.name);

  d.p = readers.size();
  for (auto& r : readers) d.columns.push_back(r.name);

  // Assemble, dropping rows with any missing cell.
  const std::size_t n_all = derived.n_rows();
  d.values.reserve(n_all * d.p);
  d.y.reserve(n_all);
  std::vector<double> row(d.p);
  for (std::size_t r = 0; r < n_all; ++r) {
    bool ok = true;
    const double yv = read_y(r);
    if (std::isnan(yv)) ok = false;
    for (std::size_t j = 0; ok && j < d.p; ++j) {
      row[j] = readers[j].read(r);
      if (std::isnan(row[j])) ok = false;
    }
    if (!ok) {
      ++d.n_dropped_missing;
      continue;
    }
    d.y.push_back(yv);
    d.values.insert(d.values.end(), row.begin(), row.end());
  }
  d.n = d.y.size();

  if (d.n <= d.p) {
    throw DataError("model '" + spec.name + "': " + std::to_string(d.n) +
                    " usable rows for " + std::to_string(d.p) + " parameters");
  }
  if (spec.kind == ModelKind::logit) {
    for (double yv : d.y) {
      if (yv != 0.0 && yv != 1.0) {
        throw DataError("model '" + spec.name + "': response '" + spec.response +
                        "' must be 0/1 for a logit fit");
      }
    }
  }
  for (std::size_t j = 1; j < d.p; ++j) {
    const double first = d.at(0, j);
    bool constant = true;
    for (std::size_t i = 1; i < d.n && constant; ++i) constant = d.at(i, j) == first;
    if (constant) {
      throw DataError("model '" + spec.name + "': column '" + d.columns[j] +
                      "' is constant after filtering");
    }
  }
  return d;
}

}  // namespace microsynth
