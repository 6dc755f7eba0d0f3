#include "microsynth/recode.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_set>

#include "microsynth/errors.hpp"

namespace microsynth {

namespace {

struct Derived {
  ColumnSchema schema;
  ColumnData data;
};

const NumericColumn& numeric_source(const Table& t, const std::string& name,
                                    const std::string& target) {
  const int col = t.column_index(name);
  if (col < 0) {
    throw ConfigError("recode '" + target + "' references unknown column '" + name + "'");
  }
  if (!t.is_numeric(static_cast<std::size_t>(col))) {
    throw ConfigError("recode '" + target + "' needs numeric column '" + name + "'");
  }
  return t.numeric(static_cast<std::size_t>(col));
}

Derived run_flag_any(const Table& t, const RecodeRule& rule) {
  if (rule.any_of.empty()) {
    throw ConfigError("recode '" + rule.target + "' has no source conditions");
  }
  std::vector<char> any(t.n_rows(), 0);
  for (const auto& atom : rule.any_of) {
    FilterPredicate p;
    p.atoms.push_back(atom);
    const CompiledPredicate compiled(t, p);
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      if (!any[r] && compiled.matches(r)) any[r] = 1;
    }
  }
  CategoricalColumn out(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) out[r] = any[r] ? 1 : 0;
  ColumnSchema sch;
  sch.name = rule.target;
  sch.kind = ColumnKind::categorical;
  sch.categories = {"0", "1"};
  return {std::move(sch), std::move(out)};
}

Derived run_product(const Table& t, const RecodeRule& rule) {
  if (rule.factors.size() < 2) {
    throw ConfigError("recode '" + rule.target + "' needs at least two factors");
  }
  NumericColumn out(t.n_rows(), 1.0);
  for (const auto& name : rule.factors) {
    const auto& col = numeric_source(t, name, rule.target);
    for (std::size_t r = 0; r < t.n_rows(); ++r) out[r] *= col[r];
  }
  ColumnSchema sch;
  sch.name = rule.target;
  sch.kind = ColumnKind::numeric;
  return {std::move(sch), std::move(out)};
}

Derived run_log_ratio(const Table& t, const RecodeRule& rule) {
  if (rule.numerator.empty()) {
    throw ConfigError("recode '" + rule.target + "' has no numerator");
  }
  if (!(rule.scale > 0.0) || !std::isfinite(rule.scale)) {
    throw ConfigError("recode '" + rule.target + "' needs a positive finite scale");
  }
  const auto& num = numeric_source(t, rule.numerator, rule.target);
  const NumericColumn* den =
      rule.denominator.empty() ? nullptr
                               : &numeric_source(t, rule.denominator, rule.target);
  NumericColumn out(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const double d = den ? (*den)[r] : 1.0;
    const double arg = rule.scale * num[r] / d;
    if (!(arg > 0.0) || !std::isfinite(arg)) {
      if (rule.missing_on_nonpositive) {
        out[r] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      throw DataError("recode '" + rule.target + "' hit a non-positive ratio at row " +
                      std::to_string(r));
    }
    out[r] = std::log(arg);
  }
  ColumnSchema sch;
  sch.name = rule.target;
  sch.kind = ColumnKind::numeric;
  return {std::move(sch), std::move(out)};
}

Derived run_bucket(const Table& t, const RecodeRule& rule) {
  if (rule.labels.size() != rule.edges.size() + 1) {
    throw ConfigError("recode '" + rule.target + "' needs labels.size() == edges.size() + 1");
  }
  if (!std::is_sorted(rule.edges.begin(), rule.edges.end())) {
    throw ConfigError("recode '" + rule.target + "' edges must be nondecreasing");
  }
  const auto& src = numeric_source(t, rule.source, rule.target);
  CategoricalColumn out(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const double x = src[r];
    if (std::isnan(x)) {
      throw DataError("recode '" + rule.target + "' cannot bucket missing value at row " +
                      std::to_string(r));
    }
    std::size_t b = 0;
    while (b < rule.edges.size() && x > rule.edges[b]) ++b;
    out[r] = static_cast<std::int32_t>(b);
  }
  ColumnSchema sch;
  sch.name = rule.target;
  sch.kind = ColumnKind::categorical;
  sch.categories = rule.labels;
  return {std::move(sch), std::move(out)};
}

Derived run_map_cases(const Table& t, const RecodeRule& rule) {
  if (rule.cases.empty() && !rule.has_default) {
    throw ConfigError("recode '" + rule.target + "' has no cases");
  }
  bool numeric_target = rule.has_default ? rule.default_is_number : true;
  if (!rule.cases.empty()) numeric_target = rule.cases.front().value_is_number;
  for (const auto& c : rule.cases) {
    if (c.value_is_number != numeric_target) {
      throw ConfigError("recode '" + rule.target + "' mixes numeric and coded case values");
    }
  }
  if (rule.has_default && rule.default_is_number != numeric_target) {
    throw ConfigError("recode '" + rule.target + "' default disagrees with case value kind");
  }

  std::vector<CompiledPredicate> compiled;
  compiled.reserve(rule.cases.size());
  for (const auto& c : rule.cases) compiled.emplace_back(t, c.when);

  auto pick = [&](std::size_t row) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < compiled.size(); ++i) {
      if (compiled[i].matches(row)) return i;
    }
    return std::nullopt;
  };

  ColumnSchema sch;
  sch.name = rule.target;
  if (numeric_target) {
    sch.kind = ColumnKind::numeric;
    NumericColumn out(t.n_rows());
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      const auto hit = pick(r);
      if (hit) {
        out[r] = rule.cases[*hit].number;
      } else if (rule.has_default) {
        out[r] = rule.default_number;
      } else {
        throw DataError("recode '" + rule.target + "' matched no case at row " +
                        std::to_string(r));
      }
    }
    return {std::move(sch), std::move(out)};
  }

  sch.kind = ColumnKind::categorical;
  // Category order: case order, then default code if new.
  auto add_code = [&](const std::string& code) {
    if (std::find(sch.categories.begin(), sch.categories.end(), code) ==
        sch.categories.end()) {
      sch.categories.push_back(code);
    }
  };
  for (const auto& c : rule.cases) add_code(c.code);
  if (rule.has_default) add_code(rule.default_code);

  CategoricalColumn out(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    std::string_view code;
    const auto hit = pick(r);
    if (hit) {
      code = rule.cases[*hit].code;
    } else if (rule.has_default) {
      code = rule.default_code;
    } else {
      throw DataError("recode '" + rule.target + "' matched no case at row " +
                      std::to_string(r));
    }
    out[r] = sch.category_index(code);
  }
  return {std::move(sch), std::move(out)};
}

}  // namespace

Table apply_recode(const Table& table, const RecodeSpec& spec) {
  Table current = table;
  std::unordered_set<std::string> seen;
  for (const auto& rule : spec.rules) {
    if (rule.target.empty()) throw ConfigError("recode rule has an empty target name");
    if (current.column_index(rule.target) >= 0 || !seen.insert(rule.target).second) {
      throw ConfigError("recode target '" + rule.target + "' already exists");
    }
    Derived d;
    switch (rule.kind) {
      case RecodeKind::flag_any: d = run_flag_any(current, rule); break;
      case RecodeKind::product: d = run_product(current, rule); break;
      case RecodeKind::log_ratio: d = run_log_ratio(current, rule); break;
      case RecodeKind::bucket: d = run_bucket(current, rule); break;
      case RecodeKind::map_cases: d = run_map_cases(current, rule); break;
    }
    std::vector<ColumnSchema> extra_schema{std::move(d.schema)};
    std::vector<ColumnData> extra_columns{std::move(d.data)};
    current = current.with_appended(std::move(extra_schema), std::move(extra_columns));
  }
  return current;
}

}  // namespace microsynth
