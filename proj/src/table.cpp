#include "microsynth/table.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include "microsynth/errors.hpp"

namespace microsynth {

std::int32_t ColumnSchema::category_index(std::string_view code) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == code) return static_cast<std::int32_t>(i);
  }
  return -1;
}

void ColumnSchema::validate() const {
  if (name.empty()) throw ConfigError("column schema with empty name");
  if (kind == ColumnKind::numeric) {
    if (!categories.empty() || !nr_codes.empty()) {
      throw ConfigError("numeric column '" + name + "' must not declare categories");
    }
    return;
  }
  std::unordered_set<std::string> seen;
  for (const auto& c : categories) {
    if (!seen.insert(c).second) {
      throw ConfigError("column '" + name + "' has duplicate category '" + c + "'");
    }
  }
  for (const auto& c : nr_codes) {
    if (!seen.count(c)) {
      throw ConfigError("column '" + name + "' flags NR code '" + c +
                        "' that is not a category");
    }
  }
}

Table::Table(std::vector<ColumnSchema> schema, std::vector<ColumnData> columns,
             std::string weight_column)
    : schema_(std::move(schema)), weight_column_(std::move(weight_column)) {
  columns_.reserve(columns.size());
  for (auto& c : columns) {
    columns_.push_back(std::make_shared<const ColumnData>(std::move(c)));
  }
  if (!columns_.empty()) {
    n_rows_ = std::visit([](const auto& v) { return v.size(); }, *columns_[0]);
  }
  if (!weight_column_.empty()) {
    weight_index_ = column_index(weight_column_);
    if (weight_index_ < 0) {
      throw ConfigError("weight column '" + weight_column_ + "' not found");
    }
  }
  validate();
}

void Table::validate() const {
  if (schema_.size() != columns_.size()) {
    throw ConfigError("schema/column count mismatch");
  }
  std::unordered_set<std::string> names;
  for (const auto& s : schema_) {
    s.validate();
    if (!names.insert(s.name).second) {
      throw ConfigError("duplicate column name '" + s.name + "'");
    }
  }
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    const std::size_t len = std::visit([](const auto& v) { return v.size(); }, *columns_[c]);
    if (len != n_rows_) {
      throw DataError("column '" + schema_[c].name + "' has " + std::to_string(len) +
                      " rows, expected " + std::to_string(n_rows_));
    }
    const bool holds_numeric = std::holds_alternative<NumericColumn>(*columns_[c]);
    if (holds_numeric != (schema_[c].kind == ColumnKind::numeric)) {
      throw ConfigError("column '" + schema_[c].name + "' storage does not match its kind");
    }
    if (!holds_numeric) {
      const auto& cells = std::get<CategoricalColumn>(*columns_[c]);
      const auto n_cats = static_cast<std::int32_t>(schema_[c].categories.size());
      for (std::size_t r = 0; r < cells.size(); ++r) {
        if (cells[r] < 0 || cells[r] >= n_cats) {
          throw DataError("column '" + schema_[c].name + "' row " + std::to_string(r) +
                          " has invalid category index");
        }
      }
    }
  }
  if (weight_index_ >= 0) {
    if (schema_[weight_index_].kind != ColumnKind::numeric) {
      throw ConfigError("weight column '" + weight_column_ + "' must be numeric");
    }
    const auto& w = std::get<NumericColumn>(*columns_[weight_index_]);
    for (std::size_t r = 0; r < w.size(); ++r) {
      if (!std::isfinite(w[r]) || w[r] <= 0.0) {
        throw DataError("weight column '" + weight_column_ + "' row " + std::to_string(r) +
                        " is not finite and positive");
      }
    }
  }
}

int Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    if (schema_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int Table::require_column(std::string_view name) const {
  const int idx = column_index(name);
  if (idx < 0) throw ConfigError("unknown column '" + std::string(name) + "'");
  return idx;
}

const CategoricalColumn& Table::categorical(std::size_t col) const {
  const auto* p = std::get_if<CategoricalColumn>(columns_[col].get());
  if (!p) throw ConfigError("column '" + schema_[col].name + "' is not categorical");
  return *p;
}

const NumericColumn& Table::numeric(std::size_t col) const {
  const auto* p = std::get_if<NumericColumn>(columns_[col].get());
  if (!p) throw ConfigError("column '" + schema_[col].name + "' is not numeric");
  return *p;
}

double Table::weight(std::size_t row) const {
  if (weight_index_ < 0) return 1.0;
  return std::get<NumericColumn>(*columns_[weight_index_])[row];
}

std::string Table::cell_text(std::size_t row, std::size_t col) const {
  if (is_numeric(col)) return format_double(numeric(col)[row]);
  return schema_[col].categories[categorical(col)[row]];
}

Table Table::with_appended(std::vector<ColumnSchema> extra_schema,
                           std::vector<ColumnData> extra_columns) const {
  Table out;
  out.schema_ = schema_;
  out.columns_ = columns_;
  out.n_rows_ = n_rows_;
  out.weight_column_ = weight_column_;
  out.weight_index_ = weight_index_;
  for (std::size_t i = 0; i < extra_schema.size(); ++i) {
    out.schema_.push_back(std::move(extra_schema[i]));
    out.columns_.push_back(std::make_shared<const ColumnData>(std::move(extra_columns[i])));
  }
  out.validate();
  return out;
}

Table Table::select_rows(const std::vector<std::uint32_t>& rows) const {
  Table out;
  out.schema_ = schema_;
  out.n_rows_ = rows.size();
  out.weight_column_ = weight_column_;
  out.weight_index_ = weight_index_;
  out.columns_.reserve(columns_.size());
  for (const auto& col : columns_) {
    ColumnData data = std::visit(
        [&](const auto& v) -> ColumnData {
          std::decay_t<decltype(v)> picked;
          picked.reserve(rows.size());
          for (auto r : rows) picked.push_back(v[r]);
          return picked;
        },
        *col);
    out.columns_.push_back(std::make_shared<const ColumnData>(std::move(data)));
  }
  return out;
}

Table Table::select_columns(const std::vector<std::string>& names) const {
  Table out;
  out.n_rows_ = n_rows_;
  out.schema_.reserve(names.size());
  out.columns_.reserve(names.size());
  for (const auto& name : names) {
    const auto col = static_cast<std::size_t>(require_column(name));
    for (const auto& s : out.schema_) {
      if (s.name == name) throw ConfigError("column '" + name + "' selected twice");
    }
    out.schema_.push_back(schema_[col]);
    out.columns_.push_back(columns_[col]);
    if (static_cast<int>(col) == weight_index_) {
      out.weight_column_ = weight_column_;
      out.weight_index_ = static_cast<int>(out.columns_.size()) - 1;
    }
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view text, double& value) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;  // from_chars rejects a leading '+'
  const auto res = std::from_chars(first, last, value);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace microsynth
