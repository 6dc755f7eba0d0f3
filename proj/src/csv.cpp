#include "microsynth/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "microsynth/errors.hpp"

namespace microsynth {

namespace {

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawCsv parse_rfc4180(std::string_view text) {
  RawCsv out;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool record_open = false;  // true once the current record has any content
  std::size_t i = 0;
  const std::size_t n = text.size();

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    record_open = true;
  };
  auto end_record = [&] {
    end_field();
    if (out.header.empty()) {
      out.header = std::move(record);
    } else {
      out.rows.push_back(std::move(record));
    }
    record.clear();
    record_open = false;
  };

  while (i < n) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
    } else if (c == '"') {
      in_quotes = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' || c == '\n') {
      end_record();
      if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      ++i;
    } else {
      field.push_back(c);
      ++i;
    }
  }
  if (in_quotes) throw DataError("CSV ends inside a quoted field");
  if (record_open || !field.empty() || !record.empty()) end_record();
  if (out.header.empty()) throw DataError("CSV has no header row");
  return out;
}

bool needs_quoting(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

void write_field(std::string& out, std::string_view s) {
  if (!needs_quoting(s)) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::string csv_field(std::string_view text) {
  std::string out;
  write_field(out, text);
  return out;
}

namespace {

Table build_with_schema(const RawCsv& raw, const std::vector<ColumnSchema>& schema,
                        const std::string& weight_column) {
  if (schema.size() != raw.header.size()) {
    throw DataError("declared schema has " + std::to_string(schema.size()) +
                    " columns, file has " + std::to_string(raw.header.size()));
  }
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema[c].name != raw.header[c]) {
      throw DataError("header column " + std::to_string(c) + " is '" + raw.header[c] +
                      "', schema declares '" + schema[c].name + "'");
    }
  }
  const std::size_t n_cols = schema.size();
  std::vector<ColumnData> columns;
  columns.reserve(n_cols);
  std::vector<std::unordered_map<std::string, std::int32_t>> lookup(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (schema[c].kind == ColumnKind::numeric) {
      columns.emplace_back(NumericColumn{});
      std::get<NumericColumn>(columns.back()).reserve(raw.rows.size());
    } else {
      columns.emplace_back(CategoricalColumn{});
      std::get<CategoricalColumn>(columns.back()).reserve(raw.rows.size());
      for (std::size_t i = 0; i < schema[c].categories.size(); ++i) {
        lookup[c].emplace(schema[c].categories[i], static_cast<std::int32_t>(i));
      }
    }
  }
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const auto& row = raw.rows[r];
    if (row.size() != n_cols) {
      throw DataError("row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                      " fields, expected " + std::to_string(n_cols));
    }
    for (std::size_t c = 0; c < n_cols; ++c) {
      if (schema[c].kind == ColumnKind::numeric) {
        if (row[c].empty()) {
          throw DataError("numeric column '" + schema[c].name + "' row " +
                          std::to_string(r + 1) + " is empty");
        }
        double v;
        if (!parse_double(row[c], v)) {
          throw DataError("numeric column '" + schema[c].name + "' row " +
                          std::to_string(r + 1) + " cell '" + row[c] + "' does not parse");
        }
        std::get<NumericColumn>(columns[c]).push_back(v);
      } else {
        const auto it = lookup[c].find(row[c]);
        if (it == lookup[c].end()) {
          throw DataError("column '" + schema[c].name + "' row " + std::to_string(r + 1) +
                          " cell '" + row[c] + "' is not a declared category");
        }
        std::get<CategoricalColumn>(columns[c]).push_back(it->second);
      }
    }
  }
  return Table(schema, std::move(columns), weight_column);
}

Table build_inferred(const RawCsv& raw, const std::string& weight_column) {
  const std::size_t n_cols = raw.header.size();
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    if (raw.rows[r].size() != n_cols) {
      throw DataError("row " + std::to_string(r + 1) + " has " +
                      std::to_string(raw.rows[r].size()) + " fields, expected " +
                      std::to_string(n_cols));
    }
  }
  std::vector<ColumnSchema> schema(n_cols);
  std::vector<ColumnData> columns;
  columns.reserve(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    schema[c].name = raw.header[c];
    // Numeric iff every non-empty cell parses ("nan" is the missing token);
    // a blank inside a numeric column is a data fault, not a missing value.
    bool numeric = !raw.rows.empty();
    double v;
    for (const auto& row : raw.rows) {
      if (row[c].empty()) continue;
      if (!parse_double(row[c], v) || std::isinf(v)) {
        numeric = false;
        break;
      }
    }
    if (numeric) {
      schema[c].kind = ColumnKind::numeric;
      NumericColumn data;
      data.reserve(raw.rows.size());
      for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        if (raw.rows[r][c].empty()) {
          throw DataError("numeric column '" + schema[c].name + "' row " +
                          std::to_string(r + 1) + " is empty");
        }
        parse_double(raw.rows[r][c], v);
        data.push_back(v);
      }
      columns.emplace_back(std::move(data));
    } else {
      schema[c].kind = ColumnKind::categorical;
      std::unordered_map<std::string, std::int32_t> lookup;
      CategoricalColumn data;
      data.reserve(raw.rows.size());
      for (const auto& row : raw.rows) {
        auto [it, inserted] =
            lookup.emplace(row[c], static_cast<std::int32_t>(schema[c].categories.size()));
        if (inserted) schema[c].categories.push_back(row[c]);
        data.push_back(it->second);
      }
      columns.emplace_back(std::move(data));
    }
  }
  return Table(std::move(schema), std::move(columns), weight_column);
}

}  // namespace

Table load_csv_text(std::string_view text,
                    const std::optional<std::vector<ColumnSchema>>& schema,
                    const std::string& weight_column) {
  const RawCsv raw = parse_rfc4180(text);
  if (schema.has_value()) return build_with_schema(raw, *schema, weight_column);
  return build_inferred(raw, weight_column);
}

Table load_csv(const std::string& path,
               const std::optional<std::vector<ColumnSchema>>& schema,
               const std::string& weight_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_csv_text(buf.str(), schema, weight_column);
}

std::string to_csv_text(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.n_cols(); ++c) {
    if (c) out.push_back(',');
    write_field(out, table.schema(c).name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      if (c) out.push_back(',');
      write_field(out, table.cell_text(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

void write_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out << to_csv_text(table);
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace microsynth
