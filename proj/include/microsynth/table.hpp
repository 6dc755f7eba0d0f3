#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace microsynth {

enum class ColumnKind { categorical, numeric };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::categorical;
  // Categorical only. Includes NR sentinels such as "0" or "NR"; order is
  // authoritative (first appearance in file unless declared).
  std::vector<std::string> categories;
  // Subset of categories flagged as non-response. Reporting only: NR codes
  // stay ordinary categories everywhere else.
  std::vector<std::string> nr_codes;
  std::string unit_note;

  // Index of a category code, -1 if absent.
  std::int32_t category_index(std::string_view code) const;
  void validate() const;
};

using CategoricalColumn = std::vector<std::int32_t>;
using NumericColumn = std::vector<double>;
using ColumnData = std::variant<CategoricalColumn, NumericColumn>;

// Immutable columnar dataset. Columns are shared on copy; every operation
// returns a new Table, so Tables are safe to use from any number of threads.
class Table {
 public:
  Table() = default;
  Table(std::vector<ColumnSchema> schema, std::vector<ColumnData> columns,
        std::string weight_column = "");

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return schema_.size(); }

  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const ColumnSchema& schema(std::size_t col) const { return schema_[col]; }

  int column_index(std::string_view name) const;  // -1 if absent
  int require_column(std::string_view name) const;  // throws ConfigError

  bool is_numeric(std::size_t col) const {
    return schema_[col].kind == ColumnKind::numeric;
  }
  const ColumnData& column(std::size_t col) const { return *columns_[col]; }
  const CategoricalColumn& categorical(std::size_t col) const;
  const NumericColumn& numeric(std::size_t col) const;
  std::shared_ptr<const ColumnData> column_ptr(std::size_t col) const {
    return columns_[col];
  }

  const std::string& weight_column() const { return weight_column_; }
  bool weighted() const { return weight_index_ >= 0; }
  int weight_index() const { return weight_index_; }
  double weight(std::size_t row) const;  // 1.0 when unweighted

  // Cell rendered as CSV text: category code, or round-trip-safe double.
  std::string cell_text(std::size_t row, std::size_t col) const;

  // New table with columns appended (shares existing column storage).
  Table with_appended(std::vector<ColumnSchema> extra_schema,
                      std::vector<ColumnData> extra_columns) const;
  // New table keeping the given rows, in the given order.
  Table select_rows(const std::vector<std::uint32_t>& rows) const;
  // New table keeping only the named columns, in the given order; shares
  // column storage. The weight designation survives when included.
  Table select_columns(const std::vector<std::string>& names) const;

 private:
  std::vector<ColumnSchema> schema_;
  std::vector<std::shared_ptr<const ColumnData>> columns_;
  std::size_t n_rows_ = 0;
  std::string weight_column_;
  int weight_index_ = -1;

  void validate() const;
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
// Strict full-consumption parse. `value` is set on success.
bool parse_double(std::string_view text, double& value);

}  // namespace microsynth
