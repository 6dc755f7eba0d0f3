#pragma once

#include <optional>
#include <string>
#include <vector>

#include "microsynth/table.hpp"

namespace microsynth {

// RFC 4180 CSV with a mandatory header row, UTF-8.
//
// When no schema is given it is inferred: a column is numeric iff it has at
// least one cell and every cell parses as a finite decimal number (an empty
// cell therefore forces categorical); otherwise the column is categorical
// with categories in first-appearance order, the empty string being its own
// category. Inference is deterministic.
Table load_csv(const std::string& path,
               const std::optional<std::vector<ColumnSchema>>& schema = std::nullopt,
               const std::string& weight_column = "");
Table load_csv_text(std::string_view text,
                    const std::optional<std::vector<ColumnSchema>>& schema = std::nullopt,
                    const std::string& weight_column = "");

void write_csv(const Table& table, const std::string& path);
std::string to_csv_text(const Table& table);

// One field rendered per RFC 4180: quoted iff it contains a comma, quote,
// or newline. For callers assembling non-Table CSVs (plot data, reports).
std::string csv_field(std::string_view text);

}  // namespace microsynth
