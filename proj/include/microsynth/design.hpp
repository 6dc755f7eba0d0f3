#pragma once

#include <string>
#include <vector>

#include "microsynth/filter.hpp"
#include "microsynth/recode.hpp"
#include "microsynth/table.hpp"

namespace microsynth {

enum class ModelKind { ols, logit };

// One-hot expansion of a categorical column, omitting the reference
// category. Emitted column names are prefix + category code.
struct DummyBlock {
  std::string source;
  std::string reference;
  std::string prefix;  // defaults to source + "_"
};

// Product of already-built predictor values (numeric or 0/1 columns).
struct InteractionSpec {
  std::string name;
  std::vector<std::string> factors;
};

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::logit;
  std::string response;
  FilterPredicate filter;          // applied to source columns first
  RecodeSpec recodes;              // derived variables, run after the filter
  std::vector<std::string> predictors;  // numeric or 0/1-coded columns
  std::vector<InteractionSpec> interactions;
  std::vector<DummyBlock> dummy_blocks;
};

struct DesignMatrix {
  std::string model;
  ModelKind kind = ModelKind::logit;
  std::string response;
  std::vector<std::string> columns;  // "intercept" first
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<double> values;  // row-major n x p
  std::vector<double> y;
  std::size_t n_filtered_out = 0;    // rows removed by the filter
  std::size_t n_dropped_missing = 0; // rows removed for missing values

  double at(std::size_t i, std::size_t j) const { return values[i * p + j]; }
};

// Filter, recode, interact, dummy-expand, then assemble the matrix with an
// intercept first. Rows with a missing response or predictor value are
// dropped and counted. Constant non-intercept columns are an error.
DesignMatrix build_design(const Table& t, const ModelSpec& spec);

}  // namespace microsynth
