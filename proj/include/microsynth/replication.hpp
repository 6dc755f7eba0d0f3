#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "microsynth/design.hpp"
#include "microsynth/regression.hpp"
#include "microsynth/table.hpp"

namespace microsynth {

struct ParamRow {
  std::string parameter;
  double estimate = 0.0;
  double se = 0.0;
  double p = 1.0;
  Interval ci;                     // coefficient scale
  std::optional<Interval> or_ci;   // logit models only
};

struct FitRecord {
  std::string dataset;
  bool ok = false;
  std::string error;  // set when !ok
  std::size_t n = 0;
  std::size_t n_dropped_missing = 0;
  Convergence convergence;
  std::vector<ParamRow> params;
};

struct ComparisonRow {
  std::string parameter;
  std::string dataset;    // compared against the reference
  OverlapClassification cls;
};

struct ModelReport {
  std::string model;
  ModelKind kind = ModelKind::ols;
  std::string reference_dataset;  // first dataset that fit
  std::vector<FitRecord> fits;    // dataset input order
  std::vector<ComparisonRow> comparisons;
  // Share of comparisons whose sign+significance pattern agrees with the
  // reference (both significant with the same sign, or both insignificant).
  double agreement_rate = 1.0;
  std::vector<std::string> disjoint_parameters;
};

struct ReplicationReport {
  std::vector<ModelReport> models;
  bool every_model_has_fit = true;
};

// Fits every model on every dataset; per-dataset failures are recorded, not
// fatal. Interval comparisons are on the coefficient scale with threshold 0
// (equivalent to odds-ratio intervals against 1 for logit models).
ReplicationReport replication_report(
    const std::vector<std::pair<std::string, Table>>& datasets,
    const std::vector<ModelSpec>& specs);

}  // namespace microsynth
