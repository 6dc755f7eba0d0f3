#include "microsynth/replication.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "microsynth/errors.hpp"
#include "microsynth/parallel.hpp"

namespace microsynth {

ReplicationReport replication_report(
    const std::vector<std::pair<std::string, Table>>& datasets,
    const std::vector<ModelSpec>& specs) {
  if (datasets.size() < 2) {
    throw ConfigError("replication needs at least 2 datasets");
  }
  std::unordered_set<std::string> names;
  for (const auto& [name, table] : datasets) {
    (void)table;
    if (!names.insert(name).second) {
      throw ConfigError("duplicate dataset name '" + name + "'");
    }
  }
  if (specs.empty()) throw ConfigError("replication needs at least one model spec");

  ReplicationReport report;
  for (const auto& spec : specs) {
    ModelReport mr;
    mr.model = spec.name;
    mr.kind = spec.kind;
    mr.fits.resize(datasets.size());

    std::vector<RegressionResult> results(datasets.size());
    parallel_for(static_cast<std::int64_t>(datasets.size()),
                 [&](std::int64_t lo, std::int64_t hi) {
                   for (std::int64_t i = lo; i < hi; ++i) {
                     const auto di = static_cast<std::size_t>(i);
                     FitRecord& rec = mr.fits[di];
                     rec.dataset = datasets[di].first;
                     try {
                       const DesignMatrix d = build_design(datasets[di].second, spec);
                       rec.n_dropped_missing = d.n_dropped_missing;
                       results[di] = spec.kind == ModelKind::ols ? fit_ols(d)
                                                                 : fit_logistic(d);
                       rec.ok = true;
                     } catch (const std::exception& e) {
                       rec.error = e.what();
                     }
                   }
                 });

    for (std::size_t di = 0; di < datasets.size(); ++di) {
      if (!mr.fits[di].ok) continue;
      const auto& r = results[di];
      FitRecord& rec = mr.fits[di];
      rec.n = r.n;
      rec.convergence = r.convergence;
      rec.params.reserve(r.columns.size());
      for (std::size_t j = 0; j < r.columns.size(); ++j) {
        ParamRow row;
        row.parameter = r.columns[j];
        row.estimate = r.beta[j];
        row.se = r.se[j];
        row.p = r.p[j];
        row.ci = r.ci[j];
        if (spec.kind == ModelKind::logit) {
          row.or_ci = Interval{std::exp(r.ci[j].lo), std::exp(r.ci[j].hi)};
        }
        rec.params.push_back(std::move(row));
      }
    }

    std::ptrdiff_t ref = -1;
    for (std::size_t di = 0; di < datasets.size(); ++di) {
      if (mr.fits[di].ok) {
        ref = static_cast<std::ptrdiff_t>(di);
        break;
      }
    }
    if (ref < 0) {
      report.every_model_has_fit = false;
      report.models.push_back(std::move(mr));
      continue;
    }
    mr.reference_dataset = datasets[static_cast<std::size_t>(ref)].first;

    const auto& rref = results[static_cast<std::size_t>(ref)];
    std::size_t agree = 0, total = 0;
    std::unordered_set<std::string> disjoint;
    for (std::size_t di = 0; di < datasets.size(); ++di) {
      if (static_cast<std::ptrdiff_t>(di) == ref || !mr.fits[di].ok) continue;
      const auto& r = results[di];
      for (std::size_t j = 0; j < rref.columns.size(); ++j) {
        const auto other = std::find(r.columns.begin(), r.columns.end(), rref.columns[j]);
        if (other == r.columns.end()) continue;
        const auto oj = static_cast<std::size_t>(other - r.columns.begin());
        ComparisonRow row;
        row.parameter = rref.columns[j];
        row.dataset = datasets[di].first;
        row.cls = ci_overlap_classify(rref.ci[j], r.ci[oj], 0.0);
        ++total;
        if (row.cls.pattern == SignificancePattern::both_significant_same_sign ||
            row.cls.pattern == SignificancePattern::both_insignificant) {
          ++agree;
        }
        if (row.cls.disjoint) disjoint.insert(row.parameter);
        mr.comparisons.push_back(std::move(row));
      }
    }
    mr.agreement_rate = total > 0 ? static_cast<double>(agree) / static_cast<double>(total) : 1.0;
    for (std::size_t j = 0; j < rref.columns.size(); ++j) {
      if (disjoint.count(rref.columns[j])) mr.disjoint_parameters.push_back(rref.columns[j]);
    }
    report.models.push_back(std::move(mr));
  }
  return report;
}

}  // namespace microsynth
