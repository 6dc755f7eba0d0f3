#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "microsynth/audit.hpp"
#include "microsynth/compare.hpp"
#include "microsynth/config.hpp"
#include "microsynth/csv.hpp"
#include "microsynth/errors.hpp"
#include "microsynth/hashing.hpp"
#include "microsynth/kmarginal.hpp"
#include "microsynth/parallel.hpp"
#include "microsynth/pca.hpp"
#include "microsynth/replication.hpp"
#include "microsynth/summary.hpp"
#include "microsynth/synthesis.hpp"
#include "microsynth/version.hpp"

namespace {

using namespace microsynth;

std::string iso_utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects hashes of everything a run reads and writes; written last so the
// manifest attests the final artifact bytes.
class ManifestBuilder {
 public:
  explicit ManifestBuilder(std::string subcommand)
      : subcommand_(std::move(subcommand)), started_(iso_utc_now()),
        t0_(std::chrono::steady_clock::now()) {}

  void add_input(const std::string& path) { inputs_.emplace_back(path, hash_file(path)); }
  void add_config(const std::string& path) { configs_.emplace_back(path, hash_file(path)); }
  void add_output(const std::string& path) { outputs_.emplace_back(path, hash_file(path)); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  void write(const std::string& path) const {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["tool_version"] = kToolVersion;
    j["subcommand"] = subcommand_;
    j["started_utc"] = started_;
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0_;
    j["wall_clock_seconds"] = dt.count();
    if (seed_) j["seed"] = *seed_;
    j["inputs"] = files_json(inputs_);
    j["configs"] = files_json(configs_);
    j["outputs"] = files_json(outputs_);
    write_text_file(path, dump_json(j));
  }

 private:
  static Json files_json(const std::vector<std::pair<std::string, std::string>>& files) {
    Json arr = Json::array();
    for (const auto& [path, hash] : files) {
      Json e;
      e["path"] = path;
      e["fnv1a64"] = hash;
      arr.push_back(std::move(e));
    }
    return arr;
  }

  std::string subcommand_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::pair<std::string, std::string>> inputs_, configs_, outputs_;
};

void apply_threads(int threads) {
  if (threads > 0) set_max_threads(threads);
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

struct SynthesizeOpts {
  std::string input, config, schema, out, model_out, diagnostics_out, manifest;
  std::uint64_t seed = 0;
  std::uint64_t rows = 0;
  bool seed_given = false, rows_given = false;
  int threads = 0;
};

int run_synthesize(const SynthesizeOpts& o) {
  apply_threads(o.threads);
  ManifestBuilder mb("synthesize");

  std::optional<std::vector<ColumnSchema>> columns;
  std::string weight_column;
  if (!o.schema.empty()) {
    SchemaFile s = parse_schema(load_json_file(o.schema));
    columns = std::move(s.columns);
    weight_column = s.weight_column;
    mb.add_config(o.schema);
  }
  const Table t = load_csv(o.input, columns, weight_column);
  mb.add_input(o.input);

  SynthesisConfig cfg = parse_synthesis_config(load_json_file(o.config));
  mb.add_config(o.config);
  if (o.rows_given) cfg.n_synthetic_rows = static_cast<std::size_t>(o.rows);
  if (o.seed_given) cfg.master_seed = o.seed;
  mb.set_seed(cfg.master_seed);

  const SynthesisResult res = synthesize(t, cfg);
  write_csv(res.synthetic, o.out);
  mb.add_output(o.out);
  if (!o.model_out.empty()) {
    write_text_file(o.model_out, dump_json(bundle_to_json(res.model)));
    mb.add_output(o.model_out);
  }
  if (!o.diagnostics_out.empty()) {
    write_text_file(o.diagnostics_out,
                    dump_json(synthesis_diagnostics_to_json(res.diagnostics,
                                                            cfg.consistency_rules)));
    mb.add_output(o.diagnostics_out);
  }
  mb.write(o.manifest.empty() ? o.out + ".manifest.json" : o.manifest);

  std::cout << "synthesized " << res.synthetic.n_rows() << " rows -> " << o.out;
  if (res.diagnostics.rows_resampled > 0) {
    std::cout << " (" << res.diagnostics.rows_resampled << " resampled, "
              << res.diagnostics.rows_redrawn << " redrawn, " << res.diagnostics.rows_violating
              << " violating)";
  }
  std::cout << "\n";
  return 0;
}

struct EvaluateOpts {
  std::string original, synthetic, figures, out_dir;
  std::uint64_t k = 2, n_marginals = 1000, bins = 20, seed = 0;
  double baseline = 0.0;
  bool baseline_given = false;
  std::uint64_t pca_components = 5;
  int threads = 0;
};

int run_evaluate(const EvaluateOpts& o) {
  apply_threads(o.threads);
  ManifestBuilder mb("evaluate");
  mb.set_seed(o.seed);
  std::filesystem::create_directories(o.out_dir);

  const Table orig = load_csv(o.original);
  const Table syn = load_csv(o.synthetic);
  mb.add_input(o.original);
  mb.add_input(o.synthetic);

  KMarginalConfig kc;
  kc.k = static_cast<std::size_t>(o.k);
  kc.n_marginals = static_cast<std::size_t>(o.n_marginals);
  kc.n_bins = static_cast<std::size_t>(o.bins);
  kc.seed = o.seed;
  const KMarginalReport report = k_marginal_score(orig, syn, kc);
  Json kj = kmarginal_report_to_json(report, kc);
  if (o.baseline_given) {
    kj["baseline_fraction"] = o.baseline;
    kj["baseline_score"] = baseline_score(orig, kc, o.baseline, o.seed);
  }
  const std::string kpath = join_path(o.out_dir, "kmarginal.json");
  write_text_file(kpath, dump_json(kj));
  mb.add_output(kpath);

  std::vector<FigureSpec> figures;
  if (!o.figures.empty()) {
    figures = parse_figures(load_json_file(o.figures));
    mb.add_config(o.figures);
  }

  // One PCA fit serves pca.json and every pca figure.
  std::optional<PcaComparison> pca;
  const auto n_components = static_cast<std::size_t>(o.pca_components);
  for (const auto& f : figures) {
    if (f.kind == FigureKind::pca && (f.pc_i >= n_components || f.pc_j >= n_components)) {
      throw ConfigError("figure '" + f.name + "' needs component " +
                        std::to_string(std::max(f.pc_i, f.pc_j) + 1) +
                        "; raise --pca (currently " + std::to_string(n_components) + ")");
    }
  }
  const std::string ppath = join_path(o.out_dir, "pca.json");
  if (n_components > 0) {
    try {
      pca = compare_pca(orig, syn, n_components);
      write_text_file(ppath, dump_json(pca_comparison_to_json(*pca)));
      mb.add_output(ppath);
    } catch (const DataError& e) {
      Json pj;
      pj["schema_version"] = kSchemaVersion;
      pj["error"] = e.what();
      write_text_file(ppath, dump_json(pj));
      mb.add_output(ppath);
      for (const auto& f : figures) {
        if (f.kind == FigureKind::pca) throw;
      }
    }
  }

  Json fig_report;
  fig_report["schema_version"] = kSchemaVersion;
  Json fig_entries = Json::array();
  for (const auto& f : figures) {
    Json e;
    e["name"] = f.name;
    if (f.kind == FigureKind::univariate) {
      const UnivariateComparison cmp = univariate_compare(orig, syn, f.feature, f.n_bins);
      const std::string path = join_path(o.out_dir, f.name + ".csv");
      write_text_file(path, univariate_csv(cmp));
      mb.add_output(path);
      e["type"] = "univariate";
      e["feature"] = f.feature;
      e["file"] = path;
      e["l1_distance"] = cmp.l1_distance;
    } else if (f.kind == FigureKind::conditional) {
      const ConditionalComparison cmp = conditional_compare(orig, syn, f.filter, f.target);
      const std::string path = join_path(o.out_dir, f.name + ".csv");
      write_text_file(path, conditional_csv(cmp));
      mb.add_output(path);
      e["type"] = "conditional";
      e["file"] = path;
      e["comparison"] = conditional_to_json(cmp);
      if (cmp.undersampled_warning) {
        std::cerr << "warning: figure '" << f.name << "' subgroup undersampled (share ratio "
                  << cmp.share_ratio << ")\n";
      }
    } else {
      std::vector<char> mask_orig, mask_syn;
      if (!f.filter.atoms.empty()) {
        mask_orig = filter_mask(orig, f.filter);
        mask_syn = filter_mask(syn, f.filter);
      }
      const std::string path_o = join_path(o.out_dir, f.name + "_original.csv");
      const std::string path_s = join_path(o.out_dir, f.name + "_synthetic.csv");
      write_text_file(path_o, pca_points_csv(pca->a, f.pc_i, f.pc_j, mask_orig));
      write_text_file(path_s, pca_points_csv(pca->b, f.pc_i, f.pc_j, mask_syn));
      mb.add_output(path_o);
      mb.add_output(path_s);
      e["type"] = "pca";
      e["components"] = Json::array({f.pc_i + 1, f.pc_j + 1});
      e["files"] = Json::array({path_o, path_s});
    }
    fig_entries.push_back(std::move(e));
  }
  if (!o.figures.empty()) {
    fig_report["figures"] = std::move(fig_entries);
    const std::string fpath = join_path(o.out_dir, "figures.json");
    write_text_file(fpath, dump_json(fig_report));
    mb.add_output(fpath);
  }

  mb.write(join_path(o.out_dir, "manifest.json"));
  std::cout << "k-marginal score: " << report.score << " (rounded "
            << static_cast<long long>(std::floor(report.score + 0.5)) << ")\n";
  return 0;
}

struct ReplicateOpts {
  std::vector<std::string> datasets;
  std::string model_spec, out_dir;
  int threads = 0;
};

int run_replicate(const ReplicateOpts& o) {
  apply_threads(o.threads);
  ManifestBuilder mb("replicate");
  std::filesystem::create_directories(o.out_dir);

  std::vector<std::pair<std::string, Table>> datasets;
  for (const std::string& arg : o.datasets) {
    const std::size_t eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
      throw ConfigError("--datasets entry '" + arg + "' is not name=path");
    }
    const std::string name = arg.substr(0, eq);
    const std::string path = arg.substr(eq + 1);
    datasets.emplace_back(name, load_csv(path));
    mb.add_input(path);
  }
  const std::vector<ModelSpec> specs = parse_model_specs(load_json_file(o.model_spec));
  mb.add_config(o.model_spec);

  const ReplicationReport report = replication_report(datasets, specs);
  const std::string jpath = join_path(o.out_dir, "replication.json");
  const std::string cpath = join_path(o.out_dir, "replication.csv");
  write_text_file(jpath, dump_json(replication_to_json(report)));
  write_text_file(cpath, replication_to_csv(report));
  mb.add_output(jpath);
  mb.add_output(cpath);
  mb.write(join_path(o.out_dir, "manifest.json"));

  for (const auto& m : report.models) {
    std::cout << "model " << m.model << ": ";
    if (m.reference_dataset.empty()) {
      std::cout << "no dataset fit\n";
      continue;
    }
    std::cout << "agreement " << m.agreement_rate * 100.0 << "%";
    if (!m.disjoint_parameters.empty()) {
      std::cout << ", disjoint:";
      for (const auto& p : m.disjoint_parameters) std::cout << ' ' << p;
    }
    std::cout << "\n";
  }
  if (!report.every_model_has_fit) {
    std::cerr << "error: at least one model fit no dataset\n";
    return 5;
  }
  return 0;
}

struct AuditOpts {
  std::string original, synthetic, out;
  std::vector<std::string> columns;
  int threads = 0;
};

int run_audit(const AuditOpts& o) {
  apply_threads(o.threads);
  ManifestBuilder mb("audit");
  const Table orig = load_csv(o.original);
  const Table syn = load_csv(o.synthetic);
  mb.add_input(o.original);
  mb.add_input(o.synthetic);
  const ExactMatchAudit audit = exact_match_audit(orig, syn, o.columns);
  write_text_file(o.out, dump_json(audit_to_json(audit)));
  mb.add_output(o.out);
  mb.write(o.out + ".manifest.json");
  std::cout << "match_rate " << audit.match_rate << ", unique_match_rate "
            << audit.unique_match_rate << "\n";
  return 0;
}

struct SummarizeOpts {
  std::string input, spec, out;
  int threads = 0;
};

int run_summarize(const SummarizeOpts& o) {
  apply_threads(o.threads);
  ManifestBuilder mb("summarize");
  SummarySpec spec;
  if (!o.spec.empty()) {
    spec = parse_summary_spec(load_json_file(o.spec));
    mb.add_config(o.spec);
  }
  Table t = load_csv(o.input, std::nullopt, spec.weight_column);
  mb.add_input(o.input);
  if (!spec.filter.atoms.empty()) t = filter_rows(t, spec.filter);
  if (!spec.recodes.rules.empty()) t = apply_recode(t, spec.recodes);
  std::vector<std::string> columns = spec.columns;
  if (columns.empty()) {
    for (std::size_t c = 0; c < t.n_cols(); ++c) columns.push_back(t.schema(c).name);
  }
  const std::vector<ColumnSummary> rows = summarize(t, columns, spec.weighted);
  write_text_file(o.out, dump_json(summary_to_json(rows, spec.weighted)));
  mb.add_output(o.out);
  mb.write(o.out + ".manifest.json");
  std::cout << "summarized " << t.n_rows() << " rows, " << columns.size() << " columns -> "
            << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabular microdata synthesis and evaluation toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  int rc = 0;

  SynthesizeOpts syn;
  auto* s = app.add_subcommand("synthesize", "fit CART trees and generate synthetic rows");
  s->add_option("--input", syn.input, "original CSV")->required();
  s->add_option("--config", syn.config, "synthesis config JSON")->required();
  s->add_option("--schema", syn.schema, "column schema JSON (default: inferred)");
  auto* seed_opt = s->add_option("--seed", syn.seed, "master seed (overrides config)");
  auto* rows_opt = s->add_option("--rows", syn.rows, "synthetic row count (overrides config)");
  s->add_option("--out", syn.out, "synthetic CSV path")->required();
  s->add_option("--model-out", syn.model_out, "fitted model bundle JSON path");
  s->add_option("--diagnostics-out", syn.diagnostics_out, "consistency diagnostics JSON path");
  s->add_option("--manifest", syn.manifest, "manifest path (default: <out>.manifest.json)");
  s->add_option("--threads", syn.threads, "worker cap (default MICROSYNTH_THREADS)");
  s->callback([&] {
    syn.seed_given = seed_opt->count() > 0;
    syn.rows_given = rows_opt->count() > 0;
    rc = run_synthesize(syn);
  });

  EvaluateOpts ev;
  auto* e = app.add_subcommand("evaluate", "score synthetic data against the original");
  e->add_option("--original", ev.original, "original CSV")->required();
  e->add_option("--synthetic", ev.synthetic, "synthetic CSV")->required();
  e->add_option("--k", ev.k, "marginal width (default 2)");
  e->add_option("--n-marginals", ev.n_marginals, "marginal subset budget (default 1000)");
  e->add_option("--bins", ev.bins, "numeric quantile bins (default 20)");
  e->add_option("--seed", ev.seed, "subset sampling seed");
  auto* base_opt =
      e->add_option("--baseline", ev.baseline, "also score an original holdout of this fraction");
  e->add_option("--pca", ev.pca_components, "PCA components (default 5, 0 disables)");
  e->add_option("--figures", ev.figures, "figure spec JSON");
  e->add_option("--out-dir", ev.out_dir, "output directory")->required();
  e->add_option("--threads", ev.threads, "worker cap (default MICROSYNTH_THREADS)");
  e->callback([&] {
    ev.baseline_given = base_opt->count() > 0;
    rc = run_evaluate(ev);
  });

  ReplicateOpts rep;
  auto* r = app.add_subcommand("replicate", "fit the same models across datasets and compare");
  r->add_option("--datasets", rep.datasets, "name=path pairs")->required();
  r->add_option("--model-spec", rep.model_spec, "model spec JSON")->required();
  r->add_option("--out-dir", rep.out_dir, "output directory")->required();
  r->add_option("--threads", rep.threads, "worker cap (default MICROSYNTH_THREADS)");
  r->callback([&] { rc = run_replicate(rep); });

  AuditOpts au;
  auto* a = app.add_subcommand("audit", "exact-match privacy audit on quasi-identifiers");
  a->add_option("--original", au.original, "original CSV")->required();
  a->add_option("--synthetic", au.synthetic, "synthetic CSV")->required();
  a->add_option("--columns", au.columns, "quasi-identifier columns")
      ->required()
      ->delimiter(',');
  a->add_option("--out", au.out, "audit JSON path")->required();
  a->add_option("--threads", au.threads, "worker cap (default MICROSYNTH_THREADS)");
  a->callback([&] { rc = run_audit(au); });

  SummarizeOpts su;
  auto* m = app.add_subcommand("summarize", "descriptive statistics under a filter/recode spec");
  m->add_option("--input", su.input, "input CSV")->required();
  m->add_option("--spec", su.spec, "summary spec JSON (filter, recodes, columns, weighting)");
  m->add_option("--out", su.out, "summary JSON path")->required();
  m->add_option("--threads", su.threads, "worker cap (default MICROSYNTH_THREADS)");
  m->callback([&] { rc = run_summarize(su); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const ConsistencyError& err) {
    std::cerr << "consistency error: " << err.what() << "\n";
    return 4;
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return rc;
}
