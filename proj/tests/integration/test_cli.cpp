#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "microsynth/config.hpp"
#include "microsynth/csv.hpp"
#include "microsynth/hashing.hpp"

#include "support/fixtures.hpp"

using namespace microsynth;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("microsynth_it_" + std::to_string(static_cast<long>(::getpid())));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string p(const std::string& name) { return (work_dir() / name).string(); }

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MICROSYNTH_CLI_PATH + "\" " + args +
                          " >" + p("stdout.txt") + " 2>" + p("stderr.txt");
  const int st = std::system(cmd.c_str());
  REQUIRE(st != -1);
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void manifest_hashes_check(const std::string& manifest_path) {
  const Json m = load_json_file(manifest_path);
  for (const char* section : {"inputs", "configs", "outputs"}) {
    for (const auto& e : m[section]) {
      CHECK(hash_file(e["path"].get<std::string>()) == e["fnv1a64"].get<std::string>());
    }
  }
}

const std::string kSynthConfig = R"({
  "visit_order": ["region", "sector", "employer", "size_class", "owner_age",
                  "exporter", "female", "urban", "coop_type", "wage"],
  "default_params": {"min_leaf": 15},
  "rows": 400,
  "seed": 20240
})";

struct Prepared {
  std::string original = p("original.csv");
  std::string config = p("synthesis.json");
};

const Prepared& prepared() {
  static const Prepared pr = [] {
    Prepared out;
    write_csv(testfix::business_table(5, 400), out.original);
    write_text_file(out.config, kSynthConfig);
    return out;
  }();
  return pr;
}

}  // namespace

TEST_CASE("synthesize writes data, bundle, diagnostics, and a manifest") {
  const auto& pr = prepared();
  const int rc = run_cli("synthesize --input " + pr.original + " --config " + pr.config +
                         " --out " + p("syn.csv") + " --model-out " + p("model.json") +
                         " --diagnostics-out " + p("diag.json") + " --threads 2");
  CHECK(rc == 0);
  const Table syn = load_csv(p("syn.csv"));
  CHECK(syn.n_rows() == 400);
  CHECK(syn.n_cols() == 10);
  CHECK(syn.schema(0).name == "region");

  const ModelBundle bundle = bundle_from_json(load_json_file(p("model.json")));
  CHECK(bundle.master_seed == 20240);
  CHECK(bundle.trees.size() == 10);

  const Json diag = load_json_file(p("diag.json"));
  CHECK(diag["n_rows"] == 400);

  manifest_hashes_check(p("syn.csv.manifest.json"));
  CHECK(slurp(p("stdout.txt")).find("synthesized 400 rows") != std::string::npos);
}

TEST_CASE("outputs are byte-identical across thread counts and reruns") {
  const auto& pr = prepared();
  CHECK(run_cli("synthesize --input " + pr.original + " --config " + pr.config + " --out " +
                p("a.csv") + " --model-out " + p("a_model.json") + " --threads 1") == 0);
  CHECK(run_cli("synthesize --input " + pr.original + " --config " + pr.config + " --out " +
                p("b.csv") + " --model-out " + p("b_model.json") + " --threads 8") == 0);
  CHECK(slurp(p("a.csv")) == slurp(p("b.csv")));
  CHECK(slurp(p("a_model.json")) == slurp(p("b_model.json")));

  CHECK(run_cli("synthesize --input " + pr.original + " --config " + pr.config + " --out " +
                p("c.csv") + " --seed 999 --threads 4") == 0);
  CHECK(slurp(p("a.csv")) != slurp(p("c.csv")));
}

TEST_CASE("evaluate emits scores, figures, and point clouds") {
  const auto& pr = prepared();
  REQUIRE(run_cli("synthesize --input " + pr.original + " --config " + pr.config + " --out " +
                  p("syn_eval.csv")) == 0);
  write_text_file(p("figures.json"), R"({
    "figures": [
      {"name": "wage_hist", "type": "univariate", "feature": "wage", "bins": 10},
      {"name": "r0_coops", "type": "conditional",
       "filter": {"column": "region", "op": "eq", "value": "r0"}, "target": "coop_type"},
      {"name": "cloud", "type": "pca", "components": [1, 2],
       "filter": {"column": "employer", "op": "eq", "value": 1}}
    ]
  })");
  const int rc = run_cli("evaluate --original " + pr.original + " --synthetic " +
                         p("syn_eval.csv") + " --k 2 --bins 10 --baseline 0.3 --figures " +
                         p("figures.json") + " --out-dir " + p("eval"));
  CHECK(rc == 0);

  const Json kj = load_json_file(p("eval/kmarginal.json"));
  const double score = kj["score"].get<double>();
  CHECK(score >= 0.0);
  CHECK(score <= 1000.0);
  CHECK(kj["score_rounded"].is_number_integer());
  CHECK(kj["baseline_score"].get<double>() > 0.0);

  CHECK(fs::exists(p("eval/pca.json")));
  CHECK(fs::exists(p("eval/figures.json")));
  const std::string wage_csv = slurp(p("eval/wage_hist.csv"));
  CHECK(wage_csv.rfind("category,original_freq,synthetic_freq\n", 0) == 0);
  CHECK(slurp(p("eval/cloud_original.csv")).rfind("pc_1,pc_2,highlight_flag\n", 0) == 0);
  CHECK(fs::exists(p("eval/cloud_synthetic.csv")));
  CHECK(fs::exists(p("eval/r0_coops.csv")));
  manifest_hashes_check(p("eval/manifest.json"));
}

TEST_CASE("evaluate reproduces a hand-computed marginal score") {
  write_text_file(p("orig750.csv"), "g\nA\nB\n");
  write_text_file(p("syn750.csv"), "g\nA\nA\nA\nB\n");
  const int rc = run_cli("evaluate --original " + p("orig750.csv") + " --synthetic " +
                         p("syn750.csv") + " --k 1 --pca 0 --out-dir " + p("eval750"));
  CHECK(rc == 0);
  const Json kj = load_json_file(p("eval750/kmarginal.json"));
  CHECK(kj["score"].get<double>() == 750.0);
  CHECK(kj["score_rounded"] == 750);
}

TEST_CASE("replicate compares fits and reports agreement") {
  const auto& pr = prepared();
  write_text_file(p("models.json"), R"({
    "models": [
      {"name": "wage_model", "kind": "ols", "response": "wage",
       "predictors": ["exporter"],
       "dummy_blocks": [{"source": "sector", "reference": "s0"}]}
    ]
  })");
  const int rc = run_cli("replicate --datasets original=" + pr.original + " synthetic=" +
                         pr.original + " --model-spec " + p("models.json") + " --out-dir " +
                         p("rep"));
  CHECK(rc == 0);
  const std::string csv = slurp(p("rep/replication.csv"));
  CHECK(csv.rfind("model,dataset,parameter,estimate,se,ci_lo,ci_hi,p,classification\n", 0) == 0);
  CHECK(csv.find("wage_model,original,") != std::string::npos);
  const Json rj = load_json_file(p("rep/replication.json"));
  CHECK(rj["models"][0]["agreement_rate"] == 1.0);
  CHECK(slurp(p("stdout.txt")).find("agreement 100%") != std::string::npos);
  manifest_hashes_check(p("rep/manifest.json"));
}

TEST_CASE("replicate exits 5 when a model fits no dataset") {
  std::string csv = "x,y\n";
  for (int i = 0; i < 20; ++i) {
    csv += std::to_string(i) + "," + (i < 10 ? std::string("0") : std::string("1")) + "\n";
  }
  write_text_file(p("separated.csv"), csv);
  write_text_file(p("sep_model.json"),
                  R"({"models": [{"name": "sep", "kind": "logit", "response": "y",
                      "predictors": ["x"]}]})");
  const int rc = run_cli("replicate --datasets original=" + p("separated.csv") + " synthetic=" +
                         p("separated.csv") + " --model-spec " + p("sep_model.json") +
                         " --out-dir " + p("rep_fail"));
  CHECK(rc == 5);
  CHECK(fs::exists(p("rep_fail/replication.json")));
}

TEST_CASE("audit reports match rates on quasi-identifiers") {
  const auto& pr = prepared();
  const int rc = run_cli("audit --original " + pr.original + " --synthetic " + pr.original +
                         " --columns region,sector,wage --out " + p("audit.json"));
  CHECK(rc == 0);
  const Json aj = load_json_file(p("audit.json"));
  CHECK(aj["match_rate"] == 1.0);
  CHECK(aj["n_synthetic"] == 400);
  CHECK(aj["quasi_identifiers"].size() == 3);
}

TEST_CASE("summarize applies the filter and recode spec") {
  write_text_file(p("sum.csv"), "g,x\na,1\na,2\nb,3\nb,4\n");
  write_text_file(p("sum_spec.json"), R"({
    "filter": {"column": "x", "op": "in_range", "lo": 2},
    "recodes": [{"target": "double_x", "kind": "product", "factors": ["x", "x"]}],
    "columns": ["x", "double_x", "g"]
  })");
  const int rc = run_cli("summarize --input " + p("sum.csv") + " --spec " + p("sum_spec.json") +
                         " --out " + p("summary.json"));
  CHECK(rc == 0);
  const Json sj = load_json_file(p("summary.json"));
  CHECK(sj["columns"][0]["name"] == "x");
  CHECK(sj["columns"][0]["mean"] == 3.0);
  CHECK(sj["columns"][1]["mean"] == doctest::Approx((4.0 + 9.0 + 16.0) / 3.0));
}

TEST_CASE("config and usage mistakes exit 2") {
  const auto& pr = prepared();
  CHECK(run_cli("synthesize --input " + pr.original + " --config " + p("missing.json") +
                " --out " + p("x.csv")) == 2);
  CHECK(run_cli("replicate --datasets notapair --model-spec " + p("missing.json") +
                " --out-dir " + p("x")) == 2);
  CHECK(run_cli("frobnicate") == 2);
  write_text_file(p("bad_fig.json"),
                  R"([{"name": "h", "type": "univariate", "feature": "no_such_column"}])");
  CHECK(run_cli("evaluate --original " + pr.original + " --synthetic " + pr.original +
                " --figures " + p("bad_fig.json") + " --out-dir " + p("eval_bad")) == 2);
  write_text_file(p("deep_fig.json"), R"([{"name": "c", "type": "pca", "components": [1, 7]}])");
  CHECK(run_cli("evaluate --original " + pr.original + " --synthetic " + pr.original +
                " --pca 2 --figures " + p("deep_fig.json") + " --out-dir " + p("eval_deep")) == 2);
}

TEST_CASE("data that contradicts a declared schema exits 3") {
  write_text_file(p("strict.csv"), "g,x\na,1\nc,2\n");
  write_text_file(p("strict_schema.json"), R"({
    "columns": [{"name": "g", "kind": "categorical", "categories": ["a", "b"]},
                {"name": "x", "kind": "numeric"}]
  })");
  write_text_file(p("strict_synth.json"), R"({"visit_order": ["g", "x"], "rows": 4,
    "default_params": {"min_leaf": 1}})");
  CHECK(run_cli("synthesize --input " + p("strict.csv") + " --schema " +
                p("strict_schema.json") + " --config " + p("strict_synth.json") + " --out " +
                p("strict_out.csv")) == 3);
}

TEST_CASE("an unsatisfiable consistency rule exits 4") {
  write_text_file(p("cons.csv"), "g\na\nb\na\nb\n");
  write_text_file(p("cons_synth.json"), R"({
    "visit_order": ["g"], "rows": 50, "seed": 1,
    "default_params": {"min_leaf": 1},
    "consistency_rules": [
      {"name": "impossible", "require": {"column": "g", "op": "eq", "value": "zz"},
       "resample": ["g"], "limit": 2}
    ]
  })");
  CHECK(run_cli("synthesize --input " + p("cons.csv") + " --config " + p("cons_synth.json") +
                " --out " + p("cons_out.csv")) == 4);
  CHECK(slurp(p("stderr.txt")).find("impossible") != std::string::npos);
}

TEST_CASE("the committed fixture synthesizes to a frozen golden hash") {
  const std::string data_dir = MICROSYNTH_REPO_DIR;
  const std::string input = data_dir + "/data/fixtures/tiny.csv";
  const std::string config = data_dir + "/configs/tiny_synthesis.json";
  REQUIRE(fs::exists(input));
  REQUIRE(fs::exists(config));
  const int rc = run_cli("synthesize --input " + input + " --config " + config + " --out " +
                         p("tiny_out.csv") + " --threads 3");
  CHECK(rc == 0);
  CHECK(hash_file(p("tiny_out.csv")) == MICROSYNTH_TINY_GOLDEN);
}

TEST_CASE("every committed config parses through its loader") {
  const std::string dir = std::string(MICROSYNTH_REPO_DIR) + "/configs";
  CHECK(parse_synthesis_config(load_json_file(dir + "/tiny_synthesis.json"))
            .visit_order.size() == 4);
  CHECK(parse_synthesis_config(load_json_file(dir + "/sbo/synthesis.json"))
            .visit_order.size() >= 10);
  const auto models = parse_model_specs(load_json_file(dir + "/sbo/models.json"));
  CHECK(models.size() == 5);
  for (const auto& m : models) CHECK(!m.predictors.empty());
  const auto figures = parse_figures(load_json_file(dir + "/sbo/figures.json"));
  CHECK(figures.size() == 3);
  const auto summary = parse_summary_spec(load_json_file(dir + "/sbo/summary_spec.json"));
  CHECK(summary.columns.size() >= 5);
  CHECK(summary.weight_column == "TABWGT");
}
