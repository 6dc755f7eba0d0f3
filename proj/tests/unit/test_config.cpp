#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "microsynth/config.hpp"
#include "microsynth/errors.hpp"
#include "microsynth/synthesis.hpp"

#include "support/fixtures.hpp"

using namespace microsynth;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("json files round trip through disk and errors name the path") {
  const std::string path = temp_path("microsynth_cfg_roundtrip.json");
  Json j;
  j["alpha"] = 1;
  j["beta"] = std::vector<double>{0.1, 2.5};
  write_text_file(path, dump_json(j));
  CHECK(load_json_file(path) == j);
  std::remove(path.c_str());

  CHECK_THROWS_WITH_AS(load_json_file("/nonexistent/nope.json"),
                       doctest::Contains("/nonexistent/nope.json"), ConfigError);

  const std::string bad = temp_path("microsynth_cfg_bad.json");
  write_text_file(bad, "{not json");
  CHECK_THROWS_WITH_AS(load_json_file(bad), doctest::Contains(bad.c_str()), ConfigError);
  std::remove(bad.c_str());
}

TEST_CASE("dumped json is indented, newline-terminated, and double-exact") {
  Json j;
  j["a"] = 1;
  const std::string text = dump_json(j);
  CHECK(text == "{\n  \"a\": 1\n}\n");

  Json nums;
  nums["values"] = std::vector<double>{0.1, 12345.6789, 1e-9, 3.0000000000000004};
  const Json back = Json::parse(dump_json(nums));
  const auto a = nums["values"].get<std::vector<double>>();
  const auto b = back["values"].get<std::vector<double>>();
  CHECK(a == b);
}

TEST_CASE("schemas parse kinds, categories, and the weight designation") {
  const Json j = Json::parse(R"({
    "columns": [
      {"name": "state", "kind": "categorical", "categories": ["WA", "OR", "NR"],
       "nr_codes": ["NR"], "unit_note": "postal code"},
      {"name": "sales", "kind": "numeric", "unit_note": "thousand USD"}
    ],
    "weight_column": "w"
  })");
  const SchemaFile s = parse_schema(j);
  REQUIRE(s.columns.size() == 2);
  CHECK(s.columns[0].kind == ColumnKind::categorical);
  CHECK(s.columns[0].categories == std::vector<std::string>{"WA", "OR", "NR"});
  CHECK(s.columns[0].nr_codes == std::vector<std::string>{"NR"});
  CHECK_THROWS_AS(parse_schema(Json::parse(
                      R"({"columns": [{"name": "g", "kind": "categorical",
                          "categories": ["a"], "nr_codes": ["NR"]}]})")),
                  ConfigError);
  CHECK(s.columns[1].kind == ColumnKind::numeric);
  CHECK(s.columns[1].unit_note == "thousand USD");
  CHECK(s.weight_column == "w");

  CHECK_THROWS_AS(parse_schema(Json::parse(
                      R"({"columns": [{"name": "g", "kind": "categorical"}]})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_schema(Json::parse(
                      R"({"columns": [{"name": "g", "kind": "text"}]})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_schema(Json::parse(R"({"colums": []})")), ConfigError);
}

TEST_CASE("filter atoms accept string or numeric operands per op") {
  const FilterAtom cat = parse_filter_atom(Json::parse(
      R"({"column": "state", "op": "eq", "value": "WA"})"));
  CHECK(cat.op == FilterOp::eq);
  CHECK(cat.values == std::vector<std::string>{"WA"});
  CHECK(!cat.number_set);

  const FilterAtom num = parse_filter_atom(Json::parse(
      R"({"column": "size", "op": "ne", "value": 5})"));
  CHECK(num.number_set);
  CHECK(num.number == 5.0);

  const FilterAtom set = parse_filter_atom(Json::parse(
      R"({"column": "state", "op": "in_set", "values": ["WA", "OR"]})"));
  CHECK(set.values.size() == 2);

  const FilterAtom half_range = parse_filter_atom(Json::parse(
      R"({"column": "sales", "op": "in_range", "lo": 10})"));
  CHECK(half_range.lo == 10.0);
  CHECK(half_range.hi == std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS(parse_filter_atom(Json::parse(
                      R"({"column": "x", "op": "in_range"})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_filter_atom(Json::parse(
                      R"({"column": "x", "op": "matches", "value": "a"})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_filter_atom(Json::parse(
                      R"({"column": "x", "op": "eq", "value": "a", "typo": 1})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_filter_atom(Json::parse(
                      R"({"column": "x", "op": "in_set", "values": []})")),
                  ConfigError);
}

TEST_CASE("filters parse from an atom, an array, or an all block") {
  const auto one = parse_filter(Json::parse(R"({"column": "g", "op": "eq", "value": "a"})"));
  CHECK(one.atoms.size() == 1);
  const auto arr = parse_filter(Json::parse(
      R"([{"column": "g", "op": "eq", "value": "a"},
          {"column": "x", "op": "in_range", "lo": 0, "hi": 1}])"));
  CHECK(arr.atoms.size() == 2);
  const auto all = parse_filter(Json::parse(
      R"({"all": [{"column": "g", "op": "eq", "value": "a"}]})"));
  CHECK(all.atoms.size() == 1);
  CHECK(parse_filter(Json()).atoms.empty());
  CHECK_THROWS_AS(parse_filter(Json::parse("3")), ConfigError);
}

TEST_CASE("recode rules parse every kind with its own keys") {
  const RecodeSpec spec = parse_recode_spec(Json::parse(R"({
    "rules": [
      {"target": "immigrant", "kind": "flag_any",
       "any_of": [{"column": "born", "op": "eq", "value": "abroad"}]},
      {"target": "both", "kind": "product", "factors": ["a", "b"]},
      {"target": "ln_sales", "kind": "log_ratio", "numerator": "sales",
       "denominator": "employees", "scale": 1000, "missing_on_nonpositive": true},
      {"target": "size_class", "kind": "bucket", "source": "employees",
       "edges": [0, 9], "labels": ["none", "small", "large"]},
      {"target": "flag", "kind": "map_cases",
       "cases": [{"when": {"column": "g", "op": "eq", "value": "x"}, "value": 1}],
       "default": 0}
    ]
  })"));
  REQUIRE(spec.rules.size() == 5);
  CHECK(spec.rules[0].kind == RecodeKind::flag_any);
  CHECK(spec.rules[1].factors == std::vector<std::string>{"a", "b"});
  CHECK(spec.rules[2].scale == 1000.0);
  CHECK(spec.rules[2].missing_on_nonpositive);
  CHECK(spec.rules[3].labels.size() == 3);
  CHECK(spec.rules[4].has_default);
  CHECK(spec.rules[4].cases[0].value_is_number);

  CHECK_THROWS_AS(parse_recode_spec(Json::parse(
                      R"([{"target": "t", "kind": "upper"}])")),
                  ConfigError);
  CHECK_THROWS_AS(parse_recode_spec(Json::parse(
                      R"([{"target": "t", "kind": "product", "edges": []}])")),
                  ConfigError);
}

TEST_CASE("synthesis configs resolve visit entries, params, and rules") {
  const SynthesisConfig cfg = parse_synthesis_config(Json::parse(R"({
    "visit_order": [
      "region",
      {"column": "id", "mode": "carry_observed", "as_predictor": true},
      {"column": "wage", "params": {"min_leaf": 3}}
    ],
    "default_params": {"min_leaf": 10, "max_depth": 12},
    "consistency_rules": [
      {"name": "exports_need_sales",
       "require": {"column": "sales", "op": "in_range", "lo": 1},
       "resample": ["sales"], "limit": 7}
    ],
    "rows": 500, "seed": 42, "weighted": true, "max_violating_fraction": 0.05
  })"));
  REQUIRE(cfg.visit_order.size() == 3);
  CHECK(cfg.visit_order[0].name == "region");
  CHECK(cfg.visit_order[0].mode == ColumnMode::synthesize);
  CHECK(cfg.visit_order[1].mode == ColumnMode::carry_observed);
  CHECK(cfg.visit_order[1].carry_as_predictor);
  REQUIRE(cfg.visit_order[2].params.has_value());
  CHECK(cfg.visit_order[2].params->min_leaf == 3);
  CHECK(cfg.visit_order[2].params->max_depth == 12);
  CHECK(cfg.default_params.min_leaf == 10);
  REQUIRE(cfg.consistency_rules.size() == 1);
  CHECK(cfg.consistency_rules[0].resample_limit == 7);
  CHECK(cfg.n_synthetic_rows == 500);
  CHECK(cfg.master_seed == 42);
  CHECK(cfg.weighted);
  CHECK(cfg.max_violating_fraction == 0.05);

  CHECK_THROWS_AS(parse_synthesis_config(Json::parse(R"({"visit_order": []})")), ConfigError);
  CHECK_THROWS_AS(parse_synthesis_config(Json::parse(
                      R"({"visit_order": [{"column": "a", "mode": "copy"}]})")),
                  ConfigError);
}

TEST_CASE("model specs parse and reject duplicate names") {
  const auto specs = parse_model_specs(Json::parse(R"({
    "models": [
      {"name": "wages", "kind": "ols", "response": "ln_wage",
       "predictors": ["immigrant"],
       "interactions": [{"name": "imm_fam", "factors": ["immigrant", "family"]}],
       "dummy_blocks": [{"source": "industry", "reference": "manufacturing"}]},
      {"name": "exporter", "kind": "logit", "response": "exports",
       "filter": {"column": "employer", "op": "eq", "value": "1"}}
    ]
  })"));
  REQUIRE(specs.size() == 2);
  CHECK(specs[0].kind == ModelKind::ols);
  CHECK(specs[0].interactions[0].factors.size() == 2);
  CHECK(specs[0].dummy_blocks[0].reference == "manufacturing");
  CHECK(specs[1].kind == ModelKind::logit);
  CHECK(specs[1].filter.atoms.size() == 1);

  CHECK_THROWS_AS(parse_model_specs(Json::parse(R"({"models": []})")), ConfigError);
  CHECK_THROWS_AS(parse_model_specs(Json::parse(R"({
    "models": [{"name": "m", "kind": "ols", "response": "y"},
               {"name": "m", "kind": "ols", "response": "y"}]})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_model_specs(Json::parse(R"({
    "models": [{"name": "m", "kind": "probit", "response": "y"}]})")),
                  ConfigError);
}

TEST_CASE("figure specs parse components as 1-based indices") {
  const auto figs = parse_figures(Json::parse(R"({
    "figures": [
      {"name": "sales_hist", "type": "univariate", "feature": "sales", "bins": 30},
      {"name": "wa_exports", "type": "conditional",
       "filter": {"column": "state", "op": "eq", "value": "WA"}, "target": "exports"},
      {"name": "cloud", "type": "pca", "components": [1, 3],
       "filter": {"column": "immigrant", "op": "eq", "value": "1"}}
    ]
  })"));
  REQUIRE(figs.size() == 3);
  CHECK(figs[0].kind == FigureKind::univariate);
  CHECK(figs[0].n_bins == 30);
  CHECK(figs[1].kind == FigureKind::conditional);
  CHECK(figs[1].target == "exports");
  CHECK(figs[2].kind == FigureKind::pca);
  CHECK(figs[2].pc_i == 0);
  CHECK(figs[2].pc_j == 2);

  CHECK_THROWS_AS(parse_figures(Json::parse(R"([
      {"name": "a", "type": "univariate", "feature": "x"},
      {"name": "a", "type": "univariate", "feature": "y"}])")),
                  ConfigError);
  CHECK_THROWS_AS(parse_figures(Json::parse(R"([
      {"name": "c", "type": "pca", "components": [1, 1]}])")),
                  ConfigError);
  CHECK_THROWS_AS(parse_figures(Json::parse(R"([
      {"name": "c", "type": "pca", "components": [0, 2]}])")),
                  ConfigError);
  CHECK_THROWS_AS(parse_figures(Json::parse(R"([{"name": "c", "type": "heatmap"}])")),
                  ConfigError);
}

TEST_CASE("summary specs parse filters, columns, and weighting") {
  const SummarySpec s = parse_summary_spec(Json::parse(R"({
    "filter": {"column": "state", "op": "eq", "value": "WA"},
    "recodes": [{"target": "b", "kind": "product", "factors": ["x", "y"]}],
    "columns": ["b"], "weighted": true, "weight_column": "tabwgt"
  })"));
  CHECK(s.filter.atoms.size() == 1);
  CHECK(s.recodes.rules.size() == 1);
  CHECK(s.columns == std::vector<std::string>{"b"});
  CHECK(s.weighted);
  CHECK(s.weight_column == "tabwgt");
  CHECK_THROWS_AS(parse_summary_spec(Json::parse(R"({"column": []})")), ConfigError);
}

TEST_CASE("fitted bundles survive a json round trip byte for byte") {
  const Table t = testfix::business_table(3, 300);
  SynthesisConfig cfg;
  for (const auto& name : {"region", "sector", "size_class", "wage"}) {
    ColumnPlan p;
    p.name = name;
    cfg.visit_order.push_back(p);
  }
  cfg.default_params.min_leaf = 10;
  cfg.n_synthetic_rows = 50;
  cfg.master_seed = 9;
  const auto result = synthesize(t, cfg);

  const Json j = bundle_to_json(result.model);
  const std::string text = dump_json(j);
  const ModelBundle back = bundle_from_json(Json::parse(text));
  CHECK(dump_json(bundle_to_json(back)) == text);
  CHECK(back.master_seed == 9);
  CHECK(back.trees.size() == 4);

  Json corrupt = j;
  bool patched = false;
  for (auto& node : corrupt["trees"][3]["nodes"]) {
    if (!node["leaf"].get<bool>()) {
      node["left"] = 100000;
      patched = true;
      break;
    }
  }
  REQUIRE(patched);
  CHECK_THROWS_WITH_AS(bundle_from_json(corrupt), doctest::Contains("child index"),
                       ConfigError);
}

TEST_CASE("score reports carry the version and a half-up rounded headline") {
  KMarginalReport report;
  report.score = 749.5;
  MarginalScore m;
  m.features = {0, 1};
  m.score = 749.5;
  report.per_marginal = {m};
  FeatureMean fm;
  fm.feature = 0;
  fm.name = "g";
  fm.mean_score = 749.5;
  fm.n_marginals = 1;
  report.per_feature_mean = {fm};
  report.feature_names = {"g", "h"};
  KMarginalConfig cfg;
  cfg.k = 2;
  const Json j = kmarginal_report_to_json(report, cfg);
  CHECK(j["schema_version"].is_number());
  CHECK(j["score"] == 749.5);
  CHECK(j["score_rounded"] == 750);
  CHECK(j["k"] == 2);

  report.score = 749.4999;
  CHECK(kmarginal_report_to_json(report, cfg)["score_rounded"] == 749);
}

TEST_CASE("replication csv rows mirror the fit and comparison records") {
  ReplicationReport report;
  ModelReport m;
  m.model = "wages";
  m.kind = ModelKind::ols;
  m.reference_dataset = "original";
  FitRecord fit;
  fit.dataset = "original";
  fit.ok = true;
  ParamRow row;
  row.parameter = "immigrant";
  row.estimate = 0.25;
  row.se = 0.1;
  row.p = 0.0124;
  row.ci = {0.054, 0.446};
  fit.params = {row};
  m.fits = {fit};
  ComparisonRow cmp;
  cmp.parameter = "immigrant";
  cmp.dataset = "synthetic";
  m.comparisons = {cmp};
  report.models = {m};

  const std::string csv = replication_to_csv(report);
  CHECK(csv.rfind("model,dataset,parameter,estimate,se,ci_lo,ci_hi,p,classification\n", 0) == 0);
  CHECK(csv.find("wages,original,immigrant,0.25,0.1,0.054,0.446,0.0124,") != std::string::npos);
}

TEST_CASE("figure csv builders emit stable headers and flags") {
  UnivariateComparison u;
  u.feature = "g";
  u.bin_labels = {"a", "b,c"};
  u.original_freq = {0.5, 0.5};
  u.synthetic_freq = {0.75, 0.25};
  const std::string ucsv = univariate_csv(u);
  CHECK(ucsv ==
        "category,original_freq,synthetic_freq\n"
        "a,0.5,0.75\n"
        "\"b,c\",0.5,0.25\n");

  PcaHalf half;
  half.projections = {{1.0, 2.0}, {3.0, 4.0}};
  const std::string pcsv = pca_points_csv(half, 0, 1, {1, 0});
  CHECK(pcsv ==
        "pc_1,pc_2,highlight_flag\n"
        "1,3,1\n"
        "2,4,0\n");
  CHECK_THROWS_AS(pca_points_csv(half, 0, 5, {}), ConfigError);
}
