#include "microsynth/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <map>
#include <unordered_set>
#include <utility>

#include "microsynth/csv.hpp"
#include "microsynth/errors.hpp"
#include "microsynth/intervals.hpp"
#include "microsynth/version.hpp"

namespace microsynth {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const Json* find(const Json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const Json* v = find(j, key);
  if (!v) fail(where, std::string("missing '") + key + "'");
  return *v;
}

// Strict key sets so config typos fail loudly instead of being ignored.
void check_keys(const Json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || item.key() == a;
    if (!known) fail(where, "unknown key '" + item.key() + "'");
  }
}

std::string get_string(const Json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

bool get_bool(const Json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected a boolean");
  return j.get<bool>();
}

std::uint64_t get_u64(const Json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  fail(where, "expected a non-negative integer");
}

std::size_t get_count(const Json& j, const std::string& where) {
  return static_cast<std::size_t>(get_u64(j, where));
}

std::int32_t get_i32(const Json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) fail(where, "expected an integer");
  return static_cast<std::int32_t>(j.get<std::int64_t>());
}

std::vector<std::string> get_string_list(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(get_string(e, where));
  return out;
}

std::vector<double> get_number_list(const Json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) out.push_back(get_number(e, where));
  return out;
}

FilterOp parse_op(const std::string& s, const std::string& where) {
  if (s == "eq") return FilterOp::eq;
  if (s == "ne") return FilterOp::ne;
  if (s == "in_set") return FilterOp::in_set;
  if (s == "not_in_set") return FilterOp::not_in_set;
  if (s == "in_range") return FilterOp::in_range;
  if (s == "not_in_range") return FilterOp::not_in_range;
  fail(where, "unknown op '" + s + "'");
}

TreeParams parse_tree_params(const Json& j, TreeParams base, const std::string& where) {
  check_keys(j,
             {"min_leaf", "max_depth", "min_impurity_decrease",
              "max_numeric_split_candidates"},
             where);
  if (const Json* v = find(j, "min_leaf")) base.min_leaf = get_count(*v, where + " 'min_leaf'");
  if (const Json* v = find(j, "max_depth")) base.max_depth = get_count(*v, where + " 'max_depth'");
  if (const Json* v = find(j, "min_impurity_decrease")) {
    base.min_impurity_decrease = get_number(*v, where + " 'min_impurity_decrease'");
  }
  if (const Json* v = find(j, "max_numeric_split_candidates")) {
    base.max_numeric_split_candidates = get_count(*v, where + " 'max_numeric_split_candidates'");
  }
  return base;
}

Json params_to_json(const TreeParams& p) {
  Json j;
  j["min_leaf"] = p.min_leaf;
  j["max_depth"] = p.max_depth;
  j["min_impurity_decrease"] = p.min_impurity_decrease;
  j["max_numeric_split_candidates"] = p.max_numeric_split_candidates;
  return j;
}

Json interval_to_json(const Interval& i) {
  Json j;
  j["lo"] = i.lo;
  j["hi"] = i.hi;
  return j;
}

const char* kind_name(ModelKind k) { return k == ModelKind::ols ? "ols" : "logit"; }

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw DataError("write failed for '" + path + "'");
}

SchemaFile parse_schema(const Json& j) {
  const std::string where = "schema";
  check_keys(j, {"schema_version", "columns", "weight_column"}, where);
  SchemaFile out;
  const Json& cols = require(j, "columns", where);
  if (!cols.is_array() || cols.empty()) fail(where, "'columns' must be a nonempty array");
  for (const auto& e : cols) {
    check_keys(e, {"name", "kind", "categories", "nr_codes", "unit_note"}, where + " column");
    ColumnSchema c;
    c.name = get_string(require(e, "name", where + " column"), where + " column 'name'");
    const std::string w = where + " column '" + c.name + "'";
    const std::string kind = get_string(require(e, "kind", w), w + " 'kind'");
    if (kind == "numeric") {
      c.kind = ColumnKind::numeric;
    } else if (kind == "categorical") {
      c.kind = ColumnKind::categorical;
    } else {
      fail(w, "kind must be 'numeric' or 'categorical'");
    }
    if (const Json* v = find(e, "categories")) c.categories = get_string_list(*v, w + " 'categories'");
    if (const Json* v = find(e, "nr_codes")) c.nr_codes = get_string_list(*v, w + " 'nr_codes'");
    if (const Json* v = find(e, "unit_note")) c.unit_note = get_string(*v, w + " 'unit_note'");
    if (c.kind == ColumnKind::categorical && c.categories.empty()) {
      fail(w, "categorical column must declare its categories");
    }
    c.validate();
    out.columns.push_back(std::move(c));
  }
  if (const Json* v = find(j, "weight_column")) {
    out.weight_column = get_string(*v, where + " 'weight_column'");
  }
  return out;
}

FilterAtom parse_filter_atom(const Json& j) {
  const std::string where = "filter atom";
  check_keys(j, {"column", "op", "value", "values", "lo", "hi"}, where);
  FilterAtom a;
  a.column = get_string(require(j, "column", where), where + " 'column'");
  const std::string w = where + " on '" + a.column + "'";
  a.op = parse_op(get_string(require(j, "op", w), w + " 'op'"), w);
  switch (a.op) {
    case FilterOp::eq:
    case FilterOp::ne: {
      const Json& v = require(j, "value", w);
      if (v.is_string()) {
        a.values = {v.get<std::string>()};
      } else if (v.is_number()) {
        a.number = v.get<double>();
        a.number_set = true;
      } else {
        fail(w, "'value' must be a string (category code) or a number");
      }
      break;
    }
    case FilterOp::in_set:
    case FilterOp::not_in_set:
      a.values = get_string_list(require(j, "values", w), w + " 'values'");
      if (a.values.empty()) fail(w, "'values' must be nonempty");
      break;
    case FilterOp::in_range:
    case FilterOp::not_in_range: {
      const Json* lo = find(j, "lo");
      const Json* hi = find(j, "hi");
      if (!lo && !hi) fail(w, "range needs 'lo', 'hi', or both");
      if (lo) a.lo = get_number(*lo, w + " 'lo'");
      if (hi) a.hi = get_number(*hi, w + " 'hi'");
      break;
    }
  }
  return a;
}

FilterPredicate parse_filter(const Json& j) {
  if (j.is_null()) return {};
  if (j.is_object() && find(j, "all")) {
    check_keys(j, {"all"}, "filter");
    return parse_filter(*find(j, "all"));
  }
  if (j.is_object()) return FilterPredicate({parse_filter_atom(j)});
  if (!j.is_array()) {
    throw ConfigError("filter: expected an atom object, an array of atoms, or {\"all\": [...]}");
  }
  FilterPredicate p;
  for (const auto& e : j) p.atoms.push_back(parse_filter_atom(e));
  return p;
}

namespace {

RecodeRule parse_recode_rule(const Json& j) {
  const std::string head = "recode rule";
  RecodeRule r;
  r.target = get_string(require(j, "target", head), head + " 'target'");
  const std::string where = head + " '" + r.target + "'";
  const std::string kind = get_string(require(j, "kind", where), where + " 'kind'");
  if (kind == "flag_any") {
    r.kind = RecodeKind::flag_any;
    check_keys(j, {"target", "kind", "any_of"}, where);
    const Json& atoms = require(j, "any_of", where);
    if (!atoms.is_array() || atoms.empty()) fail(where, "'any_of' must be a nonempty array");
    for (const auto& e : atoms) r.any_of.push_back(parse_filter_atom(e));
  } else if (kind == "product") {
    r.kind = RecodeKind::product;
    check_keys(j, {"target", "kind", "factors"}, where);
    r.factors = get_string_list(require(j, "factors", where), where + " 'factors'");
  } else if (kind == "log_ratio") {
    r.kind = RecodeKind::log_ratio;
    check_keys(j, {"target", "kind", "numerator", "denominator", "scale", "missing_on_nonpositive"},
               where);
    r.numerator = get_string(require(j, "numerator", where), where + " 'numerator'");
    if (const Json* v = find(j, "denominator")) r.denominator = get_string(*v, where + " 'denominator'");
    if (const Json* v = find(j, "scale")) r.scale = get_number(*v, where + " 'scale'");
    if (const Json* v = find(j, "missing_on_nonpositive")) {
      r.missing_on_nonpositive = get_bool(*v, where + " 'missing_on_nonpositive'");
    }
  } else if (kind == "bucket") {
    r.kind = RecodeKind::bucket;
    check_keys(j, {"target", "kind", "source", "edges", "labels"}, where);
    r.source = get_string(require(j, "source", where), where + " 'source'");
    r.edges = get_number_list(require(j, "edges", where), where + " 'edges'");
    r.labels = get_string_list(require(j, "labels", where), where + " 'labels'");
  } else if (kind == "map_cases") {
    r.kind = RecodeKind::map_cases;
    check_keys(j, {"target", "kind", "cases", "default"}, where);
    const Json& cases = require(j, "cases", where);
    if (!cases.is_array() || cases.empty()) fail(where, "'cases' must be a nonempty array");
    for (const auto& e : cases) {
      check_keys(e, {"when", "value"}, where + " case");
      RecodeCase c;
      c.when = parse_filter(require(e, "when", where + " case"));
      const Json& v = require(e, "value", where + " case");
      if (v.is_string()) {
        c.value_is_number = false;
        c.code = v.get<std::string>();
      } else if (v.is_number()) {
        c.number = v.get<double>();
      } else {
        fail(where, "case 'value' must be a string or a number");
      }
      r.cases.push_back(std::move(c));
    }
    if (const Json* v = find(j, "default")) {
      r.has_default = true;
      if (v->is_string()) {
        r.default_is_number = false;
        r.default_code = v->get<std::string>();
      } else if (v->is_number()) {
        r.default_number = v->get<double>();
      } else {
        fail(where, "'default' must be a string or a number");
      }
    }
  } else {
    fail(where, "unknown kind '" + kind + "'");
  }
  return r;
}

}  // namespace

RecodeSpec parse_recode_spec(const Json& j) {
  const Json* rules = &j;
  if (j.is_object()) {
    check_keys(j, {"schema_version", "rules"}, "recode spec");
    rules = &require(j, "rules", "recode spec");
  }
  if (!rules->is_array()) throw ConfigError("recode spec: expected an array of rules");
  RecodeSpec spec;
  for (const auto& e : *rules) spec.rules.push_back(parse_recode_rule(e));
  return spec;
}

SynthesisConfig parse_synthesis_config(const Json& j) {
  const std::string where = "synthesis config";
  check_keys(j,
             {"schema_version", "visit_order", "default_params", "consistency_rules", "rows",
              "seed", "weighted", "max_violating_fraction"},
             where);
  SynthesisConfig cfg;
  if (const Json* v = find(j, "default_params")) {
    cfg.default_params = parse_tree_params(*v, TreeParams{}, where + " default_params");
  }
  const Json& vo = require(j, "visit_order", where);
  if (!vo.is_array() || vo.empty()) fail(where, "'visit_order' must be a nonempty array");
  for (const auto& e : vo) {
    ColumnPlan plan;
    if (e.is_string()) {
      plan.name = e.get<std::string>();
    } else {
      const std::string w = where + " visit_order entry";
      check_keys(e, {"column", "mode", "as_predictor", "params"}, w);
      plan.name = get_string(require(e, "column", w), w + " 'column'");
      if (const Json* v = find(e, "mode")) {
        const std::string m = get_string(*v, w + " 'mode'");
        if (m == "synthesize") {
          plan.mode = ColumnMode::synthesize;
        } else if (m == "carry_observed") {
          plan.mode = ColumnMode::carry_observed;
        } else {
          fail(w, "mode must be 'synthesize' or 'carry_observed'");
        }
      }
      if (const Json* v = find(e, "as_predictor")) {
        plan.carry_as_predictor = get_bool(*v, w + " 'as_predictor'");
      }
      if (const Json* v = find(e, "params")) {
        plan.params = parse_tree_params(*v, cfg.default_params, w + " params");
      }
    }
    cfg.visit_order.push_back(std::move(plan));
  }
  if (const Json* rules = find(j, "consistency_rules")) {
    if (!rules->is_array()) fail(where, "'consistency_rules' must be an array");
    for (const auto& e : *rules) {
      const std::string w = where + " consistency rule";
      check_keys(e, {"name", "require", "resample", "limit"}, w);
      ConsistencyRule r;
      r.name = get_string(require(e, "name", w), w + " 'name'");
      r.must_hold = parse_filter(require(e, "require", w + " '" + r.name + "'"));
      r.resample_columns =
          get_string_list(require(e, "resample", w + " '" + r.name + "'"), w + " 'resample'");
      if (const Json* v = find(e, "limit")) {
        r.resample_limit = static_cast<int>(get_u64(*v, w + " 'limit'"));
      }
      cfg.consistency_rules.push_back(std::move(r));
    }
  }
  if (const Json* v = find(j, "rows")) cfg.n_synthetic_rows = get_count(*v, where + " 'rows'");
  if (const Json* v = find(j, "seed")) cfg.master_seed = get_u64(*v, where + " 'seed'");
  if (const Json* v = find(j, "weighted")) cfg.weighted = get_bool(*v, where + " 'weighted'");
  if (const Json* v = find(j, "max_violating_fraction")) {
    cfg.max_violating_fraction = get_number(*v, where + " 'max_violating_fraction'");
  }
  return cfg;
}

std::vector<ModelSpec> parse_model_specs(const Json& j) {
  const Json* arr = &j;
  if (j.is_object()) {
    check_keys(j, {"schema_version", "models"}, "model spec");
    arr = &require(j, "models", "model spec");
  }
  if (!arr->is_array() || arr->empty()) {
    throw ConfigError("model spec: 'models' must be a nonempty array");
  }
  std::vector<ModelSpec> out;
  std::unordered_set<std::string> names;
  for (const auto& e : *arr) {
    const std::string head = "model";
    check_keys(e,
               {"name", "kind", "response", "filter", "recodes", "predictors", "interactions",
                "dummy_blocks"},
               head);
    ModelSpec m;
    m.name = get_string(require(e, "name", head), head + " 'name'");
    const std::string where = "model '" + m.name + "'";
    if (!names.insert(m.name).second) fail(where, "duplicate model name");
    const std::string kind = get_string(require(e, "kind", where), where + " 'kind'");
    if (kind == "ols") {
      m.kind = ModelKind::ols;
    } else if (kind == "logit") {
      m.kind = ModelKind::logit;
    } else {
      fail(where, "kind must be 'ols' or 'logit'");
    }
    m.response = get_string(require(e, "response", where), where + " 'response'");
    if (const Json* v = find(e, "filter")) m.filter = parse_filter(*v);
    if (const Json* v = find(e, "recodes")) m.recodes = parse_recode_spec(*v);
    if (const Json* v = find(e, "predictors")) {
      m.predictors = get_string_list(*v, where + " 'predictors'");
    }
    if (const Json* v = find(e, "interactions")) {
      if (!v->is_array()) fail(where, "'interactions' must be an array");
      for (const auto& ie : *v) {
        const std::string w = where + " interaction";
        check_keys(ie, {"name", "factors"}, w);
        InteractionSpec spec;
        spec.name = get_string(require(ie, "name", w), w + " 'name'");
        spec.factors = get_string_list(require(ie, "factors", w), w + " 'factors'");
        m.interactions.push_back(std::move(spec));
      }
    }
    if (const Json* v = find(e, "dummy_blocks")) {
      if (!v->is_array()) fail(where, "'dummy_blocks' must be an array");
      for (const auto& de : *v) {
        const std::string w = where + " dummy block";
        check_keys(de, {"source", "reference", "prefix"}, w);
        DummyBlock b;
        b.source = get_string(require(de, "source", w), w + " 'source'");
        b.reference = get_string(require(de, "reference", w), w + " 'reference'");
        if (const Json* p = find(de, "prefix")) b.prefix = get_string(*p, w + " 'prefix'");
        m.dummy_blocks.push_back(std::move(b));
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<FigureSpec> parse_figures(const Json& j) {
  const Json* arr = &j;
  if (j.is_object()) {
    check_keys(j, {"schema_version", "figures"}, "figures");
    arr = &require(j, "figures", "figures");
  }
  if (!arr->is_array()) throw ConfigError("figures: expected an array");
  std::vector<FigureSpec> out;
  std::unordered_set<std::string> names;
  for (const auto& e : *arr) {
    const std::string head = "figure";
    check_keys(e, {"name", "type", "feature", "bins", "filter", "target", "components"}, head);
    FigureSpec f;
    f.name = get_string(require(e, "name", head), head + " 'name'");
    const std::string where = "figure '" + f.name + "'";
    if (!names.insert(f.name).second) fail(where, "duplicate figure name");
    const std::string type = get_string(require(e, "type", where), where + " 'type'");
    if (type == "univariate") {
      f.kind = FigureKind::univariate;
      f.feature = get_string(require(e, "feature", where), where + " 'feature'");
      if (const Json* v = find(e, "bins")) f.n_bins = get_count(*v, where + " 'bins'");
    } else if (type == "conditional") {
      f.kind = FigureKind::conditional;
      f.filter = parse_filter(require(e, "filter", where));
      f.target = get_string(require(e, "target", where), where + " 'target'");
    } else if (type == "pca") {
      f.kind = FigureKind::pca;
      if (const Json* v = find(e, "components")) {
        const std::vector<double> c = get_number_list(*v, where + " 'components'");
        if (c.size() != 2 || c[0] < 1 || c[1] < 1 || c[0] != std::floor(c[0]) ||
            c[1] != std::floor(c[1]) || c[0] == c[1]) {
          fail(where, "'components' must be two distinct 1-based component numbers");
        }
        f.pc_i = static_cast<std::size_t>(c[0]) - 1;
        f.pc_j = static_cast<std::size_t>(c[1]) - 1;
      }
      if (const Json* v = find(e, "filter")) f.filter = parse_filter(*v);
    } else {
      fail(where, "type must be 'univariate', 'conditional', or 'pca'");
    }
    out.push_back(std::move(f));
  }
  return out;
}

SummarySpec parse_summary_spec(const Json& j) {
  const std::string where = "summary spec";
  check_keys(j, {"schema_version", "filter", "recodes", "columns", "weighted", "weight_column"},
             where);
  SummarySpec s;
  if (const Json* v = find(j, "filter")) s.filter = parse_filter(*v);
  if (const Json* v = find(j, "recodes")) s.recodes = parse_recode_spec(*v);
  if (const Json* v = find(j, "columns")) s.columns = get_string_list(*v, where + " 'columns'");
  if (const Json* v = find(j, "weighted")) s.weighted = get_bool(*v, where + " 'weighted'");
  if (const Json* v = find(j, "weight_column")) {
    s.weight_column = get_string(*v, where + " 'weight_column'");
  }
  return s;
}

Json bundle_to_json(const ModelBundle& bundle) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["seed"] = bundle.master_seed;
  j["weighted"] = bundle.weighted;
  Json plans = Json::array();
  for (const auto& p : bundle.plans) {
    Json e;
    e["column"] = p.name;
    e["mode"] = p.mode == ColumnMode::synthesize ? "synthesize" : "carry_observed";
    e["as_predictor"] = p.carry_as_predictor;
    if (p.params) e["params"] = params_to_json(*p.params);
    plans.push_back(std::move(e));
  }
  j["plans"] = std::move(plans);
  Json trees = Json::array();
  for (const auto& t : bundle.trees) {
    Json e;
    e["target"] = t.target;
    e["target_col"] = t.target_col;
    e["predictors"] = t.predictors;
    e["predictor_cols"] = t.predictor_cols;
    e["params"] = params_to_json(t.params);
    e["weighted"] = t.weighted;
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
      Json ne;
      ne["leaf"] = n.is_leaf;
      if (n.is_leaf) {
        ne["donor_rows"] = n.donor_rows;
        if (!n.donor_cum_weights.empty()) ne["donor_cum_weights"] = n.donor_cum_weights;
      } else {
        ne["predictor"] = n.split.predictor;
        ne["numeric"] = n.split.numeric;
        if (n.split.numeric) {
          ne["threshold"] = n.split.threshold;
        } else {
          ne["left_set"] = n.split.left_set;
        }
        ne["left"] = n.left;
        ne["right"] = n.right;
      }
      nodes.push_back(std::move(ne));
    }
    e["nodes"] = std::move(nodes);
    trees.push_back(std::move(e));
  }
  j["trees"] = std::move(trees);
  return j;
}

ModelBundle bundle_from_json(const Json& j) {
  const std::string where = "model bundle";
  check_keys(j, {"schema_version", "tool_version", "seed", "weighted", "plans", "trees"}, where);
  ModelBundle b;
  b.master_seed = get_u64(require(j, "seed", where), where + " 'seed'");
  b.weighted = get_bool(require(j, "weighted", where), where + " 'weighted'");
  const Json& plans = require(j, "plans", where);
  if (!plans.is_array()) fail(where, "'plans' must be an array");
  for (const auto& e : plans) {
    const std::string w = where + " plan";
    check_keys(e, {"column", "mode", "as_predictor", "params"}, w);
    ColumnPlan p;
    p.name = get_string(require(e, "column", w), w + " 'column'");
    const std::string mode = get_string(require(e, "mode", w), w + " 'mode'");
    if (mode == "synthesize") {
      p.mode = ColumnMode::synthesize;
    } else if (mode == "carry_observed") {
      p.mode = ColumnMode::carry_observed;
    } else {
      fail(w, "mode must be 'synthesize' or 'carry_observed'");
    }
    p.carry_as_predictor = get_bool(require(e, "as_predictor", w), w + " 'as_predictor'");
    if (const Json* v = find(e, "params")) {
      p.params = parse_tree_params(*v, TreeParams{}, w + " params");
    }
    b.plans.push_back(std::move(p));
  }
  const Json& trees = require(j, "trees", where);
  if (!trees.is_array()) fail(where, "'trees' must be an array");
  for (const auto& e : trees) {
    const std::string w = where + " tree";
    check_keys(e, {"target", "target_col", "predictors", "predictor_cols", "params", "weighted",
                   "nodes"},
               w);
    DecisionTree t;
    t.target = get_string(require(e, "target", w), w + " 'target'");
    t.target_col = get_i32(require(e, "target_col", w), w + " 'target_col'");
    t.predictors = get_string_list(require(e, "predictors", w), w + " 'predictors'");
    const Json& pcols = require(e, "predictor_cols", w);
    if (!pcols.is_array()) fail(w, "'predictor_cols' must be an array");
    for (const auto& c : pcols) t.predictor_cols.push_back(get_i32(c, w + " 'predictor_cols'"));
    t.params = parse_tree_params(require(e, "params", w), TreeParams{}, w + " params");
    t.weighted = get_bool(require(e, "weighted", w), w + " 'weighted'");
    const Json& nodes = require(e, "nodes", w);
    if (!nodes.is_array() || nodes.empty()) fail(w, "'nodes' must be a nonempty array");
    for (const auto& nj : nodes) {
      TreeNode n;
      n.is_leaf = get_bool(require(nj, "leaf", w), w + " 'leaf'");
      if (n.is_leaf) {
        check_keys(nj, {"leaf", "donor_rows", "donor_cum_weights"}, w + " leaf");
        const Json& rows = require(nj, "donor_rows", w + " leaf");
        if (!rows.is_array() || rows.empty()) fail(w, "leaf 'donor_rows' must be nonempty");
        for (const auto& r : rows) {
          n.donor_rows.push_back(static_cast<std::uint32_t>(get_u64(r, w + " 'donor_rows'")));
        }
        if (const Json* v = find(nj, "donor_cum_weights")) {
          n.donor_cum_weights = get_number_list(*v, w + " 'donor_cum_weights'");
          if (n.donor_cum_weights.size() != n.donor_rows.size()) {
            fail(w, "donor weight and row counts differ");
          }
        }
      } else {
        check_keys(nj, {"leaf", "predictor", "numeric", "threshold", "left_set", "left", "right"},
                   w + " node");
        n.split.predictor = get_i32(require(nj, "predictor", w), w + " 'predictor'");
        n.split.numeric = get_bool(require(nj, "numeric", w), w + " 'numeric'");
        if (n.split.numeric) {
          n.split.threshold = get_number(require(nj, "threshold", w), w + " 'threshold'");
        } else {
          const Json& ls = require(nj, "left_set", w);
          if (!ls.is_array()) fail(w, "'left_set' must be an array");
          for (const auto& c : ls) n.split.left_set.push_back(get_i32(c, w + " 'left_set'"));
        }
        n.left = get_i32(require(nj, "left", w), w + " 'left'");
        n.right = get_i32(require(nj, "right", w), w + " 'right'");
      }
      t.nodes.push_back(std::move(n));
    }
    const auto n_nodes = static_cast<std::int32_t>(t.nodes.size());
    for (const auto& n : t.nodes) {
      if (n.is_leaf) continue;
      if (n.left < 0 || n.left >= n_nodes || n.right < 0 || n.right >= n_nodes) {
        fail(w, "node child index out of range");
      }
    }
    b.trees.push_back(std::move(t));
  }
  return b;
}

Json kmarginal_report_to_json(const KMarginalReport& report, const KMarginalConfig& cfg) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["k"] = cfg.k;
  j["n_bins"] = cfg.n_bins;
  j["seed"] = cfg.seed;
  j["n_marginals"] = report.per_marginal.size();
  j["score"] = report.score;
  j["score_rounded"] = static_cast<std::int64_t>(std::floor(report.score + 0.5));
  Json feats = Json::array();
  for (const auto& f : report.per_feature_mean) {
    Json e;
    e["feature"] = f.name;
    e["mean_score"] = f.mean_score;
    e["n_marginals"] = f.n_marginals;
    feats.push_back(std::move(e));
  }
  j["per_feature_mean"] = std::move(feats);
  Json worst = Json::array();
  for (const auto& f : worst_features(report, 10)) {
    Json e;
    e["feature"] = f.name;
    e["mean_score"] = f.mean_score;
    worst.push_back(std::move(e));
  }
  j["worst_features"] = std::move(worst);
  Json per = Json::array();
  for (const auto& m : report.per_marginal) {
    Json names = Json::array();
    for (const std::size_t f : m.features) names.push_back(report.feature_names[f]);
    Json e;
    e["features"] = std::move(names);
    e["score"] = m.score;
    per.push_back(std::move(e));
  }
  j["per_marginal"] = std::move(per);
  return j;
}

namespace {

Json pca_half_to_json(const PcaHalf& h) {
  Json j;
  j["features"] = h.encoding.features;
  j["dropped"] = h.encoding.dropped;
  j["means"] = h.encoding.means;
  j["sds"] = h.encoding.sds;
  j["eigenvalues"] = h.eigenvalues;
  j["variance_shares"] = h.variance_shares;
  j["total_variance"] = h.total_variance;
  return j;
}

}  // namespace

Json pca_comparison_to_json(const PcaComparison& cmp) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["original"] = pca_half_to_json(cmp.a);
  j["synthetic"] = pca_half_to_json(cmp.b);
  return j;
}

Json replication_to_json(const ReplicationReport& report) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["every_model_has_fit"] = report.every_model_has_fit;
  Json models = Json::array();
  for (const auto& m : report.models) {
    Json mj;
    mj["model"] = m.model;
    mj["kind"] = kind_name(m.kind);
    mj["reference_dataset"] = m.reference_dataset;
    mj["agreement_rate"] = m.agreement_rate;
    mj["disjoint_parameters"] = m.disjoint_parameters;
    Json fits = Json::array();
    for (const auto& f : m.fits) {
      Json fj;
      fj["dataset"] = f.dataset;
      fj["ok"] = f.ok;
      if (!f.ok) {
        fj["error"] = f.error;
        fits.push_back(std::move(fj));
        continue;
      }
      fj["n"] = f.n;
      fj["n_dropped_missing"] = f.n_dropped_missing;
      if (m.kind == ModelKind::logit) fj["iterations"] = f.convergence.iterations;
      Json params = Json::array();
      for (const auto& p : f.params) {
        Json pj;
        pj["parameter"] = p.parameter;
        pj["estimate"] = p.estimate;
        pj["se"] = p.se;
        pj["ci"] = interval_to_json(p.ci);
        pj["p"] = p.p;
        if (p.or_ci) pj["odds_ratio_ci"] = interval_to_json(*p.or_ci);
        params.push_back(std::move(pj));
      }
      fj["parameters"] = std::move(params);
      fits.push_back(std::move(fj));
    }
    mj["fits"] = std::move(fits);
    Json cmps = Json::array();
    for (const auto& c : m.comparisons) {
      Json cj;
      cj["parameter"] = c.parameter;
      cj["dataset"] = c.dataset;
      cj["classification"] = c.cls.label();
      cj["pattern"] = to_string(c.cls.pattern);
      cmps.push_back(std::move(cj));
    }
    mj["comparisons"] = std::move(cmps);
    models.push_back(std::move(mj));
  }
  j["models"] = std::move(models);
  return j;
}

std::string replication_to_csv(const ReplicationReport& report) {
  std::string out = "model,dataset,parameter,estimate,se,ci_lo,ci_hi,p,classification\n";
  for (const auto& m : report.models) {
    std::map<std::pair<std::string, std::string>, std::string> cls;
    for (const auto& c : m.comparisons) cls[{c.dataset, c.parameter}] = c.cls.label();
    for (const auto& f : m.fits) {
      if (!f.ok) continue;
      for (const auto& p : f.params) {
        std::string label;
        if (f.dataset == m.reference_dataset) {
          label = "reference";
        } else if (const auto it = cls.find({f.dataset, p.parameter}); it != cls.end()) {
          label = it->second;
        }
        out += csv_field(m.model) + ',' + csv_field(f.dataset) + ',' + csv_field(p.parameter) +
               ',' + format_double(p.estimate) + ',' + format_double(p.se) + ',' +
               format_double(p.ci.lo) + ',' + format_double(p.ci.hi) + ',' +
               format_double(p.p) + ',' + label + '\n';
      }
    }
  }
  return out;
}

Json summary_to_json(const std::vector<ColumnSummary>& columns, bool weighted) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["weighted"] = weighted;
  Json cols = Json::array();
  for (const auto& c : columns) {
    Json e;
    e["name"] = c.name;
    e["kind"] = c.kind == ColumnKind::numeric ? "numeric" : "categorical";
    e["n"] = c.n;
    e["n_missing"] = c.n_missing;
    e["weight_total"] = c.weight_total;
    if (c.kind == ColumnKind::numeric) {
      e["mean"] = c.mean;
    } else {
      Json shares = Json::array();
      for (const auto& s : c.shares) {
        Json se;
        se["code"] = s.code;
        se["share"] = s.share;
        se["is_nr"] = s.is_nr;
        shares.push_back(std::move(se));
      }
      e["shares"] = std::move(shares);
    }
    cols.push_back(std::move(e));
  }
  j["columns"] = std::move(cols);
  return j;
}

Json audit_to_json(const ExactMatchAudit& audit) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["quasi_identifiers"] = audit.quasi_identifiers;
  j["n_synthetic"] = audit.n_synthetic;
  j["n_matching"] = audit.n_matching;
  j["n_matching_unique"] = audit.n_matching_unique;
  j["match_rate"] = audit.match_rate;
  j["unique_match_rate"] = audit.unique_match_rate;
  return j;
}

Json conditional_to_json(const ConditionalComparison& cmp) {
  Json j;
  j["target"] = cmp.target;
  j["responses"] = cmp.responses;
  j["n_matching_original"] = cmp.original.n_matching;
  j["n_matching_synthetic"] = cmp.synthetic.n_matching;
  j["share_original"] = cmp.share_original;
  j["share_synthetic"] = cmp.share_synthetic;
  j["share_ratio"] = cmp.share_ratio;
  j["undersampled_warning"] = cmp.undersampled_warning;
  j["empty_original"] = cmp.empty_original;
  j["empty_synthetic"] = cmp.empty_synthetic;
  j["original_freq"] = cmp.original.freq;
  j["synthetic_freq"] = cmp.synthetic.freq;
  return j;
}

Json synthesis_diagnostics_to_json(const SynthesisDiagnostics& d,
                                   const std::vector<ConsistencyRule>& rules) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["n_rows"] = d.n_rows;
  j["rows_resampled"] = d.rows_resampled;
  j["rows_redrawn"] = d.rows_redrawn;
  j["rows_violating"] = d.rows_violating;
  Json rv = Json::array();
  for (std::size_t i = 0; i < d.rule_violations.size() && i < rules.size(); ++i) {
    Json e;
    e["rule"] = rules[i].name;
    e["first_pass_violations"] = d.rule_violations[i];
    rv.push_back(std::move(e));
  }
  j["rule_violations"] = std::move(rv);
  return j;
}

std::string univariate_csv(const UnivariateComparison& cmp) {
  std::string out = "category,original_freq,synthetic_freq\n";
  for (std::size_t i = 0; i < cmp.bin_labels.size(); ++i) {
    out += csv_field(cmp.bin_labels[i]) + ',' + format_double(cmp.original_freq[i]) + ',' +
           format_double(cmp.synthetic_freq[i]) + '\n';
  }
  return out;
}

std::string conditional_csv(const ConditionalComparison& cmp) {
  std::string out = "category,original_freq,synthetic_freq\n";
  for (std::size_t i = 0; i < cmp.responses.size(); ++i) {
    out += csv_field(cmp.responses[i]) + ',' + format_double(cmp.original.freq[i]) + ',' +
           format_double(cmp.synthetic.freq[i]) + '\n';
  }
  return out;
}

std::string pca_points_csv(const PcaHalf& half, std::size_t pc_i, std::size_t pc_j,
                           const std::vector<char>& highlight) {
  if (pc_i >= half.projections.size() || pc_j >= half.projections.size()) {
    throw ConfigError("pca figure: component number exceeds the fitted components (" +
                      std::to_string(half.projections.size()) + ")");
  }
  std::string out =
      "pc_" + std::to_string(pc_i + 1) + ",pc_" + std::to_string(pc_j + 1) + ",highlight_flag\n";
  const auto& xi = half.projections[pc_i];
  const auto& xj = half.projections[pc_j];
  for (std::size_t r = 0; r < xi.size(); ++r) {
    const char flag = (r < highlight.size() && highlight[r]) ? '1' : '0';
    out += format_double(xi[r]) + ',' + format_double(xj[r]) + ',';
    out.push_back(flag);
    out.push_back('\n');
  }
  return out;
}

}  // namespace microsynth
