#include "ope/config.hpp"

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>

#include "ope/errors.hpp"

namespace ope {

using nlohmann::json;

std::string_view to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::markdown: return "markdown";
    case OutputFormat::tsv: return "tsv";
    case OutputFormat::json: return "json";
  }
  return "?";
}

OutputFormat output_format_from_string(std::string_view name) {
  for (auto f : {OutputFormat::markdown, OutputFormat::tsv, OutputFormat::json}) {
    if (to_string(f) == name) return f;
  }
  throw ConfigError("unknown output format '" + std::string(name) +
                    "' (expected markdown, tsv or json)");
}

namespace {

std::string join(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

void check_object(const json& doc, const std::string& where) {
  if (!doc.is_object()) {
    throw ConfigError("'" + (where.empty() ? std::string("<root>") : where) +
                      "' must be a JSON object");
  }
}

void check_keys(const json& doc, const std::string& where,
                std::initializer_list<std::string_view> allowed) {
  check_object(doc, where);
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (auto a : allowed) known |= (a == key);
    if (!known) throw ConfigError("unknown config key '" + join(where, key) + "'");
  }
}

template <typename T>
T get(const json& doc, const std::string& key, const std::string& where) {
  const json& v = doc.at(key);
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config key '" + join(where, key) + "' has the wrong type or value");
  }
}

template <typename T>
void read_opt(const json& doc, const std::string& key, const std::string& where, T& target) {
  if (doc.contains(key) && !doc.at(key).is_null()) target = get<T>(doc, key, where);
}

std::vector<double> number_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("config key '" + where + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("config key '" + where + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<EstimatorId> parse_estimators(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) {
    throw ConfigError("config key '" + where + "' must be a non-empty array of estimator names");
  }
  std::vector<EstimatorId> out;
  std::set<EstimatorId> seen;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError("config key '" + where + "' must contain strings");
    const auto id = estimator_from_string(e.get<std::string>());
    if (id == EstimatorId::OnPolicy) {
      throw ConfigError("config key '" + where + "': estimators are drawn from DM, IPW, DR");
    }
    if (seen.insert(id).second) out.push_back(id);
  }
  return out;
}

json estimators_json(const std::vector<EstimatorId>& ids) {
  json arr = json::array();
  for (auto id : ids) arr.push_back(std::string(to_string(id)));
  return arr;
}

// outcome_model / propensity / cross_fit blocks shared by run and synth.
void apply_estimation(const json& doc, const std::string& where, EstimationSettings& s) {
  if (doc.contains("outcome_model")) {
    const auto& om = doc.at("outcome_model");
    const auto w = join(where, "outcome_model");
    check_keys(om, w, {"family", "lambda"});
    if (om.contains("family")) s.family = model_family_from_string(get<std::string>(om, "family", w));
    read_opt(om, "lambda", w, s.lambda);
    if (!(s.lambda >= 0.0)) throw ConfigError("config key '" + w + ".lambda' must be >= 0");
  }
  if (doc.contains("propensity")) {
    const auto& pr = doc.at("propensity");
    const auto w = join(where, "propensity");
    check_keys(pr, w, {"source", "clip_floor"});
    if (pr.contains("source")) {
      s.propensity = propensity_mode_from_string(get<std::string>(pr, "source", w));
    }
    read_opt(pr, "clip_floor", w, s.clip_floor);
    if (!(s.clip_floor > 0.0 && s.clip_floor <= 0.5)) {
      throw ConfigError("config key '" + w + ".clip_floor' must lie in (0, 0.5]");
    }
  }
  if (doc.contains("cross_fit")) {
    const auto& cf = doc.at("cross_fit");
    const auto w = join(where, "cross_fit");
    check_keys(cf, w, {"folds"});
    read_opt(cf, "folds", w, s.cross_fit_folds);
    if (s.cross_fit_folds < 0 || s.cross_fit_folds == 1) {
      throw ConfigError("config key '" + w + ".folds' must be 0 (off) or >= 2");
    }
  }
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

SyntheticEnv parse_env(const json& doc, const std::string& where, SyntheticEnv env) {
  check_keys(doc, where, {"d", "outcome_kind", "arms", "noise_sd"});
  read_opt(doc, "d", where, env.d);
  if (doc.contains("outcome_kind")) {
    env.outcome_kind = outcome_kind_from_string(get<std::string>(doc, "outcome_kind", where));
  }
  read_opt(doc, "noise_sd", where, env.noise_sd);
  if (doc.contains("arms")) {
    const auto& arms = doc.at("arms");
    if (!arms.is_array() || arms.empty()) {
      throw ConfigError("config key '" + join(where, "arms") + "' must be a non-empty array");
    }
    env.arms.clear();
    for (std::size_t t = 0; t < arms.size(); ++t) {
      const auto w = join(where, "arms[" + std::to_string(t) + "]");
      const auto& a = arms[t];
      check_keys(a, w, {"intercept", "linear", "quadratic"});
      ArmOutcome arm;
      read_opt(a, "intercept", w, arm.intercept);
      if (a.contains("linear")) arm.linear = number_array(a.at("linear"), join(w, "linear"));
      if (a.contains("quadratic")) {
        arm.quadratic = number_array(a.at("quadratic"), join(w, "quadratic"));
      }
      env.arms.push_back(std::move(arm));
    }
  }
  try {
    env.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + where + "': " + e.what());
  }
  return env;
}

void parse_policies(const json& doc, const std::string& where, PolicySpec& a, PolicySpec& b) {
  check_keys(doc, where, {"a", "b"});
  if (doc.contains("a")) a = policy_spec_from_json(doc.at("a"), join(where, "a"));
  if (doc.contains("b")) b = policy_spec_from_json(doc.at("b"), join(where, "b"));
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

PolicySpec policy_spec_from_json(const json& doc, const std::string& where) {
  check_keys(doc, where, {"family", "id", "m", "treatment", "weights", "floor"});
  PolicySpec spec;
  if (!doc.contains("family") || !doc.contains("id")) {
    throw ConfigError("config key '" + where + "' needs 'family' and 'id'");
  }
  try {
    spec.family = policy_family_from_string(get<std::string>(doc, "family", where));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + join(where, "family") + "': " + e.what());
  }
  spec.id = get<std::string>(doc, "id", where);
  read_opt(doc, "m", where, spec.m);
  read_opt(doc, "treatment", where, spec.treatment);
  read_opt(doc, "floor", where, spec.floor);
  if (doc.contains("weights")) {
    const auto& w = doc.at("weights");
    const auto wk = join(where, "weights");
    if (!w.is_array()) throw ConfigError("config key '" + wk + "' must be an array");
    if (!w.empty() && w.front().is_array()) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        spec.weights.push_back(number_array(w[i], wk + "[" + std::to_string(i) + "]"));
      }
    } else {
      spec.weights.push_back(number_array(w, wk));
    }
  }
  try {
    (void)make_policy(spec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("config key '" + where + "': " + e.what());
  }
  return spec;
}

json to_json(const PolicySpec& spec) {
  json j{{"family", std::string(to_string(spec.family))}, {"id", spec.id}, {"m", spec.m}};
  using F = PolicySpec::Family;
  if (spec.family == F::constant) j["treatment"] = spec.treatment;
  if (!spec.weights.empty()) j["weights"] = spec.weights;
  if (spec.family == F::softmax || spec.family == F::logistic) j["floor"] = spec.floor;
  return j;
}

json to_json(const SyntheticEnv& env) {
  json arms = json::array();
  for (const auto& a : env.arms) {
    json arm{{"intercept", a.intercept}, {"linear", a.linear}};
    if (!a.quadratic.empty()) arm["quadratic"] = a.quadratic;
    arms.push_back(std::move(arm));
  }
  return json{{"d", env.d},
              {"outcome_kind", std::string(to_string(env.outcome_kind))},
              {"arms", std::move(arms)},
              {"noise_sd", env.noise_sd}};
}

json to_json(const EstimationSettings& s) {
  return json{{"outcome_model", {{"family", std::string(to_string(s.family))}, {"lambda", s.lambda}}},
              {"propensity",
               {{"source", std::string(to_string(s.propensity))}, {"clip_floor", s.clip_floor}}},
              {"cross_fit", {{"folds", s.cross_fit_folds}}}};
}

CsvSchema parse_schema(const json& doc) {
  const std::string where = "schema";
  check_keys(doc, where,
             {"d", "context_columns", "treatment_column", "outcome_column", "propensity_column",
              "m", "outcome_kind", "policy_id"});
  CsvSchema s;
  if (doc.contains("context_columns")) {
    const auto& cols = doc.at("context_columns");
    if (!cols.is_array()) throw ConfigError("config key 'schema.context_columns' must be an array");
    for (const auto& c : cols) {
      if (!c.is_string()) throw ConfigError("config key 'schema.context_columns' must hold strings");
      s.context_columns.push_back(c.get<std::string>());
    }
    if (doc.contains("d") && get<int>(doc, "d", where) != std::ssize(s.context_columns)) {
      throw ConfigError("config key 'schema.d' disagrees with schema.context_columns");
    }
  } else if (doc.contains("d")) {
    const int d = get<int>(doc, "d", where);
    if (d < 0) throw ConfigError("config key 'schema.d' must be >= 0");
    for (int j = 0; j < d; ++j) s.context_columns.push_back("x" + std::to_string(j));
  } else {
    throw ConfigError("schema needs 'd' or 'context_columns'");
  }
  read_opt(doc, "treatment_column", where, s.treatment_column);
  read_opt(doc, "outcome_column", where, s.outcome_column);
  if (doc.contains("propensity_column")) {
    if (!doc.at("propensity_column").is_null()) {
      s.propensity_column = get<std::string>(doc, "propensity_column", where);
    }
    s.propensity_required = s.propensity_column.has_value();
  } else {
    s.propensity_column = "p";
    s.propensity_required = false;
  }
  read_opt(doc, "m", where, s.m);
  if (s.m < 1) throw ConfigError("config key 'schema.m' must be >= 1");
  if (doc.contains("outcome_kind")) {
    s.outcome_kind = outcome_kind_from_string(get<std::string>(doc, "outcome_kind", where));
  }
  read_opt(doc, "policy_id", where, s.policy_id);
  return s;
}

RunConfig parse_run_config(const json& doc, const std::string& base_dir) {
  check_keys(doc, "",
             {"data", "scenario", "n", "schema", "policies", "estimators", "outcome_model",
              "propensity", "cross_fit", "subsample", "refit_per_subsample", "output", "seed",
              "threads"});
  RunConfig cfg;
  const bool has_data = doc.contains("data");
  const bool has_scenario = doc.contains("scenario");
  if (has_data == has_scenario) {
    throw ConfigError("config needs exactly one of 'data' (dataset paths) or 'scenario'");
  }

  if (has_scenario) {
    cfg.scenario = get<std::string>(doc, "scenario", "");
    const Scenario sc = scenario_by_name(*cfg.scenario);
    cfg.policy_a = sc.policy_a;
    cfg.policy_b = sc.policy_b;
    cfg.selection.estimation = sc.estimation;
    if (doc.contains("n")) {
      const auto n = get<std::size_t>(doc, "n", "");
      if (n == 0) throw ConfigError("config key 'n' must be >= 1");
      cfg.scenario_n = n;
    }
    if (doc.contains("schema")) throw ConfigError("config key 'schema' is not used with 'scenario'");
  } else {
    if (doc.contains("n")) throw ConfigError("config key 'n' is only valid with 'scenario'");
    const auto& data = doc.at("data");
    check_keys(data, "data", {"a", "b"});
    if (!data.contains("a") || !data.contains("b")) {
      throw ConfigError("config key 'data' needs both 'a' and 'b'");
    }
    cfg.data_a = resolve(base_dir, get<std::string>(data, "a", "data"));
    cfg.data_b = resolve(base_dir, get<std::string>(data, "b", "data"));
    if (!doc.contains("schema")) throw ConfigError("config needs a 'schema' for dataset files");
    cfg.schema = parse_schema(doc.at("schema"));
    if (!doc.contains("policies")) throw ConfigError("config needs 'policies' (a and b)");
  }

  if (doc.contains("policies")) {
    parse_policies(doc.at("policies"), "policies", cfg.policy_a, cfg.policy_b);
  }
  if (cfg.policy_a.id.empty() || cfg.policy_b.id.empty()) {
    throw ConfigError("config key 'policies' must define both 'a' and 'b'");
  }
  if (cfg.policy_a.id == cfg.policy_b.id) {
    throw ConfigError("policies a and b need distinct ids");
  }

  if (doc.contains("estimators")) cfg.estimators = parse_estimators(doc.at("estimators"), "estimators");
  apply_estimation(doc, "", cfg.selection.estimation);

  if (doc.contains("subsample")) {
    const auto& ss = doc.at("subsample");
    check_keys(ss, "subsample", {"method", "k", "split_fraction"});
    if (ss.contains("method")) {
      cfg.subsample.method = subsample_method_from_string(get<std::string>(ss, "method", "subsample"));
    }
    read_opt(ss, "k", "subsample", cfg.subsample.k);
    if (cfg.subsample.k < 1) throw ConfigError("config key 'subsample.k' must be >= 1");
    if (ss.contains("split_fraction") && !ss.at("split_fraction").is_null()) {
      const double f = get<double>(ss, "split_fraction", "subsample");
      if (!(f > 0.0 && f <= 1.0)) {
        throw ConfigError("config key 'subsample.split_fraction' must lie in (0, 1]");
      }
      if (cfg.subsample.method != SubsampleMethod::split) {
        throw ConfigError("config key 'subsample.split_fraction' requires method 'split'");
      }
      cfg.subsample.split_fraction = f;
    }
  }
  read_opt(doc, "refit_per_subsample", "", cfg.selection.refit_per_subsample);
  if (doc.contains("output")) {
    const auto& out = doc.at("output");
    check_keys(out, "output", {"format"});
    if (out.contains("format")) {
      cfg.format = output_format_from_string(get<std::string>(out, "format", "output"));
    }
  }
  read_opt(doc, "seed", "", cfg.seed);
  read_opt(doc, "threads", "", cfg.selection.threads);
  if (cfg.selection.threads < 1) cfg.selection.threads = 1;
  return cfg;
}

json RunConfig::echo() const {
  json j;
  if (scenario) {
    j["scenario"] = *scenario;
    if (scenario_n) j["n"] = *scenario_n;
  } else {
    j["data"] = {{"a", data_a.value_or("")}, {"b", data_b.value_or("")}};
    json schema_j{{"context_columns", schema.context_columns},
                  {"treatment_column", schema.treatment_column},
                  {"outcome_column", schema.outcome_column},
                  {"m", schema.m},
                  {"outcome_kind", std::string(to_string(schema.outcome_kind))}};
    schema_j["propensity_column"] =
        schema.propensity_column ? json(*schema.propensity_column) : json(nullptr);
    j["schema"] = std::move(schema_j);
  }
  j["policies"] = {{"a", to_json(policy_a)}, {"b", to_json(policy_b)}};
  j["estimators"] = estimators_json(estimators);
  j.update(to_json(selection.estimation));
  json ss{{"method", std::string(to_string(subsample.method))}, {"k", subsample.k}};
  if (subsample.split_fraction) ss["split_fraction"] = *subsample.split_fraction;
  j["subsample"] = std::move(ss);
  j["refit_per_subsample"] = selection.refit_per_subsample;
  j["output"] = {{"format", std::string(to_string(format))}};
  j["seed"] = seed;
  return j;
}

SynthConfig parse_synth_config(const json& doc, const std::optional<std::string>& scenario_override) {
  check_keys(doc, "",
             {"scenario", "env", "policies", "n", "n_a", "n_b", "seed", "truth_samples", "oracle",
              "outcome_model", "propensity", "cross_fit", "threads"});
  SynthConfig cfg;
  std::optional<std::string> name = scenario_override;
  if (!name && doc.contains("scenario")) name = get<std::string>(doc, "scenario", "");
  if (name) {
    cfg.scenario = scenario_by_name(*name);
  } else {
    if (!doc.contains("env") || !doc.contains("policies")) {
      throw ConfigError("synth config needs a 'scenario' or both 'env' and 'policies'");
    }
    cfg.scenario.name = "custom";
  }
  Scenario& sc = cfg.scenario;
  if (doc.contains("env")) sc.env = parse_env(doc.at("env"), "env", sc.env);
  if (doc.contains("policies")) parse_policies(doc.at("policies"), "policies", sc.policy_a, sc.policy_b);
  if (doc.contains("n")) sc.n_a = sc.n_b = get<std::size_t>(doc, "n", "");
  read_opt(doc, "n_a", "", sc.n_a);
  read_opt(doc, "n_b", "", sc.n_b);
  apply_estimation(doc, "", sc.estimation);
  read_opt(doc, "seed", "", cfg.seed);
  read_opt(doc, "truth_samples", "", cfg.truth_samples);
  if (cfg.truth_samples == 0) throw ConfigError("config key 'truth_samples' must be >= 1");
  if (doc.contains("oracle")) {
    const auto& o = doc.at("oracle");
    check_keys(o, "oracle", {"replications", "estimators"});
    read_opt(o, "replications", "oracle", cfg.oracle.replications);
    if (cfg.oracle.replications < 2) {
      throw ConfigError("config key 'oracle.replications' must be >= 2");
    }
    if (o.contains("estimators")) {
      cfg.oracle.estimators = parse_estimators(o.at("estimators"), "oracle.estimators");
    }
  }
  read_opt(doc, "threads", "", cfg.threads);
  if (cfg.threads < 1) cfg.threads = 1;
  check_scenario(sc);
  return cfg;
}

json SynthConfig::echo() const {
  json j{{"scenario", scenario.name},
         {"env", to_json(scenario.env)},
         {"policies", {{"a", to_json(scenario.policy_a)}, {"b", to_json(scenario.policy_b)}}},
         {"n_a", scenario.n_a},
         {"n_b", scenario.n_b},
         {"seed", seed},
         {"truth_samples", truth_samples},
         {"oracle",
          {{"replications", oracle.replications}, {"estimators", estimators_json(oracle.estimators)}}}};
  j.update(to_json(scenario.estimation));
  return j;
}

}  // namespace ope
