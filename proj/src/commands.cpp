#include "ope/commands.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "ope/config.hpp"
#include "ope/errors.hpp"
#include "ope/random.hpp"
#include "ope/report.hpp"

namespace ope {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<std::uint64_t> parse_seed(const std::string& text) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

namespace {

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create output directory '" + dir + "'");
  }
  return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  f.close();
  if (!f) throw DataError("cannot write '" + path.string() + "'");
}

// Maps the library's exception families onto the exit-code contract.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const EstimationError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

std::string config_dir(const std::string& path) {
  auto parent = fs::path(path).parent_path();
  return parent.empty() ? "." : parent.string();
}

json sidecar_value(const MonteCarloValue& v) {
  return json{{"value", v.value}, {"standard_error", v.standard_error}};
}

}  // namespace

int cmd_run(const std::string& config_path, const CommandOptions& options, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = parse_run_config(read_json_file(config_path), config_dir(config_path));
    if (options.seed) cfg.seed = *options.seed;

    LoggedDataset d_a, d_b;
    if (cfg.scenario) {
      Scenario sc = scenario_by_name(*cfg.scenario);
      sc.policy_a = cfg.policy_a;
      sc.policy_b = cfg.policy_b;
      if (cfg.scenario_n) sc.n_a = sc.n_b = *cfg.scenario_n;
      check_scenario(sc);
      auto data = generate_scenario(sc, cfg.seed);
      d_a = std::move(data.a.dataset);
      d_b = std::move(data.b.dataset);
    } else {
      if (cfg.policy_a.m != cfg.schema.m || cfg.policy_b.m != cfg.schema.m) {
        throw ConfigError("policies and schema disagree on the treatment count m");
      }
      CsvSchema schema = cfg.schema;
      schema.policy_id = cfg.policy_a.id;
      d_a = load_dataset(*cfg.data_a, schema);
      schema.policy_id = cfg.policy_b.id;
      d_b = load_dataset(*cfg.data_b, schema);
    }
    const Policy pi_a = make_policy(cfg.policy_a);
    const Policy pi_b = make_policy(cfg.policy_b);

    cfg.subsample.seed = derive_seed(cfg.seed, 100);
    cfg.selection.estimation.cross_fit_seed = derive_seed(cfg.seed, 101);
    const SelectionReport report =
        run_selection(d_a, d_b, pi_a, pi_b, cfg.estimators, cfg.subsample, cfg.selection);
    // The report's seed is the user-facing one, not the derived stream.
    SelectionReport shown = report;
    shown.seed = cfg.seed;

    std::string text;
    std::string name;
    switch (cfg.format) {
      case OutputFormat::markdown:
        text = render_markdown(shown);
        name = "report.md";
        break;
      case OutputFormat::tsv:
        text = render_tsv(shown);
        name = "report.tsv";
        break;
      case OutputFormat::json:
        text = report_to_json(shown, cfg.echo()).dump(2) + "\n";
        name = "report.json";
        break;
    }
    out << text;
    if (options.out_dir) write_text(prepare_dir(*options.out_dir) / name, text);

    for (const auto& dir : report.directions) {
      if (!dir.best) {
        err << "no estimator succeeded for " << dir.label
            << (dir.defined ? "" : " (" + dir.error + ")") << "\n";
        return kExitData;
      }
    }
    return kExitOk;
  });
}

int cmd_synth(const std::string& config_path, const std::optional<std::string>& scenario,
              bool oracle, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config_path.empty() && !scenario) {
      throw ConfigError("synth needs --config or --scenario");
    }
    const json doc = config_path.empty() ? json::object() : read_json_file(config_path);
    SynthConfig cfg = parse_synth_config(doc, scenario);
    if (options.seed) cfg.seed = *options.seed;
    const Scenario& sc = cfg.scenario;
    const Policy pi_a = make_policy(sc.policy_a);
    const Policy pi_b = make_policy(sc.policy_b);

    const fs::path dir = prepare_dir(options.out_dir.value_or("."));
    const ScenarioData data = generate_scenario(sc, cfg.seed);
    save_dataset((dir / "a.csv").string(), data.a.dataset);
    save_dataset((dir / "b.csv").string(), data.b.dataset);

    const auto truth_a = true_policy_value(sc.env, pi_a, cfg.truth_samples, derive_seed(cfg.seed, 2));
    const auto truth_b = true_policy_value(sc.env, pi_b, cfg.truth_samples, derive_seed(cfg.seed, 3));

    json sidecar{{"config", cfg.echo()},
                 {"seed", cfg.seed},
                 {"files", {{"a", "a.csv"}, {"b", "b.csv"}}},
                 {"rows", {{"a", data.a.dataset.size()}, {"b", data.b.dataset.size()}}},
                 {"true_policy_value",
                  {{sc.policy_a.id, sidecar_value(truth_a)}, {sc.policy_b.id, sidecar_value(truth_b)}}}};

    if (oracle) {
      struct Leg {
        const Policy* target;
        const Policy* behavior;
        std::size_t n;
        MonteCarloValue truth;
        std::uint64_t seed;
      };
      const Leg legs[2] = {{&pi_b, &pi_a, sc.n_a, truth_b, derive_seed(cfg.seed, 4)},
                           {&pi_a, &pi_b, sc.n_b, truth_a, derive_seed(cfg.seed, 5)}};
      json dirs = json::array();
      for (const auto& leg : legs) {
        OracleOptions opts;
        opts.threads = cfg.threads;
        opts.truth = leg.truth.value;
        json results = json::object();
        for (auto id : cfg.oracle.estimators) {
          // Common random numbers: every estimator sees the same replications.
          const auto r = oracle_rmse(sc.env, id, sc.estimation, *leg.target, *leg.behavior, leg.n,
                                     cfg.oracle.replications, leg.seed, opts);
          results[std::string(to_string(id))] = {{"rmse", r.rmse},
                                                 {"bias", r.bias},
                                                 {"sd", r.sd},
                                                 {"mean_estimate", r.mean_estimate}};
        }
        dirs.push_back({{"label", "D_" + leg.behavior->id() + " -> pi_" + leg.target->id()},
                        {"behavior_policy", leg.behavior->id()},
                        {"target_policy", leg.target->id()},
                        {"n", leg.n},
                        {"replications", cfg.oracle.replications},
                        {"truth", leg.truth.value},
                        {"results", std::move(results)}});
      }
      sidecar["oracle"] = std::move(dirs);
    }

    const std::string text = sidecar.dump(2) + "\n";
    write_text(dir / "truth.json", text);
    out << text;
    return kExitOk;
  });
}

int cmd_validate(const std::string& data_path, const std::string& schema_path, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    const CsvSchema schema = parse_schema(read_json_file(schema_path));
    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw DataError("cannot read dataset '" + data_path + "'");
    const LoggedDataset ds = parse_dataset(in, schema);
    const auto violations = validate(ds);
    for (const auto& v : violations) out << v.message() << "\n";
    out << violations.size() << (violations.size() == 1 ? " violation" : " violations") << "\n";
    return violations.empty() ? kExitOk : kExitData;
  });
}

}  // namespace ope
