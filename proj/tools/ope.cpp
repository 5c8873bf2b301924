// ope: estimator selection for off-policy evaluation from two logged datasets.
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "ope/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Off-policy estimator selection (DM, IPW, DR)"};
  app.require_subcommand(1);

  std::string config, data, schema, out_dir, scenario;
  bool oracle = false;

  auto* run = app.add_subcommand("run", "cross-evaluate estimators on two logs and pick the best");
  run->add_option("--config", config, "run config (JSON)")->required();
  run->add_option("--out", out_dir, "also write the report into this directory");

  auto* synth = app.add_subcommand("synth", "generate synthetic logs with known policy values");
  synth->add_option("--config", config, "synth config (JSON)");
  synth->add_option("--scenario", scenario, "scenario preset")->check(CLI::IsMember({"s1", "s2"}));
  synth->add_flag("--oracle", oracle, "add brute-force oracle RMSEs to truth.json");
  synth->add_option("--out", out_dir, "output directory (default .)");

  auto* val = app.add_subcommand("validate", "check a CSV log against a schema");
  val->add_option("--data", data, "dataset CSV")->required();
  val->add_option("--schema", schema, "schema (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ope::kExitConfig;
  }

  ope::CommandOptions options;
  if (!out_dir.empty()) options.out_dir = out_dir;
  if (const char* env = std::getenv("OPE_SEED"); env && *env) {
    options.seed = ope::parse_seed(env);
    if (!options.seed) {
      std::cerr << "config error: OPE_SEED must be a non-negative integer, got '" << env << "'\n";
      return ope::kExitConfig;
    }
  }

  if (*run) return ope::cmd_run(config, options, std::cout, std::cerr);
  if (*synth) {
    std::optional<std::string> sc;
    if (!scenario.empty()) sc = scenario;
    return ope::cmd_synth(config, sc, oracle, options, std::cout, std::cerr);
  }
  return ope::cmd_validate(data, schema, std::cout, std::cerr);
}
