#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "ope/commands.hpp"
#include "ope/config.hpp"
#include "ope/errors.hpp"
#include "ope/report.hpp"

namespace ope {
namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::size_t count_lines(const std::string& path) {
  auto text = slurp(path);
  return std::count(text.begin(), text.end(), '\n');
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(const std::string& config, const CommandOptions& options = {}) {
  std::ostringstream out, err;
  int code = cmd_run(config, options, out, err);
  return {code, out.str(), err.str()};
}

Outcome synth(const std::string& config, std::optional<std::string> scenario, bool oracle,
              const CommandOptions& options) {
  std::ostringstream out, err;
  int code = cmd_synth(config, scenario, oracle, options, out, err);
  return {code, out.str(), err.str()};
}

Outcome check(const std::string& data, const std::string& schema) {
  std::ostringstream out, err;
  int code = cmd_validate(data, schema, out, err);
  return {code, out.str(), err.str()};
}

DirectionReport direction(std::string label, double dm, double ipw, double dr) {
  DirectionReport dir;
  dir.label = label;
  dir.source_policy = label.substr(2, 1);
  dir.target_policy = label.substr(label.size() - 1);
  dir.ground_truth = 0.25;
  dir.results = {{EstimatorId::DM, true, dm, 0.3, ""},
                 {EstimatorId::IPW, true, ipw, 0.2, ""},
                 {EstimatorId::DR, true, dr, 0.21, ""}};
  dir.best = select_best(dir.results);
  return dir;
}

SelectionReport two_direction_report() {
  SelectionReport report;
  report.directions = {direction("D_A -> pi_B", 0.0897, 0.1958, 0.0955),
                       direction("D_B -> pi_A", 0.4382, 0.0981, 0.2936)};
  report.ground_truth_a = 0.25;
  report.ground_truth_b = 0.25;
  report.k = 100;
  report.seed = 7;
  return report;
}

TEST(Report, MarkdownBoldsBest) {
  auto md = render_markdown(two_direction_report());
  EXPECT_NE(md.find("| OPE Situation | DM | IPW | DR |"), std::string::npos) << md;
  EXPECT_NE(md.find("| D_A -> pi_B | **0.0897** | 0.1958 | 0.0955 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| D_B -> pi_A | 0.4382 | **0.0981** | 0.2936 |"), std::string::npos) << md;
}

TEST(Report, TsvStarsBest) {
  auto tsv = render_tsv(two_direction_report());
  EXPECT_NE(tsv.find("D_A -> pi_B\t0.0897*\t0.1958\t0.0955"), std::string::npos) << tsv;
  EXPECT_NE(tsv.find("D_B -> pi_A\t0.4382\t0.0981*\t0.2936"), std::string::npos) << tsv;
}

TEST(Report, FailedAndUndefinedCells) {
  auto report = two_direction_report();
  report.directions[0].results[1] = {EstimatorId::IPW, false, 0, 0, "missing propensity"};
  report.directions[1].defined = false;
  report.directions[1].error = "ground truth is zero";
  report.directions[1].best.reset();
  auto md = render_markdown(report);
  EXPECT_NE(md.find("| **0.0897** | failed | 0.0955 |"), std::string::npos) << md;
  EXPECT_NE(md.find("undefined | undefined | undefined"), std::string::npos) << md;
  EXPECT_NE(md.find("missing propensity"), std::string::npos);
}

TEST(Report, JsonRoundTripWithinPrintedPrecision) {
  auto report = two_direction_report();
  report.directions[0].results[0].rrmse = 0.08971234567891234;
  auto doc = report_to_json(report, json{{"seed", 7}});
  EXPECT_EQ(doc["config"]["seed"], 7);
  EXPECT_EQ(doc["seed"], 7u);
  auto back = report_from_json(json::parse(doc.dump()));
  EXPECT_EQ(back.directions[0].results[0].rrmse, report.directions[0].results[0].rrmse);
  EXPECT_EQ(render_markdown(back), render_markdown(report));
  EXPECT_EQ(back.directions[1].best, EstimatorId::IPW);
}

TEST(Config, UnknownKeysAreNamed) {
  try {
    parse_run_config(json::parse(R"({"scenario":"s1","subsample":{"kk":3}})"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("subsample.kk"), std::string::npos) << e.what();
  }
}

TEST(Config, ExactlyOneSource) {
  EXPECT_THROW(parse_run_config(json::parse(R"({})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(
                   R"({"scenario":"s1","data":{"a":"a.csv","b":"b.csv"},"schema":{"d":1}})")),
               ConfigError);
}

TEST(Config, EstimatorList) {
  EXPECT_THROW(parse_run_config(json::parse(R"({"scenario":"s1","estimators":[]})")), ConfigError);
  EXPECT_THROW(parse_run_config(json::parse(R"({"scenario":"s1","estimators":["DM","SN"]})")),
               ConfigError);
  auto cfg = parse_run_config(json::parse(R"({"scenario":"s1","estimators":["DR","IPW"]})"));
  EXPECT_EQ(cfg.estimators, (std::vector<EstimatorId>{EstimatorId::DR, EstimatorId::IPW}));
}

TEST(Config, FullDataConfig) {
  auto cfg = parse_run_config(json::parse(R"({
    "data": {"a": "logs/a.csv", "b": "/abs/b.csv"},
    "schema": {"context_columns": ["age", "score"], "treatment_column": "coupon",
               "outcome_column": "revenue", "propensity_column": "prop", "m": 2,
               "outcome_kind": "continuous"},
    "policies": {"a": {"family": "logistic", "id": "A", "weights": [0, 1, 0], "floor": 0.1},
                 "b": {"family": "uniform", "id": "B"}},
    "outcome_model": {"family": "ridge_linear", "lambda": 0.5},
    "propensity": {"source": "estimated", "clip_floor": 0.05},
    "cross_fit": {"folds": 5},
    "subsample": {"method": "split", "k": 10, "split_fraction": 0.5},
    "refit_per_subsample": false,
    "output": {"format": "tsv"},
    "seed": 99, "threads": 2})"),
                              "/cfg");
  EXPECT_EQ(*cfg.data_a, "/cfg/logs/a.csv");
  EXPECT_EQ(*cfg.data_b, "/abs/b.csv");
  EXPECT_EQ(cfg.schema.context_columns, (std::vector<std::string>{"age", "score"}));
  EXPECT_EQ(*cfg.schema.propensity_column, "prop");
  EXPECT_EQ(cfg.policy_a.floor, 0.1);
  EXPECT_EQ(cfg.selection.estimation.lambda, 0.5);
  EXPECT_EQ(cfg.selection.estimation.propensity, PropensityMode::estimated);
  EXPECT_EQ(cfg.selection.estimation.cross_fit_folds, 5);
  EXPECT_EQ(cfg.subsample.method, SubsampleMethod::split);
  EXPECT_EQ(cfg.subsample.k, 10);
  EXPECT_EQ(*cfg.subsample.split_fraction, 0.5);
  EXPECT_FALSE(cfg.selection.refit_per_subsample);
  EXPECT_EQ(cfg.format, OutputFormat::tsv);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.selection.threads, 2u);
}

TEST(Config, BadValues) {
  for (const char* text : {R"({"scenario":"s1","propensity":{"clip_floor":0.7}})",
                           R"({"scenario":"s1","outcome_model":{"lambda":-1}})",
                           R"({"scenario":"s1","outcome_model":{"family":"forest"}})",
                           R"({"scenario":"s1","subsample":{"k":0}})",
                           R"({"scenario":"s1","seed":"seven"})",
                           R"({"scenario":"s9"})",
                           R"({"scenario":"s1","output":{"format":"html"}})"}) {
    EXPECT_THROW(parse_run_config(json::parse(text)), ConfigError) << text;
  }
}

TEST(Config, SynthOverrides) {
  auto cfg = parse_synth_config(json::parse(R"({"n": 50, "seed": 4, "env": {"noise_sd": 1.5}})"),
                                std::string("s2"));
  EXPECT_EQ(cfg.scenario.name, "s2");
  EXPECT_EQ(cfg.scenario.n_a, 50u);
  EXPECT_EQ(cfg.scenario.env.noise_sd, 1.5);
  EXPECT_EQ(cfg.seed, 4u);
  EXPECT_THROW(parse_synth_config(json::parse(R"({"n": 5})")), ConfigError);
  EXPECT_THROW(
      parse_synth_config(json::parse(R"({"scenario":"s1","policies":{"a":{"family":"uniform","id":"B"}}})")),
      ConfigError);
}

TEST(Config, SeedParsing) {
  EXPECT_EQ(parse_seed("123"), 123u);
  EXPECT_EQ(parse_seed("18446744073709551615"), 18446744073709551615ull);
  EXPECT_FALSE(parse_seed("-1"));
  EXPECT_FALSE(parse_seed("12x"));
  EXPECT_FALSE(parse_seed(""));
}

TEST(CmdRun, ScenarioMarkdown) {
  test::TempDir dir;
  write(dir.file("run.json"), R"({"scenario":"s1","n":200,"subsample":{"k":10},"seed":3})");
  auto r = run(dir.file("run.json"), {std::nullopt, dir.file("out")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| OPE Situation | DM | IPW | DR |"), std::string::npos);
  EXPECT_EQ(slurp(dir.file("out/report.md")), r.out);
}

TEST(CmdRun, JsonHasEchoAndSeedAndMatchesBest) {
  test::TempDir dir;
  write(dir.file("run.json"),
        R"({"scenario":"s2","n":300,"subsample":{"k":8},"seed":5,"output":{"format":"json"}})");
  auto r = run(dir.file("run.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = json::parse(r.out);
  EXPECT_EQ(doc["seed"], 5u);
  EXPECT_EQ(doc["config"]["scenario"], "s2");
  EXPECT_EQ(doc["config"]["subsample"]["k"], 8);
  auto report = report_from_json(doc);
  for (const auto& d : report.directions) EXPECT_EQ(d.best, select_best(d.results));
  // markdown from the json report marks the same cells as a direct markdown run
  write(dir.file("md.json"), R"({"scenario":"s2","n":300,"subsample":{"k":8},"seed":5})");
  EXPECT_EQ(run(dir.file("md.json")).out, render_markdown(report));
}

TEST(CmdRun, SeedOverrideAndDeterminism) {
  test::TempDir dir;
  write(dir.file("a.json"), R"({"scenario":"s1","n":150,"subsample":{"k":6},"seed":1,"output":{"format":"json"}})");
  write(dir.file("b.json"),
        R"({"scenario":"s1","n":150,"subsample":{"k":6},"seed":1,"threads":3,"output":{"format":"json"}})");
  auto first = run(dir.file("a.json"));
  EXPECT_EQ(first.out, run(dir.file("a.json")).out);
  EXPECT_EQ(first.out, run(dir.file("b.json")).out);
  auto other = run(dir.file("a.json"), {42, std::nullopt});
  EXPECT_NE(other.out, first.out);
  EXPECT_EQ(json::parse(other.out)["seed"], 42u);
}

TEST(CmdRun, DataFilesAndMissingColumn) {
  test::TempDir dir;
  auto sc = scenario_s2();
  sc.n_a = sc.n_b = 120;
  auto data = generate_scenario(sc, 2);
  save_dataset(dir.file("a.csv"), data.a.dataset);
  save_dataset(dir.file("b.csv"), data.b.dataset);
  const std::string policies =
      R"("policies":{"a":{"family":"logistic","id":"A","weights":[0,2.5,0],"floor":0.05},
                     "b":{"family":"logistic","id":"B","weights":[0,-2.5,0],"floor":0.05}})";
  write(dir.file("run.json"), R"({"data":{"a":"a.csv","b":"b.csv"},"schema":{"d":2},)" + policies +
                                  R"(,"subsample":{"k":5}})");
  auto r = run(dir.file("run.json"));
  EXPECT_EQ(r.code, 0) << r.err;

  write(dir.file("noy.csv"), "x0,x1,t,p\n0,0,1,0.5\n");
  write(dir.file("bad.json"), R"({"data":{"a":"noy.csv","b":"b.csv"},"schema":{"d":2},)" + policies + "}");
  auto bad = run(dir.file("bad.json"));
  EXPECT_EQ(bad.code, kExitData);
  EXPECT_NE(bad.err.find("'y'"), std::string::npos) << bad.err;
}

TEST(CmdRun, ConfigErrors) {
  test::TempDir dir;
  write(dir.file("bad.json"), R"({"scenario":"s1","typo":1})");
  auto r = run(dir.file("bad.json"));
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("typo"), std::string::npos);
  write(dir.file("broken.json"), "{not json");
  EXPECT_EQ(run(dir.file("broken.json")).code, kExitConfig);
  EXPECT_EQ(run(dir.file("missing.json")).code, kExitConfig);
}

TEST(CmdRun, PartialFailureStillSucceeds) {
  test::TempDir dir;
  auto sc = scenario_s2();
  sc.n_a = sc.n_b = 100;
  auto data = generate_scenario(sc, 3);
  for (auto& r : data.a.dataset.rows) r.logged_propensity.reset();
  save_dataset(dir.file("a.csv"), data.a.dataset);
  save_dataset(dir.file("b.csv"), data.b.dataset);
  write(dir.file("run.json"), R"({"data":{"a":"a.csv","b":"b.csv"},"schema":{"d":2},
    "policies":{"a":{"family":"logistic","id":"A","weights":[0,2.5,0],"floor":0.05},
                "b":{"family":"logistic","id":"B","weights":[0,-2.5,0],"floor":0.05}},
    "subsample":{"k":4}})");
  auto r = run(dir.file("run.json"));
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("failed"), std::string::npos);
  EXPECT_NE(r.out.find("| D_A -> pi_B | **"), std::string::npos) << r.out;
}

TEST(CmdSynth, ScenarioFilesAndDeterminism) {
  test::TempDir dir;
  write(dir.file("s.json"), R"({"scenario":"s1","n":1000,"seed":7,"truth_samples":20000})");
  auto first = synth(dir.file("s.json"), std::nullopt, false, {std::nullopt, dir.file("one")});
  ASSERT_EQ(first.code, 0) << first.err;
  auto second = synth(dir.file("s.json"), std::nullopt, false, {std::nullopt, dir.file("two")});
  EXPECT_EQ(count_lines(dir.file("one/a.csv")), 1001u);
  EXPECT_EQ(count_lines(dir.file("one/b.csv")), 1001u);
  EXPECT_EQ(slurp(dir.file("one/a.csv")), slurp(dir.file("two/a.csv")));
  EXPECT_EQ(slurp(dir.file("one/b.csv")), slurp(dir.file("two/b.csv")));
  EXPECT_EQ(slurp(dir.file("one/truth.json")), slurp(dir.file("two/truth.json")));
  EXPECT_EQ(first.out, slurp(dir.file("one/truth.json")));
  auto truth = json::parse(first.out);
  for (const char* id : {"A", "B"}) {
    EXPECT_TRUE(truth["true_policy_value"][id]["value"].is_number());
    EXPECT_GT(truth["true_policy_value"][id]["standard_error"].get<double>(), 0.0);
  }
  EXPECT_FALSE(truth.contains("oracle"));
  // The CSVs load back under the canonical schema.
  auto ds = load_dataset(dir.file("one/a.csv"), CsvSchema::standard(2, OutcomeKind::binary, "A"));
  EXPECT_EQ(ds.size(), 1000u);
}

TEST(CmdSynth, OracleMatchesLibrary) {
  test::TempDir dir;
  write(dir.file("s.json"),
        R"({"n":150,"seed":11,"truth_samples":20000,"oracle":{"replications":12}})");
  auto r = synth(dir.file("s.json"), std::string("s2"), true, {std::nullopt, dir.path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = json::parse(r.out);
  ASSERT_EQ(doc["oracle"].size(), 2u);
  auto sc = scenario_s2();
  auto pa = make_policy(sc.policy_a), pb = make_policy(sc.policy_b);
  const auto& leg = doc["oracle"][0];
  EXPECT_EQ(leg["label"], "D_A -> pi_B");
  OracleOptions opts{.truth_samples = 20000, .truth = leg["truth"].get<double>()};
  for (auto id : {EstimatorId::DM, EstimatorId::IPW, EstimatorId::DR}) {
    auto expected = oracle_rmse(sc.env, id, sc.estimation, pb, pa, 150, 12, derive_seed(11, 4), opts);
    EXPECT_EQ(leg["results"][std::string(to_string(id))]["rmse"].get<double>(), expected.rmse);
  }
}

TEST(CmdSynth, NeedsConfigOrScenario) {
  EXPECT_EQ(synth("", std::nullopt, false, {}).code, kExitConfig);
}

TEST(CmdSynth, UnwritableOutput) {
  test::TempDir dir;
  write(dir.file("blocker"), "x");
  auto r = synth("", std::string("s1"), false, {std::nullopt, dir.file("blocker/sub")});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("output directory"), std::string::npos) << r.err;
}

TEST(CmdValidate, CleanAndBroken) {
  test::TempDir dir;
  write(dir.file("schema.json"), R"({"d":1,"outcome_kind":"binary"})");
  std::string clean = "x0,t,y,p\n";
  for (int i = 0; i < 10; ++i) clean += "0.5," + std::to_string(i % 2) + ",1,0.5\n";
  write(dir.file("clean.csv"), clean);
  auto ok = check(dir.file("clean.csv"), dir.file("schema.json"));
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(ok.out, "0 violations\n");

  std::string bad = "x0,t,y,p\n";
  for (int i = 1; i <= 10; ++i) bad += std::string("0.5,") + (i == 4 ? "5" : "1") + ",1," + (i == 9 ? "1.5" : "0.5") + "\n";
  write(dir.file("bad.csv"), bad);
  auto r = check(dir.file("bad.csv"), dir.file("schema.json"));
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.out.find("row 9"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("row 4: treatment 5 outside the treatment range {0..1}"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("2 violations"), std::string::npos);

  EXPECT_EQ(check(dir.file("nope.csv"), dir.file("schema.json")).code, kExitData);
  write(dir.file("badschema.json"), R"({"d":1,"colour":"red"})");
  EXPECT_EQ(check(dir.file("clean.csv"), dir.file("badschema.json")).code, kExitConfig);
}

#ifdef OPE_CLI_PATH
int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Binary, ExitCodesAndSeedEnv) {
  test::TempDir dir;
  const std::string bin = OPE_CLI_PATH;
  write(dir.file("run.json"),
        R"({"scenario":"s1","n":100,"subsample":{"k":4},"seed":1,"output":{"format":"json"}})");
  EXPECT_EQ(shell("OPE_SEED=42 " + bin + " run --config " + dir.file("run.json") + " --out " +
                  dir.file("o") + " > " + dir.file("stdout.json")),
            0);
  auto expected = run(dir.file("run.json"), {42, std::nullopt});
  EXPECT_EQ(slurp(dir.file("stdout.json")), expected.out);
  EXPECT_EQ(slurp(dir.file("o/report.json")), expected.out);
  EXPECT_EQ(shell("OPE_SEED=abc " + bin + " run --config " + dir.file("run.json") + " 2>/dev/null"), 2);
  EXPECT_EQ(shell(bin + " run 2>/dev/null >/dev/null"), 2);
  EXPECT_EQ(shell(bin + " synth --scenario s3 2>/dev/null >/dev/null"), 2);
  write(dir.file("schema.json"), R"({"d":1})");
  write(dir.file("bad.csv"), "x0,t,y\n0,7,1\n");
  EXPECT_EQ(shell(bin + " validate --data " + dir.file("bad.csv") + " --schema " +
                  dir.file("schema.json") + " >/dev/null"),
            3);
}
#endif

}  // namespace
}  // namespace ope
