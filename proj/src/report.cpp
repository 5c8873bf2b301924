#include "ope/report.hpp"

#include <cstdio>
#include <sstream>

#include "ope/errors.hpp"

namespace ope {

using nlohmann::json;

std::string format_rrmse(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

namespace {

std::string cell(const DirectionReport& dir, const EstimatorResult& r) {
  if (!dir.defined) return "undefined";
  if (!r.ok) return "failed";
  return format_rrmse(r.rrmse);
}

bool is_best(const DirectionReport& dir, const EstimatorResult& r) {
  return dir.defined && r.ok && dir.best && *dir.best == r.estimator;
}

void notes(std::ostream& out, const DirectionReport& dir) {
  if (!dir.defined) {
    out << "\nDirection undefined: " << dir.error << "\n";
    return;
  }
  out << "\nGround truth (on-policy mean of pi_" << dir.target_policy
      << "): " << format_rrmse(dir.ground_truth) << "\n";
  if (dir.best) out << "Best estimator: " << to_string(*dir.best) << "\n";
  for (const auto& r : dir.results) {
    if (!r.ok) out << "- " << to_string(r.estimator) << " failed: " << r.error << "\n";
  }
}

}  // namespace

std::string render_markdown(const SelectionReport& report) {
  std::ostringstream out;
  bool first = true;
  for (const auto& dir : report.directions) {
    if (!first) out << "\n";
    first = false;
    out << "### " << dir.label << "\n\n| OPE Situation |";
    for (const auto& r : dir.results) out << " " << to_string(r.estimator) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < dir.results.size(); ++i) out << "---|";
    out << "\n| " << dir.label << " |";
    for (const auto& r : dir.results) {
      const auto text = cell(dir, r);
      out << " " << (is_best(dir, r) ? "**" + text + "**" : text) << " |";
    }
    out << "\n";
    notes(out, dir);
  }
  return out.str();
}

std::string render_tsv(const SelectionReport& report) {
  std::ostringstream out;
  out << "situation";
  for (const auto& r : report.directions[0].results) out << "\t" << to_string(r.estimator);
  out << "\tground_truth\n";
  for (const auto& dir : report.directions) {
    out << dir.label;
    for (const auto& r : dir.results) out << "\t" << cell(dir, r) << (is_best(dir, r) ? "*" : "");
    out << "\t" << (dir.defined ? format_rrmse(dir.ground_truth) : "0.0000") << "\n";
  }
  return out.str();
}

json report_to_json(const SelectionReport& report, const json& config) {
  json dirs = json::array();
  for (const auto& dir : report.directions) {
    json results = json::array();
    for (const auto& r : dir.results) {
      json jr{{"estimator", std::string(to_string(r.estimator))}, {"ok", r.ok}};
      if (r.ok) {
        jr["rrmse"] = r.rrmse;
        jr["mean_estimate"] = r.mean_estimate;
      } else {
        jr["error"] = r.error;
      }
      results.push_back(std::move(jr));
    }
    json jd{{"label", dir.label},
            {"source_policy", dir.source_policy},
            {"target_policy", dir.target_policy},
            {"ground_truth", dir.ground_truth},
            {"defined", dir.defined},
            {"results", std::move(results)},
            {"best", dir.best ? json(std::string(to_string(*dir.best))) : json(nullptr)}};
    if (!dir.defined) jd["error"] = dir.error;
    dirs.push_back(std::move(jd));
  }
  json j{{"seed", report.seed},
         {"k", report.k},
         {"ground_truth", {{"a", report.ground_truth_a}, {"b", report.ground_truth_b}}},
         {"directions", std::move(dirs)}};
  if (!config.is_null()) j["config"] = config;
  return j;
}

SelectionReport report_from_json(const json& doc) {
  try {
    SelectionReport report;
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.k = doc.at("k").get<int>();
    report.ground_truth_a = doc.at("ground_truth").at("a").get<double>();
    report.ground_truth_b = doc.at("ground_truth").at("b").get<double>();
    const auto& dirs = doc.at("directions");
    if (!dirs.is_array() || dirs.size() != 2) throw ConfigError("report needs two directions");
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& jd = dirs[i];
      auto& dir = report.directions[i];
      dir.label = jd.at("label").get<std::string>();
      dir.source_policy = jd.at("source_policy").get<std::string>();
      dir.target_policy = jd.at("target_policy").get<std::string>();
      dir.ground_truth = jd.at("ground_truth").get<double>();
      dir.defined = jd.at("defined").get<bool>();
      if (jd.contains("error")) dir.error = jd.at("error").get<std::string>();
      for (const auto& jr : jd.at("results")) {
        EstimatorResult r;
        r.estimator = estimator_from_string(jr.at("estimator").get<std::string>());
        r.ok = jr.at("ok").get<bool>();
        if (r.ok) {
          r.rrmse = jr.at("rrmse").get<double>();
          r.mean_estimate = jr.at("mean_estimate").get<double>();
        } else {
          r.error = jr.at("error").get<std::string>();
        }
        dir.results.push_back(std::move(r));
      }
      if (!jd.at("best").is_null()) dir.best = estimator_from_string(jd.at("best").get<std::string>());
    }
    return report;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report document: ") + e.what());
  }
}

}  // namespace ope
