#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/dataset.hpp"
#include "ope/estimators.hpp"
#include "ope/policy.hpp"
#include "ope/selection.hpp"
#include "ope/synthetic.hpp"

namespace ope {

// Run and synth configs are JSON documents. Unknown keys and ill-typed
// values throw ConfigError naming the offending key path.

enum class OutputFormat { markdown, tsv, json };

std::string_view to_string(OutputFormat format);
OutputFormat output_format_from_string(std::string_view name);

struct RunConfig {
  std::optional<std::string> data_a;  // resolved against the config's directory
  std::optional<std::string> data_b;
  std::optional<std::string> scenario;
  std::optional<std::size_t> scenario_n;  // overrides both log sizes
  CsvSchema schema;
  PolicySpec policy_a;
  PolicySpec policy_b;
  std::vector<EstimatorId> estimators{EstimatorId::DM, EstimatorId::IPW, EstimatorId::DR};
  SelectionSettings selection;
  SubsampleSpec subsample;
  OutputFormat format = OutputFormat::markdown;
  std::uint64_t seed = 0;

  /// Normalized echo of every effective setting, embedded in reports.
  nlohmann::json echo() const;
};

struct OracleRequest {
  std::size_t replications = 1000;
  std::vector<EstimatorId> estimators{EstimatorId::DM, EstimatorId::IPW, EstimatorId::DR};
};

struct SynthConfig {
  Scenario scenario;
  std::uint64_t seed = 0;
  std::size_t truth_samples = kDefaultTruthSamples;
  OracleRequest oracle;
  unsigned threads = 1;

  nlohmann::json echo() const;
};

/// `base_dir` resolves relative dataset paths.
RunConfig parse_run_config(const nlohmann::json& doc, const std::string& base_dir = ".");
/// Starts from the named scenario preset when given (or when the document
/// has a "scenario" key) and applies the document's overrides.
SynthConfig parse_synth_config(const nlohmann::json& doc,
                               const std::optional<std::string>& scenario_override = {});
CsvSchema parse_schema(const nlohmann::json& doc);

/// Reads a JSON file; ConfigError when unreadable or malformed.
nlohmann::json read_json_file(const std::string& path);

nlohmann::json to_json(const PolicySpec& spec);
PolicySpec policy_spec_from_json(const nlohmann::json& doc, const std::string& where);
nlohmann::json to_json(const SyntheticEnv& env);
nlohmann::json to_json(const EstimationSettings& settings);

}  // namespace ope
