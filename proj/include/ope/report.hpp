#pragma once

#include <string>

#include <json.hpp>

#include "ope/selection.hpp"

namespace ope {

/// RRMSE cell text: four decimals, "failed" or "undefined".
std::string format_rrmse(double value);

/// One table per direction, estimator columns in report order, best cell bold.
std::string render_markdown(const SelectionReport& report);
/// Same layout as tab-separated text; the best cell carries a `*` suffix.
std::string render_tsv(const SelectionReport& report);

/// Full-precision report. `config` is embedded verbatim under "config".
nlohmann::json report_to_json(const SelectionReport& report, const nlohmann::json& config = {});
/// Inverse of report_to_json (the config echo is ignored).
SelectionReport report_from_json(const nlohmann::json& doc);

}  // namespace ope
