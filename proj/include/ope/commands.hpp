#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace ope {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

struct CommandOptions {
  std::optional<std::uint64_t> seed;    // overrides the config seed
  std::optional<std::string> out_dir;   // where files are written
};

/// Selection run. Exit 3 also when a direction ends without any successful
/// estimator.
int cmd_run(const std::string& config_path, const CommandOptions& options, std::ostream& out,
            std::ostream& err);

/// Writes a.csv, b.csv and truth.json to the output directory (default ".")
/// and prints truth.json. `config_path` may be empty when `scenario` is set.
int cmd_synth(const std::string& config_path, const std::optional<std::string>& scenario,
              bool oracle, const CommandOptions& options, std::ostream& out, std::ostream& err);

int cmd_validate(const std::string& data_path, const std::string& schema_path, std::ostream& out,
                 std::ostream& err);

/// Parses an OPE_SEED value; nullopt when it is not a base-10 uint64.
std::optional<std::uint64_t> parse_seed(const std::string& text);

}  // namespace ope
