#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace phiheat::cli {

inline constexpr const char* kToolName = "phi-heat";
inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

using Section = std::map<std::string, std::string>;

/// Parsed INI configuration with every default filled in.
struct RunConfig {
  std::string subcommand;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  std::map<std::string, Section> sections;
  /// "section.key" entries that came from defaults.
  std::vector<std::string> defaults_applied;
  unsigned threads = 0;
};

/// Subcommands in their documented order.
const std::vector<std::string>& subcommands();

/// Reads INI text: top-level keys subcommand, seed and output, plus the
/// sections used by the subcommand. Throws ConfigError naming the offending
/// key path.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// Executes the subcommand, writing manifest.json, summary.txt and the result
/// files into cfg.output_dir. Returns the exit status; errors go to err.
int run(const RunConfig& cfg, std::ostream& log, std::ostream& err);

/// Loads, applies the output override and thread cap, then runs. The output
/// directory is out_override if set, else $PHI_HEAT_OUT, else the config's
/// output key.
int run_file(const std::string& path, const std::optional<std::string>& out_override, unsigned threads,
             std::ostream& log, std::ostream& err);

}  // namespace phiheat::cli
