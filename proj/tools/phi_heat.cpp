#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phiheat/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Heat flow experiments on manifolds with fibered boundary", phiheat::cli::kToolName};
  app.set_version_flag("--version", phiheat::cli::kToolVersion);
  std::string config;
  unsigned threads = 0;
  std::optional<std::string> out;
  app.add_option("config", config, "INI run configuration")->required();
  app.add_option("--threads", threads, "worker thread cap (0 = all cores)");
  app.add_option("--out", out, "output directory (overrides PHI_HEAT_OUT and the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : phiheat::cli::kExitValidation;
  }
  return phiheat::cli::run_file(config, out, threads, std::cout, std::cerr);
}
