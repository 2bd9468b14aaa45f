#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "escobar/commands.hpp"

int main(int argc, char** argv) {
  using namespace escobar;
  CLI::App app{"escobar_lab: trace-Yamabe quotient experiments on the unit ball"};
  app.set_version_flag("--version", std::string(kArtifactVersion));
  std::string command, config_path, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> n, L;
  std::vector<int> only;
  bool print_config = false;
  app.add_option("command", command, "spectrum | minimize | sweep | reduce | distance | verify");
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--n", n, "dimension (3 or 4)");
  app.add_option("--L", L, "harmonic truncation degree");
  app.add_option("--only", only, "verify: run only these criteria");
  app.add_flag("--print-config", print_config, "print the resolved config and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = RunConfig::from_json(read_json_file(config_path));
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (!command.empty()) cfg.command = command;
  if (seed) cfg.seed = *seed;
  if (n) cfg.n = *n;
  if (L) cfg.L = *L;
  if (!out.empty()) cfg.out = out;
  if (!only.empty()) cfg.options["only"] = only;
  if (print_config) {
    std::cout << cfg.to_json().dump(2) << "\nconfig_hash " << cfg.hash() << "\n";
    return kExitOk;
  }
  if (cfg.command.empty()) {
    std::cerr << "config error: no command given\n" << app.help();
    return kExitConfig;
  }
  return run_command(cfg, std::cerr);
}
