#pragma once

// Command layer behind the escobar_lab executable. Every command is a
// function of its RunConfig; outputs embed the artifact version and config hash.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "escobar/io.hpp"

namespace escobar {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitAcceptance = 4 };

struct RunConfig {
  std::string command;
  int n = 3;
  int L = 8;
  Json geometry = Json{{"kind", "flat"}};
  Json options = Json::object();
  std::uint64_t seed = 42;
  std::string out = ".";

  /// Everything except the output directory.
  Json canonical() const;
  std::string hash() const;
  Json to_json() const;
  static RunConfig from_json(const Json& j);
  void validate() const;
};

/// Runs config.command; progress and errors go to log. Returns an ExitCode.
int run_command(const RunConfig& config, std::ostream& log);

/// Flat ball: the normalized constant. Conformal ball: minimizer reached
/// from the constant.
ConstraintState reference_state(const Objective& obj, const ModelGeometry& geom);

}  // namespace escobar
