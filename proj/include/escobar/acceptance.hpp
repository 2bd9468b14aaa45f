#pragma once

// The acceptance suite: eleven numbered checks at fixed sizes.

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace escobar {

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string details;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  /// Empty runs everything.
  std::vector<int> only;
  /// Produces two sweep CSVs from identical configs. Unset: run in-process.
  std::function<std::pair<std::string, std::string>()> determinism_runner;
  /// Scratch directory for in-process command runs.
  std::string scratch = ".";
  std::ostream* progress = nullptr;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt);

}  // namespace escobar
