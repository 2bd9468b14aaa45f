// Runs the acceptance suite and prints one PASS/FAIL line per criterion.
// Determinism is checked by spawning the CLI twice with different worker counts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "escobar/acceptance.hpp"

namespace {

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string spawn_sweep(const std::filesystem::path& dir, int threads) {
  std::filesystem::remove_all(dir);
  const std::string cmd = "ESCOBAR_LAB_THREADS=" + std::to_string(threads) + " \"" + ESCOBAR_LAB_PATH +
                          "\" sweep --seed 42 --out \"" + dir.string() + "\" --config \"" +
                          (dir.parent_path() / "determinism.json").string() + "\" 2>/dev/null";
  if (std::system(cmd.c_str()) != 0) return {};
  return read_all(dir / "sweep.csv");
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path scratch = argc > 1 ? argv[1] : "acceptance_scratch";
  std::filesystem::create_directories(scratch);
  {
    std::ofstream cfg(scratch / "determinism.json");
    cfg << R"({"command": "sweep", "n": 3, "L": 8, "options": {"count": 24}})";
  }
  escobar::AcceptanceOptions opt;
  opt.scratch = scratch.string();
  opt.determinism_runner = [&] {
    return std::make_pair(spawn_sweep(scratch / "run_a", 1), spawn_sweep(scratch / "run_b", 3));
  };
  opt.progress = &std::cout;
  const auto results = escobar::run_acceptance(opt);
  std::cout << "\n";
  int failed = 0;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.title << "\n";
    failed += !r.passed;
  }
  std::cout << results.size() - static_cast<std::size_t>(failed) << "/" << results.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
