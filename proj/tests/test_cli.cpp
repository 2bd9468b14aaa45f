#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "escobar/commands.hpp"

using namespace escobar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("escobar_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(RunConfig cfg, const fs::path& out, std::string* log_text = nullptr) {
  cfg.out = out.string();
  std::ostringstream log;
  const int rc = run_command(cfg, log);
  if (log_text) *log_text = log.str();
  return rc;
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("run config round-trips and the hash ignores the output path") {
  RunConfig c;
  c.command = "sweep";
  c.options = Json{{"count", 7}};
  c.seed = 99;
  c.out = "/tmp/a";
  const RunConfig d = RunConfig::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  RunConfig e = c;
  e.out = "/tmp/b";
  CHECK(e.hash() == c.hash());
  e.seed = 100;
  CHECK(e.hash() != c.hash());
}

TEST_CASE("fields serialize and are validated") {
  BoundaryField f = BoundaryField::zero(build_basis(3, 2));
  f.coeffs[4] = 0.25;
  CHECK(field_from_json(to_json(f)).coeffs == f.coeffs);
  Json bad = to_json(f);
  bad["coeffs"].erase(0);
  CHECK_THROWS_AS(field_from_json(bad), ConfigError);
}

TEST_CASE("config errors map to exit code 2") {
  RunConfig c;
  c.command = "spectrum";
  c.n = 5;
  std::string log;
  CHECK(run(c, scratch("bad_n"), &log) == kExitConfig);
  CHECK(log.find("{3, 4}") != std::string::npos);
  c.n = 3;
  c.command = "frobnicate";
  CHECK(run(c, scratch("bad_cmd")) == kExitConfig);
  c.command = "distance";
  c.options = Json{{"input", "/nonexistent/field.json"}};
  CHECK(run(c, scratch("missing"), &log) == kExitConfig);
  CHECK(log.find("/nonexistent/field.json") != std::string::npos);
  c.command = "sweep";
  c.options = Json{{"kind", "sideways"}};
  CHECK(run(c, scratch("bad_kind")) == kExitConfig);
}

TEST_CASE("spectrum writes the eigenvalue law and kernel dimension") {
  RunConfig c;
  c.command = "spectrum";
  const fs::path out = scratch("spectrum");
  REQUIRE(run(c, out) == kExitOk);
  std::istringstream csv(read_all(out / "hessian_eigenvalues.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.find("0.1.0") != std::string::npos);
  CHECK(line.find(c.hash()) != std::string::npos);
  std::getline(csv, line);
  CHECK(line == "index,eigenvalue");
  const double expect[] = {0, 0, 0, 8, 8, 8, 8, 8, 16};
  for (double e : expect) {
    std::getline(csv, line);
    CHECK(std::stod(line.substr(line.find(',') + 1)) == doctest::Approx(e).epsilon(1e-9).scale(1.0));
  }
  const Json j = read_json_file((out / "spectrum.json").string());
  CHECK(j.at("kernel_dim") == 3);
  CHECK(j.at("config_hash") == c.hash());
  CHECK(j.at("version") == kArtifactVersion);
}

TEST_CASE("distance of an exact bubble is zero") {
  const fs::path dir = scratch("distance");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bubble.json");
    f << R"({"bubble": {"amplitude": 0.8, "zeta": [0.05, 0.0, -0.1]}})";
  }
  RunConfig c;
  c.command = "distance";
  c.options = Json{{"input", (dir / "bubble.json").string()}};
  REQUIRE(run(c, dir / "out") == kExitOk);
  const Json j = read_json_file((dir / "out" / "distance.json").string());
  CHECK(j.at("value").get<double>() < 1e-8);
}

TEST_CASE("sweep output is byte-identical across runs") {
  RunConfig c;
  c.command = "sweep";
  c.L = 6;
  c.options = Json{{"count", 5}};
  const fs::path a = scratch("sweep_a"), b = scratch("sweep_b");
  REQUIRE(run(c, a) == kExitOk);
  REQUIRE(run(c, b) == kExitOk);
  const std::string csv = read_all(a / "sweep.csv");
  CHECK(!csv.empty());
  CHECK(csv == read_all(b / "sweep.csv"));
  CHECK(read_all(a / "sweep_summary.json") == read_all(b / "sweep_summary.json"));
}

TEST_CASE("minimize writes a converged trajectory") {
  RunConfig c;
  c.command = "minimize";
  c.L = 6;
  c.options = Json{{"start", "perturbed"}};
  const fs::path out = scratch("minimize");
  REQUIRE(run(c, out) == kExitOk);
  const Json j = read_json_file((out / "trajectory.json").string());
  CHECK(j.at("converged") == true);
  CHECK(j.at("final_q").get<double>() == doctest::Approx(8.0 * std::sqrt(M_PI)).epsilon(1e-8));
}

TEST_CASE("executable reports exit codes") {
  const std::string exe = ESCOBAR_LAB_PATH;
  const int bad = std::system(("\"" + exe + "\" spectrum --n 5 --out /tmp/escobar_cli_exit 2>/dev/null").c_str());
  CHECK(WEXITSTATUS(bad) == kExitConfig);
  const int ok = std::system(("\"" + exe + "\" spectrum --L 4 --out /tmp/escobar_cli_exit 2>/dev/null").c_str());
  CHECK(WEXITSTATUS(ok) == kExitOk);
}
