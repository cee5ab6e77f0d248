#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mftrade/cli.hpp"
#include "mftrade/config.hpp"
#include "mftrade/errors.hpp"

using namespace mftrade;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mftrade_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(cli::RunConfig rc, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(rc, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

cli::RunConfig make(const std::string& command, const fs::path& out) {
  cli::RunConfig rc;
  rc.command = command;
  rc.output_dir = out.string();
  return rc;
}

}  // namespace

TEST_CASE("threshold command with the paper parameters") {
  const fs::path dir = scratch("threshold");
  cli::RunConfig rc = make("threshold", dir);
  rc.config_path = std::string(MFTRADE_CONFIG_DIR) + "/optimal_slope_experiment.json";
  REQUIRE(run_cli(rc) == 0);
  const Json doc = Json::parse(slurp(dir / "threshold.json"));
  const Json& a = doc["result"]["assets"][0];
  CHECK(std::abs(a["q_star"].get<double>() - 1.1447e-2) < 1e-6);
  CHECK(std::abs(a["q1"].get<double>() - 1.0947e-2) < 1e-6);
  CHECK(a["regime"] == "intermediate");
  CHECK(doc["config"]["seed"] == 42);
  CHECK(doc["command"] == "threshold");
}

TEST_CASE("reruns are byte-identical") {
  const fs::path d1 = scratch("rerun1"), d2 = scratch("rerun2");
  for (const auto& d : {d1, d2}) {
    cli::RunConfig rc = make("rate", d);
    rc.overrides = {{"rate.horizon", "200000"}, {"rate.q_hat", "[0.2, 1.0]"}};
    rc.repetitions = 2;
    REQUIRE(run_cli(rc) == 0);
  }
  CHECK(slurp(d1 / "rate.csv") == slurp(d2 / "rate.csv"));
  CHECK(slurp(d1 / "rate.json") == slurp(d2 / "rate.json"));
  const std::string csv = slurp(d1 / "rate.csv");
  CHECK(csv.find("\nq_hat,j_exact,j_small,j_large,j_mc,stderr,flips\n") != std::string::npos);
  CHECK(csv.find("nan") == std::string::npos);
  CHECK(csv.find("inf") == std::string::npos);
}

TEST_CASE("fig3 table layout") {
  const fs::path dir = scratch("fig3");
  cli::RunConfig rc = make("fig3", dir);
  rc.overrides = {{"slope_search.horizon", "100000"}, {"slope_search.rounds", "1"}};
  REQUIRE(run_cli(rc) == 0);
  std::istringstream csv(slurp(dir / "fig3.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("# ", 0) == 0);
  std::getline(csv, line);
  CHECK(line == "jbar_over_eps,s_hat,s_theory");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("every command runs at small scale") {
  const fs::path dir = scratch("all");
  const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> cases = {
      {"simulate", {{"horizon", "30000"}, {"assets.0.count", "20"}, {"simulate.write_r_path", "true"}}},
      {"slope-search", {{"slope_search.horizon", "100000"}}},
      {"risk-calibrate", {{"lambda", "0.02"}}},
      {"fit-ou", {{"fit_ou.horizon", "100000"}}},
      {"fig2", {{"fig2.horizon", "30000"}, {"fig2.q_hat", "[0.362]"}, {"assets.0.count", "20"}}},
  };
  for (const auto& [cmd, overrides] : cases) {
    cli::RunConfig rc = make(cmd, dir);
    rc.overrides = overrides;
    std::string err;
    CHECK_MESSAGE(run_cli(rc, &err) == 0, cmd << ": " << err);
  }
  CHECK(fs::exists(dir / "simulate.json"));
  CHECK(fs::exists(dir / "r_path.csv"));
  CHECK(fs::exists(dir / "pnl_curve.csv"));
  CHECK(fs::exists(dir / "fig2.csv"));
  const Json fit = Json::parse(slurp(dir / "fit_ou.json"));
  CHECK(fit["result"]["fit"]["kappa_hat"].get<double>() > 0.0);

  // Fit a path written by the simulator back from disk.
  cli::RunConfig rc = make("fit-ou", dir / "refit");
  rc.overrides = {{"fit_ou.path", (dir / "r_path.csv").string()}};
  CHECK(run_cli(rc) == 0);
}

TEST_CASE("risk-calibrate inverts a target") {
  const fs::path dir = scratch("risk");
  cli::RunConfig rc = make("risk-calibrate", dir);
  rc.config_path = std::string(MFTRADE_CONFIG_DIR) + "/two_sector_book.json";
  REQUIRE(run_cli(rc) == 0);
  const Json doc = Json::parse(slurp(dir / "risk.json"));
  CHECK(doc["result"]["realized"].get<double>() == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(doc["result"]["lambda"].get<double>() > 0.0);
}

TEST_CASE("errors carry distinct exit codes") {
  const fs::path dir = scratch("errors");
  std::string err;

  cli::RunConfig unknown = make("bogus", dir);
  CHECK(run_cli(unknown, &err) == 1);
  CHECK(err.find("usage:") != std::string::npos);

  cli::RunConfig missing = make("threshold", dir);
  missing.config_path = (dir / "no_such_file.json").string();
  CHECK(run_cli(missing, &err) == exit_code(ErrorKind::io));

  cli::RunConfig bad_value = make("threshold", dir);
  bad_value.overrides = {{"assets.0.epsilon", "\"fast\""}};
  CHECK(run_cli(bad_value, &err) == exit_code(ErrorKind::parse));
  CHECK(err.find("assets.0.epsilon") != std::string::npos);

  cli::RunConfig domain = make("threshold", dir);
  domain.overrides = {{"assets.0.psi", "-1"}};
  CHECK(run_cli(domain, &err) == exit_code(ErrorKind::parameter_domain));
  CHECK(err.find("psi") != std::string::npos);
  const Json rec = Json::parse(slurp(dir / "error.json"));
  CHECK(rec["error"]["kind"] == "parameter_domain");

  cli::RunConfig regime = make("threshold", dir);
  regime.overrides = {{"assets.0.gamma", "1e-9"}};
  CHECK(run_cli(regime, &err) == exit_code(ErrorKind::out_of_regime));

  CHECK(exit_code(ErrorKind::parse) != exit_code(ErrorKind::parameter_domain));
  CHECK(exit_code(ErrorKind::parameter_domain) != exit_code(ErrorKind::numerical_failure));
}

TEST_CASE("binary front end") {
  const std::string bin = MFTRADE_CLI_PATH;
  const fs::path dir = scratch("binary");
  fs::create_directories(dir);
  const std::string quiet = " > " + (dir / "log.txt").string() + " 2>&1";
  CHECK(WEXITSTATUS(std::system((bin + " frobnicate" + quiet).c_str())) == 1);
  CHECK(WEXITSTATUS(std::system((bin + quiet).c_str())) == 1);
  CHECK(WEXITSTATUS(std::system((bin + " threshold --set nokey" + quiet).c_str())) == exit_code(ErrorKind::parse));
  CHECK(WEXITSTATUS(std::system((bin + " threshold --seed 9 --out " + dir.string() + quiet).c_str())) == 0);
  const Json doc = Json::parse(slurp(dir / "threshold.json"));
  CHECK(doc["config"]["seed"] == 9);
}
