// Drives the built CLI binary end to end: exit-code contract, report
// structure, determinism of the report body, and the sweep CSV.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <string>

using Json = nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args)
{
  const std::string command = std::string(ERVCG_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  std::array<char, 4096> buffer{};
  std::size_t got = 0;
  while ((got = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.output.append(buffer.data(), got);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string data(const std::string& name)
{
  return std::string(ERVCG_TEST_DATA) + "/" + name;
}

}  // namespace

TEST_CASE("analyze-mech on the linear mechanism")
{
  const CliResult r = run_cli("analyze-mech --kind linear --low 0 --high 1 --grid-step 0.01");
  REQUIRE(r.exit_code == 0);
  const Json report = Json::parse(r.output);
  CHECK(report["results"]["monotone"] == true);
  CHECK(report["results"]["envelope_pass"] == true);
  CHECK(report["results"]["modulus"]["m"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report["results"]["linear_optimum"].get<double>() == doctest::Approx(1.0));
  CHECK(report["results"]["myerson_error"].get<double>() < 1e-9);
}

TEST_CASE("analyze-mech validates the descriptor")
{
  const CliResult r = run_cli("analyze-mech --kind linear --low 1 --high 1");
  CHECK(r.exit_code == 2);
  const Json report = Json::parse(r.output);
  CHECK(report.contains("error"));
}

TEST_CASE("analyze-mech accepts a descriptor file")
{
  const std::string path = "/tmp/ervcg_cli_mech.json";
  {
    FILE* f = fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    const std::string text = R"({"kind": "linear", "L": 1.0, "H": 3.0})";
    fwrite(text.data(), 1, text.size(), f);
    fclose(f);
  }
  const CliResult r = run_cli("analyze-mech --mech " + path + " --grid-step 0.02");
  REQUIRE(r.exit_code == 0);
  const Json report = Json::parse(r.output);
  CHECK(report["mechanism"]["kind"] == "linear");
  CHECK(report["results"]["modulus"]["m"].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("analyze-mech on the log mechanism emits a relative-gap table")
{
  const CliResult r = run_cli("analyze-mech --kind log --k 2 --low 7.3890560989306495 "
                              "--high 200 --grid-step 0.05");
  REQUIRE(r.exit_code == 0);
  const Json report = Json::parse(r.output);
  CHECK(report["results"]["monotone"] == true);
  CHECK(report["results"]["envelope_pass"] == true);
  CHECK(report["results"]["relative_gaps"].size() > 0);
}

TEST_CASE("convert reproduces the worked constants")
{
  CliResult r = run_cli("convert --rule quadratic --n 1 --grid-step 0.01");
  REQUIRE(r.exit_code == 0);
  Json report = Json::parse(r.output);
  CHECK(report["results"]["c0"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(report["results"]["c"].get<double>() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(report["results"]["mechanism_modulus_measured"].get<double>() ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report["results"]["mechanism_csv"].get<std::string>().rfind("alt,x1,a,p\n", 0) == 0);

  r = run_cli("convert --rule spherical --n 1 --grid-step 0.01");
  REQUIRE(r.exit_code == 0);
  report = Json::parse(r.output);
  CHECK(report["results"]["c0"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report["results"]["c"].get<double>() == doctest::Approx(2.0).epsilon(1e-12));

  r = run_cli("convert --rule logarithmic --n 1");
  CHECK(r.exit_code == 2);
  report = Json::parse(r.output);
  CHECK(report["error"]["type"] == "UnboundedScore");
}

TEST_CASE("run in expected and sample mode")
{
  Json doc = Json::parse(R"({
    "setting": {"kind": "single-item", "n": 2},
    "agents": [
      {"value": 0.9, "gamma": [0.0, 0.0]},
      {"value": 0.5, "gamma": [0.0, 0.0]}
    ],
    "ervcg": {"delta": 0.1},
    "analysis": {"epsilon": 0.05},
    "seed": 42
  })");
  const std::string path = "/tmp/ervcg_cli_run_scenario.json";
  {
    FILE* f = fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    const std::string text = doc.dump();
    fwrite(text.data(), 1, text.size(), f);
    fclose(f);
  }

  CliResult r = run_cli("run --scenario " + path + " --mode expected");
  REQUIRE(r.exit_code == 0);
  const Json expected = Json::parse(r.output);
  CHECK(expected["results"]["expected_base_utility"][0].get<double>() ==
        doctest::Approx(0.38025).epsilon(1e-12));

  r = run_cli("run --scenario " + path + " --mode sample --samples 20000 --seed 7");
  REQUIRE(r.exit_code == 0);
  const Json sampled = Json::parse(r.output);
  const double mean = sampled["results"]["agents"][0]["mean_base_utility"].get<double>();
  const double se = sampled["results"]["agents"][0]["std_error"].get<double>();
  CHECK(std::abs(mean - 0.38025) <= 3.0 * se);
  CHECK(sampled["results"]["seed"] == 7);

  r = run_cli("run --scenario " + path + " --mode sample");
  CHECK(r.exit_code == 2);  // samples required in sample mode
}

TEST_CASE("verify exit codes and deterministic report bodies")
{
  const std::string scenario = data("scenario_n2.json");
  CliResult a = run_cli("verify --scenario " + scenario + " --grid-step 0.02");
  REQUIRE(a.exit_code == 0);
  const Json ra = Json::parse(a.output);
  CHECK(ra["results"]["pass"] == true);
  CHECK(ra["results"]["hypothesis_ok"] == true);

  CliResult b = run_cli("verify --scenario " + scenario + " --grid-step 0.02");
  const Json rb = Json::parse(b.output);
  CHECK(ra["scenario"] == rb["scenario"]);
  CHECK(ra["results"] == rb["results"]);
  CHECK(ra["meta"]["scenario_hash"] == rb["meta"]["scenario_hash"]);

  // malformed scenario: field-path validation error, exit 2
  CliResult bad = run_cli("verify --scenario " + data("scenario_bad_gamma.json"));
  CHECK(bad.exit_code == 2);
  const Json rbad = Json::parse(bad.output);
  CHECK(rbad["error"]["type"] == "ValidationError");
  CHECK(rbad["error"]["message"].get<std::string>().find("agents[0].gamma") != std::string::npos);

  // oversized enumeration: budget arithmetic, exit 3
  CliResult budget = run_cli("verify --scenario " + data("scenario_budget.json"));
  CHECK(budget.exit_code == 3);
  CHECK(Json::parse(budget.output)["error"]["type"] == "BudgetError");
}

TEST_CASE("sweep emits one CSV row per value")
{
  const CliResult r = run_cli("sweep --scenario " + data("scenario_n2.json") +
                              " --param gamma --range 0:0.0014 --steps 3");
  REQUIRE(r.exit_code == 0);
  std::size_t rows = 0;
  for (char c : r.output) rows += c == '\n' ? 1 : 0;
  CHECK(rows == 4);  // header + 3 values
  CHECK(r.output.rfind("param,value,pass,hypothesis_ok,margin,eta_bound,welfare_gap,revenue_gap",
                       0) == 0);
}
