#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "geflow/cli.hpp"

using namespace geflow;

namespace {

std::string scenario_path(const std::string& name) { return std::string(GEFLOW_SCENARIO_DIR) + "/" + name + ".toml"; }

std::string temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("geflow_cli_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

std::string write_temp(const std::string& dir, const std::string& name, const std::string& text) {
  std::string p = dir + "/" + name;
  std::ofstream(p) << text;
  return p;
}

int run_cli(const std::string& args, const std::string& env = "") {
  std::string cmd = env + " " + GEFLOW_CLI_PATH + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) { return read_file(p); }

std::string message_of(const std::string& text) {
  try {
    parse_scenario_string(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("minimal config fills defaults") {
    Scenario s = parse_scenario_string("kind = \"torus-product\"\n");
    CHECK(s.grid.N == 16);
    CHECK(s.grid.m == 1);
    CHECK(s.kappa == 2.0);
    CHECK(s.flow.dt == 0.0);
    CHECK(s.seed == 1);
    MetricField f = build_field(s);
    FlowOptions o;
    o.T = 0.0;
    CHECK(run(f, build_base_metric(s), o).report.dt == doctest::Approx(default_dt(s.grid, BaseMetric::flat(1))));
    Scenario m2 = parse_scenario_string("kind = \"torus-m2\"\n");
    CHECK(m2.grid.m == 2);
    CHECK(m2.grid.N == 8);
  }

  TEST_CASE("validation errors name the field") {
    std::string bad = "kind = \"torus-coupled\"\n[[mode]]\namplitude = 6.0\nfreq = [0, 0, 1, 0]\n";
    Scenario s = parse_scenario_string(bad);
    CHECK_THROWS_WITH_AS(build_field(s), doctest::Contains("non-admissible initial field"), ConfigError);
    CHECK(message_of("kind = \"projective-bundle\"\n[bundle]\nrank = 3\n").find("rank 2 only") != std::string::npos);
    CHECK(message_of("kind = \"torus-product\"\n[tolerances]\nhe = 0.0\n").find("tolerances.he") != std::string::npos);
    CHECK(message_of("kind = \"torus-product\"\n[grid]\nN = 9\n").find("N must be even") != std::string::npos);
    CHECK(message_of("kind = \"torus-product\"\n[[mode]]\namplitude = 0.1\nfreq = [1, 0, 1, 0]\n").find("mode[0].freq") !=
          std::string::npos);
    CHECK(message_of("kind = \"torus-sphere\"\n").find("kind") != std::string::npos);
    CHECK(message_of("seed = 1\n").find("kind: missing") != std::string::npos);
    CHECK(message_of("kind = \"torus-product\"\n[grid]\nN = \"16\"\n").find("grid.N: expected an integer (line 3)") !=
          std::string::npos);
  }

  TEST_CASE("strict keys and parse errors carry line numbers") {
    std::string unknown = message_of("kind = \"torus-product\"\n\n[flow]\nT = 1.0\nsteps = 4\n");
    CHECK(unknown.find("unknown key 'steps'") != std::string::npos);
    CHECK(unknown.find("line 5") != std::string::npos);
    CHECK(message_of("kind = \"torus-product\"\ncolour = 1\n").find("unknown key 'colour'") != std::string::npos);
    CHECK(message_of("kind = \"torus-product\"\n[[mode]]\namplitude = 0.1\nfreq = [0, 0, 1, 0]\nwidth = 2\n")
              .find("unknown key 'width' in [[mode]] (line 5)") != std::string::npos);
    std::string syntax = message_of("kind = \"torus-product\"\n[grid\nN = 16\n");
    CHECK(syntax.find(":2: parse error") != std::string::npos);
  }

  TEST_CASE("shipped scenarios parse and build") {
    for (const char* n : {"torus-product", "torus-coupled", "torus-m2", "geodesic-einstein"}) {
      Scenario s = parse_scenario(scenario_path(n));
      CHECK(s.name == n);
      CHECK_NOTHROW(build_field(s));
    }
    Scenario pb = parse_scenario(scenario_path("projective-bundle"));
    CHECK_NOTHROW(build_bundle(pb));
    CHECK_THROWS_AS(build_field(pb), ConfigError);
    CHECK_THROWS_AS(parse_scenario("/nonexistent/geflow.toml"), ConfigError);
  }

  TEST_CASE("long-format report") {
    std::string csv = "t,L,defect\n0,1.5,2\n0.5,1.25,1\n";
    CHECK(cli::long_format(csv, "m.csv") == "t,series,value\n0,L,1.5\n0,defect,2\n0.5,L,1.25\n0.5,defect,1\n");
    CHECK_THROWS_AS(cli::long_format("t,L,defect\n0,1.5,2\n0.5,1.2", "m.csv"), FormatError);
    CHECK_THROWS_AS(cli::long_format("t,L,defect\n0,1.5\n", "m.csv"), FormatError);
    CHECK_THROWS_AS(cli::long_format("t,L\n0,x\n", "m.csv"), FormatError);
    CHECK_THROWS_AS(cli::long_format("t,L\n", "m.csv"), FormatError);
    CHECK_THROWS_AS(cli::long_format("", "m.csv"), FormatError);
  }

  TEST_CASE("flow on geodesic-Einstein data gives constant monitor columns") {
    std::string out = temp_dir("ge");
    CHECK(run_cli("flow --config " + scenario_path("geodesic-einstein") + " --out " + out) == 0);
    std::istringstream is(slurp(out + "/monitor.csv"));
    std::string line, first;
    std::getline(is, line);
    CHECK(line == "t,L,defect,sup_trc_minus_lambda,sup_phi_drift,min_fiber_eig,heat_residual");
    int rows = 0;
    while (std::getline(is, line)) {
      std::string rest = line.substr(line.find(','));
      if (rows == 0) first = rest;
      CHECK(rest == first);
      ++rows;
    }
    CHECK(rows > 2);
    MetricField a = load_field(out + "/initial.gefld"), b = load_field(out + "/final.gefld");
    CHECK(a.psi == b.psi);
    auto j = nlohmann::json::parse(slurp(out + "/flow.json"));
    CHECK(j["violations"].empty());

    CHECK(run_cli("report --input " + out + "/monitor.csv --out " + out) == 0);
    std::string text = slurp(out + "/monitor.csv");
    write_temp(out, "cut.csv", text.substr(0, text.size() / 2));
    CHECK(run_cli("report --input " + out + "/cut.csv --out " + out) == 2);
  }

  TEST_CASE("identical configs give bit-identical output across worker counts") {
    std::string a = temp_dir("det_a"), b = temp_dir("det_b");
    std::string cfg = write_temp(a, "c.toml",
                                 "kind = \"torus-coupled\"\nseed = 3\n[weight]\na = [0.5]\n[flow]\ndt = 0.001\nT = 0.02\n"
                                 "[[mode]]\namplitude = 0.2\nfreq = [1, 0, 1, 0]\n");
    CHECK(run_cli("flow --config " + cfg + " --out " + a, "GEFLOW_THREADS=1") == 0);
    CHECK(run_cli("flow --config " + cfg + " --out " + b, "GEFLOW_THREADS=3") == 0);
    CHECK(slurp(a + "/monitor.csv") == slurp(b + "/monitor.csv"));
    CHECK(slurp(a + "/final.gefld") == slurp(b + "/final.gefld"));
  }

  TEST_CASE("exit codes") {
    std::string d = temp_dir("codes");
    std::string unknown = write_temp(d, "u.toml", "kind = \"torus-product\"\n[grid]\nN = 16\nfoo = 1\n");
    CHECK(run_cli("flow --config " + unknown + " --out " + d) == 2);
    CHECK(run_cli("hym --config " + scenario_path("torus-product") + " --out " + d) == 2);
    CHECK(run_cli("flow --out " + d) == 2);
    CHECK(run_cli("verify --suite nothing") == 2);
    std::string runaway = write_temp(d, "r.toml",
                                     "kind = \"torus-coupled\"\n[flow]\ndt = 1000.0\nT = 1000.0\n"
                                     "[[mode]]\namplitude = 0.2\nfreq = [1, 0, 1, 0]\n");
    CHECK(run_cli("flow --config " + runaway + " --out " + d) == 3);
    std::string stall = write_temp(d, "s.toml",
                                   "kind = \"torus-coupled\"\n[flow]\ndt = 1e7\nT = 1e7\n"
                                   "[[mode]]\namplitude = 0.2\nfreq = [1, 0, 1, 0]\n[[mode]]\namplitude = 0.05\n"
                                   "freq = [0, 1, 1, 1]\nphase = 0.7\n[weight]\na = [0.5]\n");
    CHECK(run_cli("flow --config " + stall + " --out " + d) == 4);
  }

  TEST_CASE("module reports") {
    std::string d = temp_dir("reports");
    CHECK(run_cli("classes --config " + scenario_path("torus-m2") + " --out " + d) == 0);
    std::string text = slurp(d + "/classes.json");
    auto j = nlohmann::json::parse(text);
    for (const char* k : {"S0", "integrals", "gap_minima", "verdict"}) CHECK(j.contains(k));
    CHECK(j["verdict"] == "positive");
    CHECK(j["integrals"]["C2"].get<double>() > 0);
    CHECK(text == j.dump(2) + "\n");
    CHECK(text.find("\"C2\"") < text.find("\"S1\""));

    CHECK(run_cli("classes --config " + scenario_path("projective-bundle") + " --out " + d) == 0);
    CHECK(nlohmann::json::parse(slurp(d + "/classes.json"))["verdict"] == "semistable");

    CHECK(run_cli("appendix --config " + scenario_path("geodesic-einstein") + " --out " + d) == 0);
    auto a = nlohmann::json::parse(slurp(d + "/appendix.json"));
    CHECK(a["verdict"] == "hermitian-einstein");
    for (const char* k : {"worst_mode", "operator_sup", "cutoff"}) CHECK(a.contains(k));

    CHECK(run_cli("verify --suite appendix --out " + d) == 0);
    auto v = nlohmann::json::parse(slurp(d + "/verify-appendix.json"));
    CHECK(v["pass"] == true);
    CHECK(v["checks"].size() == 1);
  }

  TEST_CASE("bundle flow report") {
    std::string d = temp_dir("hym");
    std::string cfg = write_temp(d, "h.toml",
                                 "kind = \"projective-bundle\"\n[flow]\nT = 1.0\n[bundle]\ndegrees = [0, 0]\n"
                                 "[[mode]]\nentry = 0\namplitude = 0.05\nfreq = [1, 0]\n");
    CHECK(run_cli("hym --config " + cfg + " --out " + d) == 0);
    auto j = nlohmann::json::parse(slurp(d + "/hym.json"));
    CHECK(j["final"]["sup_lambda_F"].get<double>() < j["initial_sup_lambda_F"].get<double>());
    HermitianBundleState h = load_bundle(d + "/bundle_final.gefld");
    CHECK(h.N == 16);
  }
}
