#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "verify.hpp"

namespace geflow::cli {

inline constexpr int kExitConfig = 2;
inline constexpr int kExitContract = 3;
inline constexpr int kExitStalled = 4;

inline std::string prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

inline std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

inline void write_json(const std::string& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

struct Outcome {
  nlohmann::json report;
  int exit_code = 0;
};

inline Outcome flow_command(const Scenario& sc, const std::string& out) {
  MetricField phi0 = build_field(sc);
  BaseMetric w = build_base_metric(sc);
  FlowOptions o;
  o.T = sc.flow.T;
  o.dt = sc.flow.dt;
  o.method = sc.flow.method;
  o.snapshot_every = sc.flow.snapshot_every;
  prepare_dir(out);
  dump_field(phi0, join(out, "initial.gefld"));
  FlowResult r = run(phi0, w, o);
  std::ofstream csv(join(out, "monitor.csv"));
  write_csv(r.report, csv);
  csv.close();
  dump_field(r.final_state.phi, join(out, "final.gefld"));
  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& s : r.snapshots) {
    std::string name = "snapshot_" + std::to_string(s.steps) + ".gefld";
    dump_field(s.phi, join(out, name));
    snaps.push_back({{"step", s.steps}, {"t", s.t}, {"file", name}});
  }
  nlohmann::json j = to_json(r.report);
  j["scenario"] = sc.name;
  j["method"] = to_string(sc.flow.method);
  j["snapshots"] = snaps;
  write_json(join(out, "flow.json"), j);
  return {j, r.report.hard_violations() > 0 || r.report.aborted ? kExitContract : 0};
}

inline double wedge_with(const HMat& a, const BaseMetric& w, std::size_t b) {
  return detail::wedge11(a, w.at(w.constant ? 0 : b));
}

// Integral over the base of a (1,1)-form paired with omega^{m-1}.
inline double integrate_11(const GridSpec& g, const FormField& F, const BaseMetric& w) {
  if (F.degree == g.m) return integrate_top(g, F.top);
  RealField top(F.c11.size());
  for (std::size_t b = 0; b < top.size(); ++b) top[b] = wedge_with(F.c11[b], w, b);
  return integrate_top(g, top);
}

inline nlohmann::json projective_classes(const Scenario& sc) {
  SplitBundle E = split_bundle(sc);
  auto specs = line_summand_specs(E);
  Verdict v = semistability_verdict(specs[0], specs);
  nlohmann::json lambdas = nlohmann::json::array();
  for (const auto& [name, l] : v.lambdas) lambdas.push_back({{"name", name}, {"value", to_string(l)}});
  HermitianBundleState h = build_bundle(sc);
  std::vector<HJet> J = hjets(h);
  RealField s0 = fiber_S0(J);
  SegreCheck seg = segre_crosscheck(h);
  return {{"scenario", sc.name},
          {"S0", pairwise_sum(s0) / static_cast<double>(s0.size())},
          {"integrals", {{"S1", seg.numeric}}},
          {"gap_minima", nlohmann::json::object()},
          {"lambda_over_2pi", lambdas},
          {"verdict", v.semistable ? "semistable" : "not-semistable"},
          {"destabilizing", v.destabilizing}};
}

inline Outcome classes_command(const Scenario& sc, const std::string& out) {
  nlohmann::json j;
  if (!is_torus(sc)) {
    j = projective_classes(sc);
  } else {
    MetricField phi = build_field(sc);
    BaseMetric w = build_base_metric(sc);
    const GridSpec& g = phi.grid;
    ClassLadder L = s_forms(phi);
    CForms C = c_forms(L);
    nlohmann::json integrals = {{"S1", integrate_11(g, L.S1, w)}, {"C1", integrate_11(g, C.C1, w)}};
    nlohmann::json gaps = nlohmann::json::object();
    nlohmann::json pos = {{"S1", positivity_check(L.S1, 1000, sc.seed).min_value}};
    bool positive = pos["S1"].get<double>() > 0;
    bool gaps_ok = true;
    if (g.m == 2) {
      integrals["S2"] = integrate_top(g, L.S2.top);
      integrals["C2"] = integrate_top(g, C.C2.top);
      pos["S2"] = positivity_check(L.S2, 1000, sc.seed).min_value;
      positive = positive && pos["S2"].get<double>() > 0;
      double lam = lambda_constant(phi, w);
      GapField a = s2_bound_gap(g, L, w, lam), b = c2_bound_gap(g, L);
      gaps = {{"S2_bound", a.min}, {"C2_bound", b.min}};
      integrals["S2_bound_gap"] = a.integral;
      integrals["C2_bound_gap"] = b.integral;
      gaps_ok = a.min >= -sc.tol.contract && b.min >= -sc.tol.contract;
    }
    std::string verdict = !positive ? "not-positive" : gaps_ok ? "positive" : "gap-violated";
    bool integral = std::abs(L.S0 - std::round(L.S0)) <= 1e-6 && std::round(L.S0) > 0;
    j = {{"scenario", sc.name}, {"S0", L.S0}, {"S0_spread", L.S0_spread}, {"S0_integral", integral}, {"integrals", integrals},
         {"gap_minima", gaps}, {"positivity_minima", pos}, {"verdict", verdict}};
  }
  prepare_dir(out);
  write_json(join(out, "classes.json"), j);
  int code = j["verdict"] == "gap-violated" ? kExitContract : 0;
  return {j, code};
}

inline Outcome hym_command(const Scenario& sc, const std::string& out) {
  HermitianBundleState h0 = build_bundle(sc);
  BaseMetric w = build_base_metric(sc);
  HymResult r = run_hym(h0, w, sc.flow.T, sc.flow.dt, std::nullopt, static_cast<int>(sc.flow.record_every));
  prepare_dir(out);
  dump_bundle(h0, join(out, "bundle_initial.gefld"));
  dump_bundle(r.final_state.h, join(out, "bundle_final.gefld"));
  std::ofstream csv(join(out, "hym.csv"));
  csv << "t,sup_lambda_F,log_det_change,trace_integral\n";
  for (const auto& row : r.rows)
    csv << format_number(row.t) << ',' << format_number(row.sup_lambda_F) << ',' << format_number(row.log_det_change)
        << ',' << format_number(row.trace_integral) << '\n';
  csv.close();
  std::vector<HJet> J = hjets(r.final_state.h);
  RealField s0 = fiber_S0(J);
  nlohmann::json j = {{"scenario", sc.name},
                      {"lambda", r.lambda},
                      {"steps", r.final_state.steps},
                      {"dt", r.final_state.dt},
                      {"final", {{"t", r.rows.back().t}, {"sup_lambda_F", r.rows.back().sup_lambda_F}}},
                      {"initial_sup_lambda_F", r.rows.front().sup_lambda_F},
                      {"fiber_S0", {{"min", min_of(s0)}, {"max", max_of(s0)}}},
                      {"reduction_residual", reduction_identity_residual(J, w, r.lambda)}};
  write_json(join(out, "hym.json"), j);
  return {j, 0};
}

inline Outcome appendix_command(const Scenario& sc, const std::string& out) {
  MetricField phi = build_field(sc);
  BaseMetric w = build_base_metric(sc);
  HeVerdict v = he_equivalence_test(phi, w, sc.tol.he);
  nlohmann::json j = to_json(v);
  j["scenario"] = sc.name;
  try {
    NormalizeResult r = normalize(phi, w, sc.tol.normalize);
    RealField T = trace_c(r.phi, w);
    j["normalize"] = {{"applied", true}, {"mean", r.mean}, {"trace_spread", max_of(T) - min_of(T)}};
  } catch (const ContractViolation& e) {
    j["normalize"] = {{"applied", false}, {"reason", e.what()}};
  }
  prepare_dir(out);
  write_json(join(out, "appendix.json"), j);
  return {j, 0};
}

inline Outcome verify_command(const std::string& suite, const VerifyConfig& cfg, const std::string& out,
                              std::ostream& log) {
  std::vector<std::string> suites = suite == "all" ? suite_names() : std::vector<std::string>{suite};
  std::vector<Check> checks;
  for (const auto& s : suites)
    for (auto& c : run_suite(s, cfg)) {
      log << format_check(c) << std::endl;
      checks.push_back(std::move(c));
    }
  nlohmann::json arr = nlohmann::json::array();
  bool ok = true;
  for (const auto& c : checks) {
    arr.push_back(to_json(c));
    ok = ok && c.pass;
  }
  nlohmann::json j = {{"suite", suite}, {"seed", cfg.seed}, {"checks", arr}, {"pass", ok}};
  prepare_dir(out);
  write_json(join(out, "verify-" + suite + ".json"), j);
  return {j, ok ? 0 : kExitContract};
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

// Monitor CSV to long format (t, series, value); rejects truncated or malformed input.
inline std::string long_format(const std::string& text, const std::string& source) {
  if (text.empty()) throw FormatError(source + ": empty file");
  if (text.back() != '\n') throw FormatError(source + ": truncated (missing final newline)");
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  std::vector<std::string> head = split_csv(line);
  if (head.size() < 2 || head[0] != "t") throw FormatError(source + ":1: header must start with t");
  std::ostringstream os;
  os << "t,series,value\n";
  long rows = 0, lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    std::vector<std::string> cells = split_csv(line);
    if (cells.size() != head.size())
      throw FormatError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(head.size()) +
                        " fields, found " + std::to_string(cells.size()));
    for (const auto& c : cells) {
      std::size_t used = 0;
      try {
        std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (c.empty() || used != c.size())
        throw FormatError(source + ":" + std::to_string(lineno) + ": '" + c + "' is not a number");
    }
    for (std::size_t k = 1; k < cells.size(); ++k) os << cells[0] << ',' << head[k] << ',' << cells[k] << '\n';
    ++rows;
  }
  if (rows == 0) throw FormatError(source + ": no data rows");
  return os.str();
}

inline Outcome report_command(const std::string& input, const std::string& out) {
  std::string text = read_file(input);
  std::string result = long_format(text, input);
  prepare_dir(out);
  std::string path = join(out, "report.csv");
  write_file(path, result);
  return {{{"input", input}, {"output", path}}, 0};
}

}  // namespace geflow::cli
