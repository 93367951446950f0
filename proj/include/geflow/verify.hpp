#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "classes.hpp"
#include "flow.hpp"
#include "hym.hpp"
#include "quasibundle.hpp"
#include "scenario.hpp"

namespace geflow {

struct Check {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  nlohmann::json values = nlohmann::json::object();
  double seconds = 0;
};

struct VerifyConfig {
  std::uint64_t seed = 1;
  std::optional<Scenario> coupled;
};

inline nlohmann::json to_json(const Check& c) {
  return {{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}, {"values", c.values},
          {"seconds", c.seconds}};
}

namespace verify {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::vector<Mode> random_modes(std::uint64_t seed, int dims, int count, double amp) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ph(0.0, kTwoPi);
  std::uniform_int_distribution<int> k(-2, 2);
  std::vector<Mode> out;
  for (int c = 0; c < count; ++c) {
    Mode md;
    md.amplitude = amp * u(rng);
    for (int d = 0; d < dims; ++d) md.freq.push_back(k(rng));
    md.phase = ph(rng);
    out.push_back(md);
  }
  return out;
}

inline MetricField torus_field(int m, int N, DiffScheme s, const HMat& A, const std::vector<Mode>& modes) {
  MetricField f = MetricField::reference(GridSpec{m, 1, N, FiberKind::Torus}, 2.0, s);
  f.A = A;
  f.psi = sample_modes(f.grid.total(), modes);
  return f;
}

inline HMat diag2(double a, double b) {
  HMat h = HMat::zero(2);
  h(0, 0) = a;
  h(1, 1) = b;
  return h;
}

inline MetricField coupled_field() {
  return torus_field(1, 16, DiffScheme::FD4, HMat::identity(1, 0.5),
                     {{0.2, {1, 0, 1, 0}, 0.0}, {0.05, {0, 1, 1, 1}, 0.7}});
}

inline MetricField product_heat(double eps) {
  MetricField f = MetricField::reference(GridSpec{1, 1, 16, FiberKind::Torus});
  f.p = sample_modes(f.grid.base(), {{eps, {1, 0}, 0.0}});
  return f;
}

// Geodesic-Einstein product over the flat four-torus with a fiber-only perturbation.
inline MetricField ge_m2(const HMat& A, int N = 8) {
  return torus_field(2, N, DiffScheme::Spectral, A, {{0.2, {0, 0, 0, 0, 1, 0}, 0.3}, {0.1, {0, 0, 0, 0, 1, 1}, 1.1}});
}

// Fiber-only psi plus a base function: tr c is a base pullback.
inline MetricField weak_ge(std::uint64_t seed) {
  MetricField f = MetricField::reference(GridSpec{1, 1, 16, FiberKind::Torus});
  f.A = HMat::identity(1, 0.3);
  auto fw = random_modes(seed, 4, 3, 0.05);
  for (auto& md : fw) md.freq[0] = md.freq[1] = 0;
  f.psi = sample_modes(f.grid.total(), fw);
  f.p = sample_modes(f.grid.base(), random_modes(seed + 100, 2, 3, 0.05));
  return f;
}

inline HermitianBundleState generic_bundle(int N, DiffScheme s) {
  Lattice lat{2, N};
  HermitianBundleState st = HermitianBundleState::constant(N, Mat2::Identity(), s);
  for (std::size_t b = 0; b < st.h.size(); ++b) {
    double x = lat.x(b, 0), y = lat.x(b, 1);
    st.h[b](0, 0) = std::exp(0.2 * std::cos(x) + 0.1 * std::sin(y));
    st.h[b](1, 1) = 1.5 + 0.3 * std::sin(x + y);
    st.h[b](0, 1) = cplx(0.2 * std::cos(y), 0.15 * std::sin(x));
    st.h[b](1, 0) = std::conj(st.h[b](0, 1));
  }
  return st;
}

// exp(a |z|^2) U, projectively flat with Lambda F = a g^{-1} I.
inline HJet projectively_flat_jet(double a, const Mat2& U, cplx z) {
  HJet J;
  J.H = std::exp(a * std::norm(z)) * U;
  J.Hz = a * std::conj(z) * J.H;
  J.Hzb = a * z * J.H;
  J.Hzzb = (a + a * a * std::norm(z)) * J.H;
  return J;
}

template <class F>
Check timed(int id, const std::string& name, F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  Check c = f();
  c.id = id;
  c.name = name;
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

inline Check algebraic_identities(std::uint64_t seed) {
  Check c;
  double dec = 0, mix = 0, form = 0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (std::uint64_t s = 0; s < 50; ++s) {
    int m = s % 5 == 0 ? 2 : 1;
    MetricField f = torus_field(m, 8, DiffScheme::FD4, HMat::identity(m, 0.5), random_modes(seed * 1000 + s, 2 * m + 2, 4, 0.08));
    BaseMetric w = m == 1 ? BaseMetric::flat(1, 0.7) : BaseMetric::diagonal({0.7, 1.3});
    JetField J = admissible_jets(f);
    dec = std::max(dec, decomposition_residual(J));
    mix = std::max(mix, mixed_identity(f.grid, J, w).residual);
    std::vector<HMat> alpha;
    if (m == 2) {
      alpha = geodesic_curvature(J).c;
    } else {
      for (int k = 0; k < 200; ++k) {
        HMat h = diag2(n(rng), n(rng));
        h(0, 1) = cplx(n(rng), n(rng));
        h(1, 0) = std::conj(h(0, 1));
        alpha.push_back(h);
      }
    }
    form = std::max(form, form_identity_residual(alpha, BaseMetric::diagonal({0.7, 1.3})));
  }
  c.pass = dec <= 1e-10 && mix <= 1e-10 && form <= 1e-10;
  c.values = {{"decomposition", dec}, {"mixed", mix}, {"form", form}};
  c.detail = "decomposition " + num(dec) + ", mixed " + num(mix) + ", form " + num(form) + " (bound 1e-10, 50 fields)";
  return c;
}

struct CoupledRun {
  FlowResult result;
  double dt = 0;
};

inline CoupledRun coupled_run(const VerifyConfig& cfg) {
  MetricField f = coupled_field();
  BaseMetric w = BaseMetric::flat(1);
  FlowOptions o;
  o.dt = 1e-3;
  o.T = 0.5;
  if (cfg.coupled) {
    f = build_field(*cfg.coupled);
    w = build_base_metric(*cfg.coupled);
    o.dt = cfg.coupled->flow.dt;
    o.T = cfg.coupled->flow.T;
    o.method = cfg.coupled->flow.method;
  }
  CoupledRun r{run(f, w, o), 0};
  r.dt = r.result.report.dt;
  return r;
}

inline Check monotonicity(const CoupledRun& run) {
  Check c;
  const MonitorReport& rep = run.result.report;
  std::size_t soft = 0;
  for (const auto& v : rep.violations) soft += v.monitor == "L_monotone" || v.monitor == "defect_monotone";
  double worst = -1e300;
  for (std::size_t k = 1; k < rep.rows.size(); ++k) worst = std::max(worst, rep.rows[k].L - rep.rows[k - 1].L);
  c.pass = soft == 0 && rep.hard_violations() == 0 && !rep.aborted && rep.rows.size() >= 2;
  c.values = {{"steps", rep.rows.size() - 1}, {"monotone_violations", soft}, {"hard_violations", rep.hard_violations()},
              {"max_L_increase", worst}, {"slack", monotone_slack(run.dt)}};
  c.detail = std::to_string(rep.rows.size() - 1) + " steps, " + std::to_string(soft) + " monotonicity violations, " +
             std::to_string(rep.hard_violations()) + " hard, max L increment " + num(worst);
  return c;
}

inline Check flow_bounds(const CoupledRun& run) {
  Check c;
  const MonitorReport& rep = run.result.report;
  double tr = 0, drift = 0;
  bool ok = true;
  for (const auto& r : rep.rows) {
    tr = std::max(tr, r.sup_trc / rep.C);
    if (r.t > 0) drift = std::max(drift, r.sup_phi_drift / (rep.C * r.t));
    ok = ok && r.sup_trc <= rep.C && r.sup_phi_drift <= rep.C * r.t + 1e-12;
  }
  c.pass = ok;
  c.values = {{"C", rep.C}, {"trace_ratio", tr}, {"drift_ratio", drift}};
  c.detail = "C = " + num(rep.C) + ", max sup|tr c|/C " + num(tr) + ", max drift/(C t) " + num(drift);
  return c;
}

inline Check defect_decay() {
  Check c;
  BaseMetric w = BaseMetric::flat(1);
  FlowOptions o;
  o.T = 40.0;
  o.monitors = false;
  o.snapshot_every = 10;
  o.lambda = 0.0;
  FlowResult first = run(product_heat(0.1), w, o);
  std::vector<double> t, a;
  for (const auto& s : first.snapshots) {
    t.push_back(s.t);
    a.push_back(mode_amplitude(s.phi, {1, 0, 0, 0}));
  }
  double rate = fit_decay_rate(t, a);
  double at40 = ge_defect(first.final_state.phi, w, 0.0);
  FlowOptions more = o;
  more.T = 20.0;
  FlowResult second = run(first.final_state.phi, w, more);
  double reached = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : second.snapshots)
    if (ge_defect(s.phi, w, 0.0) < 1e-6) {
      reached = 40.0 + s.t;
      break;
    }
  bool rate_ok = std::abs(rate - 0.25) <= 0.005;
  bool defect_ok = at40 < 1e-6;
  c.pass = rate_ok && defect_ok;
  c.values = {{"rate", rate}, {"defect_T40", at40}, {"T_below_1e-6", reached}};
  c.detail = "rate " + num(rate) + (rate_ok ? " (ok)" : " (out of 0.25 +- 0.005)") + ", defect at T = 40 " + num(at40) +
             (defect_ok ? "" : " > 1e-6, first below 1e-6 at T = " + num(reached));
  return c;
}

inline std::string csv_of(const FlowResult& r) {
  std::ostringstream os;
  write_csv(r.report, os);
  return os.str();
}

inline Check consistency() {
  Check c;
  BaseMetric w = BaseMetric::flat(1);
  UniquenessResult u = uniqueness_probe(product_heat(0.1), w, 1.0);
  FlowOptions o;
  o.dt = 1e-3;
  o.T = 0.05;
  int saved = thread_override();
  thread_override() = 1;
  std::string a = csv_of(run(coupled_field(), w, o));
  thread_override() = 3;
  std::string b = csv_of(run(coupled_field(), w, o));
  thread_override() = saved;
  bool same = a == b;
  c.pass = u.ratio >= 1.7 && u.ratio <= 2.3 && same;
  c.values = {{"ratio", u.ratio}, {"bit_identical", same}};
  c.detail = "dt/(dt/2) distance ratio " + num(u.ratio) + ", repeated runs " + (same ? "bit-identical" : "differ");
  return c;
}

inline Check lambda_topological(std::uint64_t seed) {
  Check c;
  BaseMetric w = BaseMetric::flat(1);
  double lo = 1e300, hi = -1e300, mean = 0;
  for (std::uint64_t k = 0; k < 5; ++k) {
    MetricField f = torus_field(1, 32, DiffScheme::FD4, HMat::identity(1, 0.5), random_modes(seed * 77 + k, 4, 4, 0.05));
    double l = lambda_constant(f, w);
    lo = std::min(lo, l);
    hi = std::max(hi, l);
    mean += l / 5;
  }
  double spread = (hi - lo) / std::abs(mean);
  MetricField prod = MetricField::reference(GridSpec{1, 1, 32, FiberKind::Torus});
  auto fw = random_modes(seed + 5, 4, 3, 0.05);
  for (auto& md : fw) md.freq[0] = md.freq[1] = 0;
  prod.psi = sample_modes(prod.grid.total(), fw);
  prod.p = sample_modes(prod.grid.base(), random_modes(seed + 6, 2, 3, 0.1));
  double l0 = lambda_constant(prod, w);
  c.pass = spread <= 1e-6 && std::abs(l0) <= 1e-9;
  c.values = {{"lambda_mean", mean}, {"relative_spread", spread}, {"product_lambda", l0}};
  c.detail = "lambda " + num(mean) + ", relative spread " + num(spread) + " over 5 metrics at N = 32, product lambda " + num(l0);
  return c;
}

inline Check first_variation() {
  Check c;
  BaseMetric w = BaseMetric::flat(1);
  MetricField phi0 = torus_field(1, 16, DiffScheme::FD4, HMat::identity(1, 0.5), {{0.2, {1, 0, 1, 0}, 0.0}});
  MetricField psi = torus_field(1, 16, DiffScheme::FD4, HMat::identity(1, 0.5), {{0.1, {0, 1, 0, 1}, 0.3}});
  std::vector<std::vector<Mode>> dirs{{{1.0, {1, 0, 0, 0}, 0.0}}, {{0.5, {1, 0, 1, 0}, 0.4}}, {{0.3, {0, 1, 1, 1}, 1.0}}};
  double worst = 0;
  nlohmann::json errs = nlohmann::json::array();
  for (const auto& dir : dirs) {
    RealField dot = sample_modes(phi0.grid.total(), dir);
    FieldPath path = [&](double t) {
      MetricField f = phi0;
      for (std::size_t i = 0; i < f.psi.size(); ++i) f.psi[i] += t * dot[i];
      return f;
    };
    VariationResult r = first_variation_check(path, dot, psi, w, 0.05);
    worst = std::max(worst, r.rel_error);
    errs.push_back(r.rel_error);
  }
  c.pass = worst <= 1e-4;
  c.values = {{"relative_errors", errs}};
  c.detail = "max relative error " + num(worst) + " over 3 paths (bound 1e-4)";
  return c;
}

inline Check class_inequalities() {
  Check c;
  BaseMetric w = BaseMetric::flat(2);
  auto gaps = [&](int N) {
    MetricField f = ge_m2(diag2(1.5, 0.5), N);
    ClassLadder L = s_forms(f);
    double lam = lambda_constant(f, w);
    return std::make_tuple(s2_bound_gap(f.grid, L, w, lam), c2_bound_gap(f.grid, L), integrate_top(f.grid, c_forms(L).C2.top));
  };
  auto [gs, gc, c2] = gaps(8);
  auto [rs, rc, rc2] = gaps(10);
  auto qerr = [](double a, double b) { return std::max(std::abs(a - b), 1e-15 * std::abs(a)); };
  double es = qerr(gs.integral, rs.integral), ec = qerr(gc.integral, rc.integral), ec2 = qerr(c2, rc2);

  MetricField eq = ge_m2(HMat::identity(2));
  GapField s2gap = s2_bound_gap(eq.grid, s_forms(eq), w, lambda_constant(eq, w));
  double eqs = 0, eqc = 0;
  for (double v : s2gap.gap) eqs = std::max(eqs, std::abs(v));
  for (double v : gc.gap) eqc = std::max(eqc, std::abs(v));

  bool pointwise = gs.min >= -1e-8 && gc.min >= -1e-8;
  bool equality = eqs <= 1e-8 && eqc <= 1e-8;
  bool integrated = gs.integral > 10 * es && gc.integral >= -10 * ec && c2 > 10 * ec2;
  c.pass = pointwise && equality && integrated;
  c.values = {{"s2_gap_min", gs.min},       {"c2_gap_min", gc.min},         {"s2_equality", eqs},
              {"c2_equality", eqc},         {"s2_gap_integral", gs.integral}, {"s2_gap_quad_error", es},
              {"c2_gap_integral", gc.integral}, {"c2_gap_quad_error", ec}, {"C2_integral", c2},
              {"C2_quad_error", ec2}};
  c.detail = "min gaps " + num(gs.min) + ", " + num(gc.min) + "; equality " + num(eqs) + ", " + num(eqc) +
             "; integrals " + num(gs.integral) + " (err " + num(es) + "), " + num(gc.integral) + " (err " + num(ec) +
             "); int C2 " + num(c2) + " (err " + num(ec2) + ")";
  return c;
}

inline Check positivity(std::uint64_t seed) {
  Check c;
  MetricField f = torus_field(1, 16, DiffScheme::Spectral, HMat::identity(1, 0.5), random_modes(seed + 3, 4, 5, 0.04));
  double s1 = positivity_check(s_forms(f).S1, 1000, seed).min_value;
  ClassLadder G = s_forms(ge_m2(diag2(1.5, 0.5)));
  double t1 = positivity_check(G.S1, 1000, seed).min_value;
  double t2 = positivity_check(G.S2, 1000, seed).min_value;
  FormField planted = G.S1;
  for (std::size_t b = 0; b < planted.c11.size() / 4; ++b) planted.c11[b](0, 0) = -0.3;
  double p = positivity_check(planted, 1000, seed).min_value;
  c.pass = s1 > 0 && t1 > 0 && t2 > 0 && p < 0;
  c.values = {{"S1_m1", s1}, {"S1_m2", t1}, {"S2_m2", t2}, {"planted", p}};
  c.detail = "min S1 (m = 1) " + num(s1) + ", S1 (m = 2) " + num(t1) + ", S2 " + num(t2) + ", planted control " + num(p);
  return c;
}

inline Check hym_bridge() {
  Check c;
  BaseMetric w = BaseMetric::flat(1);
  double red = reduction_identity_residual(hjets(generic_bundle(16, DiffScheme::Spectral)), w, 0.0, 20, 5);
  HermitianBundleState st = generic_bundle(16, DiffScheme::FD4);
  double ea = equivalence_check(st, w, 0.2, 0.02).residual, eb = equivalence_check(st, w, 0.2, 0.01).residual;
  double ratio = ea / eb;
  Mat2 U;
  U << 2.0, cplx(0.3, 0.1), cplx(0.3, -0.1), 1.0;
  double a = 0.35, ginv = 0.5, he = 0;
  for (int k = 0; k < 20; ++k) {
    HJet J = projectively_flat_jet(a, U, cplx(0.1 * k, -0.05 * k));
    for (std::size_t n = 0; n < sphere().size(); ++n)
      he = std::max(he, std::abs(ginv * curvature_of(induced_jet(J, 0, sphere().w[n]))(0, 0).real() - a * ginv));
  }
  double s0 = 0;
  for (double v : fiber_S0(hjets(st))) s0 = std::max(s0, std::abs(v - 1));
  c.pass = red <= 1e-9 && ratio >= 1.7 && ratio <= 2.3 && he <= 1e-8 && s0 <= 1e-8;
  c.values = {{"reduction_residual", red}, {"equivalence_ratio", ratio}, {"he_trace_deviation", he}, {"fiber_S0_error", s0}};
  c.detail = "reduction " + num(red) + ", equivalence ratio " + num(ratio) + ", HE trace deviation " + num(he) +
             ", fiber S0 error " + num(s0);
  return c;
}

inline Check semistability() {
  Check c;
  struct Case {
    std::int64_t a, b, V;
  };
  bool ok = true;
  nlohmann::json out = nlohmann::json::array();
  for (Case k : {Case{1, 1, 1}, Case{1, -1, 1}, Case{1, 1, 3}, Case{2, 0, 2}}) {
    SplitBundle E{{k.a, k.b}, Rational(k.V)};
    auto specs = line_summand_specs(E);
    Verdict v = semistability_verdict(specs[0], specs);
    // Slope oracle: mu(E) = (a+b)/2, lambda_X = -mu(E)/V, lambda_{P(O(d))} = -d/V.
    Rational lx(-(k.a + k.b), 2 * k.V);
    bool semi = 2 * std::max(k.a, k.b) <= k.a + k.b;
    bool match = v.lambda_X == lx && v.lambdas[1].second == Rational(-k.a, k.V) &&
                 v.lambdas[2].second == Rational(-k.b, k.V) && v.semistable == semi;
    ok = ok && match;
    out.push_back({{"degrees", {k.a, k.b}}, {"volume", k.V}, {"semistable", v.semistable},
                   {"lambda_X", to_string(v.lambda_X)}, {"matches_oracle", match}});
  }
  SplitBundle even{{1, 1}, Rational(1)}, odd{{1, -1}, Rational(1)};
  auto se = line_summand_specs(even), so = line_summand_specs(odd);
  bool even_ok = semistability_verdict(se[0], se).semistable;
  Verdict vo = semistability_verdict(so[0], so);
  c.pass = ok && even_ok && !vo.semistable && vo.destabilizing == "P(O(1))";
  c.values = {{"cases", out}};
  c.detail = std::string("O(1)+O(1) ") + (even_ok ? "semistable" : "not semistable") + ", O(1)+O(-1) " +
             (vo.semistable ? "semistable" : "destabilized by " + vo.destabilizing) + ", exact lambdas " +
             (ok ? "match" : "differ from") + " the slope oracle";
  return c;
}

inline Check appendix(std::uint64_t seed) {
  Check c;
  BaseMetric w = BaseMetric::flat(1);
  MetricField g = weak_ge(seed);
  HeVerdict v = he_equivalence_test(g, w, 1e-10);
  MetricField planted = MetricField::reference(GridSpec{1, 1, 16, FiberKind::Torus});
  planted.psi = sample_modes(planted.grid.total(), {{0.1, {1, 0, 0, 1}, 0.0}});
  HeVerdict q = he_equivalence_test(planted, w, 1e-10);
  NormalizeResult r = normalize(g, w);
  RealField T = trace_c(r.phi, w);
  double spread = max_of(T) - min_of(T);
  NormalizeResult again = normalize(r.phi, w);
  double idem = 0;
  for (std::size_t b = 0; b < r.phi.p.size(); ++b) idem = std::max(idem, std::abs(again.phi.p[b] - r.phi.p[b]));
  c.pass = v.hermitian_einstein && v.operator_sup <= 1e-10 && !q.hermitian_einstein && spread <= 1e-6 && idem <= 1e-10;
  c.values = {{"weak_ge_operator_sup", v.operator_sup}, {"planted_operator_sup", q.operator_sup},
              {"planted_worst_mode", q.worst_mode}, {"normalized_trace_spread", spread}, {"idempotence", idem}};
  c.detail = "weak GE operator sup " + num(v.operator_sup) + ", planted " + num(q.operator_sup) + " at mode " +
             q.worst_mode + ", normalized trace spread " + num(spread) + ", idempotence " + num(idem);
  return c;
}

}  // namespace verify

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"core", "classes", "hym", "appendix"};
  return names;
}

// Runs one verification suite; every entry is one acceptance criterion.
inline std::vector<Check> run_suite(const std::string& suite, const VerifyConfig& cfg) {
  using namespace verify;
  std::vector<Check> out;
  if (suite == "core") {
    out.push_back(timed(1, "algebraic identities", [&] { return algebraic_identities(cfg.seed); }));
    auto t0 = std::chrono::steady_clock::now();
    CoupledRun cr = coupled_run(cfg);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(timed(2, "flow monotonicity", [&] { return monotonicity(cr); }));
    out.back().seconds += secs;
    out.push_back(timed(3, "flow bounds", [&] { return flow_bounds(cr); }));
    out.push_back(timed(4, "defect decay", [&] { return defect_decay(); }));
    out.push_back(timed(5, "uniqueness and determinism", [&] { return consistency(); }));
    out.push_back(timed(6, "lambda is topological", [&] { return lambda_topological(cfg.seed); }));
    out.push_back(timed(7, "first variation", [&] { return first_variation(); }));
  } else if (suite == "classes") {
    out.push_back(timed(8, "class inequalities", [&] { return class_inequalities(); }));
    out.push_back(timed(9, "positivity", [&] { return positivity(cfg.seed); }));
    out.push_back(timed(11, "semistability", [&] { return semistability(); }));
  } else if (suite == "hym") {
    out.push_back(timed(10, "bundle flow bridge", [&] { return hym_bridge(); }));
  } else if (suite == "appendix") {
    out.push_back(timed(12, "Hermitian-Einstein operator", [&] { return appendix(cfg.seed); }));
  } else {
    throw ConfigError("unknown suite '" + suite + "' (expected core, classes, hym or appendix)");
  }
  return out;
}

inline std::string format_check(const Check& c) {
  char head[96];
  std::snprintf(head, sizeof head, "%s %2d %s: ", c.pass ? "PASS" : "FAIL", c.id, c.name.c_str());
  char tail[32];
  std::snprintf(tail, sizeof tail, " [%.1f s]", c.seconds);
  return head + c.detail + tail;
}

}  // namespace geflow
