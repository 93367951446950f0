#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "functionals.hpp"

namespace geflow {

enum class Method { Euler, RK4 };

inline std::string to_string(Method m) { return m == Method::Euler ? "euler" : "rk4"; }

inline Method parse_method(const std::string& s) {
  if (s == "euler") return Method::Euler;
  if (s == "rk4") return Method::RK4;
  throw ConfigError("flow: unknown method '" + s + "' (expected euler or rk4)");
}

inline constexpr int kMaxHalvings = 10;

// Parabolic step bound 0.2 h^2 / max eig(g^{-1}).
inline double default_dt(const GridSpec& g, const BaseMetric& w) { return 0.2 * g.h() * g.h() / w.max_inverse_eig(); }

struct FlowState {
  double t = 0.0;
  double dt = 0.0;
  MetricField phi;
  long steps = 0;
  std::shared_ptr<const JetField> jets;  // jets of phi, when already known
};

// tr_omega c(phi) - lambda.
inline RealField flow_rhs(const GridSpec& g, const JetField& J, const BaseMetric& w, double lambda) {
  RealField r = trace_c(g, J, w);
  for (double& v : r) v -= lambda;
  return r;
}

inline RealField flow_rhs(const MetricField& phi, const BaseMetric& w, double lambda) {
  return flow_rhs(phi.grid, admissible_jets(phi), w, lambda);
}

namespace detail {

inline MetricField shifted(const MetricField& phi, const RealField& k, double s) {
  MetricField out = phi;
  for (std::size_t i = 0; i < out.psi.size(); ++i) out.psi[i] += s * k[i];
  return out;
}

inline std::optional<std::pair<MetricField, JetField>> try_step(const MetricField& phi, const JetField& J,
                                                               const BaseMetric& w, double lambda, double dt,
                                                               Method method) {
  try {
    RealField k1 = flow_rhs(phi.grid, J, w, lambda);
    MetricField next = phi;
    if (method == Method::Euler) {
      for (std::size_t i = 0; i < next.psi.size(); ++i) next.psi[i] += dt * k1[i];
    } else {
      RealField k2 = flow_rhs(shifted(phi, k1, dt / 2), w, lambda);
      RealField k3 = flow_rhs(shifted(phi, k2, dt / 2), w, lambda);
      RealField k4 = flow_rhs(shifted(phi, k3, dt), w, lambda);
      for (std::size_t i = 0; i < next.psi.size(); ++i)
        next.psi[i] += dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    JetField Jn = compute_jets(next);
    if (min_fiber_eig(Jn) < kFiberGuard) return std::nullopt;
    return std::make_pair(std::move(next), std::move(Jn));
  } catch (const NonAdmissible&) {
    return std::nullopt;
  }
}

}  // namespace detail

// One accepted step of length at most state.dt; the step is halved on guard failure.
inline FlowState step(const FlowState& s, const BaseMetric& w, double lambda, Method method, double max_dt = 0.0) {
  double dt = max_dt > 0 ? std::min(s.dt, max_dt) : s.dt;
  std::shared_ptr<const JetField> J = s.jets ? s.jets : std::make_shared<const JetField>(admissible_jets(s.phi));
  for (int halvings = 0; halvings <= kMaxHalvings; ++halvings) {
    if (auto next = detail::try_step(s.phi, *J, w, lambda, dt, method)) {
      FlowState out = s;
      out.phi = std::move(next->first);
      out.jets = std::make_shared<const JetField>(std::move(next->second));
      out.t = s.t + dt;
      out.steps = s.steps + 1;
      if (halvings > 0) out.dt = dt;
      return out;
    }
    dt /= 2;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "flow stalled at t = %.6g after %d step halvings (last dt = %.3g)", s.t, kMaxHalvings,
                dt * 2);
  throw FlowStalled(buf);
}

struct MonitorRow {
  double t = 0, L = 0, defect = 0, sup_trc_minus_lambda = 0, sup_phi_drift = 0, min_fiber_eig = 0,
         heat_residual = 0;
  double sup_trc = 0, heat_slack = 0;
};

struct Violation {
  long step = 0;
  double t = 0;
  std::string monitor;
  double excess = 0, slack = 0;
  bool hard = false;
};

struct FlowOptions {
  double T = 1.0;
  double dt = 0.0;
  Method method = Method::Euler;
  bool monitors = true;
  std::optional<double> lambda;
  long snapshot_every = 0;
};

struct MonitorReport {
  double lambda = 0, C = 0, dt = 0;
  std::vector<MonitorRow> rows;
  std::vector<Violation> violations;
  bool aborted = false;
  std::string abort_reason;
  std::size_t hard_violations() const {
    std::size_t n = 0;
    for (const auto& v : violations) n += v.hard;
    return n;
  }
};

struct FlowResult {
  FlowState final_state;
  MonitorReport report;
  std::vector<FlowState> snapshots;
};

inline double monotone_slack(double dt) { return 1e-8 + 4 * dt * dt; }

namespace detail {

struct Probe {
  JetField J;
  RealField trace;
  double sup_trc = 0, sup_dev = 0;
};

inline Probe probe(const MetricField& phi, const std::shared_ptr<const JetField>& jets, const BaseMetric& w,
                   double lambda) {
  Probe p;
  p.J = jets ? *jets : admissible_jets(phi);
  require_admissible(p.J);
  p.trace = trace_c(phi.grid, p.J, w);
  for (double v : p.trace) {
    p.sup_trc = std::max(p.sup_trc, std::abs(v));
    p.sup_dev = std::max(p.sup_dev, std::abs(v - lambda));
  }
  return p;
}

// Second-order size of the discrete heat identity remainder:
// sup |Delta_omega Delta_omega r| + 2 sup g^{a bbar}(r_{a vbar} - N_a r_{v vbar}) conj(...) / phi_{v vbar}.
inline double heat_scale(const MetricField& phi, const JetField& J, const BaseMetric& w, const RealField& r,
                         const RealField& lap_r) {
  Laplacians L2 = laplacians(phi, J, w, lap_r);
  Differ D = phi.total_differ();
  auto grad = D.gradient(r);
  int m = phi.grid.m;
  RealField q(r.size());
  parallel_for(r.size(), [&](std::size_t i) {
    JetTensor t = J.at(i);
    cplx rvv = D.ddbar(grad, i, m, m);
    HMat e = HMat::zero(m);
    std::array<cplx, 2> u{};
    for (int a = 0; a < m; ++a) u[a] = D.ddbar(grad, i, a, m) - t.bf[a] / t.ff * rvv;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) e(a, b) = u[a] * std::conj(u[b]);
    q[i] = 2 * contract(w.inv_t(phi.grid.base_of(i)), e).real() / t.ff;
  });
  return max_abs(L2.horizontal) + max_of(q);
}

}  // namespace detail

inline void record(MonitorReport& rep, long step, double t, const char* name, double excess, double slack) {
  if (excess <= slack) return;
  rep.violations.push_back({step, t, name, excess, slack, excess > 10 * slack});
}

// Integrates the flow to time T, recording every accepted step.
inline FlowResult run(const MetricField& phi0, const BaseMetric& w, const FlowOptions& opt) {
  w.validate(phi0.grid.base_size());
  FlowResult res;
  MonitorReport& rep = res.report;
  JetField J0 = admissible_jets(phi0);
  rep.lambda = opt.lambda ? *opt.lambda : lambda_constant(phi0.grid, J0, w);
  rep.dt = opt.dt > 0 ? opt.dt : default_dt(phi0.grid, w);
  double lambda = rep.lambda;

  FlowState s{0.0, rep.dt, phi0, 0, nullptr};
  detail::Probe p = detail::probe(phi0, nullptr, w, lambda);
  rep.C = (p.sup_trc + std::abs(lambda)) * 1.01;

  auto row_of = [&](const FlowState& st, const detail::Probe& pr) {
    MonitorRow r;
    r.t = st.t;
    r.sup_trc = pr.sup_trc;
    r.sup_trc_minus_lambda = pr.sup_dev;
    r.min_fiber_eig = min_fiber_eig(pr.J);
    if (!opt.monitors) return r;
    r.L = donaldson_L(st.phi, pr.J, phi0, J0, w, lambda);
    r.defect = ge_defect(st.phi.grid, pr.J, pr.trace, lambda);
    double drift = 0;
    for (std::size_t i = 0; i < st.phi.psi.size(); ++i) drift = std::max(drift, std::abs(st.phi.psi[i] - phi0.psi[i]));
    r.sup_phi_drift = drift;
    return r;
  };

  rep.rows.push_back(row_of(s, p));
  if (opt.snapshot_every > 0) res.snapshots.push_back(s);
  RealField r_prev = p.trace;
  for (double& v : r_prev) v -= lambda;

  const double eps_t = 1e-12 * std::max(1.0, opt.T);
  while (s.t < opt.T - eps_t) {
    FlowState next = step(s, w, lambda, opt.method, opt.T - s.t);
    detail::Probe pn = detail::probe(next.phi, next.jets, w, lambda);
    MonitorRow row = row_of(next, pn);
    if (opt.monitors) {
      const MonitorRow& prev = rep.rows.back();
      double h = next.t - s.t;
      double slack = monotone_slack(h);
      record(rep, next.steps, next.t, "L_monotone", row.L - prev.L, slack);
      record(rep, next.steps, next.t, "defect_monotone",
             row.sup_trc_minus_lambda * row.sup_trc_minus_lambda - prev.sup_trc_minus_lambda * prev.sup_trc_minus_lambda,
             slack);
      record(rep, next.steps, next.t, "trace_bound", row.sup_trc - rep.C, 1e-12);
      record(rep, next.steps, next.t, "drift_bound", row.sup_phi_drift - rep.C * next.t, 1e-12);

      RealField r_next = pn.trace;
      for (double& v : r_next) v -= lambda;
      Laplacians L = laplacians(s.phi, p.J, w, r_prev);
      double res_sup = 0;
      for (std::size_t i = 0; i < r_next.size(); ++i)
        res_sup = std::max(res_sup, std::abs((r_next[i] - r_prev[i]) / h - L.horizontal[i]));
      row.heat_residual = res_sup;
      row.heat_slack = 1e-10 + 10 * h * detail::heat_scale(s.phi, p.J, w, r_prev, L.horizontal);
      record(rep, next.steps, next.t, "heat_identity", res_sup, row.heat_slack);
      r_prev = std::move(r_next);
    }
    rep.rows.push_back(row);
    s = std::move(next);
    p = std::move(pn);
    if (opt.snapshot_every > 0 && s.steps % opt.snapshot_every == 0) res.snapshots.push_back(s);
    if (rep.hard_violations() > 0) {
      const Violation& v = rep.violations.back();
      rep.aborted = true;
      rep.abort_reason = "monitor " + v.monitor + " hard violation at step " + std::to_string(v.step);
      break;
    }
  }
  res.final_state = std::move(s);
  return res;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const MonitorReport& rep, std::ostream& os) {
  os << "t,L,defect,sup_trc_minus_lambda,sup_phi_drift,min_fiber_eig,heat_residual\n";
  for (const auto& r : rep.rows)
    os << format_number(r.t) << ',' << format_number(r.L) << ',' << format_number(r.defect) << ','
       << format_number(r.sup_trc_minus_lambda) << ',' << format_number(r.sup_phi_drift) << ','
       << format_number(r.min_fiber_eig) << ',' << format_number(r.heat_residual) << '\n';
}

inline nlohmann::json to_json(const MonitorReport& rep) {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : rep.violations)
    v.push_back({{"step", x.step}, {"t", x.t}, {"monitor", x.monitor}, {"excess", x.excess}, {"slack", x.slack},
                 {"hard", x.hard}});
  const MonitorRow& last = rep.rows.back();
  return {{"lambda", rep.lambda},
          {"C", rep.C},
          {"dt", rep.dt},
          {"steps", rep.rows.size() - 1},
          {"final", {{"t", last.t}, {"L", last.L}, {"defect", last.defect}, {"sup_phi_drift", last.sup_phi_drift}}},
          {"violations", v},
          {"aborted", rep.aborted},
          {"abort_reason", rep.abort_reason}};
}

inline double sup_distance(const MetricField& a, const MetricField& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.psi.size(); ++i) d = std::max(d, std::abs(a.periodic_at(i) - b.periodic_at(i)));
  return d;
}

struct UniquenessResult {
  double euler_vs_rk4 = 0, half_vs_rk4 = 0, euler_vs_half = 0;
  double max_divergence = 0;
  double ratio = 0;
};

// Euler at dt and dt/2 against an RK4 reference at dt.
inline UniquenessResult uniqueness_probe(const MetricField& phi0, const BaseMetric& w, double T, double dt = 0.0) {
  FlowOptions o;
  o.T = T;
  o.dt = dt > 0 ? dt : default_dt(phi0.grid, w);
  o.monitors = false;
  o.lambda = lambda_constant(phi0, w);
  FlowOptions half = o;
  half.dt = o.dt / 2;
  FlowOptions rk = o;
  rk.method = Method::RK4;
  MetricField a = run(phi0, w, o).final_state.phi;
  MetricField b = run(phi0, w, half).final_state.phi;
  MetricField c = run(phi0, w, rk).final_state.phi;
  UniquenessResult u;
  u.euler_vs_rk4 = sup_distance(a, c);
  u.half_vs_rk4 = sup_distance(b, c);
  u.euler_vs_half = sup_distance(a, b);
  u.max_divergence = std::max({u.euler_vs_rk4, u.half_vs_rk4, u.euler_vs_half});
  u.ratio = u.half_vs_rk4 > 0 ? u.euler_vs_rk4 / u.half_vs_rk4 : std::numeric_limits<double>::quiet_NaN();
  return u;
}

// Amplitude of the cos(k . x) component of the periodic part of phi.
inline double mode_amplitude(const MetricField& phi, const std::vector<int>& freq) {
  Lattice lat = phi.grid.total();
  RealField f(lat.size());
  parallel_for(f.size(), [&](std::size_t i) {
    double th = 0;
    for (int k = 0; k < lat.dims; ++k) th += freq[k] * lat.x(i, k);
    f[i] = phi.periodic_at(i) * std::cos(th);
  });
  return 2.0 * pairwise_sum(f) / static_cast<double>(f.size());
}

// Least-squares slope of -log(amplitude) against t.
inline double fit_decay_rate(const std::vector<double>& t, const std::vector<double>& amp) {
  double n = static_cast<double>(t.size()), st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double y = std::log(std::abs(amp[i]));
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
  }
  return -(n * sty - st * sy) / (n * stt - st * st);
}

}  // namespace geflow
