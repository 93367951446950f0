#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "forms.hpp"
#include "geometry.hpp"
#include "json.hpp"

namespace geflow {

inline void require_compatible(const MetricField& a, const MetricField& b) {
  if (!(a.grid == b.grid)) throw ConfigError("functional: fields live on different grids");
  if (a.scheme != b.scheme) throw ConfigError("functional: fields use different derivative schemes");
  if (a.kappa != b.kappa) throw ConfigError("functional: reference coefficients differ");
  for (int k = 0; k < a.grid.m * a.grid.m; ++k)
    if (a.A.a[k] != b.A.a[k]) throw ConfigError("functional: base quadratics differ");
}

// phi - psi, a periodic grid function once the symbolic parts agree.
inline RealField weight_difference(const MetricField& phi, const MetricField& psi) {
  require_compatible(phi, psi);
  RealField d(phi.grid.size());
  parallel_for(d.size(), [&](std::size_t i) { d[i] = phi.periodic_at(i) - psi.periodic_at(i); });
  return d;
}

inline double integrate(const RealField& f, double cell) { return pairwise_sum(f) * cell; }

// Pointwise densities of omega^m ^ H^n and omega^{m-1} ^ H^{n+1}.
struct VolumePair {
  RealField vol, num;
};

inline VolumePair volume_pair(const GridSpec& g, const JetField& J, const BaseMetric& w) {
  VolumePair V;
  V.vol.resize(J.size());
  V.num.resize(J.size());
  int m = g.m, n = g.n;
  parallel_for(J.size(), [&](std::size_t i) {
    SqMat H = hessian_matrix(J.at(i)), G = padded_base(w.at(g.base_of(i)));
    V.vol[i] = wedge_powers({{&G, m}, {&H, n}});
    V.num[i] = wedge_powers({{&G, m - 1}, {&H, n + 1}});
  });
  return V;
}

inline double lambda_constant(const GridSpec& g, const JetField& J, const BaseMetric& w) {
  require_admissible(J);
  VolumePair V = volume_pair(g, J, w);
  double den = pairwise_sum(V.vol), num = pairwise_sum(V.num);
  if (!(den > 0)) throw ConfigError("lambda: degenerate scenario, volume integral is not positive");
  return static_cast<double>(g.m) / (g.n + 1) * num / den;
}

inline double lambda_constant(const MetricField& f, const BaseMetric& w) {
  w.validate(f.grid.base_size());
  return lambda_constant(f.grid, admissible_jets(f), w);
}

namespace detail {

// Coefficient of (i dz^a ^ dzbar^b) ^ (i dv ^ dvbar) in the wedge of two (1,1)-forms.
inline cplx fiber_minor(const SqMat& A, const SqMat& B, int a, int b) {
  int v = A.D - 1;
  return A(a, b) * B(v, v) + B(a, b) * A(v, v) - A(a, v) * B(v, b) - B(a, v) * A(v, b);
}

template <class F>
RealField per_base(const GridSpec& g, F&& fiber_value) {
  RealField out(g.base_size());
  std::size_t fs = g.fiber_size();
  parallel_for(out.size(), [&](std::size_t b) {
    std::vector<double> vals(fs);
    for (std::size_t j = 0; j < fs; ++j) vals[j] = fiber_value(b * fs + j);
    out[b] = pairwise_sum(vals) * g.fiber_cell();
  });
  return out;
}

}  // namespace detail

// E(phi, psi) per base point: (1/(n+1)) int_fiber (phi - psi) sum_k (i ddbar phi)^k (i ddbar psi)^{n-k}.
inline RealField energy_E(const MetricField& phi, const JetField& Jp, const MetricField& psi, const JetField& Jq) {
  RealField d = weight_difference(phi, psi);
  const GridSpec& g = phi.grid;
  return detail::per_base(g, [&](std::size_t i) { return d[i] * (2.0 * Jp.ff[i] + 2.0 * Jq.ff[i]) / (g.n + 1); });
}

inline RealField energy_E(const MetricField& phi, const MetricField& psi) {
  require_compatible(phi, psi);
  return energy_E(phi, admissible_jets(phi), psi, admissible_jets(psi));
}

// E_1(phi, psi) per base point as the Hermitian coefficient of a (1,1)-form.
inline std::vector<HMat> energy_E1(const MetricField& phi, const JetField& Jp, const MetricField& psi,
                                   const JetField& Jq) {
  RealField d = weight_difference(phi, psi);
  const GridSpec& g = phi.grid;
  int m = g.m;
  std::vector<HMat> out(g.base_size(), HMat::zero(m));
  std::size_t fs = g.fiber_size();
  parallel_for(out.size(), [&](std::size_t b) {
    std::vector<double> re(fs), im(fs);
    for (int a = 0; a < m; ++a)
      for (int c = a; c < m; ++c) {
        for (std::size_t j = 0; j < fs; ++j) {
          std::size_t i = b * fs + j;
          SqMat P = hessian_matrix(Jp.at(i)), Q = hessian_matrix(Jq.at(i));
          cplx s = detail::fiber_minor(Q, Q, a, c) + detail::fiber_minor(P, Q, a, c) + detail::fiber_minor(P, P, a, c);
          s *= 2.0 * d[i] / (g.n + 2);
          re[j] = s.real();
          im[j] = s.imag();
        }
        cplx v(pairwise_sum(re) * g.fiber_cell(), a == c ? 0.0 : pairwise_sum(im) * g.fiber_cell());
        out[b](a, c) = v;
        if (c != a) out[b](c, a) = std::conj(v);
      }
  });
  return out;
}

inline std::vector<HMat> energy_E1(const MetricField& phi, const MetricField& psi) {
  require_compatible(phi, psi);
  return energy_E1(phi, admissible_jets(phi), psi, admissible_jets(psi));
}

// L = int_M (lambda/m E omega - 1/(n+1) E_1) ^ omega^{m-1}/(m-1)!.
inline double donaldson_L(const MetricField& phi, const JetField& Jp, const MetricField& psi, const JetField& Jq,
                          const BaseMetric& w, double lambda) {
  const GridSpec& g = phi.grid;
  int m = g.m, n = g.n;
  RealField E = energy_E(phi, Jp, psi, Jq);
  std::vector<HMat> E1 = energy_E1(phi, Jp, psi, Jq);
  RealField dens(g.base_size());
  parallel_for(dens.size(), [&](std::size_t b) {
    SqMat G, F;
    G.D = F.D = m;
    const HMat& gb = w.at(b);
    for (int a = 0; a < m; ++a)
      for (int c = 0; c < m; ++c) {
        G(a, c) = gb(a, c);
        F(a, c) = E1[b](a, c);
      }
    double om = wedge_powers({{&G, m}});
    double mix = wedge_powers({{&F, 1}, {&G, m - 1}});
    dens[b] = (lambda / m * E[b] * om - mix / (n + 1)) / factorial(m - 1);
  });
  return integrate(dens, g.base_cell());
}

inline double donaldson_L(const MetricField& phi, const MetricField& psi, const BaseMetric& w, double lambda) {
  require_compatible(phi, psi);
  return donaldson_L(phi, admissible_jets(phi), psi, admissible_jets(psi), w, lambda);
}

inline double donaldson_L(const MetricField& phi, const MetricField& psi, const BaseMetric& w) {
  return donaldson_L(phi, psi, w, lambda_constant(psi, w));
}

// -int_X phidot (tr c - lambda) (i ddbar phi)^n ^ omega^m / m!.
inline double variation_rhs(const MetricField& phi, const RealField& phidot, const BaseMetric& w, double lambda) {
  const GridSpec& g = phi.grid;
  JetField J = admissible_jets(phi);
  RealField t = trace_c(g, J, w);
  VolumePair V = volume_pair(g, J, w);
  RealField f(J.size());
  double mf = factorial(g.m);
  parallel_for(f.size(), [&](std::size_t i) { f[i] = -phidot[i] * (t[i] - lambda) * V.vol[i] / mf; });
  return integrate(f, g.total().cell_volume());
}

struct VariationResult {
  double lhs = 0, rhs = 0, rel_error = 0;
};

using FieldPath = std::function<MetricField(double)>;

// Centered difference of L(phi_t, psi) with Richardson over (delta, delta/2).
inline VariationResult first_variation_check(const FieldPath& path, const RealField& phidot, const MetricField& psi,
                                             const BaseMetric& w, double t0, double delta = 1e-3) {
  double lambda = lambda_constant(psi, w);
  auto L = [&](double t) { return donaldson_L(path(t), psi, w, lambda); };
  double d1 = (L(t0 + delta) - L(t0 - delta)) / (2 * delta);
  double d2 = (L(t0 + delta / 2) - L(t0 - delta / 2)) / delta;
  VariationResult r;
  r.lhs = (4 * d2 - d1) / 3;
  r.rhs = variation_rhs(path(t0), phidot, w, lambda);
  r.rel_error = std::abs(r.lhs - r.rhs) / (std::abs(r.rhs) + 1e-12);
  return r;
}

// Per base point: int_fiber (tr c - lambda)^2 (i ddbar phi)^n.
inline RealField defect_density(const GridSpec& g, const JetField& J, const RealField& trace, double lambda) {
  return detail::per_base(g, [&](std::size_t i) {
    double e = trace[i] - lambda;
    return e * e * 2.0 * J.ff[i];
  });
}

inline double ge_defect(const GridSpec& g, const JetField& J, const RealField& trace, double lambda) {
  return std::sqrt(std::max(0.0, max_of(defect_density(g, J, trace, lambda))));
}

inline double ge_defect(const MetricField& phi, const BaseMetric& w, double lambda) {
  JetField J = admissible_jets(phi);
  return ge_defect(phi.grid, J, trace_c(phi.grid, J, w), lambda);
}

inline double ge_defect(const MetricField& phi, const BaseMetric& w) { return ge_defect(phi, w, lambda_constant(phi, w)); }

struct FunctionalReport {
  double lambda = 0, L = 0, defect = 0;
  double E_min = 0, E_max = 0, E1_trace_min = 0, E1_trace_max = 0;
};

inline FunctionalReport functional_report(const MetricField& phi, const MetricField& psi, const BaseMetric& w) {
  FunctionalReport r;
  r.lambda = lambda_constant(psi, w);
  r.L = donaldson_L(phi, psi, w, r.lambda);
  r.defect = ge_defect(phi, w, r.lambda);
  RealField E = energy_E(phi, psi);
  r.E_min = min_of(E);
  r.E_max = max_of(E);
  std::vector<HMat> E1 = energy_E1(phi, psi);
  RealField tr(E1.size());
  for (std::size_t b = 0; b < E1.size(); ++b) tr[b] = contract(w.inv_t(b), E1[b]).real();
  r.E1_trace_min = min_of(tr);
  r.E1_trace_max = max_of(tr);
  return r;
}

inline nlohmann::json to_json(const FunctionalReport& r) {
  return {{"lambda", r.lambda},
          {"L", r.L},
          {"defect", r.defect},
          {"E", {{"min", r.E_min}, {"max", r.E_max}}},
          {"E1_trace", {{"min", r.E1_trace_min}, {"max", r.E1_trace_max}}}};
}

}  // namespace geflow
