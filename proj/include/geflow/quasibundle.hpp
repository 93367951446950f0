#pragma once

#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "flow.hpp"
#include "functionals.hpp"
#include "geometry.hpp"
#include "json.hpp"

namespace geflow {

// Fiber test function exp(i (k1 x_v + k2 y_v)).
struct TestMode {
  int k1 = 0, k2 = 0;
  int norm2() const { return k1 * k1 + k2 * k2; }
  std::string name() const { return "(" + std::to_string(k1) + "," + std::to_string(k2) + ")"; }
  cplx value(double x, double y) const { return std::polar(1.0, k1 * x + k2 * y); }
  // d/dv and d/dvbar of the mode divided by the mode.
  cplx dv() const { return 0.5 * cplx(k2, k1); }
  cplx dvbar() const { return 0.5 * cplx(-k2, k1); }
};

struct TestFunctionSet {
  std::vector<TestMode> modes;
  int cutoff_norm2 = 0;

  // The `count` lowest modes ordered by |k|^2, then lexicographically; includes u = 1.
  static TestFunctionSet lowest(int count = 8) {
    std::vector<TestMode> all;
    int r = 1;
    while (static_cast<int>(all.size()) < count) {
      all.clear();
      for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b)
          if (a * a + b * b <= r * r) all.push_back({a, b});
      ++r;
    }
    std::sort(all.begin(), all.end(), [](const TestMode& p, const TestMode& q) {
      if (p.norm2() != q.norm2()) return p.norm2() < q.norm2();
      return std::make_pair(p.k1, p.k2) < std::make_pair(q.k1, q.k2);
    });
    all.resize(count);
    TestFunctionSet s;
    s.modes = all;
    s.cutoff_norm2 = all.back().norm2();
    return s;
  }
};

// Vertical derivatives of c(phi): dv[i] holds (c_{j kbar})_v, dvbar[i] holds (c_{j kbar})_vbar, row-major j, k.
struct VerticalDerivatives {
  int m = 1;
  std::vector<std::array<cplx, 4>> dv, dvbar;
};

inline VerticalDerivatives vertical_derivatives(const MetricField& phi, const JetField& J) {
  require_admissible(J);
  int m = phi.grid.m;
  Differ D = phi.total_differ();
  std::size_t n = J.size();
  std::vector<ComplexField> bb(m * m, ComplexField(n)), bf(m, ComplexField(n)), bfc(m, ComplexField(n));
  ComplexField ff(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < m; ++k) bb[j * m + k][i] = J.bb[i](j, k);
      bf[j][i] = J.bf[i][j];
      bfc[j][i] = std::conj(J.bf[i][j]);
    }
    ff[i] = J.ff[i];
  }
  VerticalDerivatives V;
  V.m = m;
  V.dv.resize(n);
  V.dvbar.resize(n);
  parallel_for(n, [&](std::size_t i) {
    for (int bar = 0; bar < 2; ++bar) {
      auto d = [&](const ComplexField& f) { return D.wirtinger(f.data(), i, m, bar == 1); };
      cplx dff = d(ff);
      double F = J.ff[i];
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
          cplx a = J.bf[i][j], b = std::conj(J.bf[i][k]);
          cplx v = d(bb[j * m + k]) - (d(bf[j]) * b + a * d(bfc[k])) / F + a * b * dff / (F * F);
          (bar ? V.dvbar : V.dv)[i][j * m + k] = v;
        }
    }
  });
  return V;
}

// [V_j, V_kbar] = alpha_{jk} d/dv + beta_{jk} d/dvbar with
// alpha = (c_{j kbar})_vbar / phi_{v vbar}, beta = -(c_{j kbar})_v / phi_{v vbar}.
struct BracketField {
  int m = 1;
  std::vector<std::array<cplx, 4>> alpha, beta;
  double sup() const {
    double s = 0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
      for (int k = 0; k < m * m; ++k) s = std::max({s, std::abs(alpha[i][k]), std::abs(beta[i][k])});
    return s;
  }
};

inline BracketField bracket_field(const MetricField& phi, const BaseMetric& wB) {
  wB.validate(phi.grid.base_size());
  JetField J = admissible_jets(phi);
  VerticalDerivatives V = vertical_derivatives(phi, J);
  BracketField B;
  B.m = phi.grid.m;
  B.alpha.resize(J.size());
  B.beta.resize(J.size());
  parallel_for(J.size(), [&](std::size_t i) {
    for (int k = 0; k < B.m * B.m; ++k) {
      B.alpha[i][k] = V.dvbar[i][k] / J.ff[i];
      B.beta[i][k] = -V.dv[i][k] / J.ff[i];
    }
  });
  return B;
}

// Vertical derivatives of T = tr_{omega_B} c(phi), divided by phi_{v vbar}.
struct TraceGradient {
  ComplexField a;  // T_vbar / phi_{v vbar}
  ComplexField b;  // T_v / phi_{v vbar}
};

inline TraceGradient trace_gradient(const MetricField& phi, const JetField& J, const BaseMetric& wB) {
  VerticalDerivatives V = vertical_derivatives(phi, J);
  int m = phi.grid.m;
  TraceGradient G;
  G.a.resize(J.size());
  G.b.resize(J.size());
  parallel_for(J.size(), [&](std::size_t i) {
    HMat gi = wB.inv_t(phi.grid.base_of(i));
    HMat cv = HMat::zero(m), cvb = HMat::zero(m);
    for (int k = 0; k < m * m; ++k) {
      cv.a[k] = V.dv[i][k];
      cvb.a[k] = V.dvbar[i][k];
    }
    G.a[i] = contract(gi, cvb) / J.ff[i];
    G.b[i] = contract(gi, cv) / J.ff[i];
  });
  return G;
}

// Lambda (D^A)^2 u = T_vbar phi^{vbar v} u_v - T_v phi^{vbar v} u_vbar.
inline ComplexField he_operator(const MetricField& phi, const JetField& J, const TraceGradient& G, const TestMode& u) {
  Lattice tot = phi.grid.total();
  int xv = phi.grid.fiber_axis(0), yv = phi.grid.fiber_axis(1);
  ComplexField out(J.size());
  parallel_for(J.size(), [&](std::size_t i) {
    cplx val = u.value(tot.x(i, xv), tot.x(i, yv));
    out[i] = (G.a[i] * u.dv() - G.b[i] * u.dvbar()) * val;
  });
  return out;
}

inline ComplexField he_operator(const MetricField& phi, const BaseMetric& wB, const TestMode& u) {
  wB.validate(phi.grid.base_size());
  JetField J = admissible_jets(phi);
  return he_operator(phi, J, trace_gradient(phi, J, wB), u);
}

struct HeVerdict {
  bool hermitian_einstein = false;
  bool gradient_verdict = false;
  bool consistent = true;
  double operator_sup = 0, gradient_sup = 0, he_constant = 0;
  std::string worst_mode;
  int cutoff_norm2 = 0;
  std::size_t modes = 0;
};

inline HeVerdict he_equivalence_test(const MetricField& phi, const BaseMetric& wB, double tol,
                                     const TestFunctionSet& set = TestFunctionSet::lowest()) {
  wB.validate(phi.grid.base_size());
  JetField J = admissible_jets(phi);
  TraceGradient G = trace_gradient(phi, J, wB);
  HeVerdict v;
  v.cutoff_norm2 = set.cutoff_norm2;
  v.modes = set.modes.size();
  v.worst_mode = set.modes.front().name();
  for (const auto& u : set.modes) {
    ComplexField r = he_operator(phi, J, G, u);
    double s = 0;
    for (cplx z : r) s = std::max(s, std::abs(z));
    if (u.norm2() == 0) v.he_constant = s;
    if (s > v.operator_sup) {
      v.operator_sup = s;
      v.worst_mode = u.name();
    }
  }
  for (cplx z : G.b) v.gradient_sup = std::max(v.gradient_sup, std::abs(z));
  v.hermitian_einstein = v.operator_sup < tol && v.he_constant == 0.0;
  v.gradient_verdict = v.gradient_sup < tol;
  v.consistent = v.hermitian_einstein == v.gradient_verdict;
  return v;
}

inline nlohmann::json to_json(const HeVerdict& v) {
  return {{"verdict", v.hermitian_einstein ? "hermitian-einstein" : "not-hermitian-einstein"},
          {"gradient_verdict", v.gradient_verdict ? "hermitian-einstein" : "not-hermitian-einstein"},
          {"consistent", v.consistent},
          {"operator_sup", v.operator_sup},
          {"gradient_sup", v.gradient_sup},
          {"he_constant", v.he_constant},
          {"worst_mode", v.worst_mode},
          {"cutoff", {{"max_k2", v.cutoff_norm2}, {"modes", v.modes}}}};
}

// Symbol of f -> g^{a bbar} f_{a bbar} on the base lattice for the nested first-derivative stencil.
inline double base_laplacian_symbol(const GridSpec& g, DiffScheme scheme, const HMat& ginv_t,
                                    const std::vector<int>& k) {
  int m = g.m;
  std::vector<double> s(2 * m);
  for (int p = 0; p < 2 * m; ++p) s[p] = derivative_symbol(g.N, scheme, k[p]);
  cplx S = 0;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double sxa = s[2 * a], sya = s[2 * a + 1], sxb = s[2 * b], syb = s[2 * b + 1];
      cplx sym(-0.25 * (sxa * sxb + sya * syb), a == b ? 0.0 : -0.25 * (sxa * syb - sya * sxb));
      S += ginv_t(b, a) * sym;
    }
  return S.real();
}

namespace detail {

// Separable transform of a base-lattice array along every axis.
inline void transform_axes(const Lattice& lat, ComplexField& f, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<cplx> in(lat.N), out(lat.N);
  for (int axis = 0; axis < lat.dims; ++axis) {
    std::size_t st = lat.stride(axis);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (lat.coord(i, axis) != 0) continue;
      for (int k = 0; k < lat.N; ++k) in[k] = f[i + k * st];
      if (inverse)
        fft.inv(out, in);
      else
        fft.fwd(out, in);
      for (int k = 0; k < lat.N; ++k) f[i + k * st] = out[k];
    }
  }
}

}  // namespace detail

// Solves g^{a bbar} ft_{a bbar} = rhs on the base torus; zero and fully-Nyquist modes are set to 0.
inline RealField solve_base_poisson(const GridSpec& g, DiffScheme scheme, const HMat& ginv_t, const RealField& rhs) {
  Lattice lat = g.base();
  ComplexField F(rhs.begin(), rhs.end());
  detail::transform_axes(lat, F, false);
  for (std::size_t i = 0; i < F.size(); ++i) {
    std::vector<int> k(lat.dims);
    for (int p = 0; p < lat.dims; ++p) {
      int c = lat.coord(i, p);
      k[p] = c <= lat.N / 2 ? c : c - lat.N;
    }
    double S = base_laplacian_symbol(g, scheme, ginv_t, k);
    F[i] = std::abs(S) < 1e-13 ? cplx(0.0) : F[i] / S;
  }
  detail::transform_axes(lat, F, true);
  RealField out(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) out[i] = F[i].real();
  return out;
}

struct NormalizeResult {
  MetricField phi;
  RealField correction;
  double mean = 0, fiber_variation = 0;
};

// Adds a base function ft with Delta ft = mean(f) - f, f the base function equal to tr c(phi).
inline NormalizeResult normalize(const MetricField& phi, const BaseMetric& wB, double tol = 1e-8) {
  const GridSpec& g = phi.grid;
  wB.validate(g.base_size());
  if (!wB.constant) throw ConfigError("normalize: requires a constant base metric");
  JetField J = admissible_jets(phi);
  RealField T = trace_c(g, J, wB);
  std::size_t fs = g.fiber_size();
  NormalizeResult r;
  RealField f(g.base_size());
  for (std::size_t b = 0; b < f.size(); ++b) {
    double lo = T[b * fs], hi = lo;
    for (std::size_t j = 0; j < fs; ++j) {
      lo = std::min(lo, T[b * fs + j]);
      hi = std::max(hi, T[b * fs + j]);
    }
    r.fiber_variation = std::max(r.fiber_variation, hi - lo);
    f[b] = T[b * fs];
  }
  if (r.fiber_variation > tol)
    throw ContractViolation("normalize: tr c varies along fibers by " + format_number(r.fiber_variation) +
                            ", not a base pullback");
  r.mean = pairwise_sum(f) / static_cast<double>(f.size());
  RealField rhs(f.size());
  for (std::size_t b = 0; b < f.size(); ++b) rhs[b] = r.mean - f[b];
  r.correction = solve_base_poisson(g, phi.scheme, wB.inv_t(0), rhs);
  double c0 = pairwise_sum(r.correction) / static_cast<double>(r.correction.size());
  for (double& v : r.correction) v -= c0;
  r.phi = phi;
  if (!r.phi.has_p()) r.phi.p.assign(g.base_size(), 0.0);
  for (std::size_t b = 0; b < f.size(); ++b) r.phi.p[b] += r.correction[b];
  return r;
}

}  // namespace geflow
