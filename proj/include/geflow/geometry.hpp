#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "field.hpp"
#include "forms.hpp"

namespace geflow {

using NVec = std::array<cplx, 2>;

// c_{a bbar} plus the frame coefficients N_a = phi_{a vbar} / phi_{v vbar}.
struct HorizontalForm {
  int m = 1;
  std::vector<HMat> c;
  std::vector<NVec> N;
  RealField mu_norm;  // filled by kodaira_spencer_action
};

inline NVec frame_of(const JetTensor& j) {
  NVec N{};
  for (int a = 0; a < j.m(); ++a) N[a] = j.bf[a] / j.ff;
  return N;
}

inline HMat curvature_of(const JetTensor& j) {
  HMat c = HMat::zero(j.m());
  for (int a = 0; a < j.m(); ++a)
    for (int b = 0; b < j.m(); ++b) c(a, b) = j.bb(a, b) - j.bf[a] * std::conj(j.bf[b]) / j.ff;
  for (int a = 0; a < j.m(); ++a) c(a, a) = {c(a, a).real(), 0.0};
  return c;
}

inline std::vector<NVec> horizontal_connection(const JetField& J) {
  require_admissible(J);
  std::vector<NVec> N(J.size());
  parallel_for(J.size(), [&](std::size_t i) { N[i] = frame_of(J.at(i)); });
  return N;
}

inline std::vector<NVec> horizontal_connection(const MetricField& f) { return horizontal_connection(compute_jets(f)); }

inline HorizontalForm geodesic_curvature(const JetField& J) {
  require_admissible(J);
  HorizontalForm H;
  H.m = J.m;
  H.c.resize(J.size());
  H.N.resize(J.size());
  parallel_for(J.size(), [&](std::size_t i) {
    JetTensor t = J.at(i);
    H.c[i] = curvature_of(t);
    H.N[i] = frame_of(t);
  });
  return H;
}

inline HorizontalForm geodesic_curvature(const MetricField& f) { return geodesic_curvature(compute_jets(f)); }

inline double real_part_checked(cplx z, double tol = 1e-10) {
  if (std::abs(z.imag()) > tol * std::max(1.0, std::abs(z.real())))
    throw ContractViolation("nominally real scalar has imaginary residue " + std::to_string(z.imag()));
  return z.real();
}

inline RealField trace_c(const GridSpec& g, const JetField& J, const BaseMetric& w) {
  require_admissible(J);
  RealField t(J.size());
  parallel_for(J.size(), [&](std::size_t i) {
    t[i] = real_part_checked(contract(w.inv_t(g.base_of(i)), curvature_of(J.at(i))));
  });
  return t;
}

inline RealField trace_c(const MetricField& f, const BaseMetric& w) { return trace_c(f.grid, compute_jets(f), w); }

struct KodairaSpencer {
  std::vector<NVec> mu;  // mu_a = -d/dvbar N_a
  RealField norm;
  double sup = 0.0;
};

inline KodairaSpencer kodaira_spencer_action(const MetricField& f) {
  JetField J = admissible_jets(f);
  int m = f.grid.m;
  Differ D = f.total_differ();
  std::size_t n = J.size();
  KodairaSpencer K;
  K.mu.assign(n, NVec{});
  K.norm.assign(n, 0.0);
  for (int a = 0; a < m; ++a) {
    ComplexField Na(n);
    for (std::size_t i = 0; i < n; ++i) Na[i] = J.bf[i][a] / J.ff[i];
    ComplexField dv = wirtinger_derivative(D, Na, m, true);
    for (std::size_t i = 0; i < n; ++i) K.mu[i][a] = -dv[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (int a = 0; a < m; ++a) s += std::norm(K.mu[i][a]);
    K.norm[i] = std::sqrt(s);
  }
  K.sup = max_of(K.norm);
  return K;
}

struct Laplacians {
  RealField horizontal;  // Delta_omega f
  RealField vertical;    // Delta_phi f
};

// Delta_omega f = g^{a bbar} (ddbar f)(delta_a, delta_bbar) with delta_a = d_a - N_a d_v.
inline Laplacians laplacians(const MetricField& phi, const JetField& J, const BaseMetric& w, const RealField& f) {
  require_admissible(J);
  Differ D = phi.total_differ();
  int m = phi.grid.m;
  Laplacians L;
  L.horizontal.resize(f.size());
  L.vertical.resize(f.size());
  auto grad = D.gradient(f);
  parallel_for(f.size(), [&](std::size_t i) {
    JetTensor t = J.at(i);
    NVec N = frame_of(t);
    cplx fvv = D.ddbar(grad, i, m, m);
    std::array<cplx, 2> fav{};
    for (int a = 0; a < m; ++a) fav[a] = D.ddbar(grad, i, a, m);
    HMat q = HMat::zero(m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        cplx fab = D.ddbar(grad, i, a, b);
        q(a, b) = fab - std::conj(N[b]) * fav[a] - N[a] * std::conj(fav[b]) + N[a] * std::conj(N[b]) * fvv;
      }
    L.horizontal[i] = real_part_checked(contract(w.inv_t(phi.grid.base_of(i)), q));
    L.vertical[i] = fvv.real() / t.ff;
  });
  return L;
}

inline Laplacians laplacians(const MetricField& phi, const BaseMetric& w, const RealField& f) {
  return laplacians(phi, compute_jets(phi), w, f);
}

// i ddbar phi = c + phi_{v vbar} i delta v ^ delta vbar with delta v = dv + N_a dz^a.
// Returns the max reconstruction error of phi_{a bbar} and phi_{a vbar}.
inline double decomposition_residual(const JetField& J) {
  require_admissible(J);
  RealField r(J.size());
  parallel_for(J.size(), [&](std::size_t i) {
    JetTensor t = J.at(i);
    HMat c = curvature_of(t);
    NVec N = frame_of(t);
    double e = 0;
    for (int a = 0; a < t.m(); ++a) {
      for (int b = 0; b < t.m(); ++b)
        e = std::max(e, std::abs(t.bb(a, b) - (c(a, b) + N[a] * t.ff * std::conj(N[b]))));
      e = std::max(e, std::abs(t.bf[a] - t.ff * N[a]));
    }
    r[i] = e;
  });
  return max_of(r);
}

inline double decomposition_residual(const MetricField& f) { return decomposition_residual(compute_jets(f)); }

// (tr c) omega^m ^ (i ddbar phi)^n against (m/(n+1)) omega^{m-1} ^ (i ddbar phi)^{n+1}.
struct MixedIdentity {
  RealField lhs, rhs;
  double residual = 0.0;
};

inline MixedIdentity mixed_identity(const GridSpec& g, const JetField& J, const BaseMetric& w) {
  require_admissible(J);
  int m = g.m, n = g.n;
  MixedIdentity R;
  R.lhs.resize(J.size());
  R.rhs.resize(J.size());
  RealField rel(J.size());
  parallel_for(J.size(), [&](std::size_t i) {
    JetTensor t = J.at(i);
    const HMat& gb = w.at(g.base_of(i));
    SqMat H = hessian_matrix(t), G = padded_base(gb);
    double tr = contract(gb.inverse(), curvature_of(t)).real();
    double vol = wedge_powers({{&G, m}, {&H, n}});
    double lhs = tr * vol;
    double rhs = static_cast<double>(m) / (n + 1) * wedge_powers({{&G, m - 1}, {&H, n + 1}});
    R.lhs[i] = lhs;
    R.rhs[i] = rhs;
    double terms = 0;
    for (int a = 0; a < m; ++a) {
      terms += std::norm(t.bf[a]) / t.ff;
      for (int b = 0; b < m; ++b) terms += std::abs(t.bb(a, b));
    }
    double scale = std::max({std::abs(lhs), std::abs(rhs), std::abs(vol) * terms * gb.inverse().trace()});
    rel[i] = scale > 0 ? std::abs(lhs - rhs) / scale : 0.0;
  });
  R.residual = max_of(rel);
  return R;
}

inline double mixed_identity_residual(const MetricField& f, const BaseMetric& w) {
  return mixed_identity(f.grid, compute_jets(f), w).residual;
}

}  // namespace geflow
