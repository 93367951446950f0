#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "flow.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "json.hpp"

namespace geflow {

using Mat2 = Eigen::Matrix2cd;

// Hermitian metric h_{i jbar} on a rank-2 bundle over the base torus (m = 1),
// stored as the matrix H with H(i, j) = h_{i jbar}, so G(v) = v^T H vbar.
struct HermitianBundleState {
  int N = 16;
  DiffScheme scheme = DiffScheme::FD4;
  std::vector<Mat2> h;

  Lattice base() const { return Lattice{2, N}; }
  double cell() const { return std::pow(kTwoPi / N, 2); }

  static HermitianBundleState constant(int N, const Mat2& H, DiffScheme s = DiffScheme::FD4) {
    HermitianBundleState st;
    st.N = N;
    st.scheme = s;
    st.h.assign(st.base().size(), H);
    return st;
  }

  // diag(exp(u), 1) for a base field u.
  static HermitianBundleState diagonal_exp(int N, const RealField& u, DiffScheme s = DiffScheme::FD4) {
    HermitianBundleState st = constant(N, Mat2::Identity(), s);
    for (std::size_t b = 0; b < u.size(); ++b) st.h[b](0, 0) = std::exp(u[b]);
    return st;
  }

  void validate() const {
    if (N < 8 || N % 2) throw ConfigError("bundle metric: N must be even and >= 8");
    if (h.size() != base().size()) throw ConfigError("bundle metric: wrong number of base points");
    for (std::size_t b = 0; b < h.size(); ++b) {
      if ((h[b] - h[b].adjoint()).cwiseAbs().maxCoeff() > 1e-12 * (1 + h[b].cwiseAbs().maxCoeff()))
        throw ConfigError("bundle metric: not Hermitian at base point " + std::to_string(b));
      if (Eigen::SelfAdjointEigenSolver<Mat2>(h[b], Eigen::EigenvaluesOnly).eigenvalues()(0) <= 0)
        throw ConfigError("bundle metric: not positive at base point " + std::to_string(b));
    }
  }
};

// H and its base derivatives at one point.
struct HJet {
  Mat2 H, Hz, Hzb, Hzzb;
};

inline std::vector<HJet> hjets(const HermitianBundleState& st) {
  Differ D(st.base(), st.scheme);
  std::size_t nb = st.h.size();
  std::vector<HJet> out(nb);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      ComplexField e(nb);
      for (std::size_t b = 0; b < nb; ++b) e[b] = st.h[b](i, j);
      parallel_for(nb, [&](std::size_t b) {
        out[b].H(i, j) = e[b];
        out[b].Hz(i, j) = D.wirtinger(e.data(), b, 0, false);
        out[b].Hzb(i, j) = D.wirtinger(e.data(), b, 0, true);
        out[b].Hzzb(i, j) = D.ddbar(e.data(), b, 0, 0);
      });
    }
  return out;
}

// g^{-1} (H_{z zbar} - H_z H^{-1} H_{zbar}).
inline Mat2 contracted_curvature(const HJet& J, double ginv) {
  return ginv * (J.Hzzb - J.Hz * J.H.inverse() * J.Hzb);
}

// Lambda F = H^{-1} Ktilde, so that v^T H (Lambda F) vbar = v^T Ktilde vbar.
inline Mat2 lambda_F(const HJet& J, double ginv) { return J.H.inverse() * contracted_curvature(J, ginv); }

inline double base_ginv(const BaseMetric& w, std::size_t b) {
  if (w.m != 1) throw ConfigError("bundle flow: base dimension must be 1");
  return w.inv_t(b)(0, 0).real();
}

// Affine chart of the P^1 fiber: chart 0 has v = (1, w), chart 1 has v = (w, 1).
inline Eigen::Vector2cd chart_vector(int chart, cplx w) {
  if (chart != 0 && chart != 1) throw ConfigError("induced weight: chart must be 0 or 1");
  return chart == 0 ? Eigen::Vector2cd(1.0, w) : Eigen::Vector2cd(w, 1.0);
}

inline Eigen::Vector2cd chart_tangent(int chart) {
  return chart == 0 ? Eigen::Vector2cd(0.0, 1.0) : Eigen::Vector2cd(1.0, 0.0);
}

inline cplx pair(const Eigen::Vector2cd& a, const Mat2& M, const Eigen::Vector2cd& b) {
  return (a.transpose() * M * b.conjugate())(0, 0);
}

// phi = log G(v) on the chart, in closed form.
inline double induced_value(const HJet& J, int chart, cplx w) {
  Eigen::Vector2cd s = chart_vector(chart, w);
  double G = pair(s, J.H, s).real();
  if (!(G > 0)) throw ContractViolation("induced weight: G is not positive");
  return std::log(G);
}

// Exact jets of phi = log G at (z, w): phi_{z zbar}, phi_{z wbar}, phi_{w wbar}.
inline JetTensor induced_jet(const HJet& J, int chart, cplx w) {
  Eigen::Vector2cd s = chart_vector(chart, w), e = chart_tangent(chart);
  double G = pair(s, J.H, s).real();
  if (!(G > 0)) throw ContractViolation("induced weight: G is not positive");
  cplx Gz = pair(s, J.Hz, s), Gzb = pair(s, J.Hzb, s), Gzzb = pair(s, J.Hzzb, s);
  cplx Gw = pair(e, J.H, s), Gwb = pair(s, J.H, e), Gwwb = pair(e, J.H, e);
  cplx Gzwb = pair(s, J.Hz, e);
  JetTensor t;
  t.bb = HMat::zero(1);
  t.bb(0, 0) = (Gzzb / G - Gz * Gzb / (G * G)).real();
  t.bf[0] = Gzwb / G - Gz * Gwb / (G * G);
  t.ff = (Gwwb / G - Gw * Gwb / (G * G)).real();
  return t;
}

struct InducedWeight {
  std::vector<HJet> jets;
  int chart = 0;
  double value(std::size_t b, cplx w) const { return induced_value(jets[b], chart, w); }
  JetTensor jet(std::size_t b, cplx w) const { return induced_jet(jets[b], chart, w); }
};

inline InducedWeight induced_weight(const HermitianBundleState& st, int chart) {
  st.validate();
  chart_vector(chart, 0.0);
  return {hjets(st), chart};
}

// P^1 quadrature in chart 0: w = tan(theta/2) e^{i sigma}, Gauss-Legendre in cos(theta), uniform in sigma.
struct SphereQuadrature {
  std::vector<cplx> w;
  std::vector<double> area;  // Lebesgue area element of the w-plane

  static SphereQuadrature make(int nt = 32, int ns = 64) {
    if (nt != 32) throw ConfigError("sphere quadrature: 32 Gauss-Legendre nodes are supported");
    using GL = boost::math::quadrature::gauss<double, 32>;
    std::vector<double> t, wt;
    for (std::size_t k = 0; k < GL::abscissa().size(); ++k) {
      double x = GL::abscissa()[k], c = GL::weights()[k];
      t.push_back(x);
      wt.push_back(c);
      if (x != 0) {
        t.push_back(-x);
        wt.push_back(c);
      }
    }
    SphereQuadrature q;
    for (std::size_t k = 0; k < t.size(); ++k)
      for (int l = 0; l < ns; ++l) {
        double sigma = kTwoPi * l / ns;
        double r = std::sqrt((1 - t[k]) / (1 + t[k]));
        q.w.push_back(std::polar(r, sigma));
        q.area.push_back(wt[k] * (kTwoPi / ns) / ((1 + t[k]) * (1 + t[k])));
      }
    return q;
  }
  std::size_t size() const { return w.size(); }
};

inline const SphereQuadrature& sphere() {
  static const SphereQuadrature q = SphereQuadrature::make();
  return q;
}

// Congruence X -> B^* X B with B = H^{-1/2}; a fiber automorphism, so fiber integrals of
// invariant densities are unchanged while the integrand becomes Fubini-Study-like.
inline HJet balanced(const HJet& J) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(J.H);
  Mat2 B = es.operatorInverseSqrt();
  return {B.adjoint() * J.H * B, B.adjoint() * J.Hz * B, B.adjoint() * J.Hzb * B, B.adjoint() * J.Hzzb * B};
}

// Per base point: int_{P^1} (i ddbar phi / 2 pi).
inline RealField fiber_S0(const std::vector<HJet>& jets) {
  const SphereQuadrature& q = sphere();
  RealField out(jets.size());
  parallel_for(jets.size(), [&](std::size_t b) {
    std::vector<double> v(q.size());
    HJet J = balanced(jets[b]);
    for (std::size_t k = 0; k < q.size(); ++k) v[k] = induced_jet(J, 0, q.w[k]).ff * q.area[k];
    out[b] = pairwise_sum(v) / std::numbers::pi;
  });
  return out;
}

// Per base point: S_1 = (2 / (2 pi)^2) int_{P^1} c(phi) (i ddbar phi)|_fiber, as a (1,1) coefficient.
inline RealField fiber_S1(const std::vector<HJet>& jets) {
  const SphereQuadrature& q = sphere();
  RealField out(jets.size());
  parallel_for(jets.size(), [&](std::size_t b) {
    std::vector<double> v(q.size());
    HJet J = balanced(jets[b]);
    for (std::size_t k = 0; k < q.size(); ++k) {
      JetTensor t = induced_jet(J, 0, q.w[k]);
      v[k] = curvature_of(t)(0, 0).real() * t.ff * q.area[k];
    }
    out[b] = pairwise_sum(v) / (std::numbers::pi * std::numbers::pi);
  });
  return out;
}

struct SegreCheck {
  double numeric = 0, exact = 0, difference = 0;
  double S0_min = 0, S0_max = 0;
};

// int_M S_1 against the exact Segre number -deg E of the line model phi = log G.
inline SegreCheck segre_crosscheck(const std::vector<HJet>& jets, double cell, long degree) {
  SegreCheck s;
  RealField S1 = fiber_S1(jets), S0 = fiber_S0(jets);
  s.numeric = pairwise_sum(S1) * 2.0 * cell;
  s.exact = -static_cast<double>(degree);
  s.difference = s.numeric - s.exact;
  s.S0_min = min_of(S0);
  s.S0_max = max_of(S0);
  return s;
}

inline SegreCheck segre_crosscheck(const HermitianBundleState& st) { return segre_crosscheck(hjets(st), st.cell(), 0); }

// Closed-form jets of h = diag(exp(-a_i |z|^2)), a_i = deg_i * pi / area: a split bundle
// whose summands have constant curvature and degrees deg_i over a base patch of the given area.
inline HJet split_bundle_jet(const std::vector<long>& degrees, double area, cplx z) {
  if (degrees.size() != 2) throw ConfigError("projective bundle: rank 2 only");
  HJet J;
  J.H.setZero();
  J.Hz.setZero();
  J.Hzb.setZero();
  J.Hzzb.setZero();
  double r2 = std::norm(z);
  for (int i = 0; i < 2; ++i) {
    double a = degrees[i] * std::numbers::pi / area;
    double e = std::exp(-a * r2);
    J.H(i, i) = e;
    J.Hz(i, i) = -a * std::conj(z) * e;
    J.Hzb(i, i) = -a * z * e;
    J.Hzzb(i, i) = (-a + a * a * r2) * e;
  }
  return J;
}

// sup over base points and sphere nodes of |tr_omega c(phi_h) - v^T Ktilde vbar / G|.
inline double he_trace_check(const std::vector<HJet>& jets, const BaseMetric& w, std::size_t stride = 1) {
  const SphereQuadrature& q = sphere();
  RealField worst(jets.size(), 0.0);
  parallel_for(jets.size(), [&](std::size_t b) {
    double gi = base_ginv(w, b);
    Mat2 K = contracted_curvature(jets[b], gi);
    for (std::size_t k = 0; k < q.size(); k += stride)
      for (int chart = 0; chart < 2; ++chart) {
        Eigen::Vector2cd s = chart_vector(chart, q.w[k]);
        double trc = gi * curvature_of(induced_jet(jets[b], chart, q.w[k]))(0, 0).real();
        double he = (pair(s, K, s) / pair(s, jets[b].H, s)).real();
        worst[b] = std::max(worst[b], std::abs(trc - he));
      }
  });
  return max_of(worst);
}

// Two sides of the pointwise reduction identity at seeded samples:
// phidot - tr c + lambda against v^T (Hdot - Ktilde + lambda H) vbar / G.
inline double reduction_identity_residual(const std::vector<HJet>& jets, const BaseMetric& w, double lambda,
                                          int samples = 20, std::uint64_t seed = 5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<std::size_t> pick(0, jets.size() - 1);
  double worst = 0;
  for (int k = 0; k < samples; ++k) {
    std::size_t b = pick(rng);
    cplx wv(n(rng), n(rng));
    int chart = k % 2;
    Mat2 Hdot;
    Hdot(0, 0) = n(rng);
    Hdot(1, 1) = n(rng);
    Hdot(0, 1) = cplx(n(rng), n(rng));
    Hdot(1, 0) = std::conj(Hdot(0, 1));
    double gi = base_ginv(w, b);
    Eigen::Vector2cd s = chart_vector(chart, wv);
    double G = pair(s, jets[b].H, s).real();
    double phidot = pair(s, Hdot, s).real() / G;
    double lhs = phidot - gi * curvature_of(induced_jet(jets[b], chart, wv))(0, 0).real() + lambda;
    Mat2 M = Hdot - contracted_curvature(jets[b], gi) + lambda * jets[b].H;
    double rhs = pair(s, M, s).real() / G;
    worst = std::max(worst, std::abs(lhs - rhs) / (1 + std::abs(lhs)));
  }
  return worst;
}

inline double sup_lambda_F(const std::vector<HJet>& jets, const BaseMetric& w, double lambda) {
  double s = 0;
  for (std::size_t b = 0; b < jets.size(); ++b) {
    Mat2 L = lambda_F(jets[b], base_ginv(w, b)) - lambda * Mat2::Identity();
    s = std::max(s, L.cwiseAbs().maxCoeff());
  }
  return s;
}

// Hermitian-Einstein constant: average of tr(Lambda F) / r against omega.
inline double hym_lambda(const std::vector<HJet>& jets, const BaseMetric& w) {
  std::vector<double> tr(jets.size()), vol(jets.size());
  for (std::size_t b = 0; b < jets.size(); ++b) {
    double gi = base_ginv(w, b);
    tr[b] = lambda_F(jets[b], gi).trace().real() / (2 * gi);
    vol[b] = 1.0 / gi;
  }
  return pairwise_sum(tr) / pairwise_sum(vol);
}

inline double min_eig(const Mat2& H) {
  return Eigen::SelfAdjointEigenSolver<Mat2>(H, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

inline double hym_default_dt(const HermitianBundleState& st, const BaseMetric& w) {
  double h = kTwoPi / st.N;
  return 0.2 * h * h / w.max_inverse_eig();
}

struct HymState {
  double t = 0, dt = 0;
  HermitianBundleState h;
  long steps = 0;
};

namespace detail {

inline std::optional<HermitianBundleState> try_hym_step(const HermitianBundleState& st, const std::vector<HJet>& J,
                                                      const BaseMetric& w, double lambda, double dt) {
  HermitianBundleState next = st;
  for (std::size_t b = 0; b < J.size(); ++b) {
    Mat2 H = st.h[b] + dt * (contracted_curvature(J[b], base_ginv(w, b)) - lambda * st.h[b]);
    H = 0.5 * (H + H.adjoint()).eval();
    if (!(min_eig(H) > 0)) return std::nullopt;
    next.h[b] = H;
  }
  return next;
}

}  // namespace detail

// One explicit step of H' = Ktilde - lambda H, halving dt on a positivity failure.
inline HymState hym_step(const HymState& s, const BaseMetric& w, double lambda, double max_dt) {
  std::vector<HJet> J = hjets(s.h);
  double dt = std::min(s.dt, max_dt);
  for (int k = 0; k <= kMaxHalvings; ++k, dt *= 0.5)
    if (auto next = detail::try_hym_step(s.h, J, w, lambda, dt)) return {s.t + dt, s.dt, std::move(*next), s.steps + 1};
  throw FlowStalled("bundle flow stalled at t = " + format_number(s.t) + " with dt = " + format_number(dt));
}

struct HymRow {
  double t = 0, sup_lambda_F = 0, log_det_change = 0, trace_integral = 0;
};

struct HymResult {
  HymState final_state;
  double lambda = 0;
  std::vector<HymRow> rows;
};

// Runs the bundle flow to time T; rows record sup|Lambda F - lambda I| and the trace identity
// int_0^t (tr Lambda F - r lambda) against log det H(t) - log det H(0) at the first base point.
inline HymResult run_hym(const HermitianBundleState& h0, const BaseMetric& w, double T, double dt = 0,
                         std::optional<double> lambda = std::nullopt, int record_every = 1) {
  h0.validate();
  w.validate(h0.h.size());
  HymResult r;
  std::vector<HJet> J = hjets(h0);
  r.lambda = lambda ? *lambda : hym_lambda(J, w);
  HymState s{0.0, dt > 0 ? dt : hym_default_dt(h0, w), h0, 0};
  double logdet0 = std::log(h0.h[0].determinant().real());
  double acc = 0;
  auto record = [&](const std::vector<HJet>& Jc) {
    HymRow row;
    row.t = s.t;
    row.sup_lambda_F = sup_lambda_F(Jc, w, r.lambda);
    row.log_det_change = std::log(s.h.h[0].determinant().real()) - logdet0;
    row.trace_integral = acc;
    r.rows.push_back(row);
  };
  record(J);
  while (s.t < T - 1e-12) {
    double before = s.t;
    double tr = lambda_F(J[0], base_ginv(w, 0)).trace().real() - 2 * r.lambda;
    s = hym_step(s, w, r.lambda, T - s.t);
    acc += (s.t - before) * tr;
    J = hjets(s.h);
    if (s.steps % record_every == 0 || s.t >= T - 1e-12) record(J);
  }
  r.final_state = s;
  return r;
}

// Least-squares fit of G(w) = v^T M vbar to node values, weighted by the sphere quadrature
// after dividing by 1 + |w|^2.
inline Mat2 refit_metric(const std::vector<double>& G) {
  const SphereQuadrature& q = sphere();
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  for (std::size_t k = 0; k < q.size(); ++k) {
    cplx w = q.w[k];
    double s = 1 + std::norm(w), wt = q.area[k];
    Eigen::Vector4d f(1 / s, 2 * w.real() / s, 2 * w.imag() / s, std::norm(w) / s);
    A += wt * f * f.transpose();
    rhs += wt * f * (G[k] / s);
  }
  Eigen::Vector4d c = A.ldlt().solve(rhs);
  Mat2 M;
  M(0, 0) = c(0);
  M(1, 1) = c(3);
  // G = M00 + 2 Re(M01 wbar) + M11 |w|^2 with v = (1, w).
  M(0, 1) = cplx(c(1), c(2));
  M(1, 0) = std::conj(M(0, 1));
  return M;
}

struct EquivalenceResult {
  double residual = 0, refit_error = 0;
  long steps = 0;
  double dt = 0;
};

// Evolves H by the bundle flow and, separately, phi by the scalar flow phi' = tr c - lambda at the
// sphere nodes (exponential update in log space, refit onto the span of v^T M vbar each step).
// Reports sup |phi_scalar - log G_bundle| at time T over base points and nodes.
inline EquivalenceResult equivalence_check(const HermitianBundleState& h0, const BaseMetric& w, double T, double dt,
                                           double lambda = 0.0) {
  h0.validate();
  const SphereQuadrature& q = sphere();
  HermitianBundleState hb = h0, hs = h0;
  EquivalenceResult r;
  r.dt = dt;
  long steps = std::lround(T / dt);
  for (long k = 0; k < steps; ++k) {
    std::vector<HJet> Jb = hjets(hb), Js = hjets(hs);
    RealField refit(hs.h.size(), 0.0);
    HermitianBundleState nb = hb, ns = hs;
    parallel_for(hb.h.size(), [&](std::size_t b) {
      double gi = base_ginv(w, b);
      Mat2 H = hb.h[b] + dt * (contracted_curvature(Jb[b], gi) - lambda * hb.h[b]);
      nb.h[b] = 0.5 * (H + H.adjoint());
      std::vector<double> G(q.size());
      for (std::size_t n = 0; n < q.size(); ++n) {
        double phi = induced_value(Js[b], 0, q.w[n]);
        double trc = gi * curvature_of(induced_jet(Js[b], 0, q.w[n]))(0, 0).real();
        G[n] = std::exp(phi + dt * (trc - lambda));
      }
      ns.h[b] = refit_metric(G);
      double e = 0;
      for (std::size_t n = 0; n < q.size(); ++n)
        e = std::max(e, std::abs(std::log(pair(chart_vector(0, q.w[n]), ns.h[b], chart_vector(0, q.w[n])).real()) -
                                 std::log(G[n])));
      refit[b] = e;
    });
    r.refit_error = std::max(r.refit_error, max_of(refit));
    hb = std::move(nb);
    hs = std::move(ns);
  }
  RealField worst(hb.h.size(), 0.0);
  parallel_for(hb.h.size(), [&](std::size_t b) {
    for (std::size_t n = 0; n < q.size(); ++n) {
      Eigen::Vector2cd s = chart_vector(0, q.w[n]);
      worst[b] = std::max(worst[b], std::abs(std::log(pair(s, hs.h[b], s).real()) - std::log(pair(s, hb.h[b], s).real())));
    }
  });
  r.residual = max_of(worst);
  r.steps = steps;
  return r;
}

// GEFLD1 dump of H with dims (N, N, 2, 2, 2): row, column, then real and imaginary parts.
inline void dump_bundle(const HermitianBundleState& st, const std::string& path) {
  ArrayDump a;
  a.dims = {static_cast<std::uint32_t>(st.N), static_cast<std::uint32_t>(st.N), 2, 2, 2};
  for (const auto& H : st.h)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        a.data.push_back(H(i, j).real());
        a.data.push_back(H(i, j).imag());
      }
  write_array(path, a);
  nlohmann::json side = {{"N", st.N},
                         {"scheme", st.scheme == DiffScheme::FD4 ? "fd4" : "spectral"},
                         {"checksum", checksum(a.data)}};
  write_file(path + ".json", side.dump(2));
}

inline HermitianBundleState load_bundle(const std::string& path) {
  ArrayDump a = read_array(path);
  if (a.dims.size() != 5 || a.dims[0] != a.dims[1] || a.dims[2] != 2 || a.dims[3] != 2 || a.dims[4] != 2)
    throw FormatError("bundle dump: expected dims (N, N, 2, 2, 2)");
  HermitianBundleState st;
  st.N = static_cast<int>(a.dims[0]);
  std::size_t k = 0;
  st.h.resize(st.base().size());
  for (auto& H : st.h)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j, k += 2) H(i, j) = cplx(a.data[k], a.data[k + 1]);
  return st;
}

}  // namespace geflow
