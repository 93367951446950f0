#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "grid.hpp"
#include "parallel.hpp"
#include "stencil.hpp"

namespace geflow {

// Smallest admissible fiber Hessian eigenvalue.
inline constexpr double kFiberGuard = 1e-6;

// Small dense Hermitian matrix, row-major, at most 2x2 on the base.
struct HMat {
  int m = 1;
  std::array<cplx, 4> a{};
  cplx& operator()(int i, int j) { return a[i * m + j]; }
  cplx operator()(int i, int j) const { return a[i * m + j]; }
  static HMat zero(int m) { HMat h; h.m = m; return h; }
  static HMat identity(int m, double s = 1.0) {
    HMat h = zero(m);
    for (int i = 0; i < m; ++i) h(i, i) = s;
    return h;
  }
  double trace() const {
    double t = 0;
    for (int i = 0; i < m; ++i) t += a[i * m + i].real();
    return t;
  }
  cplx det() const { return m == 1 ? a[0] : a[0] * a[3] - a[1] * a[2]; }
  HMat inverse() const {
    HMat r = zero(m);
    if (m == 1) {
      r.a[0] = 1.0 / a[0];
      return r;
    }
    cplx d = det();
    r.a[0] = a[3] / d;
    r.a[1] = -a[1] / d;
    r.a[2] = -a[2] / d;
    r.a[3] = a[0] / d;
    return r;
  }
  double min_eig() const {
    if (m == 1) return a[0].real();
    double t = a[0].real() + a[3].real(), d = det().real();
    return 0.5 * t - std::sqrt(std::max(0.0, 0.25 * t * t - d));
  }
  double hermitian_defect() const {
    double e = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) e = std::max(e, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return e;
  }
};

// Contraction g^{a bbar} c_{a bbar}, with g^{a bbar} g_{c bbar} = delta.
inline cplx contract(const HMat& ginv_t, const HMat& c) {
  cplx s = 0;
  for (int a = 0; a < c.m; ++a)
    for (int b = 0; b < c.m; ++b) s += ginv_t(b, a) * c(a, b);
  return s;
}

// Kahler form on the base: omega = i g_{a bbar} dz^a ^ dzbar^b.
struct BaseMetric {
  int m = 1;
  bool constant = true;
  std::vector<HMat> g;  // one entry when constant, otherwise one per base point

  static BaseMetric flat(int m, double s = 1.0) {
    BaseMetric b;
    b.m = m;
    b.g = {HMat::identity(m, s)};
    return b;
  }
  static BaseMetric diagonal(const std::vector<double>& d) {
    BaseMetric b;
    b.m = static_cast<int>(d.size());
    HMat h = HMat::zero(b.m);
    for (int i = 0; i < b.m; ++i) h(i, i) = d[i];
    b.g = {h};
    return b;
  }
  const HMat& at(std::size_t base) const { return constant ? g[0] : g[base]; }
  // Matrix of g^{a bbar} stored so that contract(inv_t(b), c) = g^{a bbar} c_{a bbar}.
  HMat inv_t(std::size_t base) const { return at(base).inverse(); }
  double max_inverse_eig() const {
    double mx = 0;
    for (const auto& h : g) {
      HMat inv = h.inverse();
      double t = inv.trace();
      double big = inv.m == 1 ? t : 0.5 * t + std::sqrt(std::max(0.0, 0.25 * t * t - inv.det().real()));
      mx = std::max(mx, big);
    }
    return mx;
  }
  double min_eig() const {
    double mn = 1e300;
    for (const auto& h : g) mn = std::min(mn, h.min_eig());
    return mn;
  }
  void validate(std::size_t base_size) const {
    if (!constant && g.size() != base_size) throw ConfigError("base metric: coefficient field has wrong size");
    if (m == 2 && !constant) throw ConfigError("base metric: m = 2 requires constant coefficients");
    if (min_eig() <= 0) throw ConfigError("base metric: not positive definite");
  }
};

// Weight phi = kappa |v|^2 / 2 + z^T A zbar + psi(z, v) + p(z).
// The quadratic parts are symbolic; psi and p are periodic grid arrays.
struct MetricField {
  GridSpec grid;
  DiffScheme scheme = DiffScheme::FD4;
  double kappa = 2.0;
  HMat A = HMat::zero(1);
  RealField psi;
  RealField p;
  std::string scenario = "custom";

  static MetricField reference(const GridSpec& g, double kappa = 2.0, DiffScheme s = DiffScheme::FD4) {
    g.validate();
    MetricField f;
    f.grid = g;
    f.scheme = s;
    f.kappa = kappa;
    f.A = HMat::zero(g.m);
    f.psi.assign(g.size(), 0.0);
    return f;
  }
  Differ total_differ() const { return Differ(grid.total(), scheme); }
  Differ base_differ() const { return Differ(grid.base(), scheme); }
  bool has_p() const { return !p.empty(); }
  // Periodic part psi + p at a total-grid point.
  double periodic_at(std::size_t i) const { return psi[i] + (has_p() ? p[grid.base_of(i)] : 0.0); }
};

// Second-order jet at one point: blocks phi_{a bbar}, phi_{a vbar}, phi_{v vbar}.
struct JetTensor {
  HMat bb;
  std::array<cplx, 2> bf{};
  double ff = 0.0;
  int m() const { return bb.m; }
  // Full (m+1)x(m+1) Hessian, row-major; last index is the fiber.
  void full(cplx* H) const {
    int d = m() + 1;
    for (int a = 0; a < m(); ++a) {
      for (int b = 0; b < m(); ++b) H[a * d + b] = bb(a, b);
      H[a * d + m()] = bf[a];
      H[m() * d + a] = std::conj(bf[a]);
    }
    H[m() * d + m()] = ff;
  }
};

// Jets of every grid point, struct-of-arrays.
struct JetField {
  int m = 1;
  std::vector<HMat> bb;
  std::vector<std::array<cplx, 2>> bf;
  RealField ff;
  std::size_t size() const { return ff.size(); }
  JetTensor at(std::size_t i) const {
    JetTensor j;
    j.bb = bb[i];
    j.bf = bf[i];
    j.ff = ff[i];
    return j;
  }
};

namespace detail {

inline std::vector<HMat> base_hessian(const MetricField& f) {
  int m = f.grid.m;
  std::vector<HMat> out(f.grid.base_size(), HMat::zero(m));
  if (!f.has_p()) return out;
  Differ D = f.base_differ();
  parallel_for(out.size(), [&](std::size_t b) {
    HMat h = HMat::zero(m);
    for (int a = 0; a < m; ++a)
      for (int c = a; c < m; ++c) {
        cplx v = D.ddbar(f.p.data(), b, a, c);
        h(a, c) = v;
        if (c != a) h(c, a) = std::conj(v);
      }
    out[b] = h;
  });
  return out;
}

template <class Src>
JetTensor raw_jet(const MetricField& f, const Differ& D, const Src& src, const std::vector<HMat>& pb, std::size_t i) {
  int m = f.grid.m;
  JetTensor j;
  j.bb = HMat::zero(m);
  const HMat& ph = pb[f.grid.base_of(i)];
  for (int a = 0; a < m; ++a)
    for (int c = a; c < m; ++c) {
      cplx v = f.A(a, c) + D.ddbar(src, i, a, c) + ph(a, c);
      if (c == a) v = {v.real(), 0.0};
      j.bb(a, c) = v;
      if (c != a) j.bb(c, a) = std::conj(v);
    }
  for (int a = 0; a < m; ++a) j.bf[a] = D.ddbar(src, i, a, m);
  j.ff = 0.5 * f.kappa + D.ddbar(src, i, m, m).real();
  return j;
}

}  // namespace detail

// All jets, without admissibility checks.
inline JetField compute_jets(const MetricField& f) {
  Differ D = f.total_differ();
  auto pb = detail::base_hessian(f);
  auto grad = D.gradient(f.psi);
  JetField J;
  J.m = f.grid.m;
  std::size_t n = f.grid.size();
  J.bb.resize(n);
  J.bf.resize(n);
  J.ff.resize(n);
  parallel_for(n, [&](std::size_t i) {
    JetTensor t = detail::raw_jet(f, D, grad, pb, i);
    J.bb[i] = t.bb;
    J.bf[i] = t.bf;
    J.ff[i] = t.ff;
  });
  return J;
}

inline double min_fiber_eig(const JetField& J) { return min_of(J.ff); }

// Throws NonAdmissible at the worst point if the fiber Hessian falls below the guard.
inline void require_admissible(const JetField& J) {
  std::size_t worst = 0;
  for (std::size_t i = 1; i < J.size(); ++i)
    if (J.ff[i] < J.ff[worst]) worst = i;
  if (J.ff[worst] < kFiberGuard) throw NonAdmissible(worst, J.ff[worst]);
}

inline JetField admissible_jets(const MetricField& f) {
  JetField J = compute_jets(f);
  require_admissible(J);
  return J;
}

inline JetTensor jet_at(const MetricField& f, std::size_t i) {
  Differ D = f.total_differ();
  auto pb = detail::base_hessian(f);
  JetTensor t = detail::raw_jet(f, D, f.psi.data(), pb, i);
  if (t.ff < kFiberGuard) throw NonAdmissible(i, t.ff);
  return t;
}

// Trigonometric mode a * cos(k . x + phase) on a lattice.
struct Mode {
  double amplitude = 0.0;
  std::vector<int> freq;
  double phase = 0.0;
};

inline RealField sample_modes(const Lattice& lat, const std::vector<Mode>& modes) {
  RealField out(lat.size(), 0.0);
  for (const auto& md : modes)
    if (static_cast<int>(md.freq.size()) != lat.dims) throw ConfigError("mode frequency vector has wrong length");
  parallel_for(out.size(), [&](std::size_t i) {
    double s = 0.0;
    for (const auto& md : modes) {
      double th = md.phase;
      for (int k = 0; k < lat.dims; ++k) th += md.freq[k] * lat.x(i, k);
      s += md.amplitude * std::cos(th);
    }
    out[i] = s;
  });
  return out;
}

}  // namespace geflow
