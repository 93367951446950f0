#pragma once

#include <Eigen/Dense>
#include <boost/rational.hpp>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "functionals.hpp"

namespace geflow {

// Form field on the base: (1,1) coefficients or top-degree coefficients
// relative to prod_a (i dz^a ^ dzbar^a).
struct FormField {
  int m = 1;
  int degree = 1;
  std::vector<HMat> c11;
  RealField top;
  std::size_t size() const { return degree == m ? top.size() : c11.size(); }
};

namespace detail {

inline SqMat as_sq(const HMat& h) {
  SqMat S;
  S.D = h.m;
  for (int a = 0; a < h.m; ++a)
    for (int b = 0; b < h.m; ++b) S(a, b) = h(a, b);
  return S;
}

// Top coefficient of alpha ^ beta for m = 2.
inline double wedge11(const HMat& a, const HMat& b) {
  SqMat A = as_sq(a), B = as_sq(b);
  return mixed_disc({&A, &B}).real();
}

inline HMat scaled(const HMat& h, double s) {
  HMat r = h;
  for (auto& v : r.a) v *= s;
  return r;
}

}  // namespace detail

struct ClassLadder {
  int m = 1, n = 1;
  double S0 = 0, S0_spread = 0;
  RealField S0_field;
  FormField S1;
  FormField S2;  // m = 2 only
  RealField c_variation;  // per base point: max fiber deviation of c from its fiber mean
};

// S_k = binom(n+k, k) / (2 pi)^{n+k} int_fiber c^k (i ddbar phi)^n per base point.
inline ClassLadder s_forms(const MetricField& phi) {
  const GridSpec& g = phi.grid;
  JetField J = admissible_jets(phi);
  int m = g.m, n = g.n;
  std::size_t nb = g.base_size(), fs = g.fiber_size();
  ClassLadder L;
  L.m = m;
  L.n = n;
  L.S0_field.resize(nb);
  L.S1 = {m, 1, std::vector<HMat>(nb, HMat::zero(m)), {}};
  if (m == 1) L.S1 = {1, 1, {}, RealField(nb)};
  if (m == 2) L.S2 = {2, 2, {}, RealField(nb)};
  L.c_variation.resize(nb);
  const double tp = kTwoPi;
  parallel_for(nb, [&](std::size_t b) {
    std::vector<double> w0(fs), top(fs);
    std::vector<std::vector<double>> w1(m * m, std::vector<double>(fs));
    std::vector<HMat> cs(fs);
    for (std::size_t j = 0; j < fs; ++j) {
      std::size_t i = b * fs + j;
      JetTensor t = J.at(i);
      HMat c = curvature_of(t);
      cs[j] = c;
      double dens = 2.0 * t.ff;
      w0[j] = dens;
      for (int a = 0; a < m; ++a) {
        w1[a * m + a][j] = c(a, a).real() * dens;
        for (int e = a + 1; e < m; ++e) {
          w1[a * m + e][j] = c(a, e).real() * dens;
          w1[e * m + a][j] = c(a, e).imag() * dens;
        }
      }
      if (m == 2) top[j] = 2.0 * c.det().real() * dens;
    }
    double cell = g.fiber_cell();
    double s0 = pairwise_sum(w0) * cell / std::pow(tp, n);
    L.S0_field[b] = s0;
    double k1 = binomial(n + 1, 1) / std::pow(tp, n + 1) * cell;
    HMat s1 = HMat::zero(m);
    for (int a = 0; a < m; ++a) {
      s1(a, a) = pairwise_sum(w1[a * m + a]) * k1;
      for (int e = a + 1; e < m; ++e) {
        cplx v(pairwise_sum(w1[a * m + e]) * k1, pairwise_sum(w1[e * m + a]) * k1);
        s1(a, e) = v;
        s1(e, a) = std::conj(v);
      }
    }
    if (m == 1)
      L.S1.top[b] = s1(0, 0).real();
    else
      L.S1.c11[b] = s1;
    if (m == 2) L.S2.top[b] = pairwise_sum(top) * binomial(n + 2, 2) / std::pow(tp, n + 2) * cell;
    HMat mean = HMat::zero(m);
    for (const auto& c : cs)
      for (int k = 0; k < m * m; ++k) mean.a[k] += c.a[k] / static_cast<double>(fs);
    double var = 0;
    for (const auto& c : cs)
      for (int k = 0; k < m * m; ++k) var = std::max(var, std::abs(c.a[k] - mean.a[k]));
    L.c_variation[b] = var;
  });
  double lo = min_of(L.S0_field), hi = max_of(L.S0_field);
  L.S0 = pairwise_sum(L.S0_field) / static_cast<double>(nb);
  L.S0_spread = (hi - lo) / std::abs(L.S0);
  return L;
}

// Coefficients of 1/(s0 + s1 x + s2 x^2 + ...) through the given degree.
template <class T>
std::vector<T> invert_series(const std::vector<T>& s, int degree) {
  if (s.empty() || !(s[0] != T(0))) throw ConfigError("series inversion: leading coefficient must be nonzero");
  std::vector<T> c(degree + 1, T(0));
  c[0] = T(1) / s[0];
  for (int k = 1; k <= degree; ++k) {
    T acc(0);
    for (int j = 1; j <= k && j < static_cast<int>(s.size()); ++j) acc += s[j] * c[k - j];
    c[k] = -acc / s[0];
  }
  return c;
}

template <class T>
std::vector<T> multiply_series(const std::vector<T>& a, const std::vector<T>& b, int degree) {
  std::vector<T> r(degree + 1, T(0));
  for (int i = 0; i <= degree && i < static_cast<int>(a.size()); ++i)
    for (int j = 0; i + j <= degree && j < static_cast<int>(b.size()); ++j) r[i + j] += a[i] * b[j];
  return r;
}

struct CForms {
  double C0 = 0;
  FormField C1;
  FormField C2;  // m = 2 only
};

// C_0 = 1/S_0, C_1 = -S_1/S_0^2, C_2 = (S_1^2 - S_0 S_2)/S_0^3.
inline CForms c_forms(const ClassLadder& L) {
  if (!(L.S0 > 0)) throw ConfigError("c_forms: degenerate scenario, S0 is not positive");
  CForms C;
  double s0 = L.S0;
  C.C0 = 1.0 / s0;
  C.C1 = L.S1;
  if (L.m == 1) {
    for (double& v : C.C1.top) v *= -1.0 / (s0 * s0);
    return C;
  }
  for (auto& h : C.C1.c11) h = detail::scaled(h, -1.0 / (s0 * s0));
  C.C2 = {2, 2, {}, RealField(L.S2.top.size())};
  for (std::size_t b = 0; b < C.C2.top.size(); ++b) {
    double s1s1 = detail::wedge11(L.S1.c11[b], L.S1.c11[b]);
    C.C2.top[b] = (s1s1 - s0 * L.S2.top[b]) / (s0 * s0 * s0);
  }
  return C;
}

// Integral over the base of a top-degree field.
inline double integrate_top(const GridSpec& g, const RealField& top) {
  return pairwise_sum(top) * std::pow(2.0, g.m) * g.base_cell();
}

struct PositivityResult {
  double min_value = 0;
  std::size_t samples = 0, resampled = 0;
  std::size_t worst_base = 0;
};

// Samples (-i)^{k^2} Phi(v_1..v_k, vbar_1..vbar_k) over seeded base points and tuples.
inline PositivityResult positivity_check(const FormField& F, std::size_t samples = 1000, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> pick(0, F.size() - 1);
  PositivityResult R;
  R.min_value = 1e300;
  int m = F.m, k = F.degree;
  while (R.samples < samples) {
    std::size_t b = pick(rng);
    std::array<cplx, 4> V{};
    for (auto& v : V) v = cplx(normal(rng), normal(rng));
    double value = 0;
    if (k == 1) {
      double nv = 0;
      for (int a = 0; a < m; ++a) nv += std::norm(V[a]);
      if (nv < 1e-16) {
        ++R.resampled;
        continue;
      }
      if (m == 1) {
        value = F.top[b] * std::norm(V[0]) / nv;
      } else {
        cplx s = 0;
        for (int a = 0; a < m; ++a)
          for (int e = 0; e < m; ++e) s += F.c11[b](a, e) * V[a] * std::conj(V[e]);
        value = s.real() / nv;
      }
    } else {
      Eigen::Matrix2cd M;
      M << V[0], V[2], V[1], V[3];
      Eigen::JacobiSVD<Eigen::Matrix2cd> svd(M);
      auto sv = svd.singularValues();
      if (sv(1) <= 0 || sv(0) / sv(1) > 1e8) {
        ++R.resampled;
        continue;
      }
      double d = std::norm(M.determinant());
      value = F.top[b] * d / (M.squaredNorm() * M.squaredNorm());
    }
    ++R.samples;
    if (value < R.min_value) {
      R.min_value = value;
      R.worst_base = b;
    }
  }
  return R;
}

// Inequality gaps for m = 2, as top coefficients per base point.
struct GapField {
  RealField gap;
  double min = 0, integral = 0;
};

inline void require_m2(const GridSpec& g, const char* what) {
  if (g.m != 2) throw ConfigError(std::string(what) + ": requires base dimension m = 2");
}

inline GapField finish_gap(const GridSpec& g, RealField gap) {
  GapField G;
  G.min = min_of(gap);
  G.integral = integrate_top(g, gap);
  G.gap = std::move(gap);
  return G;
}

// ((n+1)(n+2)/(8 pi^2 m^2)) lambda^2 S_0 omega^m - S_2 ^ omega^{m-2}.
inline GapField s2_bound_gap(const GridSpec& g, const ClassLadder& L, const BaseMetric& w, double lambda) {
  require_m2(g, "s2_bound_gap");
  int m = g.m, n = g.n;
  double K = (n + 1.0) * (n + 2.0) / (8 * std::numbers::pi * std::numbers::pi * m * m);
  RealField gap(L.S2.top.size());
  for (std::size_t b = 0; b < gap.size(); ++b) {
    double om = 2.0 * w.at(b).det().real();
    gap[b] = K * lambda * lambda * L.S0 * om - L.S2.top[b];
  }
  return finish_gap(g, std::move(gap));
}

// -(n C_1^2 - 2(n+1) C_0 C_2) ^ omega^{m-2}.
inline GapField c2_bound_gap(const GridSpec& g, const ClassLadder& L) {
  require_m2(g, "c2_bound_gap");
  CForms C = c_forms(L);
  int n = g.n;
  RealField gap(C.C2.top.size());
  for (std::size_t b = 0; b < gap.size(); ++b)
    gap[b] = -(n * detail::wedge11(C.C1.c11[b], C.C1.c11[b]) - 2.0 * (n + 1) * C.C0 * C.C2.top[b]);
  return finish_gap(g, std::move(gap));
}

// Base points where c is fiberwise constant, the equality locus of the C-form gap.
inline std::vector<bool> equality_points(const ClassLadder& L, double tol = 1e-10) {
  std::vector<bool> eq(L.c_variation.size());
  for (std::size_t b = 0; b < eq.size(); ++b) eq[b] = L.c_variation[b] <= tol;
  return eq;
}

// m(m-1) alpha ^ alpha ^ omega^{m-2} against ((tr alpha)^2 - |alpha|^2) omega^m, m = 2.
inline double form_identity_residual(const std::vector<HMat>& alpha, const BaseMetric& w) {
  double worst = 0;
  for (std::size_t b = 0; b < alpha.size(); ++b) {
    const HMat& a = alpha[b];
    if (a.m != 2) throw ConfigError("form_identity_residual: requires m = 2");
    const HMat& g = w.at(w.constant ? 0 : b);
    HMat gi = g.inverse();
    double lhs = 2.0 * detail::wedge11(a, a);
    double tr = contract(gi, a).real();
    cplx sq = 0;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q)
        for (int r = 0; r < 2; ++r)
          for (int s = 0; s < 2; ++s) sq += gi(q, p) * gi(s, r) * a(p, s) * a(r, q);
    double rhs = (tr * tr - sq.real()) * 2.0 * g.det().real();
    double scale = std::max(1.0, std::abs(tr * tr) + std::abs(sq));
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

using Rational = boost::rational<std::int64_t>;

// A sub-fibration Y with its intersection numbers ([omega]^{m-1} c1^{n'+1})[Y] and ([omega]^m c1^{n'})[Y].
struct SubFibrationSpec {
  std::string name;
  int m = 1;
  int fiber_dim = 1;
  Rational numerator, denominator;
};

// lambda_Y / (2 pi) = m / (n'+1) * numerator / denominator.
inline Rational sub_lambda(const SubFibrationSpec& s) {
  if (s.denominator <= 0) throw ConfigError("sub-fibration '" + s.name + "': denominator must be positive");
  return Rational(s.m, s.fiber_dim + 1) * s.numerator / s.denominator;
}

struct Verdict {
  bool semistable = true;
  Rational lambda_X;
  std::vector<std::pair<std::string, Rational>> lambdas;
  std::string destabilizing;
};

inline Verdict semistability_verdict(const SubFibrationSpec& X, const std::vector<SubFibrationSpec>& subs) {
  Verdict v;
  v.lambda_X = sub_lambda(X);
  for (const auto& s : subs) {
    Rational l = sub_lambda(s);
    v.lambdas.push_back({s.name, l});
    if (boost::rational_cast<double>(l - v.lambda_X) < -1e-12 && v.semistable) {
      v.semistable = false;
      v.destabilizing = s.name;
    }
  }
  return v;
}

// P(E) = lines in E over a curve of omega-volume V, E a sum of line bundles and L the
// bundle with weight log G. Then int_X c1(L)^2 = -deg E, and the section Y = P(S) of a
// line summand S has int_Y c1(L) = -deg S: X has numbers (-deg E, V), Y has (-deg S, V).
struct SplitBundle {
  std::vector<std::int64_t> degrees;
  Rational volume{1};
};

inline SubFibrationSpec total_space_spec(const SplitBundle& E) {
  if (E.degrees.size() != 2) throw ConfigError("projective bundle: rank 2 only");
  std::int64_t deg = 0;
  for (auto d : E.degrees) deg += d;
  return {"X", 1, static_cast<int>(E.degrees.size()) - 1, Rational(-deg), E.volume};
}

inline std::vector<SubFibrationSpec> line_summand_specs(const SplitBundle& E) {
  std::vector<SubFibrationSpec> out{total_space_spec(E)};
  for (std::size_t i = 0; i < E.degrees.size(); ++i)
    out.push_back({"P(O(" + std::to_string(E.degrees[i]) + "))", 1, 0, Rational(-E.degrees[i]), E.volume});
  return out;
}

inline std::string to_string(const Rational& r) {
  return r.denominator() == 1 ? std::to_string(r.numerator())
                              : std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace geflow
