#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "grid.hpp"
#include "parallel.hpp"

namespace geflow {

enum class DiffScheme { FD4, Spectral };

struct Stencil1D {
  std::vector<int> off;
  std::vector<double> w;
};

// First derivative on a periodic axis with N points and spacing 2*pi/N,
// stored as antisymmetric pairs: (Df)_i = sum_k w_k (f_{i+o_k} - f_{i-o_k}).
inline Stencil1D first_stencil(int N, DiffScheme scheme) {
  double h = kTwoPi / N;
  Stencil1D s;
  if (scheme == DiffScheme::FD4) {
    s.off = {1, 2};
    s.w = {8.0 / (12 * h), -1.0 / (12 * h)};
    return s;
  }
  for (int o = 1; o < N / 2; ++o) {
    double sign = (o % 2 == 0) ? 1.0 : -1.0;
    s.off.push_back(o);
    s.w.push_back(-0.5 * sign / std::tan(o * h / 2.0));
  }
  return s;
}

// Pointwise derivative evaluation on a lattice. Every second derivative is a
// nested composition of the same first-derivative operator, so discrete
// summation by parts holds and fields constant along an axis have exactly
// zero derivative along it.
class Differ {
 public:
  Differ() = default;
  Differ(Lattice lat, DiffScheme scheme) : lat_(lat), scheme_(scheme) {
    d1_ = first_stencil(lat.N, scheme);
    for (int k = 0; k < lat.dims; ++k) stride_[k] = lat.stride(k);
  }

  const Lattice& lattice() const { return lat_; }
  DiffScheme scheme() const { return scheme_; }

  std::size_t shift(std::size_t i, int axis, int off) const {
    std::size_t s = stride_[axis];
    int c = static_cast<int>((i / s) % lat_.N);
    int nc = (c + off) % lat_.N;
    if (nc < 0) nc += lat_.N;
    return i + static_cast<std::size_t>(nc) * s - static_cast<std::size_t>(c) * s;
  }

  template <class T>
  T d(const T* f, std::size_t i, int a) const {
    T acc{};
    for (std::size_t k = 0; k < d1_.off.size(); ++k)
      acc += d1_.w[k] * (f[shift(i, a, d1_.off[k])] - f[shift(i, a, -d1_.off[k])]);
    return acc;
  }

  template <class T>
  T dd(const T* f, std::size_t i, int a, int b) const {
    T acc{};
    for (std::size_t k = 0; k < d1_.off.size(); ++k) {
      int o = d1_.off[k];
      acc += d1_.w[k] * (d(f, shift(i, a, o), b) - d(f, shift(i, a, -o), b));
    }
    return acc;
  }

  // d/dw_a (bar = false) or d/dwbar_a (bar = true).
  template <class T>
  cplx wirtinger(const T* f, std::size_t i, int a, bool bar) const {
    cplx dx = d(f, i, 2 * a), dy = d(f, i, 2 * a + 1);
    if (!bar) return {0.5 * (dx.real() + dy.imag()), 0.5 * (dx.imag() - dy.real())};
    return {0.5 * (dx.real() - dy.imag()), 0.5 * (dx.imag() + dy.real())};
  }

  // f_{a bbar} for a real field.
  cplx ddbar(const double* f, std::size_t i, int a, int b) const {
    return ddbar_real([&](int p, int q) { return dd(f, i, p, q); }, a, b);
  }

  // First derivatives along every axis; ddbar(grad, ...) then reproduces ddbar(f, ...) bitwise.
  std::vector<std::vector<double>> gradient(const std::vector<double>& f) const {
    std::vector<std::vector<double>> g(lat_.dims, std::vector<double>(f.size()));
    for (int k = 0; k < lat_.dims; ++k) parallel_for(f.size(), [&](std::size_t i) { g[k][i] = d(f.data(), i, k); });
    return g;
  }

  cplx ddbar(const std::vector<std::vector<double>>& grad, std::size_t i, int a, int b) const {
    return ddbar_real([&](int p, int q) { return d(grad[q].data(), i, p); }, a, b);
  }

  // f_{a bbar} for a complex field.
  cplx ddbar(const cplx* f, std::size_t i, int a, int b) const {
    int xa = 2 * a, ya = 2 * a + 1, xb = 2 * b, yb = 2 * b + 1;
    const cplx I(0.0, 1.0);
    cplx r = dd(f, i, xa, xb) + dd(f, i, ya, yb) + I * (dd(f, i, xa, yb) - dd(f, i, ya, xb));
    return 0.25 * r;
  }

 private:
  template <class F>
  static cplx ddbar_real(F&& second, int a, int b) {
    int xa = 2 * a, ya = 2 * a + 1, xb = 2 * b, yb = 2 * b + 1;
    if (a == b) return {0.25 * (second(xa, xa) + second(ya, ya)), 0.0};
    double re = second(xa, xb) + second(ya, yb);
    double im = second(xa, yb) - second(ya, xb);
    return {0.25 * re, 0.25 * im};
  }

  Lattice lat_{};
  DiffScheme scheme_ = DiffScheme::FD4;
  Stencil1D d1_;
  std::array<std::size_t, 6> stride_{};
};

inline ComplexField wirtinger_derivative(const Differ& D, const RealField& f, int a, bool bar) {
  if (D.lattice().N < 8) throw ConfigError("wirtinger_derivative: N < 8");
  ComplexField out(f.size());
  parallel_for(f.size(), [&](std::size_t i) { out[i] = D.wirtinger(f.data(), i, a, bar); });
  return out;
}

inline ComplexField wirtinger_derivative(const Differ& D, const ComplexField& f, int a, bool bar) {
  if (D.lattice().N < 8) throw ConfigError("wirtinger_derivative: N < 8");
  ComplexField out(f.size());
  parallel_for(f.size(), [&](std::size_t i) { out[i] = D.wirtinger(f.data(), i, a, bar); });
  return out;
}

// D e^{ikx} = i * sigma(k) e^{ikx}.
inline double derivative_symbol(int N, DiffScheme scheme, int k) {
  Stencil1D s = first_stencil(N, scheme);
  double h = kTwoPi / N, acc = 0.0;
  for (std::size_t j = 0; j < s.off.size(); ++j) acc += 2.0 * s.w[j] * std::sin(k * s.off[j] * h);
  return acc;
}

}  // namespace geflow
