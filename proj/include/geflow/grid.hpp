#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"

namespace geflow {

using cplx = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<cplx>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Periodic lattice with `dims` real axes of N points each, row-major.
// Holomorphic coordinate a owns the axis pair (2a, 2a+1): w_a = x_{2a} + i x_{2a+1}.
struct Lattice {
  int dims = 0;
  int N = 0;

  std::size_t size() const {
    std::size_t s = 1;
    for (int k = 0; k < dims; ++k) s *= static_cast<std::size_t>(N);
    return s;
  }
  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int k = axis + 1; k < dims; ++k) s *= static_cast<std::size_t>(N);
    return s;
  }
  int coord(std::size_t idx, int axis) const { return static_cast<int>((idx / stride(axis)) % N); }
  double h() const { return kTwoPi / N; }
  double x(std::size_t idx, int axis) const { return coord(idx, axis) * h(); }
  double cell_volume() const { return std::pow(h(), dims); }
  std::size_t shift(std::size_t idx, int axis, int off) const {
    std::size_t s = stride(axis);
    int c = static_cast<int>((idx / s) % N);
    int nc = ((c + off) % N + N) % N;
    return idx + static_cast<std::size_t>(nc) * s - static_cast<std::size_t>(c) * s;
  }
};

enum class FiberKind { Torus, Projective };

struct GridSpec {
  int m = 1;
  int n = 1;
  int N = 16;
  FiberKind kind = FiberKind::Torus;

  void validate() const {
    if (m != 1 && m != 2) throw ConfigError("grid: base dimension must be 1 or 2");
    if (n != 1) throw ConfigError("grid: fiber dimension must be 1");
    if (N < 8 || N % 2 != 0) throw ConfigError("grid: N must be even and >= 8");
    if (2 * m + 2 * n > 6) throw ConfigError("grid: total real dimension exceeds 6");
    if (m == 2 && N > 12) throw ConfigError("grid: m = 2 grids are capped at N = 12");
  }

  Lattice total() const { return Lattice{2 * m + 2 * n, N}; }
  Lattice base() const { return Lattice{2 * m, N}; }
  std::size_t size() const { return total().size(); }
  std::size_t base_size() const { return base().size(); }
  std::size_t fiber_size() const { return static_cast<std::size_t>(N) * N; }
  std::size_t base_of(std::size_t idx) const { return idx / fiber_size(); }
  double h() const { return kTwoPi / N; }
  double fiber_cell() const { return h() * h(); }
  double base_cell() const { return std::pow(h(), 2 * m); }
  int fiber_axis(int k) const { return 2 * m + k; }

  bool operator==(const GridSpec& o) const { return m == o.m && n == o.n && N == o.N && kind == o.kind; }
};

inline std::string to_string(FiberKind k) { return k == FiberKind::Torus ? "torus-fiber" : "projective-fiber"; }

}  // namespace geflow
