#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <vector>

#include "field.hpp"

namespace geflow {

// Square complex matrix of dimension D <= 3 (row-major).
struct SqMat {
  int D = 0;
  std::array<cplx, 9> a{};
  cplx& operator()(int i, int j) { return a[i * D + j]; }
  cplx operator()(int i, int j) const { return a[i * D + j]; }
};

inline cplx det(const SqMat& M) {
  switch (M.D) {
    case 1:
      return M(0, 0);
    case 2:
      return M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    case 3:
      return M(0, 0) * (M(1, 1) * M(2, 2) - M(1, 2) * M(2, 1)) - M(0, 1) * (M(1, 0) * M(2, 2) - M(1, 2) * M(2, 0)) +
             M(0, 2) * (M(1, 0) * M(2, 1) - M(1, 1) * M(2, 0));
    default:
      throw ContractViolation("det: unsupported dimension");
  }
}

// Coefficient of s_1 ... s_D in det(sum_j s_j A_j). For (1,1)-forms
// alpha_j = i A_j{a bbar} dw^a ^ dwbar^b this gives
// alpha_1 ^ ... ^ alpha_D = M * prod_a (i dw^a ^ dwbar^a).
inline cplx mixed_disc(const std::vector<const SqMat*>& A) {
  int D = A[0]->D;
  std::array<int, 3> perm{0, 1, 2};
  cplx total = 0;
  do {
    SqMat M;
    M.D = D;
    for (int c = 0; c < D; ++c)
      for (int r = 0; r < D; ++r) M(r, c) = (*A[perm[c]])(r, c);
    total += det(M);
  } while (std::next_permutation(perm.begin(), perm.begin() + D));
  return total;
}

// Real-Lebesgue density of a wedge of D (1,1)-forms: prod_a (i dw ^ dwbar) = 2^D dV.
inline double top_density(const std::vector<const SqMat*>& A) {
  double scale = static_cast<double>(1 << A[0]->D);
  return scale * mixed_disc(A).real();
}

// Full Hessian of a jet as an (m+1)x(m+1) matrix.
inline SqMat hessian_matrix(const JetTensor& j) {
  SqMat H;
  H.D = j.m() + 1;
  j.full(H.a.data());
  return H;
}

// Pullback of the base metric, padded with zeros in the fiber slot.
inline SqMat padded_base(const HMat& g) {
  SqMat G;
  G.D = g.m + 1;
  for (int a = 0; a < g.m; ++a)
    for (int b = 0; b < g.m; ++b) G(a, b) = g(a, b);
  return G;
}

// Top density of H_1^{k_1} ^ H_2^{k_2} ^ ... with sum k = D.
inline double wedge_powers(const std::vector<std::pair<const SqMat*, int>>& parts) {
  std::vector<const SqMat*> list;
  for (auto& [M, k] : parts)
    for (int i = 0; i < k; ++i) list.push_back(M);
  return top_density(list);
}

inline double factorial(int k) {
  double r = 1;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

inline double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

}  // namespace geflow
