#include "doctest.h"
#include "geflow/hym.hpp"

using namespace geflow;

namespace {

RealField cos_mode(int N, double eps) {
  return sample_modes(Lattice{2, N}, {{eps, {1, 0}, 0.0}});
}

// Positive Hermitian field with nonconstant off-diagonal terms.
HermitianBundleState generic_state(int N, DiffScheme s = DiffScheme::Spectral) {
  Lattice lat{2, N};
  HermitianBundleState st = HermitianBundleState::constant(N, Mat2::Identity(), s);
  for (std::size_t b = 0; b < st.h.size(); ++b) {
    double x = lat.x(b, 0), y = lat.x(b, 1);
    st.h[b](0, 0) = std::exp(0.2 * std::cos(x) + 0.1 * std::sin(y));
    st.h[b](1, 1) = 1.5 + 0.3 * std::sin(x + y);
    st.h[b](0, 1) = cplx(0.2 * std::cos(y), 0.15 * std::sin(x));
    st.h[b](1, 0) = std::conj(st.h[b](0, 1));
  }
  return st;
}

// exp(a |z|^2) U: projectively flat with Lambda F = a g^{-1} I.
HJet einstein_jet(double a, const Mat2& U, cplx z) {
  double f = std::exp(a * std::norm(z));
  HJet J;
  J.H = f * U;
  J.Hz = a * std::conj(z) * J.H;
  J.Hzb = a * z * J.H;
  J.Hzzb = (a + a * a * std::norm(z)) * J.H;
  return J;
}

Mat2 random_positive(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Mat2 A;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) A(i, j) = cplx(n(rng), n(rng));
  return A * A.adjoint() + 0.5 * Mat2::Identity();
}

}  // namespace

TEST_SUITE("hym-bridge") {
  TEST_CASE("identity metric induces Fubini-Study") {
    InducedWeight phi = induced_weight(HermitianBundleState::constant(8, Mat2::Identity()), 0);
    for (cplx w : {cplx(0.0), cplx(0.3, -1.2), cplx(4.0, 2.0)}) {
      double r = 1 + std::norm(w);
      CHECK(phi.value(3, w) == doctest::Approx(std::log(r)).epsilon(1e-15));
      JetTensor t = phi.jet(3, w);
      CHECK(t.ff == doctest::Approx(1 / (r * r)).epsilon(1e-14));
      CHECK(std::abs(curvature_of(t)(0, 0)) < 1e-15);
    }
  }

  TEST_CASE("diagonal exponential metric: trace of c at [1:0] is a quarter Laplacian") {
    int N = 16;
    double eps = 0.3;
    HermitianBundleState st = HermitianBundleState::diagonal_exp(N, cos_mode(N, eps), DiffScheme::Spectral);
    InducedWeight phi = induced_weight(st, 0);
    Lattice lat{2, N};
    for (std::size_t b = 0; b < st.h.size(); ++b)
      CHECK(std::abs(curvature_of(phi.jet(b, 0.0))(0, 0).real() + eps * std::cos(lat.x(b, 0)) / 4) < 1e-9);
  }

  TEST_CASE("chart cocycle") {
    HermitianBundleState st = generic_state(16);
    InducedWeight p0 = induced_weight(st, 0), p1 = induced_weight(st, 1);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n;
    double worst = 0, worst_c = 0;
    for (int k = 0; k < 200; ++k) {
      std::size_t b = rng() % st.h.size();
      cplx w(n(rng), n(rng));
      worst = std::max(worst, std::abs(p0.value(b, w) - p1.value(b, 1.0 / w) - std::log(std::norm(w))));
      worst_c = std::max(worst_c, std::abs(curvature_of(p0.jet(b, w))(0, 0) - curvature_of(p1.jet(b, 1.0 / w))(0, 0)));
    }
    CHECK(worst <= 1e-10);
    CHECK(worst_c <= 1e-10);
    CHECK_THROWS_AS(induced_weight(st, 2), ConfigError);
  }

  TEST_CASE("fiber restriction is positive with unit volume") {
    HermitianBundleState st = generic_state(16);
    std::vector<HJet> J = hjets(st);
    for (double s : fiber_S0(J)) CHECK(std::abs(s - 1.0) <= 1e-8);
    for (std::size_t b = 0; b < J.size(); b += 17)
      for (std::size_t k = 0; k < sphere().size(); k += 31) CHECK(induced_jet(J[b], 0, sphere().w[k]).ff > 0);
  }

  TEST_CASE("invalid bundle metrics are rejected") {
    HermitianBundleState st = HermitianBundleState::constant(8, Mat2::Identity());
    st.h[5](0, 1) = 0.3;
    CHECK_THROWS_AS(st.validate(), ConfigError);
    st.h[5](0, 1) = 0.0;
    st.h[5](1, 1) = -1.0;
    CHECK_THROWS_AS(induced_weight(st, 0), ConfigError);
  }

  TEST_CASE("Finsler and Hermitian traces agree") {
    BaseMetric w = BaseMetric::flat(1);
    CHECK(he_trace_check(hjets(HermitianBundleState::constant(8, Mat2::Identity())), w) == 0.0);
    CHECK(he_trace_check(hjets(generic_state(16)), w, 7) <= 1e-8);
    CHECK(he_trace_check(hjets(generic_state(16, DiffScheme::FD4)), BaseMetric::flat(1, 1.7), 7) <= 1e-8);

    std::mt19937_64 rng(8);
    Mat2 U = random_positive(rng);
    BaseMetric g2 = BaseMetric::flat(1, 2.0);
    double a = 0.35, worst = 0;
    for (int k = 0; k < 30; ++k) {
      cplx z(0.1 * k, -0.05 * k);
      HJet J = einstein_jet(a, U, z);
      Mat2 LF = lambda_F(J, 0.5);
      CHECK((LF - (a / 2) * Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-12);
      for (std::size_t n = 0; n < sphere().size(); n += 13)
        worst = std::max(worst, std::abs(0.5 * curvature_of(induced_jet(J, 0, sphere().w[n]))(0, 0).real() - a / 2));
    }
    CHECK(worst <= 1e-8);
    CHECK(he_trace_check({einstein_jet(a, U, cplx(0.4, 0.2))}, g2) <= 1e-8);
  }

  TEST_CASE("pointwise reduction identity") {
    CHECK(reduction_identity_residual(hjets(generic_state(16)), BaseMetric::flat(1), 0.0) <= 1e-9);
    CHECK(reduction_identity_residual(hjets(generic_state(16)), BaseMetric::flat(1, 0.8), 0.4, 20, 17) <= 1e-9);
  }

  TEST_CASE("segre crosscheck") {
    SegreCheck triv = segre_crosscheck(HermitianBundleState::constant(16, Mat2::Identity()));
    CHECK(std::abs(triv.numeric) < 1e-14);
    CHECK(triv.exact == 0.0);
    HermitianBundleState st = HermitianBundleState::diagonal_exp(16, cos_mode(16, 0.2));
    SegreCheck s = segre_crosscheck(st);
    CHECK(std::abs(s.numeric) <= 1e-6);
    CHECK(std::abs(s.S0_min - 1) <= 1e-8);
    CHECK(std::abs(s.S0_max - 1) <= 1e-8);

    // Split bundles over a patch of area pi^2 sampled on a 16 x 16 grid.
    double side = std::numbers::pi, area = side * side;
    int M = 16;
    double cell = area / (M * M);
    for (std::vector<long> deg : {std::vector<long>{1, 1}, {1, -1}, {2, 0}, {0, 3}}) {
      std::vector<HJet> J;
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) J.push_back(split_bundle_jet(deg, area, cplx((i + 0.5) * side / M, (j + 0.5) * side / M)));
      SegreCheck c = segre_crosscheck(J, cell, deg[0] + deg[1]);
      CHECK(c.exact == -static_cast<double>(deg[0] + deg[1]));
      CHECK(std::abs(c.difference) <= 1e-6);
    }
  }

  TEST_CASE("flat metric is stationary") {
    BaseMetric w = BaseMetric::flat(1);
    Mat2 U;
    U << 2.0, cplx(0.3, 0.1), cplx(0.3, -0.1), 1.0;
    HermitianBundleState st = HermitianBundleState::constant(8, U);
    HymResult r = run_hym(st, w, 1.0);
    CHECK(r.lambda == 0.0);
    for (std::size_t b = 0; b < st.h.size(); ++b) CHECK((r.final_state.h.h[b] - U).cwiseAbs().maxCoeff() == 0.0);
    for (const auto& row : r.rows) CHECK(row.sup_lambda_F == 0.0);
    EquivalenceResult e = equivalence_check(st, w, 0.1, 0.05);
    CHECK(e.residual <= 1e-12);
  }

  TEST_CASE("diagonal heat mode converges to a constant metric") {
    BaseMetric w = BaseMetric::flat(1);
    HermitianBundleState st = HermitianBundleState::diagonal_exp(16, cos_mode(16, 0.05));
    HymResult r = run_hym(st, w, 40.0, 0, 0.0, 50);
    CHECK(r.rows.back().t == doctest::Approx(40.0));
    CHECK(r.rows.back().sup_lambda_F < 1e-6);
    double lo = 1e300, hi = -1e300;
    for (const auto& H : r.final_state.h.h) {
      lo = std::min(lo, H(0, 0).real());
      hi = std::max(hi, H(0, 0).real());
    }
    CHECK(hi - lo < 1e-5);
    double sigma = derivative_symbol(16, DiffScheme::FD4, 1);
    double predicted = 0.05 * std::exp(-0.25 * sigma * sigma * 40.0) / 4;
    CHECK(r.rows.back().sup_lambda_F == doctest::Approx(predicted).epsilon(0.02));
  }

  TEST_CASE("log det follows the trace of the contracted curvature") {
    BaseMetric w = BaseMetric::flat(1);
    HermitianBundleState st = generic_state(16, DiffScheme::FD4);
    double dt = hym_default_dt(st, w);
    HymResult a = run_hym(st, w, 1.0, dt, 0.2), b = run_hym(st, w, 1.0, dt / 2, 0.2);
    double ea = std::abs(a.rows.back().log_det_change - a.rows.back().trace_integral);
    double eb = std::abs(b.rows.back().log_det_change - b.rows.back().trace_integral);
    CHECK(std::abs(a.rows.back().log_det_change) > 0.1);
    CHECK(ea < 1e-2 * std::abs(a.rows.back().log_det_change));
    CHECK(ea / eb == doctest::Approx(2.0).epsilon(0.15));
  }

  TEST_CASE("bundle flow matches the scalar flow to first order") {
    BaseMetric w = BaseMetric::flat(1);
    HermitianBundleState st = generic_state(16, DiffScheme::FD4);
    double dt = 0.02;
    EquivalenceResult a = equivalence_check(st, w, 0.2, dt), b = equivalence_check(st, w, 0.2, dt / 2);
    CHECK(a.residual > 0);
    CHECK(a.residual / b.residual >= 1.7);
    CHECK(a.residual / b.residual <= 2.3);
  }

  TEST_CASE("runaway bundle step stalls") {
    HymState s{0.0, 1e6, generic_state(16, DiffScheme::FD4), 0};
    CHECK_THROWS_AS(hym_step(s, BaseMetric::flat(1), 0.0, 1e6), FlowStalled);
  }

  TEST_CASE("bundle dump round trip") {
    HermitianBundleState st = generic_state(8, DiffScheme::FD4);
    std::string path = "/tmp/geflow_bundle_test.gefld";
    dump_bundle(st, path);
    HermitianBundleState back = load_bundle(path);
    CHECK(back.N == 8);
    for (std::size_t b = 0; b < st.h.size(); ++b) CHECK(back.h[b] == st.h[b]);
  }
}
