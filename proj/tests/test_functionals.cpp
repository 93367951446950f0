#include "doctest.h"
#include "geflow/functionals.hpp"
#include "oracle.hpp"

using namespace geflow;

namespace {

MetricField field(int m, int N, DiffScheme s, const std::vector<oracle::Wave>& ws, double a = 0.0) {
  MetricField f = MetricField::reference(GridSpec{m, 1, N, FiberKind::Torus}, 2.0, s);
  f.A = HMat::identity(m, a);
  f.psi = oracle::sample(f.grid.total(), ws);
  return f;
}

// Total-space form of L, summed directly from full Hessians.
double brute_L(const MetricField& phi, const MetricField& psi, const BaseMetric& w, double lambda) {
  const GridSpec& g = phi.grid;
  int m = g.m, n = g.n;
  JetField Jp = compute_jets(phi), Jq = compute_jets(psi);
  RealField f(g.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    SqMat P = hessian_matrix(Jp.at(i)), Q = hessian_matrix(Jq.at(i)), G = padded_base(w.at(g.base_of(i)));
    double a = 0, b = 0;
    for (int k = 0; k <= n; ++k) a += wedge_powers({{&P, k}, {&Q, n - k}, {&G, m}});
    for (int k = 0; k <= n + 1; ++k) b += wedge_powers({{&P, k}, {&Q, n + 1 - k}, {&G, m - 1}});
    double d = phi.periodic_at(i) - psi.periodic_at(i);
    f[i] = d * (lambda / (m * (n + 1)) * a - b / ((n + 1) * (n + 2))) / factorial(m - 1);
  }
  return pairwise_sum(f) * g.total().cell_volume();
}

}  // namespace

TEST_SUITE("functionals") {
  TEST_CASE("functionals vanish on the diagonal") {
    MetricField f = field(1, 16, DiffScheme::FD4, oracle::random_waves(3, 4, 4, 0.05), 0.7);
    BaseMetric w = BaseMetric::flat(1);
    CHECK(donaldson_L(f, f, w) == 0.0);
    for (double e : energy_E(f, f)) CHECK(e == 0.0);
    for (const HMat& h : energy_E1(f, f)) CHECK(h.a[0] == cplx(0.0));
  }

  TEST_CASE("constant shift of the weight") {
    MetricField psi = field(1, 16, DiffScheme::FD4, oracle::random_waves(5, 4, 4, 0.05));
    MetricField phi = psi;
    double c = 0.37;
    for (double& v : phi.psi) v += c;
    RealField E = energy_E(phi, psi);
    double fiber_volume = psi.kappa * kTwoPi * kTwoPi;
    for (double e : E) CHECK(e == doctest::Approx(c * fiber_volume).epsilon(1e-12));
  }

  TEST_CASE("energy is antisymmetric") {
    MetricField a = field(1, 16, DiffScheme::FD4, oracle::random_waves(8, 4, 4, 0.05));
    MetricField b = field(1, 16, DiffScheme::FD4, oracle::random_waves(9, 4, 4, 0.05));
    RealField ab = energy_E(a, b), ba = energy_E(b, a);
    for (std::size_t i = 0; i < ab.size(); ++i) CHECK(std::abs(ab[i] + ba[i]) < 1e-9);
  }

  TEST_CASE("base-integrated L equals the total-space formula") {
    for (int m : {1, 2}) {
      int N = m == 1 ? 16 : 8;
      MetricField a = field(m, N, DiffScheme::FD4, oracle::random_waves(11, 2 * m + 2, 3, 0.04), 0.6);
      MetricField b = field(m, N, DiffScheme::FD4, oracle::random_waves(12, 2 * m + 2, 3, 0.04), 0.6);
      BaseMetric w = m == 1 ? BaseMetric::flat(1, 1.3) : BaseMetric::diagonal({0.8, 1.2});
      double lam = lambda_constant(b, w);
      double L = donaldson_L(a, b, w, lam), ref = brute_L(a, b, w, lam);
      CHECK(std::abs(L - ref) <= 1e-11 * (1 + std::abs(ref)));
    }
  }

  TEST_CASE("lambda of a product scenario is zero") {
    MetricField f = MetricField::reference(GridSpec{1, 1, 16, FiberKind::Torus});
    f.p = sample_modes(f.grid.base(), {{0.3, {1, 2}, 0.4}, {0.1, {2, 0}, 0.0}});
    f.psi = sample_modes(f.grid.total(), {{0.2, {0, 0, 1, 1}, 0.2}});
    CHECK(std::abs(lambda_constant(f, BaseMetric::flat(1))) < 1e-9);
  }

  TEST_CASE("lambda equals the trace of the base quadratic for products") {
    MetricField f = MetricField::reference(GridSpec{2, 1, 8, FiberKind::Torus});
    f.A = HMat::identity(2, 0.0);
    f.A(0, 0) = 1.5;
    f.A(1, 1) = 0.5;
    CHECK(lambda_constant(f, BaseMetric::flat(2)) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(lambda_constant(f, BaseMetric::diagonal({2.0, 0.5})) == doctest::Approx(1.75).epsilon(1e-13));
  }

  TEST_CASE("lambda is independent of the admissible representative") {
    double lo = 1e300, hi = -1e300;
    for (std::uint64_t s = 0; s < 5; ++s) {
      MetricField f = field(1, 32, DiffScheme::FD4, oracle::random_waves(40 + s, 4, 4, 0.06), 1.0);
      double l = lambda_constant(f, BaseMetric::flat(1));
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    CHECK((hi - lo) / std::abs(hi) <= 1e-6);
  }

  TEST_CASE("degenerate volume is rejected") {
    MetricField f = field(1, 8, DiffScheme::FD4, {});
    BaseMetric w = BaseMetric::flat(1);
    w.g[0](0, 0) = -1.0;
    CHECK_THROWS_AS(lambda_constant(f.grid, compute_jets(f), w), ConfigError);
  }

  TEST_CASE("mismatched scenarios are rejected") {
    MetricField a = field(1, 16, DiffScheme::FD4, {});
    MetricField b = field(1, 8, DiffScheme::FD4, {});
    CHECK_THROWS_AS(energy_E(a, b), ConfigError);
    MetricField c = a;
    c.kappa = 3.0;
    CHECK_THROWS_AS(energy_E(a, c), ConfigError);
  }

  TEST_CASE("cocycle and translation") {
    BaseMetric w = BaseMetric::flat(1);
    MetricField a = field(1, 16, DiffScheme::FD4, oracle::random_waves(21, 4, 3, 0.05), 0.5);
    MetricField b = field(1, 16, DiffScheme::FD4, oracle::random_waves(22, 4, 3, 0.05), 0.5);
    MetricField c = field(1, 16, DiffScheme::FD4, oracle::random_waves(23, 4, 3, 0.05), 0.5);
    double lam = lambda_constant(c, w);
    double ab = donaldson_L(a, b, w, lam), bc = donaldson_L(b, c, w, lam), ac = donaldson_L(a, c, w, lam);
    CHECK(std::abs(ab + bc - ac) < 1e-8);

    MetricField a1 = a, a2 = a;
    for (double& v : a1.psi) v += 0.1;
    for (double& v : a2.psi) v += 0.2;
    double L0 = donaldson_L(a, c, w, lam), L1 = donaldson_L(a1, c, w, lam), L2 = donaldson_L(a2, c, w, lam);
    CHECK(std::abs((L2 - L0) - 2 * (L1 - L0)) < 1e-10);
    RealField one(a.grid.size(), 1.0);
    CHECK(std::abs((L1 - L0) - 0.1 * variation_rhs(a, one, w, lam)) < 1e-10);
  }

  TEST_CASE("first variation along fixed directions") {
    BaseMetric w = BaseMetric::flat(1);
    for (auto scheme : {DiffScheme::FD4, DiffScheme::Spectral}) {
      MetricField phi0 = field(1, 16, scheme, {{0.2, {1, 0, 1, 0}, 0.0}}, 0.5);
      MetricField psi = field(1, 16, scheme, {{0.1, {0, 1, 0, 1}, 0.3}}, 0.5);
      Lattice lat = phi0.grid.total();
      std::vector<std::vector<Mode>> dirs{
          {{1.0, {1, 0, 0, 0}, 0.0}}, {{0.5, {1, 0, 1, 0}, 0.4}}, {{0.3, {0, 1, 1, 1}, 1.0}}};
      for (auto& dir : dirs) {
        RealField dot = sample_modes(lat, dir);
        FieldPath path = [&](double t) {
          MetricField f = phi0;
          for (std::size_t i = 0; i < f.psi.size(); ++i) f.psi[i] += t * dot[i];
          return f;
        };
        VariationResult r = first_variation_check(path, dot, psi, w, 0.05);
        CHECK(std::abs(r.rhs) > 1.0);
        CHECK(r.rel_error <= 1e-4);
      }
    }
  }

  TEST_CASE("constant path and flow direction") {
    BaseMetric w = BaseMetric::flat(1);
    MetricField phi0 = field(1, 16, DiffScheme::FD4, {{0.2, {1, 0, 1, 0}, 0.0}}, 0.5);
    RealField zero(phi0.grid.size(), 0.0);
    FieldPath still = [&](double) { return phi0; };
    VariationResult r0 = first_variation_check(still, zero, phi0, w, 0.0);
    CHECK(r0.lhs == 0.0);
    CHECK(r0.rhs == 0.0);

    double lam = lambda_constant(phi0, w);
    RealField dot = trace_c(phi0, w);
    for (double& v : dot) v -= lam;
    FieldPath path = [&](double t) {
      MetricField f = phi0;
      for (std::size_t i = 0; i < f.psi.size(); ++i) f.psi[i] += t * dot[i];
      return f;
    };
    VariationResult r = first_variation_check(path, dot, phi0, w, 0.0);
    CHECK(r.rhs < -1e-3);
    CHECK(r.rel_error <= 1e-4);
  }

  TEST_CASE("geodesic-Einstein weights are critical points") {
    BaseMetric w = BaseMetric::flat(1);
    MetricField ge = field(1, 16, DiffScheme::FD4, {{0.3, {0, 0, 1, 2}, 0.1}}, 0.8);
    RealField dot = sample_modes(ge.grid.total(), {{1.0, {1, 0, 1, 0}, 0.2}});
    FieldPath path = [&](double t) {
      MetricField f = ge;
      for (std::size_t i = 0; i < f.psi.size(); ++i) f.psi[i] += t * dot[i];
      return f;
    };
    VariationResult r = first_variation_check(path, dot, ge, w, 0.0);
    CHECK(std::abs(r.lhs) < 1e-6);
    CHECK(std::abs(r.rhs) < 1e-10);
  }

  TEST_CASE("defect closed form for the product heat mode") {
    double eps = 0.1;
    MetricField f = MetricField::reference(GridSpec{1, 1, 16, FiberKind::Torus});
    f.p = sample_modes(f.grid.base(), {{eps, {1, 0}, 0.0}});
    double sigma = derivative_symbol(16, DiffScheme::FD4, 1);
    double expect = eps / 4 * sigma * sigma * std::sqrt(f.kappa) * kTwoPi;
    CHECK(ge_defect(f, BaseMetric::flat(1), 0.0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(lambda_constant(f, BaseMetric::flat(1))) < 1e-12);
  }

  TEST_CASE("defect vanishes exactly on geodesic-Einstein data") {
    BaseMetric w = BaseMetric::flat(1);
    MetricField ge = field(1, 16, DiffScheme::FD4, {{0.3, {0, 0, 1, 2}, 0.1}}, 0.8);
    CHECK(ge_defect(ge, w) < 1e-8);
    MetricField coupled = field(1, 16, DiffScheme::FD4, {{0.2, {1, 0, 1, 0}, 0.0}}, 0.8);
    CHECK(ge_defect(coupled, w) > 1e-3);
  }

  TEST_CASE("report serializes with sorted keys") {
    MetricField a = field(1, 8, DiffScheme::FD4, {{0.1, {1, 0, 1, 0}, 0.0}}, 0.5);
    MetricField b = field(1, 8, DiffScheme::FD4, {}, 0.5);
    nlohmann::json j = to_json(functional_report(a, b, BaseMetric::flat(1)));
    CHECK(j.dump().find("\"E\"") < j.dump().find("\"lambda\""));
    CHECK(j["defect"].get<double>() >= 0);
  }
}
