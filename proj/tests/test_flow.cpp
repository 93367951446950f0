#include <sstream>

#include "doctest.h"
#include "geflow/flow.hpp"

using namespace geflow;

namespace {

MetricField product_heat(double eps, int N = 16) {
  MetricField f = MetricField::reference(GridSpec{1, 1, N, FiberKind::Torus});
  f.p = sample_modes(f.grid.base(), {{eps, {1, 0}, 0.0}});
  return f;
}

MetricField coupled(int N = 16) {
  MetricField f = MetricField::reference(GridSpec{1, 1, N, FiberKind::Torus});
  f.A = HMat::identity(1, 0.5);
  f.psi = sample_modes(f.grid.total(), {{0.2, {1, 0, 1, 0}, 0.0}, {0.05, {0, 1, 1, 1}, 0.7}});
  return f;
}

MetricField geodesic_einstein(int N = 16) {
  MetricField f = MetricField::reference(GridSpec{1, 1, N, FiberKind::Torus});
  f.A = HMat::identity(1, 0.8);
  f.psi = sample_modes(f.grid.total(), {{0.3, {0, 0, 1, 2}, 0.1}});
  return f;
}

}  // namespace

TEST_SUITE("flow") {
  TEST_CASE("geodesic-Einstein data is a fixed point") {
    BaseMetric w = BaseMetric::flat(1);
    MetricField ge = geodesic_einstein();
    FlowOptions o;
    o.T = 10 * default_dt(ge.grid, w);
    FlowResult r = run(ge, w, o);
    CHECK(r.report.rows.size() == 11);
    for (std::size_t k = 1; k < r.report.rows.size(); ++k)
      CHECK(r.report.rows[k].sup_phi_drift - r.report.rows[k - 1].sup_phi_drift <= 1e-12);
    CHECK(r.report.violations.empty());
  }

  TEST_CASE("product heat mode decays at the Laplacian eigenvalue") {
    BaseMetric w = BaseMetric::flat(1);
    MetricField f = product_heat(0.1);
    FlowOptions o;
    o.T = 4.0;
    o.monitors = false;
    o.snapshot_every = 10;
    FlowResult r = run(f, w, o);
    std::vector<double> t, a;
    for (const auto& s : r.snapshots) {
      t.push_back(s.t);
      a.push_back(mode_amplitude(s.phi, {1, 0, 0, 0}));
    }
    double rate = fit_decay_rate(t, a);
    CHECK(rate == doctest::Approx(0.25).epsilon(0.02));
    double sigma = derivative_symbol(16, DiffScheme::FD4, 1);
    CHECK(std::abs(rate - 0.25 * sigma * sigma) < 1e-3);
    CHECK(a.front() == doctest::Approx(0.1).epsilon(1e-12));
  }

  TEST_CASE("coupled run satisfies every monitor") {
    BaseMetric w = BaseMetric::flat(1);
    FlowOptions o;
    o.dt = 1e-3;
    o.T = 0.5;
    FlowResult r = run(coupled(), w, o);
    const MonitorReport& rep = r.report;
    CHECK(rep.rows.size() == 501);
    CHECK(rep.hard_violations() == 0);
    CHECK(rep.violations.empty());
    CHECK(!rep.aborted);
    CHECK(rep.rows.back().L < rep.rows.front().L);
    CHECK(rep.rows.back().defect < rep.rows.front().defect);
    for (const auto& row : rep.rows) {
      CHECK(row.sup_trc <= rep.C);
      CHECK(row.sup_phi_drift <= rep.C * row.t + 1e-12);
      CHECK(row.heat_residual <= row.heat_slack + 1e-300);
    }
  }

  TEST_CASE("zero-time run") {
    FlowOptions o;
    o.T = 0.0;
    FlowResult r = run(coupled(), BaseMetric::flat(1), o);
    CHECK(r.report.rows.size() == 1);
    CHECK(r.report.violations.empty());
    CHECK(r.final_state.t == 0.0);
  }

  TEST_CASE("runaway step size stalls") {
    FlowOptions o;
    o.T = 1e7;
    o.dt = 1e7;
    CHECK_THROWS_AS(run(coupled(), BaseMetric::flat(1), o), FlowStalled);
  }

  TEST_CASE("refinement ratio certifies a first-order limit") {
    BaseMetric w = BaseMetric::flat(1);
    UniquenessResult u = uniqueness_probe(product_heat(0.1), w, 1.0);
    CHECK(u.ratio >= 1.7);
    CHECK(u.ratio <= 2.3);
    UniquenessResult c = uniqueness_probe(coupled(), w, 0.2);
    CHECK(c.ratio >= 1.7);
    CHECK(c.ratio <= 2.3);
    UniquenessResult g = uniqueness_probe(geodesic_einstein(), w, 0.2);
    CHECK(g.max_divergence <= 1e-12);
  }

  TEST_CASE("identical configurations give identical trajectories") {
    BaseMetric w = BaseMetric::flat(1);
    FlowOptions o;
    o.T = 0.05;
    o.dt = 1e-2;
    std::ostringstream a, b;
    FlowResult r1 = run(coupled(), w, o), r2 = run(coupled(), w, o);
    write_csv(r1.report, a);
    write_csv(r2.report, b);
    CHECK(a.str() == b.str());
    CHECK(r1.final_state.phi.psi == r2.final_state.phi.psi);
  }

  TEST_CASE("csv layout") {
    FlowOptions o;
    o.T = 0.02;
    o.dt = 1e-2;
    FlowResult r = run(coupled(), BaseMetric::flat(1), o);
    std::ostringstream os;
    write_csv(r.report, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "t,L,defect,sup_trc_minus_lambda,sup_phi_drift,min_fiber_eig,heat_residual");
    int rows = 0;
    while (std::getline(is, line)) {
      ++rows;
      CHECK(std::count(line.begin(), line.end(), ',') == 6);
    }
    CHECK(rows == 3);
  }

  TEST_CASE("rk4 and euler agree to first order") {
    BaseMetric w = BaseMetric::flat(1);
    UniquenessResult u = uniqueness_probe(coupled(), w, 0.1, 4e-3);
    CHECK(u.euler_vs_rk4 > 0);
    CHECK(u.euler_vs_rk4 == doctest::Approx(2 * u.half_vs_rk4).epsilon(0.2));
  }
}
