#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cylqg/errors.hpp"
#include "cylqg/presets.hpp"
#include "cylqg/solver.hpp"

using namespace cylqg;

namespace {

Grid annulus(int nx, int nz) {
  return discretize(build_domain(parse_domain("annulus 1 2")), nx, nx, nz);
}

} // namespace

TEST_CASE("quasi-Lipschitz modulus") {
  CHECK(lambda_modulus(0.0) == 0.0);
  CHECK(lambda_modulus(0.5) == doctest::Approx(0.8465735902799726).epsilon(1e-15));
  CHECK(lambda_modulus(1.0) == 1.0);
  CHECK(lambda_modulus(7.0) == 1.0);
  CHECK_THROWS_AS(lambda_modulus(-1e-12), DomainError);
}

TEST_CASE("linear majorant dominates the modulus") {
  for (double eps : {1e-3, 0.05, 0.3}) {
    for (double d = 1e-6; d < 2.0; d *= 1.7)
      CHECK(majorant(d, eps) >= lambda_modulus(d) - 1e-15);
    CHECK(majorant(0.0, eps) == doctest::Approx(eps));
  }
  CHECK_THROWS_AS(majorant(0.5, 0.0), DomainError);
  CHECK_THROWS_AS(majorant(0.5, 1.0), DomainError);
}

TEST_CASE("integral inequality bound, constant coefficients") {
  CHECK(gronwall_bound(1.0, 1.0, 0.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK(gronwall_bound(2.5, 0.0, 0.0, 3.0) == 2.5);
  CHECK(gronwall_bound(1.0, 2.0, 1.0, 1.5) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(gronwall_bound(1.0, -0.1, 0.0, 1.0), DomainError);
}

TEST_CASE("integral inequality bound, function coefficients") {
  auto alpha = [](double t) { return 1.0 + t; };
  auto beta_const = [](double) { return 2.0; };
  CHECK(gronwall_bound(alpha, beta_const, 0.0, 0.5) ==
        doctest::Approx(1.5 * std::exp(1.0)).epsilon(1e-13));
  // beta(s) = s integrates exactly under Simpson
  auto beta_lin = [](double s) { return s; };
  CHECK(gronwall_bound(alpha, beta_lin, 0.0, 1.0) ==
        doctest::Approx(2.0 * std::exp(0.5)).epsilon(1e-13));
}

TEST_CASE("flow map distance metric") {
  const Grid g = annulus(20, 4);
  FlowMap a = FlowMap::identity(g);
  CHECK(delta_metric(a, a) == 0.0);

  FlowMap b = a;
  const double shift = 0.0125;
  for (Vec2& p : b.pos) p.x += shift;
  // the coverage weights integrate to |Omega|, so a uniform shift comes
  // back exactly
  CHECK(delta_metric(a, b) == doctest::Approx(shift).epsilon(1e-12));

  const Grid g2 = annulus(24, 4);
  const FlowMap c = FlowMap::identity(g2);
  CHECK_THROWS_AS(delta_metric(a, c), SeedError);
}

TEST_CASE("solver configuration is validated") {
  const Grid g = annulus(16, 3);
  SolverConfig bad;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(QGSolver(g, {}, bad), ConfigError);
  bad.sigma = 1.5;
  CHECK_THROWS_AS(QGSolver(g, {}, bad), ConfigError);
  bad = {};
  bad.window_nodes = 1;
  CHECK_THROWS_AS(QGSolver(g, {}, bad), ConfigError);

  const QGSolver s(g);
  CHECK(s.outer_tol() == doctest::Approx(1e-8 * 4.0 * std::sqrt(2.0)).epsilon(1e-12));
  SolverConfig explicit_tol;
  explicit_tol.outer_tol = 3e-7;
  CHECK(QGSolver(g, {}, explicit_tol).outer_tol() == 3e-7);
}

TEST_CASE("contraction constant fit and window rule") {
  const Grid g = annulus(32, 5);
  const QGSolver s(g);
  const InitialPV q0 = pv_dipole(g);
  const ScalarField3 psi =
      s.elliptic().invert_pv(q0.q0, CirculationData::zero(g.n_loops, g.nz));
  const VectorField3 u = s.elliptic().velocity(psi);
  Rng rng(20230817);
  const double chat = s.fit_contraction_constant(u, rng, 400);
  CHECK(chat > 0.0);
  CHECK(std::isfinite(chat));

  const SolverState st = s.initial_state(q0, CirculationData::zero(g.n_loops, g.nz),
                                         chat, 10.0);
  const double expected =
      0.5 * std::exp(-1.5) / (chat * (1.0 + q0.bound));
  CHECK(st.T == doctest::Approx(expected).epsilon(1e-12));
  CHECK(st.t0 == 0.0);
  CHECK(static_cast<int>(st.node_times.size()) == s.config().window_nodes);
  CHECK(st.node_times.front() == 0.0);
  CHECK(st.node_times.back() == doctest::Approx(st.T));

  // a short remaining horizon truncates the window
  const SolverState st2 = s.initial_state(q0, CirculationData::zero(g.n_loops, g.nz),
                                          chat, 0.25 * expected);
  CHECK(st2.T == doctest::Approx(0.25 * expected));
}

TEST_CASE("short run produces coherent output") {
  const Grid g = annulus(28, 5);
  SolverConfig cfg;
  cfg.window_nodes = 5;
  const QGSolver s(g, {}, cfg);
  const InitialPV q0 = pv_dipole(g, 0.8);
  const RunResult r = s.run(q0, CirculationData::zero(g.n_loops, g.nz), 0.05);

  CHECK(r.t_end == 0.05);
  CHECK(r.chat > 0.0);
  CHECK(!r.windows.empty());
  CHECK(!r.diagnostics.empty());
  CHECK(r.q_final.max_abs() <= q0.bound);
  CHECK(std::isfinite(r.u_final.max_speed()));
  // foot_final carries the feet back at time 0
  CHECK(r.foot_final.t == 0.0);
  CHECK(r.foot_final.direction == MapDirection::backward);
  CHECK(r.u_times.size() == r.u_snapshots.size());
  CHECK(r.u_times.front() == 0.0);
  CHECK(r.u_times.back() == doctest::Approx(0.05));
  for (std::size_t i = 1; i < r.u_times.size(); ++i)
    CHECK(r.u_times[i] > r.u_times[i - 1]);
  for (const WindowRecord& w : r.windows) {
    CHECK(w.iterations >= s.config().outer_min_iter);
    CHECK(!w.delta_history.empty());
    CHECK(w.delta_history.back() <= s.outer_tol());
  }
  // each diagnostics row respects the transport invariants; the mean only
  // drifts at interpolation-error level
  for (const DiagnosticsRow& row : r.diagnostics) {
    CHECK(row.q_inf <= q0.bound + 1e-15);
    for (double m : row.level_means) CHECK(std::abs(m) < 2e-3);
  }
}
