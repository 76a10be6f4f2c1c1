#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cylqg/errors.hpp"
#include "cylqg/greens.hpp"
#include "cylqg/presets.hpp"
#include "cylqg/rng.hpp"

using namespace cylqg;

namespace {

Grid annulus(int nx, int nz) {
  return discretize(build_domain(parse_domain("annulus 1 2")), nx, nx, nz);
}

int deep_interior_node(const Grid& g) {
  for (int n : g.interior_nodes) {
    const int i = n % g.nx, j = n / g.nx;
    bool ok = i >= 2 && j >= 2 && i < g.nx - 2 && j < g.ny - 2;
    for (int dj = -2; ok && dj <= 2; ++dj)
      for (int di = -2; ok && di <= 2; ++di)
        if (std::abs(di) + std::abs(dj) <= 2 &&
            !g.is_interior(g.node(i + di, j + dj)))
          ok = false;
    if (ok) return n;
  }
  return g.interior_nodes[g.n_interior() / 2];
}

} // namespace

TEST_CASE("free-space fundamental solution") {
  CHECK(fundamental({0, 0, 0}, {1, 0, 0}) ==
        doctest::Approx(-1.0 / (4.0 * M_PI)).epsilon(1e-14));
  CHECK(fundamental({0.3, -0.2, 0.5}, {0.3, -0.2, 0.75}) ==
        doctest::Approx(-1.0 / M_PI).epsilon(1e-14));
  // symmetric in its arguments
  CHECK(fundamental({0, 1, 0}, {2, 0, 1}) == fundamental({2, 0, 1}, {0, 1, 0}));
  CHECK_THROWS_AS(fundamental({1, 2, 3}, {1, 2, 3}), SingularityError);
}

TEST_CASE("kernels satisfy the side constraints") {
  const Grid g = annulus(20, 5);
  EllipticSolver ell(g);
  GreensEngine eng(ell);

  const int n0 = deep_interior_node(g);
  const GreensKernel K = eng.build_kernel(n0, 2);
  const double scale = 1.0 + K.G.max_abs();

  CHECK(std::abs(K.G.volume_integral()) < 1e-9 * scale * g.fluid_volume());

  std::vector<double> slice(static_cast<std::size_t>(g.nx) * g.ny);
  for (int k = 0; k < g.nz; ++k) {
    const double* lv = K.G.level(k);
    std::copy(lv, lv + slice.size(), slice.begin());
    for (int l = 0; l < g.n_loops; ++l)
      CHECK(std::abs(ell.loop_flux(slice, l)) < 1e-8 * scale);
  }

  CHECK_THROWS_AS(eng.build_kernel(g.boundary_nodes[0], 2), DomainError);
  CHECK_THROWS_AS(eng.build_kernel(n0, g.nz), DomainError);
}

TEST_CASE("greens_at snaps and caches") {
  const Grid g = annulus(20, 5);
  EllipticSolver ell(g);
  GreensEngine eng(ell);

  const int n0 = deep_interior_node(g);
  const Vec2 p = g.xy(n0);
  const Vec3 off{p.x + 0.3 * g.h, p.y - 0.2 * g.h, 0.52};
  const GreensKernel K1 = eng.greens_at(off);
  CHECK(K1.source_node == n0);
  CHECK(K1.source_level == 2);
  CHECK(K1.source.x == doctest::Approx(p.x));

  const std::size_t used = eng.cache_bytes();
  CHECK(used > 0);
  const GreensKernel K2 = eng.greens_at({p.x, p.y, 0.5});
  CHECK(eng.cache_bytes() == used); // same snapped key, no growth
  CHECK(K2.G.data == K1.G.data);
  eng.clear_cache();
  CHECK(eng.cache_bytes() == 0);
}

TEST_CASE("cosine kernel equals the reflected periodized corrector") {
  const Grid g = annulus(20, 5);
  EllipticSolver ell(g);
  GreensEngine eng(ell);
  const int J = g.nz - 1;

  const int n0 = deep_interior_node(g);
  const Vec2 p = g.xy(n0);
  for (int j0 : {0, 2, J}) {
    const GreensKernel K = eng.build_kernel(n0, j0);
    const CorrectorResult cr = eng.corrector({p.x, p.y, g.z_level(j0)});
    const ExtendedField P = eng.periodized(cr);
    const double scale = 1.0 + K.G.max_abs();
    double worst = 0;
    for (int k = 0; k <= J; ++k) {
      const int ip = (k == J) ? 0 : J + k;
      const int im = J - k;
      for (int n : g.fluid_nodes)
        worst = std::max(
            worst, std::abs(K.G.at(n, k) - (P.at(n, ip) + P.at(n, im))));
    }
    CHECK(worst < 1e-9 * scale);
  }
}

TEST_CASE("decay estimates stay inside the exclusion radius") {
  const Grid g = annulus(20, 5);
  EllipticSolver ell(g);
  GreensEngine eng(ell);
  const int n0 = deep_interior_node(g);
  const Vec2 p = g.xy(n0);
  const EstimateReport rep = eng.estimate_report({{p.x, p.y, 0.5}});
  REQUIRE(!rep.rows.empty());
  for (const auto& row : rep.rows) {
    CHECK(row.r >= 2.0 * g.h);
    CHECK(std::isfinite(row.absG));
    CHECK(std::isfinite(row.absGrad));
    CHECK(std::isfinite(row.absHess));
  }
  CHECK(rep.sup_G_r > 0);
  CHECK(rep.fitted_C >=
        std::max({rep.sup_G_r, rep.sup_grad_r2, rep.sup_hess_r3}) - 1e-300);
}

TEST_CASE("quasi-Lipschitz ratios are finite and tame") {
  const Grid g = annulus(24, 5);
  EllipticSolver ell(g);
  GreensEngine eng(ell);
  Rng rng(11);
  const auto pairs = sample_interior_pairs(g, 30, rng);
  REQUIRE(pairs.size() == 30);
  const QuasiLipschitzReport rep = eng.quasi_lipschitz_report(pairs);
  REQUIRE(rep.rows.size() == 30);
  for (const auto& r : rep.rows) {
    CHECK(r.d > 0);
    CHECK(std::isfinite(r.integral));
    CHECK(r.ratio >= 0);
    CHECK(std::isfinite(r.ratio));
  }
  CHECK(rep.max_ratio < 1e3);
}

TEST_CASE("representation-formula velocity approximates the direct route") {
  const Grid g = annulus(20, 4);
  EllipticSolver ell(g);
  GreensEngine eng(ell);
  const InitialPV q0 = pv_dipole(g);
  const CirculationData c = CirculationData::zero(g.n_loops, g.nz);

  const VectorField3 direct = ell.velocity(ell.invert_pv(q0.q0, c));
  const VectorField3 viaG = eng.velocity_via_green(q0.q0, c);

  const double umax = direct.max_speed();
  REQUIRE(umax > 0);
  double err = 0;
  for (int k = 0; k < g.nz; ++k)
    for (int n : g.interior_nodes) {
      const int i = n % g.nx, j = n / g.nx;
      if (i < 1 || j < 1 || i >= g.nx - 1 || j >= g.ny - 1) continue;
      if (!g.is_interior(n - 1) || !g.is_interior(n + 1) ||
          !g.is_interior(n - g.nx) || !g.is_interior(n + g.nx))
        continue;
      err = std::max(err, std::hypot(viaG.u.at(n, k) - direct.u.at(n, k),
                                     viaG.v.at(n, k) - direct.v.at(n, k)));
    }
  CHECK(err < 0.25 * umax);
}
