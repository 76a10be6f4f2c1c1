#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cylqg/errors.hpp"
#include "cylqg/presets.hpp"
#include "cylqg/transport.hpp"

using namespace cylqg;

namespace {

Grid annulus(int nx, int nz) {
  return discretize(build_domain(parse_domain("annulus 1 2")), nx, nx, nz);
}

// cells whose four corners are all interior, probed at an off-center point
std::vector<Vec2> deep_probe_points(const Grid& g) {
  std::vector<Vec2> pts;
  for (int cj = 0; cj + 1 < g.ny; ++cj)
    for (int ci = 0; ci + 1 < g.nx; ++ci) {
      const bool all =
          g.is_interior(g.node(ci, cj)) && g.is_interior(g.node(ci + 1, cj)) &&
          g.is_interior(g.node(ci, cj + 1)) && g.is_interior(g.node(ci + 1, cj + 1));
      if (all)
        pts.push_back({g.x0 + (ci + 0.37) * g.h, g.y0 + (cj + 0.81) * g.h});
    }
  return pts;
}

} // namespace

TEST_CASE("bilinear interpolation reproduces linear fields") {
  const Grid g = annulus(20, 3);
  std::vector<double> f(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
  const double a = 0.3, b = -1.1, c = 2.7;
  for (int n : g.fluid_nodes) {
    const Vec2 p = g.xy(n);
    f[n] = a + b * p.x + c * p.y;
  }
  for (const Vec2 p : deep_probe_points(g))
    CHECK(interpolate(g, f.data(), p) ==
          doctest::Approx(a + b * p.x + c * p.y).epsilon(1e-12));
  // cubic reproduces linears as well
  for (const Vec2 p : deep_probe_points(g))
    CHECK(interpolate_cubic(g, f.data(), p) ==
          doctest::Approx(a + b * p.x + c * p.y).epsilon(1e-10));
}

TEST_CASE("bilinear stays inside the corner range everywhere") {
  const Grid g = annulus(20, 3);
  const InitialPV q0 = pv_random(g, 21, 1.0);
  const double* lv = q0.q0.level(1);
  double lo = 1e300, hi = -1e300;
  for (int n : g.fluid_nodes) {
    lo = std::min(lo, lv[n]);
    hi = std::max(hi, lv[n]);
  }
  // probe across the whole cross-section, including cut cells
  for (double x = -2.0; x <= 2.0; x += 0.083)
    for (double y = -2.0; y <= 2.0; y += 0.059) {
      double v;
      try {
        v = interpolate(g, lv, {x, y});
      } catch (const OutOfDomain&) {
        continue;
      }
      CHECK(v >= lo);
      CHECK(v <= hi);
    }
}

TEST_CASE("interpolation error is second order") {
  double errs[2];
  int idx = 0;
  for (int nx : {16, 32}) {
    const Grid g = annulus(nx, 3);
    std::vector<double> f(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
    for (int n : g.fluid_nodes) {
      const Vec2 p = g.xy(n);
      f[n] = std::sin(2 * p.x) * std::cos(1.5 * p.y);
    }
    double e = 0;
    for (const Vec2 p : deep_probe_points(g))
      e = std::max(e, std::abs(interpolate(g, f.data(), p) -
                               std::sin(2 * p.x) * std::cos(1.5 * p.y)));
    errs[idx++] = e;
  }
  CHECK(errs[1] < 0.35 * errs[0]);
}

TEST_CASE("queries with no fluid data are refused") {
  const Grid g = annulus(20, 3);
  std::vector<double> f(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
  CHECK_THROWS_AS(interpolate(g, f.data(), {0.0, 0.0}), OutOfDomain);
  CHECK_THROWS_AS(interpolate(g, f.data(), {5.0, 0.0}), OutOfDomain);
}

TEST_CASE("pullback through identity feet returns the field") {
  const Grid g = annulus(20, 4);
  const InitialPV q0 = pv_dipole(g);
  FlowMap back = FlowMap::identity(g, MapDirection::backward);
  const ScalarField3 q = pullback(q0, back);
  for (int k = 0; k < g.nz; ++k)
    for (int n : g.interior_nodes)
      CHECK(q.at(n, k) == doctest::Approx(q0.q0.at(n, k)).epsilon(1e-14));
}

TEST_CASE("pullback respects the initial bound exactly") {
  const Grid g = annulus(24, 4);
  const InitialPV q0 = pv_random(g, 5, 2.0);
  const AnalyticVelocity u(
      [](double, Vec2 p, int) {
        return Vec2{-p.y, p.x};
      },
      g.nz);
  const FlowMap back = inverse_map(g, u, 0.6, 48);
  const ScalarField3 q = pullback(q0, back);
  CHECK(q.max_abs() <= q0.bound);
}

TEST_CASE("make_initial_pv records the sup bound") {
  const Grid g = annulus(16, 3);
  ScalarField3 f(g);
  f.at(g.interior_nodes[3], 1) = -3.25;
  f.at(g.interior_nodes[5], 2) = 2.5;
  const InitialPV q0 = make_initial_pv(f);
  CHECK(q0.bound == 3.25);
  CHECK(q0.q0.at(g.interior_nodes[3], 1) == -3.25);
}
