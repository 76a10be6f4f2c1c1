#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cylqg/errors.hpp"
#include "cylqg/flowmap.hpp"

using namespace cylqg;

namespace {

Grid annulus(int nx, int nz) {
  return discretize(build_domain(parse_domain("annulus 1 2")), nx, nx, nz);
}

// rigid rotation keeps the annulus invariant, so no seed ever escapes
AnalyticVelocity rotation(double omega, int nz) {
  return AnalyticVelocity(
      [omega](double, Vec2 p, int) {
        return Vec2{-omega * p.y, omega * p.x};
      },
      nz);
}

int seed_near(const Grid& g, Vec2 target) {
  int best = 0;
  double bd = 1e300;
  const auto& nodes = seed_nodes(g);
  for (std::size_t s = 0; s < nodes.size(); ++s) {
    if (!g.is_interior(nodes[s])) continue;
    const double d = norm(g.xy(nodes[s]) - target);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(s);
    }
  }
  return best;
}

} // namespace

TEST_CASE("seed layout matches the fluid nodes") {
  const Grid g = annulus(20, 4);
  const auto& nodes = seed_nodes(g);
  CHECK(nodes.size() == g.fluid_nodes.size());
  CHECK(seed_count(g) == static_cast<int>(g.fluid_nodes.size()));
  const FlowMap id = FlowMap::identity(g);
  CHECK(id.nseeds == seed_count(g));
  CHECK(id.t == 0.0);
  for (int k = 0; k < g.nz; ++k)
    for (int s = 0; s < id.nseeds; ++s) {
      const Vec2 p = id.at(k, s);
      const Vec2 q = g.xy(nodes[s]);
      CHECK(p.x == q.x);
      CHECK(p.y == q.y);
    }
}

TEST_CASE("integration to the start time is the identity") {
  const Grid g = annulus(16, 3);
  const AnalyticVelocity u = rotation(1.0, g.nz);
  FlowMap m = FlowMap::identity(g);
  m = integrate(std::move(m), u, 0.0, 4);
  const FlowMap id = FlowMap::identity(g);
  for (int k = 0; k < g.nz; ++k)
    for (int s = 0; s < m.nseeds; ++s) {
      CHECK(m.at(k, s).x == id.at(k, s).x);
      CHECK(m.at(k, s).y == id.at(k, s).y);
    }
  CHECK_THROWS_AS(integrate(FlowMap::identity(g), u, 1.0, 0),
                  IntegrationError);
}

TEST_CASE("rigid rotation: quarter turn") {
  const Grid g = annulus(24, 3);
  const AnalyticVelocity u = rotation(1.0, g.nz);
  FlowMap m = FlowMap::identity(g);
  m = integrate(std::move(m), u, M_PI / 2, 128);
  CHECK(m.t == doctest::Approx(M_PI / 2));

  const int s = seed_near(g, {1.5, 0.0});
  const Vec2 start = FlowMap::identity(g).at(1, s);
  const Vec2 endp = m.at(1, s);
  CHECK(endp.x == doctest::Approx(-start.y).epsilon(1e-8));
  CHECK(endp.y == doctest::Approx(start.x).epsilon(1e-8));
  // radius is preserved for every interior seed (boundary seeds start
  // outside the fluid and are projected on the first step)
  const auto& nodes = seed_nodes(g);
  const FlowMap id = FlowMap::identity(g);
  for (int k = 0; k < g.nz; ++k)
    for (int ss = 0; ss < m.nseeds; ++ss) {
      if (!g.is_interior(nodes[ss])) continue;
      CHECK(norm(m.at(k, ss)) ==
            doctest::Approx(norm(id.at(k, ss))).epsilon(1e-8));
    }
}

TEST_CASE("backward map inverts the forward map") {
  const Grid g = annulus(20, 3);
  const double t = 0.7;
  const AnalyticVelocity u = rotation(0.8, g.nz);
  const FlowMap back = inverse_map(g, u, t, 64);
  CHECK(back.direction == MapDirection::backward);
  // rotation by -omega t
  const int s = seed_near(g, {0.0, 1.6});
  const Vec2 x = FlowMap::identity(g).at(0, s);
  const double a = -0.8 * t;
  const Vec2 want{x.x * std::cos(a) - x.y * std::sin(a),
                  x.x * std::sin(a) + x.y * std::cos(a)};
  CHECK(back.at(0, s).x == doctest::Approx(want.x).epsilon(1e-9));
  CHECK(back.at(0, s).y == doctest::Approx(want.y).epsilon(1e-9));
}

TEST_CASE("escaping particles are projected and counted") {
  const Grid g = annulus(20, 3);
  const AnalyticVelocity out(
      [](double, Vec2 p, int) {
        const double r = std::max(norm(p), 1e-9);
        return Vec2{p.x / r, p.y / r};
      },
      g.nz);
  FlowMap m = FlowMap::identity(g);
  m = integrate(std::move(m), out, 0.5, 16);
  CHECK(m.escaped > 0);
  for (int k = 0; k < g.nz; ++k)
    for (int s = 0; s < m.nseeds; ++s)
      CHECK(norm(m.at(k, s)) <= 2.0 + 1e-6);
}

TEST_CASE("non-finite velocity is reported") {
  const Grid g = annulus(16, 3);
  const AnalyticVelocity bad(
      [](double t, Vec2, int) {
        return t > 0.05 ? Vec2{std::nan(""), 0} : Vec2{1, 0};
      },
      g.nz);
  FlowMap m = FlowMap::identity(g);
  CHECK_THROWS_AS(integrate(std::move(m), bad, 0.5, 8), IntegrationError);
}

TEST_CASE("snapshot velocity interpolates linearly in time") {
  const Grid g = annulus(16, 3);
  VectorField3 u0(g), u1(g);
  for (int k = 0; k < g.nz; ++k)
    for (int n : g.fluid_nodes) {
      u1.u.at(n, k) = 0.4;
      u1.v.at(n, k) = -0.6;
    }
  const SnapshotVelocity U(g, {0.0, 1.0}, {u0, u1});
  const Vec2 p = g.xy(g.interior_nodes[g.n_interior() / 2]);
  Vec2 out;
  U.eval(0.5, 1, &p, &out, 1);
  CHECK(out.x == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out.y == doctest::Approx(-0.3).epsilon(1e-12));
  // steady outside the snapshot range
  U.eval(2.5, 1, &p, &out, 1);
  CHECK(out.x == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("Picard trajectories agree with RK4 on a smooth field") {
  const Grid g = annulus(20, 3);
  const AnalyticVelocity u = rotation(1.0, g.nz);
  const double T = 0.2;

  PicardConfig pc;
  pc.tol = 1e-12;
  const PicardResult pr = picard_solve(g, u, 0.0, T, pc);
  REQUIRE(!pr.path.maps.empty());
  const FlowMap& pend = pr.path.maps.back();
  CHECK(pend.t == doctest::Approx(T));

  const FlowMap rend = integrate(FlowMap::identity(g), u, T, 256);
  const double a = T;
  const int s = seed_near(g, {1.5, 0.4});
  for (int k = 0; k < g.nz; ++k) {
    const Vec2 x = FlowMap::identity(g).at(k, s);
    const Vec2 want{x.x * std::cos(a) - x.y * std::sin(a),
                    x.x * std::sin(a) + x.y * std::cos(a)};
    CHECK(norm(pend.at(k, s) - want) < 2e-4);
    CHECK(norm(rend.at(k, s) - want) < 1e-9);
  }
  // distances contract monotonically at the tail
  for (std::size_t i = 2; i < pr.iterate_distance.size(); ++i)
    if (pr.iterate_distance[i - 1] > 1e-13)
      CHECK(pr.iterate_distance[i] < pr.iterate_distance[i - 1]);
}

TEST_CASE("non-contracting iteration is refused") {
  const Grid g = annulus(16, 3);
  const AnalyticVelocity strain(
      [](double, Vec2 p, int) {
        return Vec2{30.0 * p.x, -30.0 * p.y};
      },
      g.nz);
  PicardConfig pc;
  pc.tol = 0.0;
  pc.max_iter = 6;
  CHECK_THROWS_AS(picard_solve(g, strain, 0.0, 1.0, pc), ContractionError);
}

TEST_CASE("area distortion of rigid maps is zero") {
  const Grid g = annulus(24, 3);
  const AreaReport id_rep = area_distortion(FlowMap::identity(g));
  CHECK(id_rep.max_abs == doctest::Approx(0.0));

  const AnalyticVelocity u = rotation(1.0, g.nz);
  const FlowMap m = integrate(FlowMap::identity(g), u, 0.5, 64);
  const AreaReport rep = area_distortion(m);
  CHECK(rep.max_abs < 1e-6);
  CHECK(rep.per_level_max.size() == static_cast<std::size_t>(g.nz));
}

TEST_CASE("identity map has Holder exponent one") {
  const Grid g = annulus(24, 4);
  const FlowMap id = FlowMap::identity(g);
  std::vector<std::pair<SeedRef, SeedRef>> pairs;
  const int ns = seed_count(g);
  // lattice-adjacent pairs at one level plus cross-level pairs, so the
  // regression sees more than one separation
  for (int s = 0; s + 1 < ns; s += 5) {
    pairs.push_back({SeedRef{1, s}, SeedRef{1, s + 1}});
    pairs.push_back({SeedRef{0, s}, SeedRef{2, s}});
  }
  const HolderReport rep = holder_probe(id, pairs, 1.0);
  CHECK(rep.pairs > 10);
  CHECK(rep.violations == 0);
  CHECK(rep.exponent == doctest::Approx(1.0).epsilon(1e-9));
}
