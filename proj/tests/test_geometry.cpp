#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cylqg/errors.hpp"
#include "cylqg/geometry.hpp"

using namespace cylqg;

TEST_CASE("domain string parsing") {
  const DomainSpec a = parse_domain("annulus 1 2");
  CHECK(a.kind == DomainSpec::Kind::annulus);
  CHECK(a.r_inner == 1.0);
  CHECK(a.r_outer == 2.0);

  const DomainSpec r = parse_domain("rectangle 0 0 3 3 hole 1 1 2 2");
  CHECK(r.kind == DomainSpec::Kind::rectangle);
  CHECK(r.hole_rects.size() == 1);
  CHECK(r.outer_rect.x1 == 3.0);

  CHECK_THROWS_AS(parse_domain(""), ConfigError);
  CHECK_THROWS_AS(parse_domain("annulus one two"), ConfigError);
  CHECK_THROWS_AS(parse_domain("hexagon 1"), ConfigError);
  CHECK_THROWS_AS(build_domain(parse_domain("annulus 2 1")), TopologyError);
}

TEST_CASE("loop area and containment") {
  Loop sq;
  sq.pts = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(sq.signed_area() == doctest::Approx(1.0));
  CHECK(sq.length() == doctest::Approx(4.0));
  CHECK(sq.contains({0.5, 0.5}));
  CHECK_FALSE(sq.contains({1.5, 0.5}));
}

TEST_CASE("annulus cross-section geometry") {
  const Cylinder cyl = build_domain(parse_domain("annulus 1 2"));
  const CrossSection& cs = cyl.cross_section;
  CHECK(cs.n_loops() == 2);
  CHECK(cs.area() == doctest::Approx(3.0 * M_PI).epsilon(1e-5));
  CHECK(cs.diameter() == doctest::Approx(4.0 * std::sqrt(2.0)).epsilon(1e-5));
  CHECK(cs.contains({1.5, 0}));
  CHECK_FALSE(cs.contains({0, 0}));
  CHECK_FALSE(cs.contains({2.5, 0}));

  int loop = -1;
  const Vec2 p = cs.project_to_boundary({1.1, 0}, &loop);
  CHECK(loop == 1);
  CHECK(norm(p - Vec2{1.0, 0.0}) < 1e-3);
}

TEST_CASE("misplaced hole is rejected") {
  CHECK_THROWS_AS(build_domain(parse_domain("rectangle 0 0 1 1 hole 2 2 3 3")),
                  TopologyError);
  CHECK_THROWS_AS(build_domain(parse_domain("rectangle 0 0 3 3 hole 1 1 2 2 hole 1.5 1.5 2.5 2.5")),
                  TopologyError);
}

TEST_CASE("discretization invariants on the annulus") {
  const Cylinder cyl = build_domain(parse_domain("annulus 1 2"));
  const Grid g = discretize(cyl, 40, 40, 5);

  CHECK(g.n_loops == 2);
  CHECK(g.n_interior() > 0);
  CHECK(g.z_level(0) == 0.0);
  CHECK(g.z_level(g.nz - 1) == 1.0);

  double zsum = 0;
  for (int k = 0; k < g.nz; ++k) zsum += g.zw(k);
  CHECK(zsum == doctest::Approx(1.0));

  double wsum = 0;
  for (double w : g.weight) {
    CHECK(w >= 0.0);
    wsum += w;
  }
  CHECK(wsum == doctest::Approx(cyl.cross_section.area()).epsilon(1e-9));
  CHECK(g.area == doctest::Approx(wsum));

  // interior nodes really are inside, boundary nodes are not
  for (int n : g.interior_nodes) CHECK(cyl.cross_section.contains(g.xy(n)));
  for (int n : g.boundary_nodes) {
    CHECK_FALSE(g.is_interior(n));
    CHECK(g.loop_id[n] >= 0);
    CHECK(g.loop_id[n] < g.n_loops);
  }

  // a cut arm always lands on a boundary node of the cutting loop; a full
  // arm always lands on an interior node
  const int DI[4] = {1, -1, 0, 0}, DJ[4] = {0, 0, 1, -1};
  for (int m = 0; m < g.n_interior(); ++m) {
    const int n = g.interior_nodes[m];
    const int i = n % g.nx, j = n / g.nx;
    for (int d = 0; d < 4; ++d) {
      const double f = g.arm_frac[d][m];
      CHECK(f > 0.0);
      CHECK(f <= 1.0);
      const int n2 = g.node(i + DI[d], j + DJ[d]);
      if (g.arm_loop[d][m] < 0) {
        CHECK(f == 1.0);
        CHECK(g.is_interior(n2));
      } else {
        CHECK(g.mask[n2] == NodeTag::boundary);
        CHECK(g.loop_id[n2] == g.arm_loop[d][m]);
      }
    }
  }

  // seed index covers exactly the fluid nodes
  CHECK(g.fluid_nodes.size() ==
        g.interior_nodes.size() + g.boundary_nodes.size());
  for (std::size_t s = 0; s < g.fluid_nodes.size(); ++s)
    CHECK(g.seed_index[g.fluid_nodes[s]] == static_cast<int>(s));
}

TEST_CASE("inside agrees with the polygon test near the boundary") {
  const Cylinder cyl = build_domain(parse_domain("annulus 1 2"));
  const Grid g = discretize(cyl, 32, 32, 3);
  for (double r : {0.98, 1.02, 1.5, 1.99, 2.02}) {
    for (double th : {0.1, 0.7, 2.3, 4.0}) {
      const Vec2 p{r * std::cos(th), r * std::sin(th)};
      CHECK(g.inside(p) == cyl.cross_section.contains(p));
    }
  }
}

TEST_CASE("under-resolved grids are rejected") {
  const Cylinder cyl = build_domain(parse_domain("annulus 1 2"));
  CHECK_THROWS_AS(discretize(cyl, 6, 6, 5), ResolutionError);
  CHECK_THROWS_AS(discretize(cyl, 32, 32, 1), ResolutionError);
  // hole thinner than a cell cannot be resolved
  const Cylinder thin =
      build_domain(parse_domain("rectangle 0 0 3 3 hole 1.4 1.4 1.45 1.45"));
  CHECK_THROWS_AS(discretize(thin, 10, 10, 3), ResolutionError);
}
