#include "cylqg/presets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cylqg/errors.hpp"
#include "cylqg/rng.hpp"

namespace cylqg {

namespace {

constexpr double PI = 3.14159265358979323846;

Vec2 fluid_centroid(const Grid& g) {
  double cx = 0, cy = 0;
  for (int m = 0; m < g.n_interior(); ++m) {
    const Vec2 p = g.xy(g.interior_nodes[m]);
    cx += g.weight[m] * p.x;
    cy += g.weight[m] * p.y;
  }
  return {cx / g.area, cy / g.area};
}

void subtract_level_means(ScalarField3& q) {
  const Grid& g = *q.grid;
  const std::vector<double> means = q.level_means();
  for (int k = 0; k < g.nz; ++k) {
    double* lv = q.level(k);
    for (int n : g.fluid_nodes) lv[n] -= means[k];
  }
}

} // namespace

InitialPV pv_dipole(const Grid& g, double amplitude) {
  const Vec2 c = fluid_centroid(g);
  double lx = 0, ly = 0, lw = 0, rx = 0, ry = 0, rw = 0;
  for (int m = 0; m < g.n_interior(); ++m) {
    const Vec2 p = g.xy(g.interior_nodes[m]);
    if (p.x < c.x) {
      lx += g.weight[m] * p.x;
      ly += g.weight[m] * p.y;
      lw += g.weight[m];
    } else {
      rx += g.weight[m] * p.x;
      ry += g.weight[m] * p.y;
      rw += g.weight[m];
    }
  }
  if (lw <= 0 || rw <= 0) throw DomainError("degenerate fluid region");
  const Vec2 cl{lx / lw, ly / lw}, cr{rx / rw, ry / rw};
  const double s = 0.18 * g.domain->cross_section.diameter();
  const double inv2 = 1.0 / (s * s);

  ScalarField3 q(g);
  for (int k = 0; k < g.nz; ++k) {
    const double depth = 1.0 + 0.3 * std::cos(PI * g.z_level(k));
    double* lv = q.level(k);
    for (int n : g.fluid_nodes) {
      const Vec2 p = g.xy(n);
      const double dl = (p.x - cl.x) * (p.x - cl.x) + (p.y - cl.y) * (p.y - cl.y);
      const double dr = (p.x - cr.x) * (p.x - cr.x) + (p.y - cr.y) * (p.y - cr.y);
      lv[n] = amplitude * depth * (std::exp(-dr * inv2) - std::exp(-dl * inv2));
    }
  }
  subtract_level_means(q);
  return make_initial_pv(std::move(q));
}

InitialPV pv_radial(const Grid& g, double amplitude) {
  const Vec2 c = fluid_centroid(g);
  double rmin = 1e300, rmax = 0;
  for (int m = 0; m < g.n_interior(); ++m) {
    const Vec2 p = g.xy(g.interior_nodes[m]);
    const double r = std::hypot(p.x - c.x, p.y - c.y);
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  const double r0 = 0.5 * (rmin + rmax);
  const double w = std::max(0.25 * (rmax - rmin), 4 * g.h);
  const double inv2 = 1.0 / (w * w);

  ScalarField3 q(g);
  for (int k = 0; k < g.nz; ++k) {
    double* lv = q.level(k);
    for (int n : g.fluid_nodes) {
      const Vec2 p = g.xy(n);
      const double r = std::hypot(p.x - c.x, p.y - c.y);
      lv[n] = amplitude * std::exp(-(r - r0) * (r - r0) * inv2);
    }
  }
  subtract_level_means(q);
  return make_initial_pv(std::move(q));
}

InitialPV pv_random(const Grid& g, std::uint64_t seed, double amplitude) {
  Rng rng(seed);
  ScalarField3 q(g);
  for (int k = 0; k < g.nz; ++k) {
    double* lv = q.level(k);
    for (int n : g.fluid_nodes)
      lv[n] = amplitude * (2.0 * rng.uniform() - 1.0);
  }
  subtract_level_means(q);
  return make_initial_pv(std::move(q));
}

InitialPV pv_from_csv(const Grid& g, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open PV file '" + path + "'");
  ScalarField3 q(g);
  std::string line;
  int lineno = 0;
  const double dz = g.dz();
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("x,", 0) == 0) continue; // header
    std::istringstream is(line);
    double x, y, z, v;
    char c1, c2, c3;
    if (!(is >> x >> c1 >> y >> c2 >> z >> c3 >> v) || c1 != ',' ||
        c2 != ',' || c3 != ',') {
      std::ostringstream os;
      os << path << ":" << lineno << ": expected x,y,z,value";
      throw ConfigError(os.str());
    }
    const double fi = (x - g.x0) / g.h, fj = (y - g.y0) / g.h, fk = z / dz;
    const int i = static_cast<int>(std::lround(fi));
    const int j = static_cast<int>(std::lround(fj));
    const int k = static_cast<int>(std::lround(fk));
    const double snap = std::max({std::abs(fi - i), std::abs(fj - j)});
    if (i < 0 || j < 0 || k < 0 || i >= g.nx || j >= g.ny || k >= g.nz ||
        snap > 1e-6 || std::abs(fk - k) > 1e-6) {
      std::ostringstream os;
      os << path << ":" << lineno << ": point (" << x << "," << y << "," << z
         << ") is not a grid node";
      throw DomainError(os.str());
    }
    q.at(g.node(i, j), k) = v;
  }
  subtract_level_means(q);
  return make_initial_pv(std::move(q));
}

ManufacturedCase manufactured_annulus(const Grid& g) {
  if (g.n_loops != 2)
    throw TopologyError("the manufactured case needs an annulus (one hole)");
  ManufacturedCase mc;
  mc.q = ScalarField3(g);
  mc.psi_exact = ScalarField3(g);
  for (int k = 0; k < g.nz; ++k) {
    const double cz = std::cos(PI * g.z_level(k));
    double* qv = mc.q.level(k);
    double* pv = mc.psi_exact.level(k);
    for (int n : g.fluid_nodes) {
      const Vec2 p = g.xy(n);
      const double r = std::hypot(p.x, p.y);
      const double sr = std::sin(PI * (r - 1.0)), cr = std::cos(PI * (r - 1.0));
      pv[n] = sr * cz;
      qv[n] = (-2.0 * PI * PI * sr + PI * cr / r) * cz;
    }
  }
  // outward-normal circulations of psi*: 2 pi r psi_r at r = 2, minus that
  // at r = 1
  mc.c.c.assign(2, std::vector<double>(g.nz));
  for (int k = 0; k < g.nz; ++k) {
    const double cz = std::cos(PI * g.z_level(k));
    mc.c.c[0][k] = -4.0 * PI * PI * cz;
    mc.c.c[1][k] = -2.0 * PI * PI * cz;
  }
  return mc;
}

InitialPV pv_preset(const Grid& g, const std::string& name, std::uint64_t seed,
                    double amplitude) {
  if (name == "dipole") return pv_dipole(g, amplitude);
  if (name == "radial") return pv_radial(g, amplitude);
  if (name == "random") return pv_random(g, seed, amplitude);
  if (name.rfind("csv:", 0) == 0) return pv_from_csv(g, name.substr(4));
  throw ConfigError("unknown PV preset '" + name + "'");
}

} // namespace cylqg
