#include "cylqg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cylqg/errors.hpp"
#include "cylqg/parallel.hpp"

namespace cylqg {

InitialPV make_initial_pv(ScalarField3 q0) {
  InitialPV out;
  out.bound = q0.max_abs();
  out.q0 = std::move(q0);
  return out;
}

namespace {

struct CellSample {
  int corner[4];
  double wgt[4];
  int nvalid;
};

bool locate(const Grid& g, Vec2 p, CellSample& cs) {
  if (p.x < g.x0 || p.y < g.y0 || p.x > g.x0 + g.h * (g.nx - 1) ||
      p.y > g.y0 + g.h * (g.ny - 1))
    return false;
  int ci = static_cast<int>((p.x - g.x0) / g.h);
  int cj = static_cast<int>((p.y - g.y0) / g.h);
  ci = std::clamp(ci, 0, g.nx - 2);
  cj = std::clamp(cj, 0, g.ny - 2);
  const double fx = (p.x - (g.x0 + ci * g.h)) / g.h;
  const double fy = (p.y - (g.y0 + cj * g.h)) / g.h;
  cs.corner[0] = g.node(ci, cj);
  cs.corner[1] = g.node(ci + 1, cj);
  cs.corner[2] = g.node(ci, cj + 1);
  cs.corner[3] = g.node(ci + 1, cj + 1);
  cs.wgt[0] = (1 - fx) * (1 - fy);
  cs.wgt[1] = fx * (1 - fy);
  cs.wgt[2] = (1 - fx) * fy;
  cs.wgt[3] = fx * fy;
  cs.nvalid = 0;
  for (int c = 0; c < 4; ++c)
    if (g.mask[cs.corner[c]] != NodeTag::exterior) ++cs.nvalid;
  return true;
}

double blend(const Grid& g, const double* f, const CellSample& cs) {
  double mean = 0;
  double lo = std::numeric_limits<double>::max(), hi = -lo;
  for (int c = 0; c < 4; ++c)
    if (g.mask[cs.corner[c]] != NodeTag::exterior) {
      const double v = f[cs.corner[c]];
      mean += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  mean /= cs.nvalid;
  double s = 0;
  for (int c = 0; c < 4; ++c) {
    const bool ok = g.mask[cs.corner[c]] != NodeTag::exterior;
    s += cs.wgt[c] * (ok ? f[cs.corner[c]] : mean);
  }
  // the weights sum to 1 only up to rounding; pin the monotone range
  return std::clamp(s, lo, hi);
}

} // namespace

double interpolate(const Grid& g, const double* level_values, Vec2 p) {
  CellSample cs;
  if (!locate(g, p, cs))
    throw OutOfDomain("interpolation point outside the lattice");
  if (cs.nvalid == 0)
    throw OutOfDomain("interpolation cell has no fluid corner");
  return blend(g, level_values, cs);
}

double interpolate_cubic(const Grid& g, const double* level_values, Vec2 p) {
  CellSample cs;
  if (!locate(g, p, cs))
    throw OutOfDomain("interpolation point outside the lattice");
  if (cs.nvalid == 0)
    throw OutOfDomain("interpolation cell has no fluid corner");
  const int ci = cs.corner[0] % g.nx;
  const int cj = cs.corner[0] / g.nx;
  // full 4x4 fluid stencil required; cut or edge cells fall back to the
  // monotone bilinear rule
  if (ci < 1 || cj < 1 || ci + 2 >= g.nx || cj + 2 >= g.ny)
    return blend(g, level_values, cs);
  for (int dj = -1; dj <= 2; ++dj)
    for (int di = -1; di <= 2; ++di)
      if (g.mask[g.node(ci + di, cj + dj)] == NodeTag::exterior)
        return blend(g, level_values, cs);
  const double fx = (p.x - (g.x0 + ci * g.h)) / g.h;
  const double fy = (p.y - (g.y0 + cj * g.h)) / g.h;
  auto cr = [](double fm1, double f0, double f1, double f2, double t) {
    return f0 + 0.5 * t *
                    (f1 - fm1 +
                     t * (2 * fm1 - 5 * f0 + 4 * f1 - f2 +
                          t * (3 * (f0 - f1) + f2 - fm1)));
  };
  double rows[4];
  for (int dj = -1; dj <= 2; ++dj) {
    const double* base = level_values + g.node(ci - 1, cj + dj);
    rows[dj + 1] = cr(base[0], base[1], base[2], base[3], fx);
  }
  return cr(rows[0], rows[1], rows[2], rows[3], fy);
}

ScalarField3 pullback(const InitialPV& q0, const FlowMap& back,
                      InterpOrder order, int threads) {
  const Grid& g = *q0.q0.grid;
  if (back.grid != &g)
    throw SeedError("backward map was seeded on a different grid");
  if (back.nseeds != seed_count(g))
    throw SeedError("backward map seed count does not match the grid");
  ScalarField3 q(g);
  if (threads <= 0) threads = default_threads();
  std::vector<std::string> errs(g.nz);
  parallel_for(static_cast<std::size_t>(g.nz), threads,
               [&](std::size_t lo, std::size_t hi, int) {
                 for (std::size_t k = lo; k < hi; ++k) {
                   const double* src = q0.q0.level(static_cast<int>(k));
                   double* dst = q.level(static_cast<int>(k));
                   try {
                     for (int s = 0; s < back.nseeds; ++s) {
                       const Vec2 foot = back.at(static_cast<int>(k), s);
                       CellSample cs;
                       if (!locate(g, foot, cs))
                         throw OutOfDomain("pullback foot left the lattice");
                       double v;
                       if (cs.nvalid > 0) {
                         v = order == InterpOrder::cubic
                                 ? interpolate_cubic(g, src, foot)
                                 : blend(g, src, cs);
                       } else {
                         // foot sits in a sliver cell with no fluid corner
                         // (possible right on the boundary): take the value
                         // at the nearest fluid node, which preserves range
                         const int ci = cs.corner[0] % g.nx;
                         const int cj = cs.corner[0] / g.nx;
                         v = 0;
                         bool found = false;
                         for (int r = 1; r < std::max(g.nx, g.ny) && !found; ++r)
                           for (int dj = -r; dj <= r && !found; ++dj)
                             for (int di = -r; di <= r && !found; ++di) {
                               if (std::max(std::abs(di), std::abs(dj)) != r)
                                 continue;
                               const int i2 = ci + di, j2 = cj + dj;
                               if (i2 < 0 || j2 < 0 || i2 >= g.nx || j2 >= g.ny)
                                 continue;
                               if (g.mask[g.node(i2, j2)] != NodeTag::exterior) {
                                 v = src[g.node(i2, j2)];
                                 found = true;
                               }
                             }
                         if (!found)
                           throw OutOfDomain("no fluid data near a pullback foot");
                       }
                       dst[g.fluid_nodes[s]] = v;
                     }
                   } catch (const Error& e) {
                     errs[k] = e.what();
                   }
                 }
               });
  for (int k = 0; k < g.nz; ++k)
    if (!errs[k].empty())
      throw OutOfDomain("level " + std::to_string(k) + ": " + errs[k]);
  return q;
}

} // namespace cylqg
