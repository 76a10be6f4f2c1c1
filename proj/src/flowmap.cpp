#include "cylqg/flowmap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cylqg/errors.hpp"
#include "cylqg/parallel.hpp"

namespace cylqg {

void AnalyticVelocity::eval(double t, int level, const Vec2* p, Vec2* out,
                            int n) const {
  for (int i = 0; i < n; ++i) out[i] = fn_(t, p[i], level);
}

namespace {

// Total bilinear sample of one level slice: corners outside the fluid are
// filled with the mean of the fluid corners; a cell with no fluid corner
// falls back to the nearest fluid node by an expanding ring scan. Never
// throws; integrators own the escape policy.
Vec2 sample_total(const Grid& g, const double* ulev, const double* vlev,
                  Vec2 p) {
  const double eps = 1e-12 * g.h;
  const double xmax = g.x0 + g.h * (g.nx - 1);
  const double ymax = g.y0 + g.h * (g.ny - 1);
  const double x = std::clamp(p.x, g.x0 + eps, xmax - eps);
  const double y = std::clamp(p.y, g.y0 + eps, ymax - eps);
  int ci = static_cast<int>((x - g.x0) / g.h);
  int cj = static_cast<int>((y - g.y0) / g.h);
  ci = std::clamp(ci, 0, g.nx - 2);
  cj = std::clamp(cj, 0, g.ny - 2);
  const double fx = (x - (g.x0 + ci * g.h)) / g.h;
  const double fy = (y - (g.y0 + cj * g.h)) / g.h;

  const int corner[4] = {g.node(ci, cj), g.node(ci + 1, cj),
                         g.node(ci, cj + 1), g.node(ci + 1, cj + 1)};
  const double wgt[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy,
                         fx * fy};
  double su = 0, sv = 0, sm = 0;
  int nvalid = 0;
  double mu = 0, mv = 0;
  for (int c = 0; c < 4; ++c)
    if (g.mask[corner[c]] != NodeTag::exterior) {
      mu += ulev[corner[c]];
      mv += vlev[corner[c]];
      ++nvalid;
    }
  if (nvalid == 0) {
    for (int r = 1; r < std::max(g.nx, g.ny); ++r) {
      for (int dj = -r; dj <= r; ++dj)
        for (int di = -r; di <= r; ++di) {
          if (std::max(std::abs(di), std::abs(dj)) != r) continue;
          const int i2 = ci + di, j2 = cj + dj;
          if (i2 < 0 || j2 < 0 || i2 >= g.nx || j2 >= g.ny) continue;
          const int n2 = g.node(i2, j2);
          if (g.mask[n2] != NodeTag::exterior)
            return {ulev[n2], vlev[n2]};
        }
    }
    return {0, 0};
  }
  mu /= nvalid;
  mv /= nvalid;
  for (int c = 0; c < 4; ++c) {
    const bool ok = g.mask[corner[c]] != NodeTag::exterior;
    su += wgt[c] * (ok ? ulev[corner[c]] : mu);
    sv += wgt[c] * (ok ? vlev[corner[c]] : mv);
    sm += wgt[c];
  }
  return {su / sm, sv / sm};
}

} // namespace

SnapshotVelocity::SnapshotVelocity(const Grid& g, std::vector<double> times,
                                   std::vector<VectorField3> snapshots)
    : grid_(&g), times_(std::move(times)), snaps_(std::move(snapshots)) {
  if (times_.empty() || times_.size() != snaps_.size())
    throw SolverError("snapshot velocity needs matching times and fields");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (times_[i] <= times_[i - 1])
      throw SolverError("snapshot times must be strictly increasing");
}

void SnapshotVelocity::eval(double t, int level, const Vec2* p, Vec2* out,
                            int n) const {
  const Grid& g = *grid_;
  std::size_t hi = 0;
  double a = 0;
  if (times_.size() == 1 || t <= times_.front()) {
    hi = 0;
  } else if (t >= times_.back()) {
    hi = times_.size() - 1;
  } else {
    while (hi + 1 < times_.size() && times_[hi + 1] < t) ++hi;
    // t in (times_[hi], times_[hi+1]]
    a = (t - times_[hi]) / (times_[hi + 1] - times_[hi]);
    if (a > 0) ++hi;
  }
  if (a == 0 || hi == 0) {
    const double* ul = snaps_[hi].u.level(level);
    const double* vl = snaps_[hi].v.level(level);
    for (int i = 0; i < n; ++i) out[i] = sample_total(g, ul, vl, p[i]);
    return;
  }
  const double* ul0 = snaps_[hi - 1].u.level(level);
  const double* vl0 = snaps_[hi - 1].v.level(level);
  const double* ul1 = snaps_[hi].u.level(level);
  const double* vl1 = snaps_[hi].v.level(level);
  for (int i = 0; i < n; ++i) {
    const Vec2 v0 = sample_total(g, ul0, vl0, p[i]);
    const Vec2 v1 = sample_total(g, ul1, vl1, p[i]);
    out[i] = {(1 - a) * v0.x + a * v1.x, (1 - a) * v0.y + a * v1.y};
  }
}

const std::vector<int>& seed_nodes(const Grid& g) { return g.fluid_nodes; }
int seed_count(const Grid& g) { return static_cast<int>(g.fluid_nodes.size()); }

FlowMap FlowMap::identity(const Grid& g, MapDirection dir) {
  FlowMap m;
  m.grid = &g;
  m.direction = dir;
  m.nseeds = seed_count(g);
  m.pos.resize(static_cast<std::size_t>(m.nseeds) * g.nz);
  for (int k = 0; k < g.nz; ++k)
    for (int s = 0; s < m.nseeds; ++s)
      m.pos[static_cast<std::size_t>(k) * m.nseeds + s] = g.xy(g.fluid_nodes[s]);
  return m;
}

namespace {

void rk4_level(const Grid& g, const VelocityProvider& u, int level, double t,
               double dt, Vec2* x, int n, std::int64_t& escaped) {
  thread_local std::vector<Vec2> k1, k2, k3, k4, tmp;
  k1.resize(n);
  k2.resize(n);
  k3.resize(n);
  k4.resize(n);
  tmp.resize(n);
  u.eval(t, level, x, k1.data(), n);
  for (int i = 0; i < n; ++i)
    tmp[i] = {x[i].x + 0.5 * dt * k1[i].x, x[i].y + 0.5 * dt * k1[i].y};
  u.eval(t + 0.5 * dt, level, tmp.data(), k2.data(), n);
  for (int i = 0; i < n; ++i)
    tmp[i] = {x[i].x + 0.5 * dt * k2[i].x, x[i].y + 0.5 * dt * k2[i].y};
  u.eval(t + 0.5 * dt, level, tmp.data(), k3.data(), n);
  for (int i = 0; i < n; ++i)
    tmp[i] = {x[i].x + dt * k3[i].x, x[i].y + dt * k3[i].y};
  u.eval(t + dt, level, tmp.data(), k4.data(), n);
  const CrossSection& cs = g.domain->cross_section;
  for (int i = 0; i < n; ++i) {
    Vec2 p{x[i].x + dt / 6.0 * (k1[i].x + 2 * k2[i].x + 2 * k3[i].x + k4[i].x),
           x[i].y + dt / 6.0 * (k1[i].y + 2 * k2[i].y + 2 * k3[i].y + k4[i].y)};
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw IntegrationError("non-finite particle position at t = " +
                             std::to_string(t + dt));
    if (!g.inside(p)) {
      const Vec2 q = cs.project_to_boundary(p);
      Vec2 nudged{q.x + 1e-10 * (q.x - p.x), q.y + 1e-10 * (q.y - p.y)};
      p = g.inside(nudged) ? nudged : q;
      ++escaped;
    }
    x[i] = p;
  }
}

} // namespace

FlowMap advance(const FlowMap& map, const VelocityProvider& u, double dt) {
  FlowMap out = map;
  if (dt == 0) return out;
  const Grid& g = *map.grid;
  for (int k = 0; k < g.nz; ++k)
    rk4_level(g, u, k, map.t, dt, &out.at(k, 0), map.nseeds, out.escaped);
  out.t = map.t + dt;
  return out;
}

FlowMap integrate(FlowMap map, const VelocityProvider& u, double t_end,
                  int nsteps, int threads) {
  if (nsteps <= 0) throw IntegrationError("integrate needs nsteps >= 1");
  const Grid& g = *map.grid;
  const double dt = (t_end - map.t) / nsteps;
  if (dt == 0) {
    map.t = t_end;
    return map;
  }
  const double t0 = map.t;
  std::vector<std::int64_t> esc(g.nz, 0);
  if (threads <= 0) threads = default_threads();
  parallel_for(static_cast<std::size_t>(g.nz), threads,
               [&](std::size_t lo, std::size_t hi, int) {
                 for (std::size_t k = lo; k < hi; ++k)
                   for (int s = 0; s < nsteps; ++s)
                     rk4_level(g, u, static_cast<int>(k), t0 + s * dt, dt,
                               &map.at(static_cast<int>(k), 0), map.nseeds,
                               esc[k]);
               });
  for (std::int64_t e : esc) map.escaped += e;
  map.t = t_end;
  return map;
}

PicardResult picard_solve(const Grid& g, const VelocityProvider& u, double t0,
                          double T, const PicardConfig& cfg) {
  const int m = std::max(2, cfg.time_nodes);
  const int nz = g.nz;
  const int ns = seed_count(g);
  const double dt = T / (m - 1);
  const int threads = cfg.threads > 0 ? cfg.threads : default_threads();

  std::vector<double> times(m);
  for (int i = 0; i < m; ++i) times[i] = t0 + dt * i;

  // X[i] holds positions at node i, level-major like FlowMap
  std::vector<std::vector<Vec2>> X(m);
  const FlowMap id = FlowMap::identity(g);
  for (int i = 0; i < m; ++i) X[i] = id.pos;
  if (cfg.rk4_seed) {
    FlowMap cur = id;
    cur.t = t0;
    for (int i = 1; i < m; ++i) {
      cur = integrate(std::move(cur), u, times[i], 1, threads);
      X[i] = cur.pos;
    }
  }

  PicardResult res;
  std::vector<double> level_sup(nz);
  int consecutive_up = 0;
  int extra_left = cfg.extra_iterates;
  bool converged = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    std::fill(level_sup.begin(), level_sup.end(), 0.0);
    parallel_for(static_cast<std::size_t>(nz), threads,
                 [&](std::size_t lo, std::size_t hi, int) {
                   std::vector<Vec2> v(static_cast<std::size_t>(m) * ns);
                   std::vector<Vec2> acc(ns);
                   for (std::size_t k = lo; k < hi; ++k) {
                     const std::size_t off = k * ns;
                     for (int i = 0; i < m; ++i)
                       u.eval(times[i], static_cast<int>(k), &X[i][off],
                              &v[static_cast<std::size_t>(i) * ns], ns);
                     // composite trapezoid, prefix-summed over the nodes
                     std::fill(acc.begin(), acc.end(), Vec2{0, 0});
                     double sup = 0;
                     for (int i = 1; i < m; ++i) {
                       const Vec2* va = &v[static_cast<std::size_t>(i - 1) * ns];
                       const Vec2* vb = &v[static_cast<std::size_t>(i) * ns];
                       for (int s = 0; s < ns; ++s) {
                         acc[s].x += 0.5 * dt * (va[s].x + vb[s].x);
                         acc[s].y += 0.5 * dt * (va[s].y + vb[s].y);
                         const Vec2 a = id.pos[off + s];
                         const Vec2 nw{a.x + acc[s].x, a.y + acc[s].y};
                         sup = std::max(sup, std::hypot(nw.x - X[i][off + s].x,
                                                        nw.y - X[i][off + s].y));
                         X[i][off + s] = nw;
                       }
                     }
                     level_sup[k] = sup;
                   }
                 });
    double dist = 0;
    for (double s : level_sup) dist = std::max(dist, s);
    res.iterate_distance.push_back(dist);
    res.iterations = it + 1;
    if (res.iterate_distance.size() >= 2) {
      const double prev = res.iterate_distance[res.iterate_distance.size() - 2];
      consecutive_up = (prev > 0 && dist >= prev) ? consecutive_up + 1 : 0;
      if (consecutive_up >= 5) {
        std::ostringstream os;
        os << "trajectory iteration is not contracting; distances:";
        for (double d : res.iterate_distance) os << " " << d;
        throw ContractionError(os.str());
      }
    }
    if (dist <= cfg.tol) {
      if (extra_left-- <= 0) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "trajectory iteration hit the cap (" << cfg.max_iter
       << ") above tolerance; distances:";
    for (double d : res.iterate_distance) os << " " << d;
    throw ContractionError(os.str());
  }

  res.path.times = times;
  res.path.maps.resize(m);
  const CrossSection& cs = g.domain->cross_section;
  for (int i = 0; i < m; ++i) {
    FlowMap fm = id;
    fm.t = times[i];
    fm.pos = X[i];
    for (auto& p : fm.pos) {
      if (!g.inside(p)) {
        p = cs.project_to_boundary(p);
        ++fm.escaped;
      }
    }
    res.path.maps[i] = std::move(fm);
  }
  return res;
}

FlowMap inverse_map(const Grid& g, const VelocityProvider& u, double t,
                    int nsteps, int threads) {
  FlowMap m = FlowMap::identity(g, MapDirection::backward);
  m.t = t;
  if (t == 0) return m;
  return integrate(std::move(m), u, 0.0, nsteps, threads);
}

AreaReport area_distortion(const FlowMap& map) {
  const Grid& g = *map.grid;
  AreaReport rep;
  rep.per_level_max.assign(g.nz, 0.0);
  double sum = 0;
  std::int64_t cnt = 0;
  for (int k = 0; k < g.nz; ++k) {
    for (int s = 0; s < map.nseeds; ++s) {
      const int n = g.fluid_nodes[s];
      const int i = n % g.nx, j = n / g.nx;
      if (i < 1 || j < 1 || i >= g.nx - 1 || j >= g.ny - 1) {
        ++rep.skipped;
        continue;
      }
      // boundary seeds hold projected positions, not material points;
      // only a stencil made of interior seeds measures the flow itself
      if (!g.is_interior(n) || !g.is_interior(n + 1) || !g.is_interior(n - 1) ||
          !g.is_interior(n + g.nx) || !g.is_interior(n - g.nx)) {
        ++rep.skipped;
        continue;
      }
      const int se = g.seed_index[n + 1], sw = g.seed_index[n - 1];
      const int sn = g.seed_index[n + g.nx], ss = g.seed_index[n - g.nx];
      const Vec2 e = map.at(k, se), w = map.at(k, sw);
      const Vec2 nn = map.at(k, sn), sv = map.at(k, ss);
      const double jxx = (e.x - w.x) / (2 * g.h);
      const double jyx = (e.y - w.y) / (2 * g.h);
      const double jxy = (nn.x - sv.x) / (2 * g.h);
      const double jyy = (nn.y - sv.y) / (2 * g.h);
      const double dev = std::abs(jxx * jyy - jxy * jyx - 1.0);
      rep.per_level_max[k] = std::max(rep.per_level_max[k], dev);
      rep.max_abs = std::max(rep.max_abs, dev);
      sum += dev;
      ++cnt;
    }
  }
  rep.mean_abs = cnt > 0 ? sum / cnt : 0.0;
  // skipped counts pairs once per level in the loop above; report per seed
  rep.skipped /= g.nz > 0 ? g.nz : 1;
  return rep;
}

HolderReport holder_probe(const FlowMap& map,
                          const std::vector<std::pair<SeedRef, SeedRef>>& pairs,
                          double C) {
  const Grid& g = *map.grid;
  HolderReport rep;
  const double t = std::abs(map.t);
  const double expo = std::exp(-C * t);
  rep.bound_factor = std::exp(1.0 - expo);

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (const auto& [a, b] : pairs) {
    const Vec2 pa = g.xy(g.fluid_nodes[a.seed]);
    const Vec2 pb = g.xy(g.fluid_nodes[b.seed]);
    const double dz = std::abs(g.z_level(a.level) - g.z_level(b.level));
    const double d0 = std::hypot(pa.x - pb.x, pa.y - pb.y) + dz;
    if (d0 <= 0 || d0 >= 1) continue;
    const Vec2 qa = map.at(a.level, a.seed);
    const Vec2 qb = map.at(b.level, b.seed);
    const double d1 = std::hypot(qa.x - qb.x, qa.y - qb.y) + dz;
    ++used;
    if (d1 > std::pow(d0, expo) * rep.bound_factor) ++rep.violations;
    if (d1 > 0) {
      const double lx = std::log(d0), ly = std::log(d1);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
  }
  rep.pairs = used;
  const double den = used * sxx - sx * sx;
  rep.exponent = den != 0 ? (used * sxy - sx * sy) / den : 1.0;
  return rep;
}

} // namespace cylqg
