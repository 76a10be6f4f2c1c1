#include "cylqg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "cylqg/errors.hpp"

namespace cylqg {

double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }

static double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
static double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

double Loop::signed_area() const {
  double s = 0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[(i + 1) % n];
    s += cross(a, b);
  }
  return 0.5 * s;
}

double Loop::length() const {
  double s = 0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) s += norm(pts[(i + 1) % n] - pts[i]);
  return s;
}

bool Loop::contains(Vec2 p) const {
  // even-odd ray cast; the half-open test is consistent at vertices
  bool in = false;
  const std::size_t n = pts.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = pts[i];
    const Vec2& b = pts[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xc) in = !in;
    }
  }
  return in;
}

double CrossSection::area() const {
  double a = outer.signed_area();
  for (const Loop& h : holes) a -= h.signed_area();
  return a;
}

double CrossSection::diameter() const {
  const double dx = xmax - xmin, dy = ymax - ymin;
  return std::sqrt(dx * dx + dy * dy);
}

bool CrossSection::contains(Vec2 p) const {
  if (!outer.contains(p)) return false;
  for (const Loop& h : holes)
    if (h.contains(p)) return false;
  return true;
}

// nearest point on segment ab to p, with the parameter in [0,1]
static Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b, double* t_out) {
  const Vec2 d = b - a;
  const double len2 = dot(d, d);
  double t = len2 > 0 ? dot(p - a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  if (t_out) *t_out = t;
  return a + t * d;
}

double CrossSection::distance_to_loop(Vec2 p, int l, Vec2* dir_out) const {
  const Loop& L = loop(l);
  const std::size_t n = L.pts.size();
  double best = std::numeric_limits<double>::max();
  Vec2 bestq{0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 q = closest_on_segment(p, L.pts[i], L.pts[(i + 1) % n], nullptr);
    const double d2 = dot(p - q, p - q);
    if (d2 < best) {
      best = d2;
      bestq = q;
    }
  }
  const double d = std::sqrt(best);
  if (dir_out) {
    // unit vector from the boundary towards p (gradient of the distance)
    *dir_out = d > 1e-300 ? (1.0 / d) * (p - bestq) : Vec2{0, 0};
  }
  return d;
}

Vec2 CrossSection::project_to_boundary(Vec2 p, int* loop_out) const {
  double best = std::numeric_limits<double>::max();
  Vec2 bestq = p;
  int bestl = 0;
  for (int l = 0; l < n_loops(); ++l) {
    const Loop& L = loop(l);
    const std::size_t n = L.pts.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 q =
          closest_on_segment(p, L.pts[i], L.pts[(i + 1) % n], nullptr);
      const double d2 = dot(p - q, p - q);
      if (d2 < best) {
        best = d2;
        bestq = q;
        bestl = l;
      }
    }
  }
  if (loop_out) *loop_out = bestl;
  return bestq;
}

// ---------------------------------------------------------------------------
// domain construction

static Loop make_circle(Vec2 c, double r, int segments) {
  Loop L;
  L.pts.resize(segments);
  for (int i = 0; i < segments; ++i) {
    const double th = 2.0 * M_PI * i / segments;
    L.pts[i] = {c.x + r * std::cos(th), c.y + r * std::sin(th)};
  }
  return L;
}

static Loop make_rect(DomainSpec::Rect r) {
  Loop L;
  L.pts = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
  return L;
}

static bool segs_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

// quadratic sweep is fine at the polyline sizes we build; bbox prefilter
// keeps the constant small
static bool loops_intersect(const Loop& A, const Loop& B) {
  const std::size_t na = A.pts.size(), nb = B.pts.size();
  for (std::size_t i = 0; i < na; ++i) {
    const Vec2 a0 = A.pts[i], a1 = A.pts[(i + 1) % na];
    const double xlo = std::min(a0.x, a1.x), xhi = std::max(a0.x, a1.x);
    const double ylo = std::min(a0.y, a1.y), yhi = std::max(a0.y, a1.y);
    for (std::size_t j = 0; j < nb; ++j) {
      const Vec2 b0 = B.pts[j], b1 = B.pts[(j + 1) % nb];
      if (std::max(b0.x, b1.x) < xlo || std::min(b0.x, b1.x) > xhi ||
          std::max(b0.y, b1.y) < ylo || std::min(b0.y, b1.y) > yhi)
        continue;
      if (segs_intersect(a0, a1, b0, b1)) return true;
    }
  }
  return false;
}

static bool loop_self_intersects(const Loop& A) {
  const std::size_t n = A.pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a0 = A.pts[i], a1 = A.pts[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue; // shared endpoint
      if (segs_intersect(a0, a1, A.pts[j], A.pts[(j + 1) % n])) return true;
    }
  }
  return false;
}

static void orient_ccw(Loop& L) {
  if (L.signed_area() < 0) std::reverse(L.pts.begin(), L.pts.end());
}

Cylinder build_domain(const DomainSpec& spec) {
  CrossSection cs;
  switch (spec.kind) {
    case DomainSpec::Kind::annulus: {
      if (!(spec.r_inner >= 0) || spec.r_outer <= spec.r_inner)
        throw TopologyError("annulus radii must satisfy 0 <= r_inner < r_outer");
      cs.outer = make_circle(spec.center, spec.r_outer, spec.segments);
      if (spec.r_inner > 0)
        cs.holes.push_back(make_circle(spec.center, spec.r_inner, spec.segments));
      break;
    }
    case DomainSpec::Kind::rectangle: {
      cs.outer = make_rect(spec.outer_rect);
      for (const auto& r : spec.hole_rects) cs.holes.push_back(make_rect(r));
      break;
    }
    case DomainSpec::Kind::polygons: {
      if (spec.polygons.empty())
        throw TopologyError("polygon domain needs at least the outer loop");
      for (std::size_t i = 0; i < spec.polygons.size(); ++i) {
        if (spec.polygons[i].size() < 3)
          throw TopologyError("polygon loop with fewer than 3 vertices");
        Loop L;
        L.pts = spec.polygons[i];
        if (i == 0)
          cs.outer = std::move(L);
        else
          cs.holes.push_back(std::move(L));
      }
      break;
    }
  }

  orient_ccw(cs.outer);
  for (Loop& h : cs.holes) orient_ccw(h);

  if (loop_self_intersects(cs.outer))
    throw TopologyError("outer loop self-intersects");
  for (std::size_t i = 0; i < cs.holes.size(); ++i) {
    if (loop_self_intersects(cs.holes[i]))
      throw TopologyError("hole loop self-intersects");
    if (loops_intersect(cs.outer, cs.holes[i]))
      throw TopologyError("hole crosses the outer loop");
    if (!cs.outer.contains(cs.holes[i].pts[0]))
      throw TopologyError("hole lies outside the outer loop");
    for (std::size_t j = i + 1; j < cs.holes.size(); ++j) {
      if (loops_intersect(cs.holes[i], cs.holes[j]))
        throw TopologyError("holes intersect each other");
      if (cs.holes[i].contains(cs.holes[j].pts[0]) ||
          cs.holes[j].contains(cs.holes[i].pts[0]))
        throw TopologyError("nested holes");
    }
  }

  cs.xmin = cs.ymin = std::numeric_limits<double>::max();
  cs.xmax = cs.ymax = std::numeric_limits<double>::lowest();
  for (const Vec2& p : cs.outer.pts) {
    cs.xmin = std::min(cs.xmin, p.x);
    cs.xmax = std::max(cs.xmax, p.x);
    cs.ymin = std::min(cs.ymin, p.y);
    cs.ymax = std::max(cs.ymax, p.y);
  }
  return Cylinder{std::move(cs)};
}

DomainSpec parse_domain(const std::string& text) {
  std::istringstream is(text);
  std::string word;
  if (!(is >> word)) throw ConfigError("empty domain spec");
  DomainSpec spec;
  if (word == "annulus") {
    spec.kind = DomainSpec::Kind::annulus;
    if (!(is >> spec.r_inner >> spec.r_outer))
      throw ConfigError("domain: expected 'annulus R_INNER R_OUTER'");
  } else if (word == "disk") {
    spec.kind = DomainSpec::Kind::annulus;
    spec.r_inner = 0;
    if (!(is >> spec.r_outer)) throw ConfigError("domain: expected 'disk R'");
  } else if (word == "square") {
    spec.kind = DomainSpec::Kind::rectangle;
    double s = 1;
    if (is >> s) {
    }
    spec.outer_rect = {0, 0, s, s};
  } else if (word == "rectangle") {
    spec.kind = DomainSpec::Kind::rectangle;
    DomainSpec::Rect r{};
    if (!(is >> r.x0 >> r.y0 >> r.x1 >> r.y1))
      throw ConfigError("domain: expected 'rectangle X0 Y0 X1 Y1 [hole x0 y0 x1 y1]...'");
    spec.outer_rect = r;
    while (is >> word) {
      if (word != "hole") throw ConfigError("domain: expected 'hole' got '" + word + "'");
      DomainSpec::Rect hr{};
      if (!(is >> hr.x0 >> hr.y0 >> hr.x1 >> hr.y1))
        throw ConfigError("domain: hole needs 4 numbers");
      spec.hole_rects.push_back(hr);
    }
  } else {
    throw ConfigError("unknown domain shape '" + word + "'");
  }
  return spec;
}

// ---------------------------------------------------------------------------
// discretization

namespace {

// Sutherland-Hodgman clip against an axis-aligned half plane. Degenerate
// bridge edges from non-convex subjects carry zero area, which is all the
// coverage computation needs.
void clip_halfplane(std::vector<Vec2>& poly, std::vector<Vec2>& tmp, int axis,
                    double bound, int keep_ge) {
  tmp.clear();
  const std::size_t n = poly.size();
  if (n == 0) return;
  auto coord = [axis](const Vec2& p) { return axis == 0 ? p.x : p.y; };
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const bool ain = keep_ge ? coord(a) >= bound : coord(a) <= bound;
    const bool bin = keep_ge ? coord(b) >= bound : coord(b) <= bound;
    if (ain) tmp.push_back(a);
    if (ain != bin) {
      const double t = (bound - coord(a)) / (coord(b) - coord(a));
      tmp.push_back(a + t * (b - a));
    }
  }
  poly.swap(tmp);
}

double shoelace(const std::vector<Vec2>& poly) {
  double s = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) s += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * s;
}

} // namespace

bool Grid::cell_of(Vec2 p, int& ci, int& cj) const {
  const double fx = (p.x - x0) / h;
  const double fy = (p.y - y0) / h;
  if (fx < 0 || fy < 0 || fx > nx - 1 || fy > ny - 1) return false;
  ci = std::min(static_cast<int>(fx), nx - 2);
  cj = std::min(static_cast<int>(fy), ny - 2);
  return true;
}

bool Grid::inside(Vec2 p) const {
  int ci, cj;
  if (!cell_of(p, ci, cj)) return false;
  const auto& segs = cell_segments[cell_index(ci, cj)];
  if (segs.empty()) {
    // uncut cell: every corner is on the same side
    return mask[node(ci, cj)] == NodeTag::interior ||
           mask[node(ci + 1, cj)] == NodeTag::interior ||
           mask[node(ci, cj + 1)] == NodeTag::interior ||
           mask[node(ci + 1, cj + 1)] == NodeTag::interior;
  }
  // mixed cell: side of the nearest boundary piece in a 3x3 neighborhood
  const CrossSection& cs = domain->cross_section;
  double best = std::numeric_limits<double>::max();
  int bl = -1, bs = -1;
  double bt = 0;
  for (int dj = -1; dj <= 1; ++dj) {
    for (int di = -1; di <= 1; ++di) {
      const int i = ci + di, j = cj + dj;
      if (i < 0 || j < 0 || i >= nx - 1 || j >= ny - 1) continue;
      for (auto [l, s] : cell_segments[cell_index(i, j)]) {
        const Loop& L = cs.loop(l);
        const std::size_t n = L.pts.size();
        double t;
        const Vec2 q = closest_on_segment(p, L.pts[s], L.pts[(s + 1) % n], &t);
        const double d2 = dot(p - q, p - q);
        if (d2 < best) {
          best = d2;
          bl = l;
          bs = s;
          bt = t;
        }
      }
    }
  }
  if (bl < 0) {
    // no boundary piece nearby after all; fall back to the exact test
    return cs.contains(p);
  }
  const Loop& L = cs.loop(bl);
  const std::size_t n = L.pts.size();
  const Vec2 a = L.pts[bs], b = L.pts[(bs + 1) % n];
  double side;
  if (bt > 0.0 && bt < 1.0) {
    side = cross(b - a, p - a);
  } else {
    // vertex case: combine the two adjacent edges (pseudo-normal)
    const int sprev = (bs + static_cast<int>(n) - 1) % n;
    const int snext = (bs + 1) % n;
    const Vec2 v = bt <= 0.0 ? a : b;
    const Vec2 e0 = bt <= 0.0 ? v - L.pts[sprev] : b - a;
    const Vec2 e1 = bt <= 0.0 ? b - a : L.pts[(snext + 1) % n] - b;
    const double l0 = norm(e0), l1 = norm(e1);
    const Vec2 nrm{(l0 > 0 ? -e0.y / l0 : 0.0) + (l1 > 0 ? -e1.y / l1 : 0.0),
                   (l0 > 0 ? e0.x / l0 : 0.0) + (l1 > 0 ? e1.x / l1 : 0.0)};
    side = dot(p - v, nrm);
  }
  // loops are CCW: the fluid is left of the outer loop, right of a hole
  return bl == 0 ? side > 0 : side < 0;
}

Grid discretize(const Cylinder& domain, int nx, int ny, int nz) {
  if (nx < 8 || ny < 8)
    throw ResolutionError("horizontal node counts must be at least 8");
  if (nz < 2) throw ResolutionError("need at least 2 vertical levels");

  const CrossSection& cs = domain.cross_section;
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.domain = std::make_shared<Cylinder>(domain);
  g.n_loops = cs.n_loops();

  g.h = std::max((cs.xmax - cs.xmin) / (nx - 1), (cs.ymax - cs.ymin) / (ny - 1));
  // center the slack so symmetric domains get symmetric lattices
  g.x0 = cs.xmin - 0.5 * ((nx - 1) * g.h - (cs.xmax - cs.xmin));
  g.y0 = cs.ymin - 0.5 * ((ny - 1) * g.h - (cs.ymax - cs.ymin));

  const int nn = nx * ny;
  g.mask.assign(nn, NodeTag::exterior);
  g.loop_id.assign(nn, -1);
  g.interior_index.assign(nn, -1);
  g.seed_index.assign(nn, -1);

  // scanline parity per loop: fluid = inside outer, outside all holes
  std::vector<std::uint8_t> in_outer(nn, 0);
  std::vector<std::uint8_t> in_hole(nn, 0); // any hole
  std::vector<int> hole_node_count(cs.n_loops(), 0);
  {
    std::vector<double> xs;
    for (int l = 0; l < cs.n_loops(); ++l) {
      const Loop& L = cs.loop(l);
      const std::size_t n = L.pts.size();
      for (int j = 0; j < ny; ++j) {
        const double y = g.y0 + j * g.h;
        xs.clear();
        for (std::size_t s = 0; s < n; ++s) {
          const Vec2 a = L.pts[s], b = L.pts[(s + 1) % n];
          if ((a.y > y) != (b.y > y))
            xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
        }
        std::sort(xs.begin(), xs.end());
        // nodes between crossing 2k and 2k+1 are inside
        std::size_t k = 0;
        for (int i = 0; i < nx; ++i) {
          const double x = g.x0 + i * g.h;
          while (k < xs.size() && xs[k] <= x) ++k;
          const bool in = (k % 2) == 1;
          if (!in) continue;
          if (l == 0) {
            in_outer[g.node(i, j)] = 1;
          } else {
            in_hole[g.node(i, j)] = 1;
            ++hole_node_count[l];
          }
        }
      }
    }
  }

  // A node the parity test calls fluid can still lie on the boundary
  // itself when a wall is aligned with the lattice. Such a node carries a
  // trace value, not an unknown: an interior node on the lattice edge
  // would need a neighbor outside the lattice, and every direct reader of
  // the 5-point neighborhood assumes interior nodes have in-grid
  // neighbors. A fluid-parity node on the lattice edge is always on the
  // outer wall (the lattice spans the cross-section's bounding box), and
  // an off-edge node is reclassified only at FP-coincidence distance.
  const double wall_snap = 1e-9 * g.h;
  for (int n = 0; n < nn; ++n) {
    if (!in_outer[n] || in_hole[n]) continue;
    const int i = n % nx, j = n / nx;
    const Vec2 p = g.xy(n);
    int wall_loop = -1;
    if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) {
      cs.project_to_boundary(p, &wall_loop);
    } else {
      for (int l = 0; l < cs.n_loops() && wall_loop < 0; ++l)
        if (cs.distance_to_loop(p, l) <= wall_snap) wall_loop = l;
    }
    if (wall_loop >= 0) {
      g.mask[n] = NodeTag::boundary;
      g.loop_id[n] = wall_loop;
      continue;
    }
    g.mask[n] = NodeTag::interior;
    g.interior_index[n] = static_cast<int>(g.interior_nodes.size());
    g.interior_nodes.push_back(n);
  }

  for (std::size_t l = 1; l < static_cast<std::size_t>(cs.n_loops()); ++l) {
    if (hole_node_count[l] == 0)
      throw ResolutionError("hole " + std::to_string(l) +
                            " contains no lattice node at this resolution");
  }

  // per-cell boundary segment buckets
  const int ncell = (nx - 1) * (ny - 1);
  g.cell_segments.assign(ncell, {});
  for (int l = 0; l < cs.n_loops(); ++l) {
    const Loop& L = cs.loop(l);
    const std::size_t n = L.pts.size();
    for (std::size_t s = 0; s < n; ++s) {
      const Vec2 a = L.pts[s], b = L.pts[(s + 1) % n];
      int ci0 = static_cast<int>(std::floor((std::min(a.x, b.x) - g.x0) / g.h));
      int ci1 = static_cast<int>(std::floor((std::max(a.x, b.x) - g.x0) / g.h));
      int cj0 = static_cast<int>(std::floor((std::min(a.y, b.y) - g.y0) / g.h));
      int cj1 = static_cast<int>(std::floor((std::max(a.y, b.y) - g.y0) / g.h));
      ci0 = std::clamp(ci0, 0, nx - 2);
      ci1 = std::clamp(ci1, 0, nx - 2);
      cj0 = std::clamp(cj0, 0, ny - 2);
      cj1 = std::clamp(cj1, 0, ny - 2);
      for (int cj = cj0; cj <= cj1; ++cj)
        for (int ci = ci0; ci <= ci1; ++ci)
          g.cell_segments[g.cell_index(ci, cj)].push_back({l, static_cast<int>(s)});
    }
  }

  // fitted arms: crossing fraction along each arm leaving the fluid
  const int ni = g.n_interior();
  for (int d = 0; d < 4; ++d) {
    g.arm_frac[d].assign(ni, 1.0);
    g.arm_loop[d].assign(ni, -1);
  }
  const int di[4] = {1, -1, 0, 0};
  const int dj[4] = {0, 0, 1, -1};
  // keep the true crossing so the shortened-arm stencil stays second
  // order; the floor only guards the 1/theta coefficients against a
  // literal zero, since nodes sitting on the boundary itself were already
  // reclassified as trace carriers above
  constexpr double theta_min = 1e-8;

  auto arm_crossing = [&](Vec2 p, Vec2 q, double& t_out, int& loop_out) {
    // nearest intersection of segment pq with the boundary, via the cell
    // buckets the segment passes through
    int ci0, cj0, ci1, cj1;
    if (!g.cell_of(p, ci0, cj0) || !g.cell_of(q, ci1, cj1)) return false;
    double best_t = std::numeric_limits<double>::max();
    int best_l = -1;
    for (int cj = std::min(cj0, cj1); cj <= std::max(cj0, cj1); ++cj) {
      for (int ci = std::min(ci0, ci1); ci <= std::max(ci0, ci1); ++ci) {
        for (auto [l, s] : g.cell_segments[g.cell_index(ci, cj)]) {
          const Loop& L = cs.loop(l);
          const std::size_t n = L.pts.size();
          const Vec2 a = L.pts[s], b = L.pts[(s + 1) % n];
          const double denom = cross(q - p, b - a);
          if (denom == 0) continue;
          const double t = cross(a - p, b - a) / denom;
          const double u = cross(a - p, q - p) / denom;
          if (t >= 0 && t <= 1 && u >= -1e-12 && u <= 1 + 1e-12 && t < best_t) {
            best_t = t;
            best_l = l;
          }
        }
      }
    }
    if (best_l < 0) return false;
    t_out = best_t;
    loop_out = best_l;
    return true;
  };

  for (int idx = 0; idx < ni; ++idx) {
    const int n = g.interior_nodes[idx];
    const int i = n % nx, j = n / nx;
    const Vec2 p = g.xy(n);
    for (int d = 0; d < 4; ++d) {
      const int i2 = i + di[d], j2 = j + dj[d];
      const bool neighbor_in = i2 >= 0 && j2 >= 0 && i2 < nx && j2 < ny &&
                               g.mask[g.node(i2, j2)] == NodeTag::interior;
      if (neighbor_in) continue;
      const Vec2 q{p.x + di[d] * g.h, p.y + dj[d] * g.h};
      double t;
      int l;
      if (!arm_crossing(p, q, t, l)) {
        // grazing crossing the exact test missed; bisect on containment
        double lo = 0, hi = 1;
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          (cs.contains(p + mid * (q - p)) ? lo : hi) = mid;
        }
        t = hi;
        cs.project_to_boundary(p + t * (q - p), &l);
      }
      g.arm_frac[d][idx] = std::clamp(t, theta_min, 1.0);
      g.arm_loop[d][idx] = l;
      if (i2 >= 0 && j2 >= 0 && i2 < nx && j2 < ny) {
        const int bn = g.node(i2, j2);
        if (g.mask[bn] == NodeTag::exterior) {
          g.mask[bn] = NodeTag::boundary;
          g.loop_id[bn] = l;
        } else if (g.mask[bn] == NodeTag::boundary && g.loop_id[bn] != l) {
          throw ResolutionError(
              "boundary node claimed by two loops: gap thinner than a cell");
        }
      }
    }
  }

  for (int n = 0; n < nn; ++n)
    if (g.mask[n] == NodeTag::boundary) g.boundary_nodes.push_back(n);

  // every loop must actually cut the lattice
  {
    std::vector<char> seen(cs.n_loops(), 0);
    for (int d = 0; d < 4; ++d)
      for (int idx = 0; idx < ni; ++idx)
        if (g.arm_loop[d][idx] >= 0) seen[g.arm_loop[d][idx]] = 1;
    for (int l = 0; l < cs.n_loops(); ++l)
      if (!seen[l])
        throw ResolutionError("loop " + std::to_string(l) +
                              " is not resolved by the lattice");
  }
  if (ni == 0) throw ResolutionError("no interior nodes");

  // exact coverage of the half-spacing cells around each node
  std::vector<double> cov(nn, 0.0);
  {
    std::vector<Vec2> poly, col, cellp, tmp;
    for (int l = 0; l < cs.n_loops(); ++l) {
      const Loop& L = cs.loop(l);
      const double sign = l == 0 ? 1.0 : -1.0;
      for (int i = 0; i < nx; ++i) {
        const double xl = g.x0 + (i - 0.5) * g.h;
        const double xr = g.x0 + (i + 0.5) * g.h;
        col = L.pts;
        clip_halfplane(col, tmp, 0, xl, 1);
        clip_halfplane(col, tmp, 0, xr, 0);
        if (col.empty()) continue;
        double cymin = std::numeric_limits<double>::max(), cymax = -cymin;
        for (const Vec2& v : col) {
          cymin = std::min(cymin, v.y);
          cymax = std::max(cymax, v.y);
        }
        int j0 = static_cast<int>(std::floor((cymin - g.y0) / g.h + 0.5));
        int j1 = static_cast<int>(std::floor((cymax - g.y0) / g.h + 0.5));
        j0 = std::clamp(j0, 0, ny - 1);
        j1 = std::clamp(j1, 0, ny - 1);
        for (int j = j0; j <= j1; ++j) {
          cellp = col;
          clip_halfplane(cellp, tmp, 1, g.y0 + (j - 0.5) * g.h, 1);
          clip_halfplane(cellp, tmp, 1, g.y0 + (j + 0.5) * g.h, 0);
          if (cellp.size() >= 3) cov[g.node(i, j)] += sign * shoelace(cellp);
        }
      }
    }
  }

  // lump coverage at non-interior nodes onto the nearest interior node so
  // the weights keep summing to |M| exactly
  g.weight.assign(ni, 0.0);
  const double sliver = 1e-12 * g.h * g.h;
  for (int n = 0; n < nn; ++n) {
    const double c = cov[n];
    if (g.mask[n] == NodeTag::interior) {
      g.weight[g.interior_index[n]] += c;
      continue;
    }
    if (std::abs(c) <= sliver) continue;
    const int i = n % nx, j = n / nx;
    int target = -1;
    for (int ring = 1; ring <= 3 && target < 0; ++ring) {
      double best = std::numeric_limits<double>::max();
      for (int dj2 = -ring; dj2 <= ring; ++dj2) {
        for (int di2 = -ring; di2 <= ring; ++di2) {
          if (std::max(std::abs(di2), std::abs(dj2)) != ring) continue;
          const int i2 = i + di2, j2 = j + dj2;
          if (i2 < 0 || j2 < 0 || i2 >= nx || j2 >= ny) continue;
          const int n2 = g.node(i2, j2);
          if (g.mask[n2] != NodeTag::interior) continue;
          const double d2 = di2 * di2 + dj2 * dj2;
          if (d2 < best) {
            best = d2;
            target = g.interior_index[n2];
          }
        }
      }
    }
    if (target < 0)
      throw ResolutionError("boundary sliver with no interior node within 3 cells");
    g.weight[target] += c;
  }
  g.area = 0;
  for (double w : g.weight) g.area += w;

  g.fluid_nodes = g.interior_nodes;
  g.fluid_nodes.insert(g.fluid_nodes.end(), g.boundary_nodes.begin(),
                       g.boundary_nodes.end());
  for (std::size_t s = 0; s < g.fluid_nodes.size(); ++s)
    g.seed_index[g.fluid_nodes[s]] = static_cast<int>(s);

  return g;
}

void write_mask_csv(const Grid& g, std::ostream& os) {
  os << "x,y,tag,loop_id\n";
  char buf[64];
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int n = g.node(i, j);
      const Vec2 p = g.xy(n);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%d\n", p.x, p.y,
                    static_cast<int>(g.mask[n]), g.loop_id[n]);
      os << buf;
    }
  }
}

} // namespace cylqg
