#ifndef CYLQG_GEOMETRY_HPP
#define CYLQG_GEOMETRY_HPP

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace cylqg {

struct Vec2 {
  double x = 0, y = 0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double norm(Vec2 a);

// Horizontal position plus vertical coordinate z in [0,1].
struct Vec3 {
  double x = 0, y = 0, z = 0;
};

// Closed polyline; the segment pts.back() -> pts.front() is implied.
// Stored counterclockwise regardless of input orientation.
struct Loop {
  std::vector<Vec2> pts;

  double signed_area() const;
  double length() const;
  bool contains(Vec2 p) const; // even-odd rule
};

// Planar cross-section M: one outer loop, zero or more holes. The fluid
// region is inside the outer loop and outside every hole.
struct CrossSection {
  Loop outer;
  std::vector<Loop> holes;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;

  int n_loops() const { return 1 + static_cast<int>(holes.size()); }
  const Loop& loop(int l) const { return l == 0 ? outer : holes[l - 1]; }
  double area() const;
  double diameter() const; // bbox diagonal
  bool contains(Vec2 p) const;
  // Nearest point on any boundary loop; loop index written to *loop_out
  // when non-null.
  Vec2 project_to_boundary(Vec2 p, int* loop_out = nullptr) const;
  double distance_to_loop(Vec2 p, int l, Vec2* dir_out = nullptr) const;
};

// The computational domain is always the cylinder M x (0,1); only the
// cross-section varies.
struct Cylinder {
  CrossSection cross_section;
};

struct DomainSpec {
  enum class Kind { annulus, rectangle, polygons };
  Kind kind = Kind::annulus;

  // annulus
  double r_inner = 1.0, r_outer = 2.0;
  Vec2 center{0, 0};
  int segments = 4096;

  struct Rect {
    double x0, y0, x1, y1;
  };
  // rectangle with rectangular holes
  Rect outer_rect{0, 0, 1, 1};
  std::vector<Rect> hole_rects;

  // raw polygon list, first loop is the outer boundary
  std::vector<std::vector<Vec2>> polygons;
};

// Parses strings like "annulus 1 2", "rectangle 0 0 3 3 hole 1 1 2 2",
// "square". Throws ConfigError on anything it cannot read.
DomainSpec parse_domain(const std::string& text);

// Validates loop topology (simple, disjoint, holes strictly inside the
// outer loop) and normalizes orientations. Throws TopologyError.
Cylinder build_domain(const DomainSpec& spec);

enum class NodeTag : std::uint8_t { exterior = 0, boundary = 1, interior = 2 };

// Structured lattice over the cross-section bbox, z levels j/(nz-1).
// Interior nodes are lattice nodes strictly inside M. A boundary node is
// an outside node with at least one interior 4-neighbor; it carries the
// loop index of the boundary piece that cuts the connecting arm.
//
// For each interior node and each of the four arm directions (E,W,N,S)
// arm_frac stores the fraction of h from the node to the boundary
// crossing (1 when the full arm lies in M) and arm_loop the loop cut
// (-1 for a full arm). weight is an exact-coverage quadrature weight:
// the area of M in the half-spacing cell around the node, with slivers
// around non-interior nodes lumped onto the nearest interior node, so
// that the weights sum to |M| exactly (up to the polyline area).
struct Grid {
  int nx = 0, ny = 0, nz = 0;
  double h = 0, x0 = 0, y0 = 0;
  std::shared_ptr<const Cylinder> domain;

  std::vector<NodeTag> mask;     // nx*ny
  std::vector<int> loop_id;      // nx*ny, -1 unless boundary
  std::vector<int> interior_index; // nx*ny, -1 unless interior
  std::vector<int> interior_nodes; // interior count, flat node ids
  std::vector<int> boundary_nodes; // flat node ids
  std::vector<int> fluid_nodes;    // interior_nodes then boundary_nodes
  std::vector<int> seed_index;     // nx*ny, position in fluid_nodes or -1
  std::vector<double> weight;      // per interior node
  std::array<std::vector<double>, 4> arm_frac; // per interior node, E W N S
  std::array<std::vector<int>, 4> arm_loop;

  int n_loops = 0;
  double area = 0;       // sum of weights
  double fluid_volume() const { return area; } // |Omega| = |M| * 1

  int node(int i, int j) const { return j * nx + i; }
  Vec2 xy(int n) const {
    return {x0 + h * (n % nx), y0 + h * (n / nx)};
  }
  double z_level(int k) const { return static_cast<double>(k) / (nz - 1); }
  double dz() const { return 1.0 / (nz - 1); }
  // trapezoid weight in z: dz at interior levels, dz/2 at the ends
  double zw(int k) const {
    return (k == 0 || k == nz - 1) ? 0.5 * dz() : dz();
  }
  int n_interior() const { return static_cast<int>(interior_nodes.size()); }
  bool is_interior(int n) const { return mask[n] == NodeTag::interior; }
  bool is_fluid_node(int n) const { return mask[n] != NodeTag::exterior; }

  // Cell (ci,cj) spans [x(ci), x(ci+1)] x [y(cj), y(cj+1)]. Returns false
  // when p falls outside the lattice.
  bool cell_of(Vec2 p, int& ci, int& cj) const;
  // True when p lies in the fluid region (exact near the boundary: mixed
  // cells fall back to the polygon test).
  bool inside(Vec2 p) const;

  // per-cell boundary segments for mixed cells, as (loop, segment) pairs;
  // empty for cells fully in or out
  std::vector<std::vector<std::pair<int, int>>> cell_segments;
  int cell_index(int ci, int cj) const { return cj * (nx - 1) + ci; }
};

// Throws ResolutionError when nx or ny < 8, nz < 2, or a loop is not
// resolved by the lattice (no node inside a hole, or a loop with no
// boundary crossing).
Grid discretize(const Cylinder& domain, int nx, int ny, int nz);

// CSV dump of the mask: x,y,tag,loop_id (one row per lattice node).
void write_mask_csv(const Grid& g, std::ostream& os);

} // namespace cylqg

#endif
