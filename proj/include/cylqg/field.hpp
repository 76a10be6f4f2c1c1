#ifndef CYLQG_FIELD_HPP
#define CYLQG_FIELD_HPP

#include <vector>

#include "cylqg/geometry.hpp"

namespace cylqg {

enum class FieldRepr { physical, mode };

// Scalar samples over the full lattice, level-major: value(n, k) with k a
// z level (physical) or a vertical cosine mode (mode repr). Exterior
// nodes hold zeros; boundary nodes hold trace values where meaningful.
struct ScalarField3 {
  const Grid* grid = nullptr;
  FieldRepr repr = FieldRepr::physical;
  std::vector<double> data; // size nx*ny*nz

  ScalarField3() = default;
  explicit ScalarField3(const Grid& g, FieldRepr r = FieldRepr::physical)
      : grid(&g), repr(r), data(static_cast<std::size_t>(g.nx) * g.ny * g.nz, 0.0) {}

  double& at(int node, int k) {
    return data[static_cast<std::size_t>(k) * grid->nx * grid->ny + node];
  }
  double at(int node, int k) const {
    return data[static_cast<std::size_t>(k) * grid->nx * grid->ny + node];
  }
  const double* level(int k) const {
    return data.data() + static_cast<std::size_t>(k) * grid->nx * grid->ny;
  }
  double* level(int k) {
    return data.data() + static_cast<std::size_t>(k) * grid->nx * grid->ny;
  }

  double max_abs() const;              // over fluid nodes, all levels
  double volume_integral() const;      // sum of weight * zw, interior nodes
  std::vector<double> level_means() const; // per-level weighted mean
};

struct VectorField3 {
  const Grid* grid = nullptr;
  ScalarField3 u, v;

  VectorField3() = default;
  explicit VectorField3(const Grid& g) : grid(&g), u(g), v(g) {}
  double max_speed() const;
};

// Circulation data c_l(z) per boundary loop, sampled at the grid levels.
struct CirculationData {
  std::vector<std::vector<double>> c; // [loop][level]

  static CirculationData zero(int n_loops, int nz);
  // constant in z, one value per loop
  static CirculationData constant(const std::vector<double>& values, int nz);

  int n_loops() const { return static_cast<int>(c.size()); }
  bool is_zero() const;
  double max_abs() const;
  // trapezoid integral over z per loop
  double z_integral(int l) const;
  double total_integral() const;
};

// Constant trace values of psi per (loop, vertical mode).
struct LoopConstants {
  int n_loops = 0, nz = 0;
  std::vector<double> s; // [mode * n_loops + loop]

  double& at(int loop, int mode) { return s[static_cast<std::size_t>(mode) * n_loops + loop]; }
  double at(int loop, int mode) const { return s[static_cast<std::size_t>(mode) * n_loops + loop]; }
  // synthesize the trace value at a physical level
  double trace_at_level(int loop, int level) const;
};

} // namespace cylqg

#endif
