#ifndef CYLQG_TRANSPORT_HPP
#define CYLQG_TRANSPORT_HPP

#include <string>
#include <vector>

#include "cylqg/field.hpp"
#include "cylqg/flowmap.hpp"
#include "cylqg/geometry.hpp"

namespace cylqg {

// Initial PV sampled on the grid. bound is |q0|_inf over the samples; the
// pullback interpolates monotonically, so |q(t)|_inf <= bound exactly for
// all later times.
struct InitialPV {
  ScalarField3 q0;
  double bound = 0;

  // Per-level weighted means; the homogeneous system requires them to be
  // zero (presets enforce this exactly at construction).
  std::vector<double> level_means() const { return q0.level_means(); }
};

InitialPV make_initial_pv(ScalarField3 q0);

// Monotone bilinear interpolation of one level slice at p: the result
// lies in [min, max] of the participating corner values, exactly. In
// cells cut by the boundary, corners outside the fluid are filled with
// the mean of the fluid corners (range-preserving). Throws OutOfDomain
// when the containing cell has no fluid corner or p leaves the lattice.
double interpolate(const Grid& g, const double* level_values, Vec2 p);

// Optional cubic variant (Catmull-Rom, clamped stencils near the
// boundary). Not monotone; the L-infinity invariant holds only up to the
// overshoot of the cubic weights.
double interpolate_cubic(const Grid& g, const double* level_values, Vec2 p);

enum class InterpOrder { bilinear, cubic };

// q(x,z,t) = q0(Phi_back(x), z): evaluates the initial PV at the feet of
// the backward map. back must be seeded on this grid at time t.
ScalarField3 pullback(const InitialPV& q0, const FlowMap& back,
                      InterpOrder order = InterpOrder::bilinear,
                      int threads = 0);

} // namespace cylqg

#endif
