#ifndef CYLQG_FLOWMAP_HPP
#define CYLQG_FLOWMAP_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "cylqg/field.hpp"
#include "cylqg/geometry.hpp"

namespace cylqg {

// Velocity sampled anywhere in closure(M), per level, at time t. Lookups
// are total: points slightly outside are evaluated at the nearest valid
// data (escape handling belongs to the integrator, not the provider).
class VelocityProvider {
public:
  virtual ~VelocityProvider() = default;
  virtual void eval(double t, int level, const Vec2* p, Vec2* out,
                    int n) const = 0;
  virtual int levels() const = 0;
};

class AnalyticVelocity : public VelocityProvider {
public:
  using Fn = std::function<Vec2(double t, Vec2 p, int level)>;
  AnalyticVelocity(Fn fn, int nlevels) : fn_(std::move(fn)), nlev_(nlevels) {}
  void eval(double t, int level, const Vec2* p, Vec2* out, int n) const override;
  int levels() const override { return nlev_; }

private:
  Fn fn_;
  int nlev_;
};

// Bilinear in space over stored snapshots, linear in time between them.
// A single snapshot means a steady field.
class SnapshotVelocity : public VelocityProvider {
public:
  SnapshotVelocity(const Grid& g, std::vector<double> times,
                   std::vector<VectorField3> snapshots);
  void eval(double t, int level, const Vec2* p, Vec2* out, int n) const override;
  int levels() const override { return grid_->nz; }
  const Grid& grid() const { return *grid_; }

private:
  const Grid* grid_;
  std::vector<double> times_;
  std::vector<VectorField3> snaps_;
};

enum class MapDirection { forward, backward };

// Per-level particle positions, seeded at the fluid nodes (interior and
// boundary) of the grid. pos[level * nseeds + s] is the image of seed s.
struct FlowMap {
  const Grid* grid = nullptr;
  double t = 0;
  MapDirection direction = MapDirection::forward;
  int nseeds = 0;                 // per level
  std::vector<Vec2> pos;
  std::int64_t escaped = 0;       // boundary projections applied so far

  static FlowMap identity(const Grid& g,
                          MapDirection dir = MapDirection::forward);
  Vec2 at(int level, int seed) const { return pos[static_cast<std::size_t>(level) * nseeds + seed]; }
  Vec2& at(int level, int seed) { return pos[static_cast<std::size_t>(level) * nseeds + seed]; }
};

// Seed list shared by every FlowMap on a grid: interior nodes first (in
// interior_nodes order), then boundary nodes.
const std::vector<int>& seed_nodes(const Grid& g);
int seed_count(const Grid& g);

// One classical 4-stage step from map.t to map.t + dt (dt < 0 steps
// backward in time). Particles landing outside M are projected to the
// nearest boundary point and counted. Throws IntegrationError on
// non-finite positions.
FlowMap advance(const FlowMap& map, const VelocityProvider& u, double dt);

// Repeated advance with fixed step count.
FlowMap integrate(FlowMap map, const VelocityProvider& u, double t_end,
                  int nsteps, int threads = 0);

struct FlowPath {
  std::vector<double> times;
  std::vector<FlowMap> maps;
};

struct PicardConfig {
  int time_nodes = 9;        // quadrature nodes over [0,T]
  double tol = 1e-10;        // sup distance between successive iterates
  int max_iter = 40;
  bool rk4_seed = false;     // start from an RK4 presolve instead of identity
  int extra_iterates = 0;    // keep iterating past tol (schedule knob)
  int threads = 0;
};

struct PicardResult {
  FlowPath path;                        // converged trajectory
  std::vector<double> iterate_distance; // sup distance per iterate
  int iterations = 0;
};

// Fixed-point iteration on the integral form of the trajectory IVP over
// [t0, t0+T]: positions at the quadrature nodes are rebuilt from the
// velocity along the previous iterate (composite trapezoid). Throws
// ContractionError when the distance ratio stays >= 1 for 5 consecutive
// iterates or the iterate cap is hit; the error message carries the
// recorded distances.
PicardResult picard_solve(const Grid& g, const VelocityProvider& u, double t0,
                          double T, const PicardConfig& cfg = {});

// Backward map from time t to 0: integrates with reversed time.
FlowMap inverse_map(const Grid& g, const VelocityProvider& u, double t,
                    int nsteps, int threads = 0);

struct AreaReport {
  double max_abs = 0;  // max |detJ - 1|
  double mean_abs = 0;
  std::vector<double> per_level_max;
  int skipped = 0;     // seeds without a full central stencil
};

// Jacobian determinant by central differences in seed space, evaluated
// where the seed and its four lattice neighbors are all interior (boundary
// seeds carry projected positions and are excluded).
AreaReport area_distortion(const FlowMap& map);

struct SeedRef {
  int level;
  int seed;
};

struct HolderReport {
  double exponent = 0;      // log-log regression over the sampled pairs
  double bound_factor = 0;  // e^{1 - e^{-Ct}} used in the check
  int violations = 0;       // pairs breaking the two-regime bound
  int pairs = 0;
};

// Checks |Phi(a1)-Phi(a2)| + |z1-z2| <= (|a1-a2| + |z1-z2|)^{e^{-Ct}}
// * e^{1-e^{-Ct}} over seed pairs with initial separation < 1, and fits
// the empirical exponent.
HolderReport holder_probe(const FlowMap& map,
                          const std::vector<std::pair<SeedRef, SeedRef>>& pairs,
                          double C);

} // namespace cylqg

#endif
