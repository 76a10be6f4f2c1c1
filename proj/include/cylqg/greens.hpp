#ifndef CYLQG_GREENS_HPP
#define CYLQG_GREENS_HPP

#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "cylqg/elliptic.hpp"
#include "cylqg/field.hpp"
#include "cylqg/rng.hpp"

namespace cylqg {

// Free-space fundamental solution -1/(4 pi r3), r3 the 3D distance.
// Throws SingularityError at r3 = 0.
double fundamental(Vec3 source, Vec3 target);

// Field over the vertically extended cylinder M x (-1,1), sampled at the
// 2(nz-1) periodic levels eta_j = j/(nz-1) - 1.
struct ExtendedField {
  const Grid* grid = nullptr;
  int nlev = 0;
  std::vector<double> data;

  ExtendedField() = default;
  explicit ExtendedField(const Grid& g)
      : grid(&g), nlev(2 * (g.nz - 1)),
        data(static_cast<std::size_t>(g.nx) * g.ny * nlev, 0.0) {}
  double eta(int j) const { return static_cast<double>(j) / (grid->nz - 1) - 1.0; }
  double& at(int node, int j) {
    return data[static_cast<std::size_t>(j) * grid->nx * grid->ny + node];
  }
  double at(int node, int j) const {
    return data[static_cast<std::size_t>(j) * grid->nx * grid->ny + node];
  }
};

struct CorrectorResult {
  Vec3 source;
  ExtendedField phi;
  std::vector<std::vector<double>> trace; // [loop][extended level]
  double mu = 0; // mean-defect multiplier of the extended solve
};

struct GreensKernel {
  Vec3 source;      // snapped to a node and level
  int source_node = -1;
  int source_level = -1;
  ScalarField3 G;
  std::vector<std::vector<double>> trace; // [loop][level]
  std::size_t bytes() const;
};

struct GreensOptions {
  double exclusion_factor = 2.0; // discard targets with r < factor * h
  std::size_t cache_budget = std::size_t{256} << 20;
};

struct EstimateReport {
  struct Row {
    double r, absG, absGrad, absHess;
  };
  double sup_G_r = 0, sup_grad_r2 = 0, sup_hess_r3 = 0;
  double fitted_C = 0; // max of the three suprema
  std::vector<Row> rows;
};

struct QuasiLipschitzReport {
  struct Row {
    double d, integral, ratio;
  };
  std::vector<Row> rows;
  double max_ratio = 0;
  // regression slope of ratio against log(1/d); flat means the modulus
  // lambda captures the growth
  double slope = 0;
};

// Green's function of the constrained inversion, built per source.
// greens_at solves the mode systems with data (discrete delta - 1/|Omega|)
// and zero circulations; the cosine basis in z is the even-periodic
// reflection of the interval, so the kernel carries the reflected-periodic
// structure exactly. corrector() follows the classical recipe instead
// (fundamental solution plus a corrector on the extended cylinder) and
// exists to cross-check that construction.
class GreensEngine {
public:
  GreensEngine(const EllipticSolver& ell, GreensOptions opt = {});
  ~GreensEngine();
  GreensEngine(const GreensEngine&) = delete;
  GreensEngine& operator=(const GreensEngine&) = delete;

  const Grid& grid() const;
  const GreensOptions& options() const { return opt_; }

  // Corrector on the extended cylinder: lap3 phi = 1/|extended volume|,
  // periodic in eta, lateral trace equal to the fundamental solution's
  // trace up to a per-loop constant, matching loop fluxes and mean.
  CorrectorResult corrector(Vec3 source) const;

  // Periodized kernel Phi - phi on the extended cylinder (the source-node
  // sample of Phi is mollified; meaningful away from the source only).
  ExtendedField periodized(const CorrectorResult& c) const;

  // Cached kernel for the source snapped to the nearest interior node and
  // level.
  GreensKernel greens_at(Vec3 source);

  // Uncached direct build; many_kernels batches the factorization reuse
  // across sources (one backsolve per mode with all sources as columns).
  GreensKernel build_kernel(int node, int level) const;
  std::vector<GreensKernel> many_kernels(
      const std::vector<std::pair<int, int>>& node_level) const;

  EstimateReport estimate_report(const std::vector<Vec3>& sources);
  QuasiLipschitzReport quasi_lipschitz_report(
      const std::vector<std::pair<Vec3, Vec3>>& pairs);

  // Velocity by the representation formula: psi(x) assembled from the
  // kernel at x dotted against q plus the circulation trace term, then
  // the skew gradient. Quadratic in problem size; an oracle for the
  // elliptic path, not a production route.
  VectorField3 velocity_via_green(const ScalarField3& q,
                                  const CirculationData& c);

  std::size_t cache_bytes() const;
  void clear_cache();

private:
  const EllipticSolver& ell_;
  GreensOptions opt_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Random interior node pairs for the quasi-Lipschitz sampling: a uniform
// pool plus clustered pairs at separations near k*h so the small-d regime
// is exercised. Points keep a full interior stencil (plus one node of
// margin) so source-side gradients are available.
std::vector<std::pair<Vec3, Vec3>> sample_interior_pairs(const Grid& g,
                                                         int n_pairs,
                                                         Rng& rng);

} // namespace cylqg

#endif
