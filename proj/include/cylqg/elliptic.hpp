#ifndef CYLQG_ELLIPTIC_HPP
#define CYLQG_ELLIPTIC_HPP

#include <memory>
#include <string>
#include <vector>

#include "cylqg/field.hpp"
#include "cylqg/geometry.hpp"
#include "cylqg/vertical.hpp"

namespace cylqg {

struct EllipticOptions {
  // "fitted": boundary arms shortened to the actual crossing (second
  // order). "staircase": arms snapped to full cells, kept as the
  // documented first-order variant.
  std::string boundary_treatment = "fitted";
  double residual_tol = 1e-10;   // relative, per linear solve
  double mode0_defect_tol = 5e-2; // relative gate on the mode-0 mean defect
  bool enforce_edge_compatibility = true;
  // invert_pv refuses data failing check_compatibility when set. The
  // transport loop turns this off for its own pulled-back fields, whose
  // integral drifts at interpolation-error level; the mean-defect
  // multiplier absorbs that drift.
  bool enforce_compatibility = true;
  // split_pv subtracts per-level horizontal means instead of the volume
  // mean when set (diagnostic variant; the inversion itself always
  // normalizes the full 3D mean)
  bool per_level_split = false;
  int threads = 0; // 0 = pick a default
};

struct CompatibilityReport {
  bool compatible = false;
  double defect = 0;    // |sum_l int c_l dz - int_Omega q|
  double tolerance = 0;
};

struct ModeSolution {
  std::vector<double> psi;   // full lattice level slice; boundary nodes carry the trace
  std::vector<double> trace; // per loop
  double mu = 0;             // mean-defect multiplier (eigenvalue 0 only)
  double residual = 0;       // relative residual of the bordered solve
};

struct SplitPV {
  std::vector<double> q0; // per level
  ScalarField3 q1;
};

// One shortened arm of the 5-point stencil: from an interior node towards
// a boundary crossing at distance frac*h in direction dir (E,W,N,S).
struct CutArm {
  int interior; // index into grid.interior_nodes
  int dir;
  double frac;
  int loop;
  Vec2 point; // crossing location
};

// Right-hand side for one bordered solve at a fixed vertical eigenvalue:
// interior PDE data, one flux value per loop, a mean value (eigenvalue 0
// only), and optional inhomogeneous Dirichlet offsets at the cut arms
// (the lateral condition becomes psi = s_l + offset at each crossing).
struct BorderedRhs {
  std::vector<double> interior;
  std::vector<double> flux;
  double mean = 0;
  std::vector<double> arm_offset; // per cut arm; empty = homogeneous
};

struct BorderedSolution {
  std::vector<double> interior; // per interior node
  std::vector<double> trace;    // per loop
  double mu = 0;
  double residual = 0;
};

// Inverts the PV relation: solves lap3 psi = q with loop-constant lateral
// trace, prescribed circulations, natural vertical derivative at z = 0,1
// (cosine basis) and zero volume mean. One bordered sparse solve per
// vertical mode; matrices and factorizations are cached per eigenvalue.
class EllipticSolver {
public:
  explicit EllipticSolver(const Grid& g, EllipticOptions opt = {});
  ~EllipticSolver();
  EllipticSolver(const EllipticSolver&) = delete;
  EllipticSolver& operator=(const EllipticSolver&) = delete;

  const Grid& grid() const { return grid_; }
  const VerticalBasis& basis() const { return basis_; }
  const EllipticOptions& options() const { return opt_; }

  // Solvability check (reporting only): total circulation against total
  // PV, tolerance 1e-8 * (1 + |q|_inf * |Omega|).
  CompatibilityReport check_compatibility(const ScalarField3& q,
                                          const CirculationData& c) const;

  // Throws CompatibilityError when the circulation data has a nonzero
  // vertical slope at z = 0 or 1 (Richardson slope vs 0.5*dz*scale).
  void validate_circulation(const CirculationData& c) const;

  // One vertical mode: (lap_h + eigenvalue(k)) psi_k = q_k with the flux
  // constraints c_k (per loop). q_k is a full-lattice level slice.
  ModeSolution solve_mode(const std::vector<double>& q_k, int k,
                          const std::vector<double>& c_k) const;

  ScalarField3 invert_pv(const ScalarField3& q, const CirculationData& c,
                         LoopConstants* constants = nullptr) const;

  SplitPV split_pv(const ScalarField3& q) const;

  // u = (-dpsi/dy, dpsi/dx), centered in the interior with one-sided
  // fitted differences at cut arms; boundary nodes copy their nearest
  // interior neighbor.
  VectorField3 velocity(const ScalarField3& psi) const;

  // |B(psi,phi) - l(phi)| with B the gradient form and l the load,
  // including the circulation trace term when c is nonzero. phi must be
  // in the test space (loop-constant trace per level, zero volume mean);
  // throws InvalidTestFunction otherwise.
  double weak_residual(const ScalarField3& psi, const ScalarField3& q,
                       const ScalarField3& phi) const;
  double weak_residual(const ScalarField3& psi, const ScalarField3& q,
                       const ScalarField3& phi, const CirculationData& c) const;

  double bilinear_form(const ScalarField3& psi, const ScalarField3& phi) const;
  double load_form(const ScalarField3& q, const ScalarField3& phi) const;

  // Low-level batched solve at a fixed vertical eigenvalue; used by the
  // mode path above and by the Green's-function builder. eig <= 0.
  std::vector<BorderedSolution> solve_eigenvalue(
      double eig, const std::vector<BorderedRhs>& rhs) const;

  const std::vector<CutArm>& cut_arms() const;

  // Discrete circulation of psi around loop l at one level, evaluated by
  // the same cutoff functional the constraint rows use.
  double loop_flux(const std::vector<double>& psi_level, int l) const;
  // Diagnostic variant: summed one-sided normal differences along the
  // loop's boundary nodes (first order).
  double loop_flux_onesided(const std::vector<double>& psi_level, int l) const;

private:
  const Grid& grid_;
  EllipticOptions opt_;
  VerticalBasis basis_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

} // namespace cylqg

#endif
