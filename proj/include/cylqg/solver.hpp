#ifndef CYLQG_SOLVER_HPP
#define CYLQG_SOLVER_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "cylqg/elliptic.hpp"
#include "cylqg/field.hpp"
#include "cylqg/flowmap.hpp"
#include "cylqg/rng.hpp"
#include "cylqg/transport.hpp"

namespace cylqg {

// Quasi-Lipschitz modulus: (1 - log d) d for 0 < d < 1, 1 for d >= 1.
// Throws DomainError for d < 0.
double lambda_modulus(double d);

// Linear majorant -log(eps) d + eps, an upper bound for lambda_modulus on
// d > 0. Throws DomainError for eps outside (0,1).
double majorant(double d, double eps);

// Integral-inequality bound: alpha(t) * exp(int_a^t beta). beta must be
// nonnegative on [a,t] (DomainError otherwise); alpha is assumed
// non-decreasing. The constant overload is exact; the function overload
// detects constant beta and uses composite Simpson otherwise.
double gronwall_bound(double alpha, double beta, double a, double t);
double gronwall_bound(const std::function<double(double)>& alpha,
                      const std::function<double(double)>& beta, double a,
                      double t, int intervals = 256);

// Volume-averaged L1 distance of particle positions across all levels
// (interior seeds, coverage-weighted). Throws SeedError on mismatched
// seed lattices.
double delta_metric(const FlowMap& a, const FlowMap& b);

struct SolverConfig {
  double outer_tol = 0;   // 0 = 1e-8 * diam(M)
  int outer_max_iter = 30;
  int outer_min_iter = 2;
  double sigma = 0.5;     // window safety factor, in (0,1]
  int window_nodes = 9;   // velocity/PV snapshots per window
  int substeps = 2;       // RK4 steps between adjacent nodes
  InterpOrder interp = InterpOrder::bilinear;
  PicardConfig picard;
  bool picard_feet = false; // build the pullback feet by Picard iteration
  double chat_override = 0; // >0 skips the contraction-constant fit
  std::uint64_t seed = 20230817;
  int threads = 0;
};

// State of the outer fixed-point iteration on one time window
// [t0, t0+T]. q, psi, u are the window-start fields (fixed across
// iterates); q_nodes/u_nodes hold iterate n's snapshots at the window
// time nodes; window_path the forward flow maps of iterate n; foot0 the
// backward feet from t0 all the way to t = 0.
struct SolverState {
  double t0 = 0;
  double T = 0;
  int n = 0;
  int windows_completed = 0;
  std::vector<double> node_times;
  ScalarField3 q, psi;
  VectorField3 u;
  std::vector<ScalarField3> q_nodes;
  std::vector<VectorField3> u_nodes;
  FlowPath window_path;
  FlowMap foot0;
  std::vector<double> delta_history;
  std::int64_t escaped = 0;
};

struct DiagnosticsRow {
  int window = 0, n = 0;
  double t0 = 0, delta = 0, q_inf = 0, energy = 0;
  std::vector<double> level_means;
};

struct WindowRecord {
  double t0 = 0, T = 0;
  int iterations = 0;
  std::vector<double> delta_history;
  std::int64_t escaped = 0;
};

struct RunResult {
  const Grid* grid = nullptr;
  double t_end = 0;
  double chat = 0;             // fitted contraction constant of u at t=0
  double window_T = 0;
  std::vector<WindowRecord> windows;
  std::vector<DiagnosticsRow> diagnostics;
  ScalarField3 q_final, psi_final;
  VectorField3 u_final;
  FlowMap foot_final;          // backward feet t_end -> 0
  // converged velocity snapshots across all windows, for re-integration
  std::vector<double> u_times;
  std::vector<VectorField3> u_snapshots;
};

// One continuous forward integration of the seed lattice from 0 to
// result.t_end through the stored converged velocity.
FlowMap global_forward_map(const RunResult& r, int substeps_per_node = 2,
                           int threads = 0);

// Outer fixed-point driver for the transport/inversion system: per time
// window, alternate PV inversion, velocity, flow maps, and pullback until
// successive flow maps agree to outer_tol, then continue from the window
// end state.
class QGSolver {
public:
  QGSolver(const Grid& g, EllipticOptions eopt = {}, SolverConfig cfg = {});

  const EllipticSolver& elliptic() const { return ell_; }
  const SolverConfig& config() const { return cfg_; }
  double outer_tol() const;

  // 95th percentile of |u(a)-u(b)| / lambda(|a-b|) over random same-level
  // pairs; the window length is sigma * e^{-3/2} / (chat * (1 + |q0|_inf)).
  double fit_contraction_constant(const VectorField3& u, Rng& rng,
                                  int n_pairs = 1000) const;

  SolverState initial_state(const InitialPV& q0, const CirculationData& c,
                            double chat, double t_remaining) const;

  // One pass of the four-step iteration; appends to delta_history.
  // Throws wrapped errors naming the step that failed.
  SolverState outer_step(const SolverState& s, const InitialPV& q0,
                         const CirculationData& c) const;

  using SnapshotFn = std::function<void(const SolverState&, const RunResult&)>;
  RunResult run(const InitialPV& q0, const CirculationData& c, double t_end,
                const SnapshotFn& on_window = nullptr) const;

private:
  const Grid& grid_;
  SolverConfig cfg_;
  EllipticSolver ell_;
};

} // namespace cylqg

#endif
