#include "cylqg/elliptic.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "cylqg/errors.hpp"
#include "cylqg/parallel.hpp"

namespace cylqg {

namespace {

// quintic smoothstep: C2, with vanishing first and second derivatives at
// both ends, so the cutoff's discrete Laplacian stays well behaved
double smooth5(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (x * (6 * x - 15) + 10);
}
double smooth5_d(double x) {
  if (x <= 0 || x >= 1) return 0;
  return 30 * x * x * (x - 1) * (x - 1);
}

constexpr int DI[4] = {1, -1, 0, 0};
constexpr int DJ[4] = {0, 0, 1, -1};

} // namespace

struct EllipticSolver::Impl {
  const Grid& g;
  EllipticOptions opt;

  std::vector<CutArm> arms;
  // per interior node, per direction: arm index or -1
  std::vector<std::array<int, 4>> arm_at;

  // cutoff per loop at interior nodes, with analytic-in-d gradients
  std::vector<std::vector<double>> chi;
  std::vector<std::vector<Vec2>> dchi;

  struct Operator {
    Eigen::SparseMatrix<double> A;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    double eig = 0;
    int n_unknowns = 0;
    bool has_mean = false; // mean row + defect column present
    bool has_flux = true;  // flux rows present
    double norm_inf = 0;
    // b[row] -= coef * offset[arm] for inhomogeneous lateral values
    std::vector<std::tuple<int, int, double>> offset_entries;
  };
  mutable std::map<double, std::shared_ptr<Operator>> ops;
  mutable std::mutex ops_mu;

  explicit Impl(const Grid& grid, const EllipticOptions& o) : g(grid), opt(o) {
    const int ni = g.n_interior();
    arm_at.assign(ni, {-1, -1, -1, -1});
    for (int d = 0; d < 4; ++d) {
      for (int m = 0; m < ni; ++m) {
        if (g.arm_loop[d][m] < 0) continue;
        CutArm a;
        a.interior = m;
        a.dir = d;
        a.frac = g.arm_frac[d][m];
        a.loop = g.arm_loop[d][m];
        const Vec2 p = g.xy(g.interior_nodes[m]);
        a.point = {p.x + DI[d] * a.frac * g.h, p.y + DJ[d] * a.frac * g.h};
        arm_at[m][d] = static_cast<int>(arms.size());
        arms.push_back(a);
      }
    }
    build_cutoffs();
  }

  double theta(int m, int d) const {
    if (opt.boundary_treatment == "staircase") return 1.0;
    return g.arm_frac[d][m];
  }

  void build_cutoffs() {
    const int nl = g.n_loops;
    const int ni = g.n_interior();
    chi.assign(nl, std::vector<double>(ni, 0.0));
    dchi.assign(nl, std::vector<Vec2>(ni, Vec2{0, 0}));
    if (nl == 1) {
      // simply connected: the constraint functional is the plain discrete
      // divergence, no taper needed
      chi[0].assign(ni, 1.0);
      return;
    }
    const CrossSection& cs = g.domain->cross_section;
    std::vector<std::vector<double>> dist(nl, std::vector<double>(ni));
    std::vector<std::vector<Vec2>> dir(nl, std::vector<Vec2>(ni));
    parallel_for(static_cast<std::size_t>(ni), opt.threads, [&](std::size_t lo, std::size_t hi, int) {
      for (std::size_t m = lo; m < hi; ++m) {
        const Vec2 p = g.xy(g.interior_nodes[m]);
        for (int l = 0; l < nl; ++l)
          dist[l][m] = cs.distance_to_loop(p, l, &dir[l][m]);
      }
    });
    for (int l = 0; l < nl; ++l) {
      double gap = std::numeric_limits<double>::max();
      for (int m = 0; m < ni; ++m) {
        double other = std::numeric_limits<double>::max();
        for (int l2 = 0; l2 < nl; ++l2)
          if (l2 != l) other = std::min(other, dist[l2][m]);
        gap = std::min(gap, dist[l][m] + other);
      }
      double a = std::max(1.6 * g.h, 0.12 * gap);
      double b = gap - std::max(1.6 * g.h, 0.08 * gap);
      if (b - a < 1.5 * g.h) {
        // coarse lattice: stretch the taper across the whole gap. A band
        // narrower than the node spacing contains no lattice points, the
        // gradient term vanishes, and every circulation row degenerates
        // into a combination of PDE rows: the bordered matrix goes
        // singular while still passing a relative residual check.
        a = std::min(a, 0.5 * g.h);
        b = std::max(b, gap - 0.5 * g.h);
        if (b <= a) {
          a = 0.4 * gap;
          b = 0.6 * gap;
        }
      }
      for (int m = 0; m < ni; ++m) {
        const double s = (dist[l][m] - a) / (b - a);
        chi[l][m] = 1.0 - smooth5(s);
        const double dsd = -smooth5_d(s) / (b - a);
        dchi[l][m] = dsd * dir[l][m];
      }
    }
  }

  // second-order one-sided x/y first derivative weights at a node whose
  // arms have lengths tp (positive direction) and tm (negative):
  // f'(0) = cp f(tp h) + cm f(-tm h) + c0 f(0)
  static void fitted_grad(double tp, double tm, double h, double& cp,
                          double& cm, double& c0) {
    cp = tm * tm / (tp * tm * (tp + tm) * h);
    cm = -tp * tp / (tp * tm * (tp + tm) * h);
    c0 = -(tm * tm - tp * tp) / (tp * tm * (tp + tm) * h);
  }

  // Assembles the bordered mode system for one vertical eigenvalue.
  // Unknown order: interior nodes, then one trace per loop, then the mean
  // defect multiplier when eig == 0. Row order: PDE rows, flux rows
  // (dropped when simply connected and eig == 0), mean row.
  std::shared_ptr<Operator> build(double eig) const {
    const int ni = g.n_interior();
    const int nl = g.n_loops;
    auto op = std::make_shared<Operator>();
    op->eig = eig;
    op->has_mean = eig == 0;
    op->has_flux = !(eig == 0 && nl == 1);
    const int ncols = ni + nl + (op->has_mean && op->has_flux ? 1 : 0);
    op->n_unknowns = ncols;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(ni) * 6 + static_cast<std::size_t>(ni) * nl);

    const int mu_col = ni + nl; // valid only when has_mean && has_flux
    const int mean_row = op->has_flux ? ni + nl : ni;

    auto add = [&](int row, int col, double v) {
      if (v != 0) trip.emplace_back(row, col, v);
    };
    // column for the value across arm a (trace unknown), plus offset entry
    auto add_arm = [&](int row, int armidx, double v) {
      if (v == 0) return;
      trip.emplace_back(row, ni + arms[armidx].loop, v);
      op->offset_entries.emplace_back(row, armidx, v);
    };

    const double h2 = g.h * g.h;
    // PDE rows: shortened-arm 5-point Laplacian plus the eigenvalue
    for (int m = 0; m < ni; ++m) {
      const int n = g.interior_nodes[m];
      const int i = n % g.nx, j = n / g.nx;
      const double tE = theta(m, 0), tW = theta(m, 1);
      const double tN = theta(m, 2), tS = theta(m, 3);
      const double pairs[4] = {tE + tW, tE + tW, tN + tS, tN + tS};
      const double ts[4] = {tE, tW, tN, tS};
      for (int d = 0; d < 4; ++d) {
        const double coef = 2.0 / (ts[d] * pairs[d] * h2);
        const int a = arm_at[m][d];
        if (a < 0) {
          const int n2 = g.node(i + DI[d], j + DJ[d]);
          add(m, g.interior_index[n2], coef);
        } else {
          add_arm(m, a, coef);
        }
      }
      add(m, m, -2.0 / (tE * tW * h2) - 2.0 / (tN * tS * h2) + eig);
      if (op->has_mean && op->has_flux) add(m, mu_col, 1.0);
    }

    // flux rows: sum_m w_m [grad(chi_l) . grad(psi) + chi_l lap(psi)]_m,
    // one row per loop; the cutoff is 1 on the loop and 0 on the others,
    // so the functional is a quadrature of the loop's boundary flux
    if (op->has_flux) {
      for (int l = 0; l < nl; ++l) {
        const int row = ni + l;
        for (int m = 0; m < ni; ++m) {
          const double w = g.weight[m];
          const double cl = chi[l][m];
          const Vec2 dc = dchi[l][m];
          if (w == 0 || (cl == 0 && dc.x == 0 && dc.y == 0)) continue;
          const int n = g.interior_nodes[m];
          const int i = n % g.nx, j = n / g.nx;
          const double tE = theta(m, 0), tW = theta(m, 1);
          const double tN = theta(m, 2), tS = theta(m, 3);
          auto col_add = [&](int d, double v) {
            if (v == 0) return;
            const int a = arm_at[m][d];
            if (a < 0)
              add(row, g.interior_index[g.node(i + DI[d], j + DJ[d])], v);
            else
              add_arm(row, a, v);
          };
          if (cl != 0) {
            col_add(0, w * cl * 2.0 / (tE * (tE + tW) * h2));
            col_add(1, w * cl * 2.0 / (tW * (tE + tW) * h2));
            col_add(2, w * cl * 2.0 / (tN * (tN + tS) * h2));
            col_add(3, w * cl * 2.0 / (tS * (tN + tS) * h2));
            add(row, m, -w * cl * (2.0 / (tE * tW * h2) + 2.0 / (tN * tS * h2)));
          }
          if (dc.x != 0) {
            double cp, cm, c0;
            fitted_grad(tE, tW, g.h, cp, cm, c0);
            col_add(0, w * dc.x * cp);
            col_add(1, w * dc.x * cm);
            add(row, m, w * dc.x * c0);
          }
          if (dc.y != 0) {
            double cp, cm, c0;
            fitted_grad(tN, tS, g.h, cp, cm, c0);
            col_add(2, w * dc.y * cp);
            col_add(3, w * dc.y * cm);
            add(row, m, w * dc.y * c0);
          }
        }
      }
    }

    if (op->has_mean) {
      for (int m = 0; m < ni; ++m) add(mean_row, m, g.weight[m]);
    }

    Eigen::SparseMatrix<double> A(op->n_unknowns, op->n_unknowns);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    op->A = std::move(A);
    op->lu.compute(op->A);
    if (op->lu.info() != Eigen::Success)
      throw SolverError("bordered factorization failed at eigenvalue " +
                        std::to_string(eig));
    op->norm_inf = 0;
    std::vector<double> rowsum(op->n_unknowns, 0.0);
    for (int k = 0; k < op->A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(op->A, k); it; ++it)
        rowsum[it.row()] += std::abs(it.value());
    for (double r : rowsum) op->norm_inf = std::max(op->norm_inf, r);
    return op;
  }

  std::shared_ptr<Operator> op_for(double eig) const {
    {
      std::lock_guard<std::mutex> lk(ops_mu);
      auto it = ops.find(eig);
      if (it != ops.end()) return it->second;
    }
    auto op = build(eig);
    std::lock_guard<std::mutex> lk(ops_mu);
    auto [it, inserted] = ops.emplace(eig, op);
    return it->second;
  }
};

EllipticSolver::EllipticSolver(const Grid& g, EllipticOptions opt)
    : grid_(g), opt_(std::move(opt)), basis_(g.nz) {
  if (opt_.threads <= 0) opt_.threads = default_threads();
  if (opt_.boundary_treatment != "fitted" && opt_.boundary_treatment != "staircase")
    throw ConfigError("boundary_treatment must be 'fitted' or 'staircase'");
  impl_ = std::make_unique<Impl>(g, opt_);
}

EllipticSolver::~EllipticSolver() = default;

const std::vector<CutArm>& EllipticSolver::cut_arms() const { return impl_->arms; }

std::vector<BorderedSolution> EllipticSolver::solve_eigenvalue(
    double eig, const std::vector<BorderedRhs>& rhs) const {
  const auto op = impl_->op_for(eig);
  const int ni = grid_.n_interior();
  const int nl = grid_.n_loops;
  const int ncols = static_cast<int>(rhs.size());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(op->n_unknowns, ncols);
  for (int c = 0; c < ncols; ++c) {
    const BorderedRhs& r = rhs[c];
    if (static_cast<int>(r.interior.size()) != ni)
      throw SolverError("bordered solve: interior data has wrong size");
    for (int m = 0; m < ni; ++m) B(m, c) = r.interior[m];
    if (op->has_flux) {
      if (static_cast<int>(r.flux.size()) != nl)
        throw SolverError("bordered solve: need one flux value per loop");
      for (int l = 0; l < nl; ++l) B(ni + l, c) = r.flux[l];
      if (op->has_mean) B(ni + nl, c) = r.mean;
    } else {
      B(ni, c) = r.mean;
    }
    if (!r.arm_offset.empty()) {
      if (r.arm_offset.size() != impl_->arms.size())
        throw SolverError("bordered solve: offset count != cut arm count");
      for (const auto& [row, arm, coef] : op->offset_entries)
        B(row, c) -= coef * r.arm_offset[arm];
    }
  }
  Eigen::MatrixXd X = op->lu.solve(B);
  if (op->lu.info() != Eigen::Success)
    throw SolverError("bordered backsolve failed");

  Eigen::MatrixXd R = op->A * X - B;
  std::vector<BorderedSolution> out(ncols);
  for (int c = 0; c < ncols; ++c) {
    BorderedSolution& s = out[c];
    s.interior.resize(ni);
    for (int m = 0; m < ni; ++m) s.interior[m] = X(m, c);
    s.trace.resize(nl);
    for (int l = 0; l < nl; ++l) s.trace[l] = X(ni + l, c);
    s.mu = (op->has_mean && op->has_flux) ? X(ni + nl, c) : 0.0;
    const double xinf = X.col(c).lpNorm<Eigen::Infinity>();
    const double binf = B.col(c).lpNorm<Eigen::Infinity>();
    const double rinf = R.col(c).lpNorm<Eigen::Infinity>();
    s.residual = rinf / (op->norm_inf * xinf + binf + 1e-300);
    if (s.residual > opt_.residual_tol)
      throw SolverError("bordered solve residual " + std::to_string(s.residual) +
                        " above tolerance at eigenvalue " + std::to_string(eig));
  }
  return out;
}

CompatibilityReport EllipticSolver::check_compatibility(
    const ScalarField3& q, const CirculationData& c) const {
  CompatibilityReport rep;
  rep.defect = std::abs(c.total_integral() - q.volume_integral());
  rep.tolerance = 1e-8 * (1.0 + q.max_abs() * grid_.fluid_volume());
  rep.compatible = rep.defect <= rep.tolerance;
  return rep;
}

void EllipticSolver::validate_circulation(const CirculationData& c) const {
  if (static_cast<int>(c.c.size()) != grid_.n_loops)
    throw CompatibilityError("circulation data: expected one profile per loop");
  if (!opt_.enforce_edge_compatibility) return;
  const double dz = grid_.dz();
  for (int l = 0; l < c.n_loops(); ++l) {
    const auto& cl = c.c[l];
    const double scale = std::max(1.0, c.max_abs());
    const double tol = 0.5 * dz * scale;
    double slope0, slope1;
    if (cl.size() >= 3) {
      slope0 = (-3 * cl[0] + 4 * cl[1] - cl[2]) / (2 * dz);
      const std::size_t n = cl.size();
      slope1 = (3 * cl[n - 1] - 4 * cl[n - 2] + cl[n - 3]) / (2 * dz);
    } else {
      slope0 = slope1 = (cl[1] - cl[0]) / dz;
    }
    if (std::abs(slope0) > tol || std::abs(slope1) > tol)
      throw CompatibilityError(
          "circulation c_" + std::to_string(l) +
          " has nonzero vertical slope at an end of the cylinder (" +
          std::to_string(slope0) + ", " + std::to_string(slope1) + ")");
  }
}

ModeSolution EllipticSolver::solve_mode(const std::vector<double>& q_k, int k,
                                        const std::vector<double>& c_k) const {
  const int ni = grid_.n_interior();
  const int nl = grid_.n_loops;
  if (static_cast<int>(c_k.size()) != nl)
    throw CompatibilityError("solve_mode: need one circulation per loop");
  BorderedRhs r;
  r.interior.resize(ni);
  double qint = 0;
  for (int m = 0; m < ni; ++m) {
    r.interior[m] = q_k[grid_.interior_nodes[m]];
    qint += grid_.weight[m] * r.interior[m];
  }
  r.flux = c_k;
  if (k == 0) {
    double csum = 0;
    for (double v : c_k) csum += v;
    double qinf = 0;
    for (double v : r.interior) qinf = std::max(qinf, std::abs(v));
    const double defect = std::abs(csum - qint);
    if (defect > opt_.mode0_defect_tol * (1.0 + qinf * grid_.area))
      throw CompatibilityError(
          "mode 0 data incompatible: total circulation " + std::to_string(csum) +
          " vs PV integral " + std::to_string(qint));
  }
  auto sol = solve_eigenvalue(basis_.eigenvalue(k), {r});
  ModeSolution out;
  out.trace = sol[0].trace;
  out.mu = sol[0].mu;
  out.residual = sol[0].residual;
  out.psi.assign(static_cast<std::size_t>(grid_.nx) * grid_.ny, 0.0);
  for (int m = 0; m < ni; ++m)
    out.psi[grid_.interior_nodes[m]] = sol[0].interior[m];
  for (int bn : grid_.boundary_nodes)
    out.psi[bn] = out.trace[grid_.loop_id[bn]];
  return out;
}

ScalarField3 EllipticSolver::invert_pv(const ScalarField3& q,
                                       const CirculationData& c,
                                       LoopConstants* constants) const {
  validate_circulation(c);
  if (opt_.enforce_compatibility) {
    const CompatibilityReport rep = check_compatibility(q, c);
    if (!rep.compatible)
      throw CompatibilityError("PV and circulation data incompatible: defect " +
                               std::to_string(rep.defect) + " > tolerance " +
                               std::to_string(rep.tolerance));
  }

  const ScalarField3 qm = basis_.forward(q);
  const int nz = grid_.nz;
  const int nl = grid_.n_loops;
  // circulation profiles to cosine coefficients
  std::vector<std::vector<double>> chat(nl, std::vector<double>(nz));
  for (int l = 0; l < nl; ++l)
    basis_.anal_column(c.c[l].data(), chat[l].data());

  ScalarField3 psim(grid_, FieldRepr::mode);
  LoopConstants consts;
  consts.n_loops = nl;
  consts.nz = nz;
  consts.s.assign(static_cast<std::size_t>(nz) * nl, 0.0);

  std::vector<std::string> errors(nz);
  parallel_for(static_cast<std::size_t>(nz), opt_.threads,
               [&](std::size_t lo, std::size_t hi, int) {
                 for (std::size_t k = lo; k < hi; ++k) {
                   try {
                     std::vector<double> qk(qm.level(static_cast<int>(k)),
                                            qm.level(static_cast<int>(k)) +
                                                grid_.nx * grid_.ny);
                     std::vector<double> ck(nl);
                     for (int l = 0; l < nl; ++l) ck[l] = chat[l][k];
                     ModeSolution ms = solve_mode(qk, static_cast<int>(k), ck);
                     std::copy(ms.psi.begin(), ms.psi.end(),
                               psim.level(static_cast<int>(k)));
                     for (int l = 0; l < nl; ++l)
                       consts.at(l, static_cast<int>(k)) = ms.trace[l];
                   } catch (const Error& e) {
                     errors[k] = e.what();
                   }
                 }
               });
  for (int k = 0; k < nz; ++k)
    if (!errors[k].empty())
      throw SolverError("mode " + std::to_string(k) + ": " + errors[k]);

  if (constants) *constants = consts;
  return basis_.inverse(psim);
}

SplitPV EllipticSolver::split_pv(const ScalarField3& q) const {
  SplitPV out;
  out.q1 = q;
  const int nz = grid_.nz;
  if (opt_.per_level_split) {
    out.q0 = q.level_means();
  } else {
    out.q0.assign(nz, q.volume_integral() / grid_.fluid_volume());
  }
  for (int k = 0; k < nz; ++k) {
    double* lv = out.q1.level(k);
    for (int n : grid_.fluid_nodes) lv[n] -= out.q0[k];
  }
  return out;
}

VectorField3 EllipticSolver::velocity(const ScalarField3& psi) const {
  VectorField3 vel(grid_);
  const int ni = grid_.n_interior();
  for (int k = 0; k < grid_.nz; ++k) {
    const double* p = psi.level(k);
    double* lu = vel.u.level(k);
    double* lv = vel.v.level(k);
    for (int m = 0; m < ni; ++m) {
      const int n = grid_.interior_nodes[m];
      const int i = n % grid_.nx, j = n / grid_.nx;
      const double tE = impl_->theta(m, 0), tW = impl_->theta(m, 1);
      const double tN = impl_->theta(m, 2), tS = impl_->theta(m, 3);
      const double fE = p[grid_.node(i + 1, j)];
      const double fW = p[grid_.node(i - 1, j)];
      const double fN = p[grid_.node(i, j + 1)];
      const double fS = p[grid_.node(i, j - 1)];
      double cp, cm, c0;
      Impl::fitted_grad(tE, tW, grid_.h, cp, cm, c0);
      const double px = cp * fE + cm * fW + c0 * p[n];
      Impl::fitted_grad(tN, tS, grid_.h, cp, cm, c0);
      const double py = cp * fN + cm * fS + c0 * p[n];
      lu[n] = -py;
      lv[n] = px;
    }
    // boundary nodes: average of adjacent interior values, so particle
    // interpolation sees tangential motion up to the wall
    for (int bn : grid_.boundary_nodes) {
      const int i = bn % grid_.nx, j = bn / grid_.nx;
      double su = 0, sv = 0;
      int cnt = 0;
      for (int d = 0; d < 4; ++d) {
        const int i2 = i + DI[d], j2 = j + DJ[d];
        if (i2 < 0 || j2 < 0 || i2 >= grid_.nx || j2 >= grid_.ny) continue;
        const int n2 = grid_.node(i2, j2);
        if (grid_.mask[n2] != NodeTag::interior) continue;
        su += lu[n2];
        sv += lv[n2];
        ++cnt;
      }
      if (cnt > 0) {
        lu[bn] = su / cnt;
        lv[bn] = sv / cnt;
      }
    }
  }
  return vel;
}

double EllipticSolver::loop_flux(const std::vector<double>& psi_level,
                                 int l) const {
  const int ni = grid_.n_interior();
  const double h2 = grid_.h * grid_.h;
  double F = 0;
  for (int m = 0; m < ni; ++m) {
    const double w = grid_.weight[m];
    const double cl = impl_->chi[l][m];
    const Vec2 dc = impl_->dchi[l][m];
    if (w == 0 || (cl == 0 && dc.x == 0 && dc.y == 0)) continue;
    const int n = grid_.interior_nodes[m];
    const int i = n % grid_.nx, j = n / grid_.nx;
    const double tE = impl_->theta(m, 0), tW = impl_->theta(m, 1);
    const double tN = impl_->theta(m, 2), tS = impl_->theta(m, 3);
    const double f0 = psi_level[n];
    const double fE = psi_level[grid_.node(i + 1, j)];
    const double fW = psi_level[grid_.node(i - 1, j)];
    const double fN = psi_level[grid_.node(i, j + 1)];
    const double fS = psi_level[grid_.node(i, j - 1)];
    if (cl != 0) {
      const double lap = 2 * fE / (tE * (tE + tW) * h2) +
                         2 * fW / (tW * (tE + tW) * h2) +
                         2 * fN / (tN * (tN + tS) * h2) +
                         2 * fS / (tS * (tN + tS) * h2) -
                         f0 * (2 / (tE * tW * h2) + 2 / (tN * tS * h2));
      F += w * cl * lap;
    }
    if (dc.x != 0) {
      double cp, cm, c0;
      Impl::fitted_grad(tE, tW, grid_.h, cp, cm, c0);
      F += w * dc.x * (cp * fE + cm * fW + c0 * f0);
    }
    if (dc.y != 0) {
      double cp, cm, c0;
      Impl::fitted_grad(tN, tS, grid_.h, cp, cm, c0);
      F += w * dc.y * (cp * fN + cm * fS + c0 * f0);
    }
  }
  return F;
}

double EllipticSolver::loop_flux_onesided(const std::vector<double>& psi_level,
                                          int l) const {
  double F = 0;
  for (const CutArm& a : impl_->arms) {
    if (a.loop != l) continue;
    const int n = grid_.interior_nodes[a.interior];
    const int i = n % grid_.nx, j = n / grid_.nx;
    const int i2 = i + DI[a.dir], j2 = j + DJ[a.dir];
    if (i2 < 0 || j2 < 0 || i2 >= grid_.nx || j2 >= grid_.ny) continue;
    const double bval = psi_level[grid_.node(i2, j2)];
    F += grid_.h * (bval - psi_level[n]) / (a.frac * grid_.h);
  }
  return F;
}

// weighted gradients for the weak form: per node, per level
double EllipticSolver::bilinear_form(const ScalarField3& psi,
                                     const ScalarField3& phi) const {
  const int ni = grid_.n_interior();
  const int nz = grid_.nz;
  const int nn = grid_.nx * grid_.ny;
  // z derivatives of the cosine interpolants, spectral per column
  auto zderiv = [&](const ScalarField3& f) {
    ScalarField3 out(grid_);
    std::vector<double> col(nz), coef(nz);
    for (int n : grid_.fluid_nodes) {
      for (int k = 0; k < nz; ++k) col[k] = f.data[static_cast<std::size_t>(k) * nn + n];
      basis_.anal_column(col.data(), coef.data());
      for (int j = 0; j < nz; ++j) {
        double s = 0;
        for (int k = 1; k < nz; ++k)
          s -= coef[k] * k * M_PI * std::sin(k * M_PI * grid_.z_level(j));
        out.data[static_cast<std::size_t>(j) * nn + n] = s;
      }
    }
    return out;
  };
  const ScalarField3 pz = zderiv(psi);
  const ScalarField3 fz = zderiv(phi);

  double B = 0;
  for (int k = 0; k < nz; ++k) {
    const double* a = psi.level(k);
    const double* b = phi.level(k);
    const double* az = pz.level(k);
    const double* bz = fz.level(k);
    double s = 0;
    for (int m = 0; m < ni; ++m) {
      const int n = grid_.interior_nodes[m];
      const int i = n % grid_.nx, j = n / grid_.nx;
      const double tE = impl_->theta(m, 0), tW = impl_->theta(m, 1);
      const double tN = impl_->theta(m, 2), tS = impl_->theta(m, 3);
      double cp, cm, c0;
      Impl::fitted_grad(tE, tW, grid_.h, cp, cm, c0);
      const double ax = cp * a[grid_.node(i + 1, j)] + cm * a[grid_.node(i - 1, j)] + c0 * a[n];
      const double bx = cp * b[grid_.node(i + 1, j)] + cm * b[grid_.node(i - 1, j)] + c0 * b[n];
      Impl::fitted_grad(tN, tS, grid_.h, cp, cm, c0);
      const double ay = cp * a[grid_.node(i, j + 1)] + cm * a[grid_.node(i, j - 1)] + c0 * a[n];
      const double by = cp * b[grid_.node(i, j + 1)] + cm * b[grid_.node(i, j - 1)] + c0 * b[n];
      s += grid_.weight[m] * (ax * bx + ay * by + az[n] * bz[n]);
    }
    B += grid_.zw(k) * s;
  }
  return B;
}

double EllipticSolver::load_form(const ScalarField3& q,
                                 const ScalarField3& phi) const {
  double s = 0;
  for (int k = 0; k < grid_.nz; ++k) {
    const double* a = q.level(k);
    const double* b = phi.level(k);
    double ls = 0;
    for (int m = 0; m < grid_.n_interior(); ++m) {
      const int n = grid_.interior_nodes[m];
      ls += grid_.weight[m] * a[n] * b[n];
    }
    s += grid_.zw(k) * ls;
  }
  return -s;
}

double EllipticSolver::weak_residual(const ScalarField3& psi,
                                     const ScalarField3& q,
                                     const ScalarField3& phi) const {
  return weak_residual(psi, q, phi,
                       CirculationData::zero(grid_.n_loops, grid_.nz));
}

double EllipticSolver::weak_residual(const ScalarField3& psi,
                                     const ScalarField3& q,
                                     const ScalarField3& phi,
                                     const CirculationData& c) const {
  // membership in the test space: loop-constant boundary values per level
  // and zero volume mean
  const double scale = 1.0 + phi.max_abs();
  std::vector<double> trace(static_cast<std::size_t>(grid_.nz) * grid_.n_loops, 0.0);
  std::vector<int> cnt(static_cast<std::size_t>(grid_.nz) * grid_.n_loops, 0);
  for (int k = 0; k < grid_.nz; ++k) {
    const double* b = phi.level(k);
    for (int bn : grid_.boundary_nodes) {
      trace[static_cast<std::size_t>(k) * grid_.n_loops + grid_.loop_id[bn]] += b[bn];
      cnt[static_cast<std::size_t>(k) * grid_.n_loops + grid_.loop_id[bn]]++;
    }
  }
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (cnt[i] > 0) trace[i] /= cnt[i];
  for (int k = 0; k < grid_.nz; ++k) {
    const double* b = phi.level(k);
    for (int bn : grid_.boundary_nodes) {
      const double dev =
          std::abs(b[bn] - trace[static_cast<std::size_t>(k) * grid_.n_loops + grid_.loop_id[bn]]);
      if (dev > 1e-8 * scale)
        throw InvalidTestFunction(
            "test function is not loop-constant on the lateral boundary");
    }
  }
  if (std::abs(phi.volume_integral()) > 1e-8 * scale * grid_.fluid_volume())
    throw InvalidTestFunction("test function has nonzero volume mean");

  double rhs = load_form(q, phi);
  for (int l = 0; l < grid_.n_loops; ++l) {
    double s = 0;
    for (int k = 0; k < grid_.nz; ++k)
      s += grid_.zw(k) * c.c[l][k] *
           trace[static_cast<std::size_t>(k) * grid_.n_loops + l];
    rhs += s;
  }
  return std::abs(bilinear_form(psi, phi) - rhs);
}

} // namespace cylqg
