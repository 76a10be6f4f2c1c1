#include "cylqg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cylqg/errors.hpp"
#include "cylqg/parallel.hpp"

namespace cylqg {

double lambda_modulus(double d) {
  if (d < 0) throw DomainError("modulus argument must be nonnegative");
  if (d == 0) return 0;
  if (d < 1) return (1.0 - std::log(d)) * d;
  return 1.0;
}

double majorant(double d, double eps) {
  if (!(eps > 0 && eps < 1))
    throw DomainError("majorant parameter must lie in (0,1)");
  if (d < 0) throw DomainError("majorant argument must be nonnegative");
  return -std::log(eps) * d + eps;
}

double gronwall_bound(double alpha, double beta, double a, double t) {
  if (beta < 0) throw DomainError("integral-inequality rate must be nonnegative");
  return alpha * std::exp(beta * (t - a));
}

double gronwall_bound(const std::function<double(double)>& alpha,
                      const std::function<double(double)>& beta, double a,
                      double t, int intervals) {
  if (intervals < 1 || intervals % 2 != 0)
    intervals = std::max(2, intervals + (intervals % 2));
  const double dt = (t - a) / intervals;
  std::vector<double> b(intervals + 1);
  bool constant = true;
  for (int i = 0; i <= intervals; ++i) {
    b[i] = beta(a + dt * i);
    if (b[i] < 0)
      throw DomainError("integral-inequality rate must be nonnegative");
    if (b[i] != b[0]) constant = false;
  }
  if (constant) return alpha(t) * std::exp(b[0] * (t - a));
  double integral = b[0] + b[intervals];
  for (int i = 1; i < intervals; ++i) integral += (i % 2 ? 4.0 : 2.0) * b[i];
  integral *= dt / 3.0;
  return alpha(t) * std::exp(integral);
}

double delta_metric(const FlowMap& a, const FlowMap& b) {
  if (a.grid != b.grid || a.nseeds != b.nseeds)
    throw SeedError("flow maps live on different seed lattices");
  const Grid& g = *a.grid;
  double s = 0;
  for (int k = 0; k < g.nz; ++k) {
    double lvl = 0;
    for (int m = 0; m < g.n_interior(); ++m) {
      const Vec2 pa = a.at(k, m), pb = b.at(k, m);
      lvl += g.weight[m] * std::hypot(pa.x - pb.x, pa.y - pb.y);
    }
    s += g.zw(k) * lvl;
  }
  return s / g.fluid_volume();
}

namespace {

constexpr double WINDOW_RULE = 0.22313016014842983; // e^{-3/2}

// time-reversed view of a provider: integrating this forward over
// [0, t_pivot - t0] follows the original field backward from t_pivot
class ReversedVelocity : public VelocityProvider {
public:
  ReversedVelocity(const VelocityProvider& u, double pivot)
      : u_(u), pivot_(pivot) {}
  void eval(double t, int level, const Vec2* p, Vec2* out, int n) const override {
    u_.eval(pivot_ - t, level, p, out, n);
    for (int i = 0; i < n; ++i) out[i] = {-out[i].x, -out[i].y};
  }
  int levels() const override { return u_.levels(); }

private:
  const VelocityProvider& u_;
  double pivot_;
};

// bilinear sample with exterior corners filled from the fluid ones; feet
// live in closure(M) so a fluid corner is always nearby
Vec2 sample_positions(const Grid& g, const std::vector<Vec2>& lv, Vec2 p) {
  const double xmax = g.x0 + g.h * (g.nx - 1);
  const double ymax = g.y0 + g.h * (g.ny - 1);
  const double x = std::clamp(p.x, g.x0, xmax);
  const double y = std::clamp(p.y, g.y0, ymax);
  int ci = std::clamp(static_cast<int>((x - g.x0) / g.h), 0, g.nx - 2);
  int cj = std::clamp(static_cast<int>((y - g.y0) / g.h), 0, g.ny - 2);
  const double fx = (x - (g.x0 + ci * g.h)) / g.h;
  const double fy = (y - (g.y0 + cj * g.h)) / g.h;
  const int corner[4] = {g.node(ci, cj), g.node(ci + 1, cj), g.node(ci, cj + 1),
                         g.node(ci + 1, cj + 1)};
  const double wgt[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy,
                         fx * fy};
  Vec2 mean{0, 0};
  int nv = 0;
  for (int c = 0; c < 4; ++c)
    if (g.mask[corner[c]] != NodeTag::exterior) {
      mean = mean + lv[corner[c]];
      ++nv;
    }
  if (nv == 0) {
    for (int r = 1; r < std::max(g.nx, g.ny); ++r)
      for (int dj = -r; dj <= r; ++dj)
        for (int di = -r; di <= r; ++di) {
          if (std::max(std::abs(di), std::abs(dj)) != r) continue;
          const int i2 = ci + di, j2 = cj + dj;
          if (i2 < 0 || j2 < 0 || i2 >= g.nx || j2 >= g.ny) continue;
          if (g.mask[g.node(i2, j2)] != NodeTag::exterior) return lv[g.node(i2, j2)];
        }
    return p;
  }
  mean = (1.0 / nv) * mean;
  Vec2 s{0, 0};
  for (int c = 0; c < 4; ++c) {
    const bool ok = g.mask[corner[c]] != NodeTag::exterior;
    s = s + wgt[c] * (ok ? lv[corner[c]] : mean);
  }
  return s;
}

// feet of `outer` (a backward map to its own t0) pushed through `inner`
// (the backward map from t0 to 0): per-level bilinear lookup of inner's
// positions at outer's feet
FlowMap compose_feet(const FlowMap& outer, const FlowMap& inner) {
  const Grid& g = *outer.grid;
  FlowMap out = outer;
  out.t = inner.t;
  std::vector<Vec2> lv(static_cast<std::size_t>(g.nx) * g.ny);
  for (int k = 0; k < g.nz; ++k) {
    std::fill(lv.begin(), lv.end(), Vec2{0, 0});
    for (int s = 0; s < inner.nseeds; ++s)
      lv[g.fluid_nodes[s]] = inner.at(k, s);
    for (int s = 0; s < outer.nseeds; ++s)
      out.at(k, s) = sample_positions(g, lv, outer.at(k, s));
  }
  return out;
}

} // namespace

QGSolver::QGSolver(const Grid& g, EllipticOptions eopt, SolverConfig cfg)
    : grid_(g), cfg_(cfg),
      ell_(g, [&] {
        if (eopt.threads <= 0 && cfg.threads > 0) eopt.threads = cfg.threads;
        // pulled-back PV carries an interpolation-level integral drift;
        // run() gates the user's data strictly before the loop starts
        eopt.enforce_compatibility = false;
        return eopt;
      }()) {
  if (cfg_.threads <= 0) cfg_.threads = default_threads();
  if (!(cfg_.sigma > 0 && cfg_.sigma <= 1))
    throw ConfigError("window safety factor must lie in (0,1]");
  if (cfg_.window_nodes < 2)
    throw ConfigError("a window needs at least two time nodes");
}

double QGSolver::outer_tol() const {
  if (cfg_.outer_tol > 0) return cfg_.outer_tol;
  return 1e-8 * grid_.domain->cross_section.diameter();
}

double QGSolver::fit_contraction_constant(const VectorField3& u, Rng& rng,
                                          int n_pairs) const {
  const Grid& g = grid_;
  const auto& nodes = g.interior_nodes;
  if (nodes.size() < 2)
    throw ResolutionError("too few interior nodes to fit the modulus constant");
  std::vector<double> ratios;
  ratios.reserve(n_pairs);
  int guard = 0;
  while (static_cast<int>(ratios.size()) < n_pairs && guard < 100 * n_pairs) {
    ++guard;
    const int a = nodes[static_cast<std::size_t>(rng.uniform() * nodes.size()) % nodes.size()];
    const int b = nodes[static_cast<std::size_t>(rng.uniform() * nodes.size()) % nodes.size()];
    const int k = static_cast<int>(rng.uniform() * g.nz) % g.nz;
    if (a == b) continue;
    const Vec2 pa = g.xy(a), pb = g.xy(b);
    const double d = std::hypot(pa.x - pb.x, pa.y - pb.y);
    const double du = std::hypot(u.u.at(a, k) - u.u.at(b, k),
                                 u.v.at(a, k) - u.v.at(b, k));
    ratios.push_back(du / lambda_modulus(d));
  }
  if (ratios.empty()) throw SolverError("modulus fit sampled no usable pairs");
  std::sort(ratios.begin(), ratios.end());
  const std::size_t idx =
      static_cast<std::size_t>(0.95 * (ratios.size() - 1));
  return ratios[idx];
}

SolverState QGSolver::initial_state(const InitialPV& q0,
                                    const CirculationData& c, double chat,
                                    double t_remaining) const {
  SolverState s;
  s.t0 = 0;
  const double ceff = chat * (1.0 + q0.bound);
  double T = ceff > 1e-14 ? cfg_.sigma * WINDOW_RULE / ceff : t_remaining;
  s.T = std::min(T, t_remaining);
  const int m = cfg_.window_nodes;
  s.node_times.resize(m);
  for (int i = 0; i < m; ++i)
    s.node_times[i] = s.t0 + s.T * i / (m - 1);
  s.q = q0.q0;
  s.psi = ell_.invert_pv(s.q, c);
  s.u = ell_.velocity(s.psi);
  s.q_nodes.assign(m, s.q);
  s.u_nodes.assign(m, s.u);
  s.foot0 = FlowMap::identity(grid_, MapDirection::backward);
  s.window_path.times = s.node_times;
  s.window_path.maps.assign(m, FlowMap::identity(grid_));
  for (int i = 0; i < m; ++i) s.window_path.maps[i].t = s.node_times[i];
  return s;
}

SolverState QGSolver::outer_step(const SolverState& s, const InitialPV& q0,
                                 const CirculationData& c) const {
  const int m = static_cast<int>(s.node_times.size());
  SolverState next = s;
  next.n = s.n + 1;
  const bool first_window = s.t0 == 0;

  // Step 1+2: invert the current PV trajectory, node by node, and take
  // the skew gradient
  try {
    for (int i = 0; i < m; ++i) {
      // node 0 is the window-start state, fixed across iterates
      if (i == 0) {
        next.q_nodes[0] = s.q;
        next.u_nodes[0] = s.u;
        continue;
      }
      const ScalarField3 psi = ell_.invert_pv(s.q_nodes[i], c, nullptr);
      next.u_nodes[i] = ell_.velocity(psi);
    }
  } catch (const CompatibilityError&) {
    throw;
  } catch (const Error& e) {
    throw SolverError(std::string("outer step 1 (inversion): ") + e.what());
  }

  SnapshotVelocity U(grid_, s.node_times, next.u_nodes);

  // Step 3: flow maps of this iterate's velocity
  FlowPath path;
  std::vector<FlowMap> feet(m);
  try {
    if (cfg_.picard_feet) {
      PicardConfig pc = cfg_.picard;
      pc.threads = cfg_.threads;
      pc.time_nodes = m; // delta metric compares maps node by node
      PicardResult pr = picard_solve(grid_, U, s.t0, s.T, pc);
      path = std::move(pr.path);
      for (int i = 0; i < m; ++i) {
        if (i == 0) {
          feet[0] = FlowMap::identity(grid_, MapDirection::backward);
          feet[0].t = s.t0;
          continue;
        }
        ReversedVelocity rv(U, s.node_times[i]);
        PicardResult back = picard_solve(grid_, rv, 0.0, s.node_times[i] - s.t0, pc);
        feet[i] = back.path.maps.back();
        feet[i].direction = MapDirection::backward;
        feet[i].t = s.t0;
      }
    } else {
      path.times = s.node_times;
      path.maps.resize(m);
      FlowMap fwd = FlowMap::identity(grid_);
      fwd.t = s.t0;
      path.maps[0] = fwd;
      for (int i = 1; i < m; ++i) {
        fwd = integrate(std::move(fwd), U, s.node_times[i], cfg_.substeps,
                        cfg_.threads);
        path.maps[i] = fwd;
      }
      for (int i = 0; i < m; ++i) {
        FlowMap b = FlowMap::identity(grid_, MapDirection::backward);
        b.t = s.node_times[i];
        feet[i] = i == 0 ? std::move(b)
                         : integrate(std::move(b), U, s.t0, cfg_.substeps * i,
                                     cfg_.threads);
      }
    }
  } catch (const ContractionError&) {
    throw;
  } catch (const Error& e) {
    throw SolverError(std::string("outer step 3 (flow map): ") + e.what());
  }

  // Step 4: pull the initial PV back through the feet (composed with the
  // feet of earlier windows when t0 > 0)
  try {
    for (int i = 1; i < m; ++i) {
      const FlowMap full = first_window ? feet[i] : compose_feet(feet[i], s.foot0);
      next.q_nodes[i] = pullback(q0, full, cfg_.interp, cfg_.threads);
    }
  } catch (const Error& e) {
    throw SolverError(std::string("outer step 4 (pullback): ") + e.what());
  }

  double delta = 0;
  for (int i = 1; i < m; ++i)
    delta = std::max(delta, delta_metric(path.maps[i], s.window_path.maps[i]));
  next.delta_history.push_back(delta);
  next.window_path = std::move(path);
  for (const FlowMap& f : feet) next.escaped += f.escaped;
  return next;
}

RunResult QGSolver::run(const InitialPV& q0, const CirculationData& c,
                        double t_end, const SnapshotFn& on_window) const {
  ell_.validate_circulation(c);
  const CompatibilityReport rep = ell_.check_compatibility(q0.q0, c);
  if (!rep.compatible)
    throw CompatibilityError("PV and circulation data incompatible: defect " +
                             std::to_string(rep.defect));

  RunResult out;
  out.grid = &grid_;
  out.t_end = t_end;

  out.psi_final = ell_.invert_pv(q0.q0, c);
  out.u_final = ell_.velocity(out.psi_final);
  out.q_final = q0.q0;
  out.foot_final = FlowMap::identity(grid_, MapDirection::backward);

  if (cfg_.chat_override > 0) {
    out.chat = cfg_.chat_override;
  } else {
    Rng rng(cfg_.seed);
    out.chat = fit_contraction_constant(out.u_final, rng);
  }
  const double ceff = out.chat * (1.0 + q0.bound);
  out.window_T = ceff > 1e-14 ? cfg_.sigma * WINDOW_RULE / ceff
                              : std::max(t_end, 1.0);

  out.u_times.push_back(0.0);
  out.u_snapshots.push_back(out.u_final);
  if (t_end <= 0) return out;

  const double tol = outer_tol();
  SolverState state = initial_state(q0, c, out.chat, t_end);

  while (true) {
    const int window_idx = state.windows_completed;
    bool converged = false;
    for (int it = 0; it < cfg_.outer_max_iter; ++it) {
      state = outer_step(state, q0, c);
      const double delta = state.delta_history.back();

      DiagnosticsRow row;
      row.window = window_idx;
      row.n = state.n;
      row.t0 = state.t0;
      row.delta = delta;
      row.q_inf = state.q_nodes.back().max_abs();
      const ScalarField3 psi_end = ell_.invert_pv(state.q_nodes.back(), c);
      row.energy = ell_.bilinear_form(psi_end, psi_end);
      row.level_means = state.q_nodes.back().level_means();
      out.diagnostics.push_back(std::move(row));

      if (state.n >= cfg_.outer_min_iter && delta <= tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "window " << window_idx << " failed to contract within "
         << cfg_.outer_max_iter << " iterates; deltas:";
      for (double d : state.delta_history) os << " " << d;
      throw ContractionError(os.str());
    }

    WindowRecord wr;
    wr.t0 = state.t0;
    wr.T = state.T;
    wr.iterations = state.n;
    wr.delta_history = state.delta_history;
    wr.escaped = state.escaped;
    out.windows.push_back(std::move(wr));

    // converged velocity snapshots feed the global map re-integration
    for (std::size_t i = 1; i < state.node_times.size(); ++i) {
      out.u_times.push_back(state.node_times[i]);
      out.u_snapshots.push_back(state.u_nodes[i]);
    }

    // close the window: final backward feet to t = 0 and the end fields,
    // built with the same integrator family the iterates used
    SnapshotVelocity U(grid_, state.node_times, state.u_nodes);
    FlowMap b;
    if (cfg_.picard_feet) {
      PicardConfig pc = cfg_.picard;
      pc.threads = cfg_.threads;
      pc.time_nodes = cfg_.window_nodes;
      ReversedVelocity rv(U, state.t0 + state.T);
      PicardResult back = picard_solve(grid_, rv, 0.0, state.T, pc);
      b = back.path.maps.back();
    } else {
      b = FlowMap::identity(grid_, MapDirection::backward);
      b.t = state.t0 + state.T;
      b = integrate(std::move(b), U, state.t0,
                    cfg_.substeps * (cfg_.window_nodes - 1), cfg_.threads);
    }
    b.direction = MapDirection::backward;
    b.t = state.t0;
    FlowMap foot0 = state.t0 == 0 ? std::move(b) : compose_feet(b, state.foot0);
    foot0.direction = MapDirection::backward;

    const double t_done = state.t0 + state.T;
    out.q_final = state.q_nodes.back();
    out.psi_final = ell_.invert_pv(out.q_final, c);
    out.u_final = ell_.velocity(out.psi_final);
    out.foot_final = foot0;

    if (on_window) on_window(state, out);

    if (t_done >= t_end - 1e-12) break;

    // seed the next window from the end state
    SolverState nextw;
    nextw.t0 = t_done;
    nextw.T = std::min(out.window_T, t_end - t_done);
    nextw.windows_completed = state.windows_completed + 1;
    const int m = cfg_.window_nodes;
    nextw.node_times.resize(m);
    for (int i = 0; i < m; ++i)
      nextw.node_times[i] = nextw.t0 + nextw.T * i / (m - 1);
    nextw.q = out.q_final;
    nextw.psi = out.psi_final;
    nextw.u = out.u_final;
    nextw.q_nodes.assign(m, nextw.q);
    nextw.u_nodes.assign(m, nextw.u);
    nextw.foot0 = std::move(foot0);
    nextw.window_path.times = nextw.node_times;
    nextw.window_path.maps.assign(m, FlowMap::identity(grid_));
    for (int i = 0; i < m; ++i) nextw.window_path.maps[i].t = nextw.node_times[i];
    state = std::move(nextw);
  }
  return out;
}

FlowMap global_forward_map(const RunResult& r, int substeps_per_node,
                           int threads) {
  if (!r.grid) throw SolverError("run result carries no grid");
  SnapshotVelocity U(*r.grid, r.u_times, r.u_snapshots);
  FlowMap m = FlowMap::identity(*r.grid);
  for (std::size_t i = 1; i < r.u_times.size(); ++i)
    m = integrate(std::move(m), U, r.u_times[i], substeps_per_node, threads);
  if (m.t < r.t_end)
    m = integrate(std::move(m), U, r.t_end, substeps_per_node, threads);
  return m;
}

} // namespace cylqg
