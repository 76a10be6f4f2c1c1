#include "cylqg/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cylqg/acceptance.hpp"
#include "cylqg/config.hpp"
#include "cylqg/errors.hpp"
#include "cylqg/greens.hpp"
#include "cylqg/io.hpp"
#include "cylqg/presets.hpp"
#include "cylqg/solver.hpp"

namespace cylqg {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// every subcommand resolves to one effective Config; flags override file
// values, and the result is echoed to the output directory so a run can
// be replayed from its artifacts alone
struct FlagBag {
  std::string config_path;
  std::string domain, preset, interp, boundary, circulation, out;
  int nx = -1, ny = -1, nz = -1, threads = -1, window_nodes = -1, substeps = -1;
  double t_end = -1, amplitude = -1, sigma = -1, outer_tol = -1;
  std::uint64_t seed = 0;
  bool seed_set = false, picard_feet = false, picard_feet_set = false;
  bool snapshots = false;
  int pairs = -1;
};

void add_common_flags(CLI::App* cmd, FlagBag& f) {
  cmd->add_option("-c,--config", f.config_path, "configuration file");
  cmd->add_option("--domain", f.domain,
                  "cross-section, e.g. 'annulus 1 2' or "
                  "'rectangle 0 0 3 3 hole 1 1 2 2'");
  cmd->add_option("--nx", f.nx, "lattice nodes in x (default 48)");
  cmd->add_option("--ny", f.ny, "lattice nodes in y (default: nx)");
  cmd->add_option("--nz", f.nz, "vertical levels (default 9)");
  cmd->add_option("--threads", f.threads, "worker threads (0 = auto)");
  cmd->add_option("-o,--out", f.out, "output directory (default 'out')");
}

Config effective_config(const FlagBag& f) {
  Config cfg;
  if (!f.config_path.empty()) cfg = Config::parse_file(f.config_path);

  auto defd = [&](const std::string& key, const std::string& v) {
    if (!cfg.has(key)) cfg.set(key, v);
  };
  defd("domain.spec", "annulus 1 2");
  defd("domain.nx", "48");
  defd("domain.nz", "9");
  defd("run.t_end", "0.2");
  defd("run.preset", "dipole");
  defd("run.seed", "20230817");
  defd("run.amplitude", "1");
  defd("run.out", "out");
  defd("run.snapshots", "false");
  defd("run.threads", "0");
  defd("elliptic.boundary", "fitted");
  defd("solver.outer_tol", "0");
  defd("solver.sigma", "0.5");
  defd("solver.window_nodes", "9");
  defd("solver.substeps", "2");
  defd("solver.interp", "bilinear");
  defd("solver.picard_feet", "false");
  defd("greens.pairs", "500");
  if (!cfg.has("domain.ny")) cfg.set("domain.ny", cfg.get("domain.nx", "48"));

  if (!f.domain.empty()) cfg.set("domain.spec", f.domain);
  if (f.nx > 0) {
    cfg.set("domain.nx", std::to_string(f.nx));
    if (f.ny <= 0) cfg.set("domain.ny", std::to_string(f.nx));
  }
  if (f.ny > 0) cfg.set("domain.ny", std::to_string(f.ny));
  if (f.nz > 0) cfg.set("domain.nz", std::to_string(f.nz));
  if (f.t_end >= 0) cfg.set("run.t_end", fmt_double(f.t_end));
  if (!f.preset.empty()) cfg.set("run.preset", f.preset);
  if (f.seed_set) cfg.set("run.seed", std::to_string(f.seed));
  if (f.amplitude >= 0) cfg.set("run.amplitude", fmt_double(f.amplitude));
  if (!f.out.empty()) cfg.set("run.out", f.out);
  if (f.snapshots) cfg.set("run.snapshots", "true");
  if (f.threads >= 0) cfg.set("run.threads", std::to_string(f.threads));
  if (!f.boundary.empty()) cfg.set("elliptic.boundary", f.boundary);
  if (f.outer_tol >= 0) cfg.set("solver.outer_tol", fmt_double(f.outer_tol));
  if (f.sigma > 0) cfg.set("solver.sigma", fmt_double(f.sigma));
  if (f.window_nodes > 0)
    cfg.set("solver.window_nodes", std::to_string(f.window_nodes));
  if (f.substeps > 0) cfg.set("solver.substeps", std::to_string(f.substeps));
  if (!f.interp.empty()) cfg.set("solver.interp", f.interp);
  if (f.picard_feet_set)
    cfg.set("solver.picard_feet", f.picard_feet ? "true" : "false");
  if (!f.circulation.empty()) cfg.set("circulation.values", f.circulation);
  if (f.pairs > 0) cfg.set("greens.pairs", std::to_string(f.pairs));
  return cfg;
}

Grid grid_from(const Config& cfg) {
  const Cylinder dom = build_domain(parse_domain(cfg.get("domain.spec", "")));
  const int nx = cfg.get("domain.nx", 48);
  const int ny = cfg.get("domain.ny", nx);
  const int nz = cfg.get("domain.nz", 9);
  return discretize(dom, nx, ny, nz);
}

EllipticOptions elliptic_from(const Config& cfg) {
  EllipticOptions eopt;
  eopt.boundary_treatment = cfg.get("elliptic.boundary", eopt.boundary_treatment);
  eopt.residual_tol = cfg.get("elliptic.residual_tol", eopt.residual_tol);
  eopt.threads = cfg.get("run.threads", 0);
  return eopt;
}

SolverConfig solver_from(const Config& cfg) {
  SolverConfig sc;
  sc.outer_tol = cfg.get("solver.outer_tol", sc.outer_tol);
  sc.sigma = cfg.get("solver.sigma", sc.sigma);
  sc.window_nodes = cfg.get("solver.window_nodes", sc.window_nodes);
  sc.substeps = cfg.get("solver.substeps", sc.substeps);
  sc.picard_feet = cfg.get("solver.picard_feet", false);
  sc.seed = cfg.get("run.seed", sc.seed);
  sc.threads = cfg.get("run.threads", 0);
  const std::string interp = cfg.get("solver.interp", "bilinear");
  if (interp == "bilinear") {
    sc.interp = InterpOrder::bilinear;
  } else if (interp == "cubic") {
    sc.interp = InterpOrder::cubic;
  } else {
    throw ConfigError("solver.interp must be bilinear or cubic");
  }
  return sc;
}

CirculationData circulation_from(const Config& cfg, const Grid& g) {
  const std::vector<double> vals = cfg.get_list("circulation.values");
  if (vals.empty()) return CirculationData::zero(g.n_loops, g.nz);
  if (static_cast<int>(vals.size()) != g.n_loops)
    throw ConfigError("circulation.values needs one value per boundary loop (" +
                      std::to_string(g.n_loops) + ")");
  return CirculationData::constant(vals, g.nz);
}

InitialPV pv_from(const Config& cfg, const Grid& g) {
  return pv_preset(g, cfg.get("run.preset", "dipole"),
                   cfg.get("run.seed", std::uint64_t{20230817}),
                   cfg.get("run.amplitude", 1.0));
}

void echo_config(const Config& cfg, const fs::path& dir) {
  std::ofstream f(dir / "config.ini");
  cfg.write(f);
}

void write_csv_file(const fs::path& p, const ScalarField3& field) {
  std::ofstream f(p);
  write_field_csv(field, f);
}

int cmd_simulate(const Config& cfg) {
  const Grid g = grid_from(cfg);
  const fs::path out(cfg.get("run.out", "out"));
  fs::create_directories(out);
  echo_config(cfg, out);

  const InitialPV q0 = pv_from(cfg, g);
  const CirculationData c = circulation_from(cfg, g);
  const double t_end = cfg.get("run.t_end", 0.2);
  if (t_end < 0) throw ConfigError("run.t_end must be nonnegative");
  const bool snapshots = cfg.get("run.snapshots", false);

  QGSolver solver(g, elliptic_from(cfg), solver_from(cfg));

  std::ofstream diag(out / "diagnostics.csv");
  diag << "window,n,t0,delta,q_inf,energy";
  for (int k = 0; k < g.nz; ++k) diag << ",mean_z" << k;
  diag << "\n";

  int snap_id = 0;
  RunResult r = solver.run(q0, c, t_end,
                           [&](const SolverState& s, const RunResult& sofar) {
                             if (!snapshots) return;
                             std::ostringstream name;
                             name << "q_window_" << snap_id++ << ".csv";
                             write_csv_file(out / name.str(), sofar.q_final);
                             (void)s;
                           });

  for (const DiagnosticsRow& row : r.diagnostics) {
    diag << row.window << ',' << row.n << ',' << fmt_double(row.t0) << ','
         << fmt_double(row.delta) << ',' << fmt_double(row.q_inf) << ','
         << fmt_double(row.energy);
    for (double m : row.level_means) diag << ',' << fmt_double(m);
    diag << "\n";
  }
  diag.close();

  write_csv_file(out / "q_final.csv", r.q_final);
  write_csv_file(out / "psi_final.csv", r.psi_final);
  {
    std::ofstream f(out / "u_final.csv");
    write_vector_csv(r.u_final, f);
  }
  {
    std::ofstream f(out / "feet_final.csv");
    write_flowmap_csv(r.foot_final, f);
  }

  json manifest;
  manifest["command"] = "simulate";
  manifest["domain"] = cfg.get("domain.spec", "");
  manifest["nx"] = g.nx;
  manifest["ny"] = g.ny;
  manifest["nz"] = g.nz;
  manifest["t_end"] = r.t_end;
  manifest["contraction_constant"] = r.chat;
  manifest["window_length"] = r.window_T;
  manifest["windows"] = json::array();
  for (const WindowRecord& w : r.windows) {
    json jw;
    jw["t0"] = w.t0;
    jw["T"] = w.T;
    jw["iterations"] = w.iterations;
    jw["delta_history"] = w.delta_history;
    jw["escaped"] = w.escaped;
    manifest["windows"].push_back(jw);
  }
  manifest["q_inf_final"] = r.q_final.max_abs();
  manifest["files"] = {"config.ini", "diagnostics.csv", "q_final.csv",
                       "psi_final.csv", "u_final.csv", "feet_final.csv"};
  std::ofstream mf(out / "run.json");
  mf << manifest.dump(2) << "\n";

  std::cout << "simulated to t=" << fmt_double(r.t_end) << " in "
            << r.windows.size() << " window(s); |q|_inf="
            << fmt_double(r.q_final.max_abs()) << "\n";
  return 0;
}

int cmd_invert(const Config& cfg, bool manufactured) {
  const Grid g = grid_from(cfg);
  const fs::path out(cfg.get("run.out", "out"));
  fs::create_directories(out);
  echo_config(cfg, out);

  EllipticSolver ell(g, elliptic_from(cfg));

  if (manufactured) {
    const ManufacturedCase mc = manufactured_annulus(g);
    const ScalarField3 psi = ell.invert_pv(mc.q, mc.c);
    double err = 0, ref = 0;
    for (int k = 0; k < g.nz; ++k)
      for (int n : g.interior_nodes) {
        err = std::max(err, std::abs(psi.at(n, k) - mc.psi_exact.at(n, k)));
        ref = std::max(ref, std::abs(mc.psi_exact.at(n, k)));
      }
    write_csv_file(out / "psi.csv", psi);
    std::cout << "manufactured inversion: nx=" << g.nx
              << " Linf_err=" << fmt_double(err)
              << " rel=" << fmt_double(err / ref) << "\n";
    return 0;
  }

  const InitialPV q0 = pv_from(cfg, g);
  const CirculationData c = circulation_from(cfg, g);
  LoopConstants lc;
  const ScalarField3 psi = ell.invert_pv(q0.q0, c, &lc);
  const VectorField3 u = ell.velocity(psi);
  write_csv_file(out / "psi.csv", psi);
  {
    std::ofstream f(out / "u.csv");
    write_vector_csv(u, f);
  }
  std::cout << "inverted PV on " << g.nx << "x" << g.ny << "x" << g.nz
            << "; |u|_max=" << fmt_double(u.max_speed()) << "\n";
  return 0;
}

int cmd_greens(const Config& cfg) {
  const Grid g = grid_from(cfg);
  const fs::path out(cfg.get("run.out", "out"));
  fs::create_directories(out);
  echo_config(cfg, out);

  EllipticSolver ell(g, elliptic_from(cfg));
  GreensEngine engine(ell);

  // a handful of sources spread over the cross-section, mid-depth
  std::vector<Vec3> sources;
  const int stride = std::max(1, g.n_interior() / 6);
  for (int m = stride / 2; m < g.n_interior() && sources.size() < 6;
       m += stride) {
    const Vec2 p = g.xy(g.interior_nodes[m]);
    sources.push_back({p.x, p.y, 0.5});
  }
  const EstimateReport est = engine.estimate_report(sources);
  {
    std::ofstream f(out / "greens_estimates.csv");
    f << "r,absG,absGrad,absHess\n";
    for (const auto& row : est.rows)
      f << fmt_double(row.r) << ',' << fmt_double(row.absG) << ','
        << fmt_double(row.absGrad) << ',' << fmt_double(row.absHess) << "\n";
  }
  std::cout << "kernel decay: sup|G|r=" << fmt_double(est.sup_G_r)
            << " sup|DG|r2=" << fmt_double(est.sup_grad_r2)
            << " sup|D2G|r3=" << fmt_double(est.sup_hess_r3) << "\n";

  Rng rng(cfg.get("run.seed", std::uint64_t{20230817}));
  const int n_pairs = cfg.get("greens.pairs", 500);
  const auto pairs = sample_interior_pairs(g, n_pairs, rng);
  const QuasiLipschitzReport ql = engine.quasi_lipschitz_report(pairs);
  {
    std::ofstream f(out / "ql_ratios.csv");
    f << "d,integral,ratio\n";
    for (const auto& row : ql.rows)
      f << fmt_double(row.d) << ',' << fmt_double(row.integral) << ','
        << fmt_double(row.ratio) << "\n";
  }
  std::cout << "quasi-Lipschitz: max ratio=" << fmt_double(ql.max_ratio)
            << " slope vs log(1/d)=" << fmt_double(ql.slope) << "\n";
  return 0;
}

int cmd_verify(int threads, bool verbose) {
  AcceptanceOptions opt;
  opt.threads = threads < 0 ? 0 : threads;
  opt.verbose = verbose;
  const int failed = run_acceptance(std::cout, opt);
  return failed == 0 ? 0 : 1;
}

} // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Transport solver for layered quasi-geostrophic flow on a "
               "cylinder with a multiply connected cross-section"};
  app.require_subcommand(1);

  FlagBag sim, inv, grn;
  bool manufactured = false;
  int verify_threads = -1;
  bool verify_verbose = false;

  CLI::App* c_sim = app.add_subcommand("simulate", "run the transport solver");
  add_common_flags(c_sim, sim);
  c_sim->add_option("--t-end", sim.t_end, "final time");
  c_sim->add_option("--preset", sim.preset,
                    "initial PV: dipole, radial, random, csv:PATH");
  c_sim->add_option("--seed", sim.seed, "RNG seed for the random preset")
      ->each([&](const std::string&) { sim.seed_set = true; });
  c_sim->add_option("--amplitude", sim.amplitude, "initial PV amplitude");
  c_sim->add_option("--circulation", sim.circulation,
                    "per-loop circulations, comma separated (constant in z)");
  c_sim->add_option("--sigma", sim.sigma, "window safety factor in (0,1]");
  c_sim->add_option("--outer-tol", sim.outer_tol,
                    "outer fixed-point tolerance (0 = auto)");
  c_sim->add_option("--window-nodes", sim.window_nodes,
                    "time nodes per window");
  c_sim->add_option("--substeps", sim.substeps, "RK4 steps between nodes");
  c_sim->add_option("--interp", sim.interp, "pullback order: bilinear|cubic");
  c_sim->add_flag("--picard-feet", sim.picard_feet,
                  "build pullback feet by Picard iteration")
      ->each([&](const std::string&) { sim.picard_feet_set = true; });
  c_sim->add_flag("--snapshots", sim.snapshots, "write per-window PV dumps");

  CLI::App* c_inv =
      app.add_subcommand("invert", "single PV inversion; dumps psi and u");
  add_common_flags(c_inv, inv);
  c_inv->add_option("--preset", inv.preset, "PV field to invert");
  c_inv->add_option("--seed", inv.seed, "RNG seed for the random preset")
      ->each([&](const std::string&) { inv.seed_set = true; });
  c_inv->add_option("--circulation", inv.circulation,
                    "per-loop circulations, comma separated");
  c_inv->add_flag("--manufactured", manufactured,
                  "invert the closed-form annulus case and print its error");

  CLI::App* c_grn = app.add_subcommand(
      "greens-report", "kernel decay and quasi-Lipschitz measurements");
  add_common_flags(c_grn, grn);
  c_grn->add_option("--pairs", grn.pairs, "sample pairs (default 500)");
  c_grn->add_option("--seed", grn.seed, "sampling seed")
      ->each([&](const std::string&) { grn.seed_set = true; });

  CLI::App* c_ver =
      app.add_subcommand("verify", "run the built-in verification suite");
  c_ver->add_option("--threads", verify_threads, "worker threads (0 = auto)");
  c_ver->add_flag("--verbose", verify_verbose, "per-criterion measurements");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(effective_config(sim));
    if (c_inv->parsed()) return cmd_invert(effective_config(inv), manufactured);
    if (c_grn->parsed()) return cmd_greens(effective_config(grn));
    return cmd_verify(verify_threads, verify_verbose);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 65;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const ContractionError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const IntegrationError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const SingularityError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

} // namespace cylqg
