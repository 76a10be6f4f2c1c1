#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunOut {
  int code = -1;
  std::string output;
};

RunOut run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log =
      fs::temp_directory_path() /
      ("cylqg-cli-" + std::to_string(::getpid()) + "-" +
       std::to_string(counter++) + ".log");
  const std::string cmd = std::string("\"") + CYLQG_BIN_PATH + "\" " + args +
                          " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  RunOut r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream f(log);
  std::ostringstream ss;
  ss << f.rdbuf();
  r.output = ss.str();
  fs::remove(log);
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path d = fs::temp_directory_path() /
                     ("cylqg-out-" + std::to_string(::getpid()) + "-" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("usage errors and help") {
  CHECK(run_cli("").code == 64);
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("simulate --help").code == 0);
  CHECK(run_cli("frobnicate").code == 64);
  CHECK(run_cli("simulate --nx notanumber").code == 64);
}

TEST_CASE("configuration errors") {
  const fs::path out = fresh_dir("cfgerr");
  const RunOut bad_domain =
      run_cli("invert --domain \"hexagon 1\" -o \"" + out.string() + "\"");
  CHECK(bad_domain.code == 65);
  CHECK(bad_domain.output.find("config error") != std::string::npos);

  const RunOut bad_interp = run_cli(
      "simulate --interp quintic --nx 16 --nz 3 -o \"" + out.string() + "\"");
  CHECK(bad_interp.code == 65);

  // reversed annulus radii fail topology validation, not config parsing
  const RunOut bad_radii =
      run_cli("invert --domain \"annulus 2 1\" -o \"" + out.string() + "\"");
  CHECK(bad_radii.code == 1);
  fs::remove_all(out);
}

TEST_CASE("manufactured inversion reports its error") {
  const fs::path out = fresh_dir("manu");
  const RunOut r = run_cli("invert --manufactured --nx 24 --nz 9 -o \"" +
                           out.string() + "\"");
  CHECK(r.code == 0);
  CHECK(r.output.find("manufactured inversion") != std::string::npos);
  CHECK(fs::exists(out / "psi.csv"));
  CHECK(fs::exists(out / "config.ini"));
  // the echoed config can replay the run
  const std::string ini = slurp(out / "config.ini");
  CHECK(ini.find("[domain]") != std::string::npos);
  CHECK(ini.find("nx = 24") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("short simulation writes the full artifact set") {
  const fs::path out = fresh_dir("sim");
  const RunOut r = run_cli(
      "simulate --nx 20 --nz 5 --t-end 0.02 --preset dipole --window-nodes 5 "
      "-o \"" + out.string() + "\"");
  CHECK(r.code == 0);
  CHECK(r.output.find("simulated to t=") != std::string::npos);
  for (const char* name : {"config.ini", "diagnostics.csv", "q_final.csv",
                           "psi_final.csv", "u_final.csv", "feet_final.csv",
                           "run.json"})
    CHECK(fs::exists(out / name));

  const std::string diag = slurp(out / "diagnostics.csv");
  CHECK(diag.rfind("window,n,t0,delta,q_inf,energy", 0) == 0);
  CHECK(diag.find("\n0,1,") != std::string::npos);

  const std::string manifest = slurp(out / "run.json");
  CHECK(manifest.find("\"command\": \"simulate\"") != std::string::npos);
  CHECK(manifest.find("\"windows\"") != std::string::npos);

  const std::string qcsv = slurp(out / "q_final.csv");
  CHECK(qcsv.rfind("x,y,z,value", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("seeded runs are reproducible byte for byte") {
  const fs::path a = fresh_dir("rep-a");
  const fs::path b = fresh_dir("rep-b");
  const std::string flags =
      "simulate --nx 18 --nz 4 --t-end 0.015 --preset random --seed 99 "
      "--amplitude 0.5 --window-nodes 4 --threads 2 -o \"";
  CHECK(run_cli(flags + a.string() + "\"").code == 0);
  CHECK(run_cli(flags + b.string() + "\"").code == 0);
  CHECK(slurp(a / "diagnostics.csv") == slurp(b / "diagnostics.csv"));
  CHECK(slurp(a / "q_final.csv") == slurp(b / "q_final.csv"));
  CHECK(!slurp(a / "diagnostics.csv").empty());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("greens report runs on a coarse lattice") {
  const fs::path out = fresh_dir("grn");
  const RunOut r = run_cli("greens-report --nx 24 --nz 3 --pairs 20 -o \"" +
                           out.string() + "\"");
  CHECK(r.code == 0);
  CHECK(r.output.find("kernel decay:") != std::string::npos);
  CHECK(r.output.find("quasi-Lipschitz:") != std::string::npos);
  CHECK(fs::exists(out / "greens_estimates.csv"));
  CHECK(fs::exists(out / "ql_ratios.csv"));
  fs::remove_all(out);
}
