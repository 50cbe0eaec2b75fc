// hsflow: Hele-Shaw root/pole dynamics from the command line.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "hsflow/commands.hpp"

namespace cmd = hsflow::commands;

namespace {

int emit(const cmd::Outcome& oc, const std::string& report_path) {
  std::cout << oc.report.dump(2) << '\n';
  if (!report_path.empty()) {
    std::ofstream os(report_path);
    if (!os) {
      std::cerr << "hsflow: cannot write " << report_path << '\n';
      return 1;
    }
    os << oc.report.dump(2) << '\n';
  }
  return oc.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hele-Shaw flow: zero/pole dynamics of rational conformal maps, spectral cross-checks and verification suites"};
  app.require_subcommand(1);
  app.footer(std::string("Outputs go to --out, else the config's output_dir, else $") + cmd::kOutputDirEnv +
             ", else ./hsflow-out.\n\n" + hsflow::io::trajectory_column_help() +
             "\nExit codes: 0 clean, 2 stopped by an event, 1 error or failed check.");

  std::string config, out, report;

  auto* sim = app.add_subcommand("simulate", "integrate a run config (engine roots, spectral or both)");
  sim->add_option("config", config, "run config JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--out", out, "output directory");

  auto* orc = app.add_subcommand("oracle", "spectral Loewner-Kufarev engine");
  orc->require_subcommand(1);
  auto* orc_run = orc->add_subcommand("run", "integrate a run config with the spectral engine");
  orc_run->add_option("config", config, "run config JSON")->required()->check(CLI::ExistingFile);
  orc_run->add_option("-o,--out", out, "output directory");

  auto* ver = app.add_subcommand("verify", "verification suites; JSON report on stdout");
  ver->require_subcommand(1);
  ver->add_option("--report", report, "also write the report to this file");
  int count = 100;
  std::uint64_t seed = 20240611;
  std::string traj, spectral;
  auto* v_id = ver->add_subcommand("identities", "Poisson identities on random maps");
  v_id->add_option("-n,--count", count, "number of random maps")->check(CLI::PositiveNumber);
  v_id->add_option("--seed", seed, "random seed");
  auto* v_mom = ver->add_subcommand("moments", "moment conservation of a trajectory, or moment routes on random maps");
  v_mom->add_option("trajectory", traj, "trajectory CSV (omit to compare moment routes)")->check(CLI::ExistingFile);
  v_mom->add_option("-n,--count", count, "number of random maps")->check(CLI::PositiveNumber);
  v_mom->add_option("--seed", seed, "random seed");
  auto* v_asy = ver->add_subcommand("asymptotics", "large-time reports on a trajectory");
  v_asy->add_option("trajectory", traj, "trajectory CSV")->required()->check(CLI::ExistingFile);
  auto* v_cross = ver->add_subcommand("cross", "root trajectory against spectral trajectory");
  v_cross->add_option("trajectory", traj, "trajectory CSV")->required()->check(CLI::ExistingFile);
  v_cross->add_option("spectral", spectral, "spectral CSV")->required()->check(CLI::ExistingFile);

  auto* gal = app.add_subcommand("gallery", "closed-form solutions");
  gal->require_subcommand(1);
  auto* g_list = gal->add_subcommand("list", "list entries");
  std::string name;
  double t = 0.0;
  auto* g_emit = gal->add_subcommand("emit", "print the map spec of an entry at time t");
  g_emit->add_option("name", name, "entry name")->required();
  g_emit->add_option("--t", t, "time")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*sim || *orc_run) {
      const auto rf = hsflow::io::load_run_config(config);
      const auto dir = cmd::output_dir(out, rf);
      const auto oc = *sim ? cmd::simulate(rf, dir) : cmd::oracle_run(rf, dir);
      std::cout << oc.report.dump(2) << '\n';
      if (oc.report.contains("error")) std::cerr << "hsflow: " << oc.report["error"].get<std::string>() << '\n';
      return oc.exit_code;
    }
    if (*v_id) return emit(cmd::verify_identities(count, seed), report);
    if (*v_mom) return emit(traj.empty() ? cmd::verify_moment_routes(count, seed) : cmd::verify_moments(traj), report);
    if (*v_asy) return emit(cmd::verify_asymptotics(traj), report);
    if (*v_cross) return emit(cmd::verify_cross(traj, spectral), report);
    if (*g_list) {
      std::cout << cmd::gallery_list().dump(2) << '\n';
      return 0;
    }
    if (*g_emit) {
      std::cout << cmd::gallery_emit(name, t).dump() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "hsflow: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
