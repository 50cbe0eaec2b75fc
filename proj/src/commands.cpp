#include "hsflow/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <random>

#include "hsflow/asymptotics.hpp"
#include "hsflow/gallery.hpp"
#include "hsflow/moments.hpp"
#include "hsflow/poisson.hpp"
#include "hsflow/random_maps.hpp"

namespace hsflow::commands {

namespace fs = std::filesystem;
using io::json;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error(ErrorKind::ConfigError, "cannot write " + p.string());
  return os;
}

void write_json(const fs::path& p, const json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

void write_roots(const Trajectory& traj, const fs::path& out, json& report) {
  {
    auto os = open_out(out / "trajectory.csv");
    io::write_trajectory_csv(os, traj);
  }
  {
    auto os = open_out(out / "events.jsonl");
    io::write_events_jsonl(os, traj);
  }
  report["roots"] = io::summary_json(traj);
  report["files"].push_back((out / "trajectory.csv").string());
  report["files"].push_back((out / "events.jsonl").string());
}

std::vector<oracle::SpectralState> run_spectral(const io::RunFile& rf) {
  oracle::OracleOptions opt;
  opt.q_mode = rf.run.q_mode;
  opt.rtol = rf.run.rtol;
  opt.atol = rf.run.atol;
  opt.sample_dt = rf.run.sample_dt;
  return oracle::run_oracle(oracle::from_map(rf.run.map, rf.run.t0, rf.oracle_order), rf.run.t1, opt);
}

void write_spectral(const std::vector<oracle::SpectralState>& st, const fs::path& out, json& report) {
  auto os = open_out(out / "spectral.csv");
  io::write_oracle_csv(os, st);
  report["spectral"] = {{"samples", st.size()},
                        {"final_order", st.back().coeffs.order()},
                        {"final_node_count", st.back().node_count},
                        {"final_a1", st.back().coeffs.a(1).real()}};
  report["files"].push_back((out / "spectral.csv").string());
}

json check_json(const std::string& name, double value, double tol) {
  return {{"name", name}, {"max_residual", value}, {"tolerance", tol}, {"pass", value <= tol}};
}

Trajectory load_trajectory(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + p.string());
  return io::read_trajectory_csv(in);
}

}  // namespace

fs::path output_dir(const std::string& explicit_dir, const io::RunFile& rf) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (!rf.output_dir.empty()) return rf.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "hsflow-out";
}

Outcome simulate(const io::RunFile& rf, const fs::path& out) {
  fs::create_directories(out);
  Outcome oc;
  oc.report["files"] = json::array();
  Trajectory traj;
  bool have_roots = false;
  if (rf.engine != io::Engine::Spectral) {
    try {
      traj = run_simulation(rf.run);
      have_roots = true;
    } catch (const RunFailure& e) {
      write_roots(e.partial(), out, oc.report);
      oc.report["error"] = e.what();
      oc.exit_code = 1;
      write_json(out / "summary.json", oc.report);
      return oc;
    }
    write_roots(traj, out, oc.report);
    if (traj.terminal_event) oc.exit_code = 2;
  }
  if (rf.engine != io::Engine::Roots) {
    try {
      const auto st = run_spectral(rf);
      write_spectral(st, out, oc.report);
      if (have_roots) {
        const auto cross = oracle::cross_validate(traj, st);
        oc.report["cross"] = io::cross_report_json(cross);
        write_json(out / "cross.json", oc.report["cross"]);
        oc.report["files"].push_back((out / "cross.json").string());
      }
    } catch (const Error& e) {
      oc.report["error"] = e.what();
      oc.exit_code = 1;
    }
  }
  write_json(out / "summary.json", oc.report);
  return oc;
}

Outcome oracle_run(const io::RunFile& rf, const fs::path& out) {
  io::RunFile spectral = rf;
  spectral.engine = io::Engine::Spectral;
  return simulate(spectral, out);
}

Outcome verify_identities(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double refl = 0.0, imP0 = 0.0, pole = 0.0, forms = 0.0;
  for (int i = 0; i < count; ++i) {
    const RationalDerivative rd = sampling::random_map(rng);
    const PoissonData pd = coefficients_A(rd, 1.0);
    refl = std::max(refl, check_reflection_identity(pd, rd, 200));
    imP0 = std::max(imP0, std::abs(pd.P0.imag()));
    for (const PoleEntry& p : rd.poles())
      pole = std::max(pole, std::abs(eval_P_star(pd, rd, p.z) + eval_P(pd, rd, p.z)));
    if (rd.m() > 0) forms = std::max(forms, rhs(rd, 1.0).two_form_mismatch);
  }
  Outcome oc;
  oc.report["maps"] = count;
  oc.report["seed"] = seed;
  oc.report["checks"] = json::array({check_json("reflection_identity", refl, 1e-10),
                                     check_json("im_P0", imP0, 1e-10),
                                     check_json("P_star_at_poles", pole, 1e-10),
                                     check_json("two_form_agreement", forms, 1e-9)});
  bool pass = true;
  for (const auto& c : oc.report["checks"]) pass = pass && c["pass"].get<bool>();
  oc.report["pass"] = pass;
  oc.exit_code = pass ? 0 : 1;
  return oc;
}

Outcome verify_moment_routes(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const RationalDerivative rd = sampling::random_map(rng, 4, 0);
    const TaylorSeries s = taylor_coeffs(rd, std::max(rd.m() + 1, 1));
    for (int k = 0; k <= rd.m(); ++k) {
      const Complex r = moments_richardson(s, k);
      const Complex c = moments_contour(rd, k);
      worst = std::max(worst, std::abs(r - c) / std::abs(r));
    }
  }
  Outcome oc;
  oc.report["maps"] = count;
  oc.report["seed"] = seed;
  oc.report["checks"] = json::array({check_json("richardson_vs_contour_relative", worst, 1e-10)});
  oc.report["pass"] = worst <= 1e-10;
  oc.exit_code = worst <= 1e-10 ? 0 : 1;
  return oc;
}

Outcome verify_moments(const fs::path& trajectory_csv) {
  const Trajectory traj = load_trajectory(trajectory_csv);
  const MomentReport rep = trajectory_moment_report(traj);
  Outcome oc;
  oc.report["samples"] = traj.samples.size();
  oc.report["checks"] = json::array();
  for (const MomentCheck& c : rep.checks)
    oc.report["checks"].push_back(
        {{"name", c.name}, {"max_residual", c.max_residual}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  oc.report["pass"] = rep.pass();
  oc.exit_code = rep.pass() ? 0 : 1;
  return oc;
}

Outcome verify_asymptotics(const fs::path& trajectory_csv) {
  const Trajectory traj = load_trajectory(trajectory_csv);
  Outcome oc;
  bool pass = true;
  if (traj.samples.front().state.rd.is_polynomial()) {
    const auto rep = asymptotics::convergence_report(traj);
    json decades = json::array();
    for (const auto& d : rep.decades)
      decades.push_back({{"k", d.k}, {"residual_lo", d.residual_lo}, {"residual_hi", d.residual_hi}, {"at_floor", d.at_floor}});
    oc.report["convergence"] = {{"pass", rep.pass()},
                                {"final_mismatch", rep.final_mismatch},
                                {"matching_stable", rep.matching_stable},
                                {"mismatch_decreasing", rep.mismatch_decreasing},
                                {"max_product_residual", rep.max_product_residual},
                                {"r_bound_ok", rep.r_bound_ok},
                                {"decades", decades}};
    pass = pass && rep.pass();
  } else {
    const auto env = asymptotics::pole_envelope_check(traj);
    oc.report["pole_envelope"] = {{"pass", env.pass}, {"worst_violation", env.worst_violation}};
    pass = pass && env.pass;
  }
  const auto sc = asymptotics::coefficient_scaling_check(traj);
  json fam = json::array();
  for (const auto& f : sc.families)
    fam.push_back({{"name", f.name}, {"slope", f.fit.slope}, {"pass", f.pass}});
  oc.report["scaling"] = {{"pass", sc.pass()}, {"families", fam}, {"gap_decreasing", sc.gap_decreasing}};
  pass = pass && sc.pass();
  oc.report["pass"] = pass;
  oc.exit_code = pass ? 0 : 1;
  return oc;
}

Outcome verify_cross(const fs::path& trajectory_csv, const fs::path& spectral_csv) {
  const Trajectory traj = load_trajectory(trajectory_csv);
  std::ifstream in(spectral_csv);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + spectral_csv.string());
  const auto st = io::read_oracle_csv(in);
  const auto rep = oracle::cross_validate(traj, st);
  Outcome oc;
  oc.report = io::cross_report_json(rep);
  oc.exit_code = rep.pass() ? 0 : 1;
  return oc;
}

json gallery_list() {
  json out = json::array();
  for (const auto& e : gallery::entries()) {
    json ms = json::object();
    for (const auto& [k, v] : e.milestones) ms[k] = v;
    out.push_back({{"name", e.name}, {"description", e.description}, {"t_min", e.t_min},
                   {"t_max", std::isfinite(e.t_max) ? json(e.t_max) : json("inf")}, {"milestones", ms}});
  }
  return out;
}

json gallery_emit(const std::string& name, double t) {
  const gallery::GalleryState s = gallery::evaluate(name, t);
  if (s.rd.is_polynomial() && s.taylor.order() > 0) return io::taylor_to_json(s.taylor);
  return io::map_to_json(s.rd.normalized());
}

}  // namespace hsflow::commands
