// Acceptance criteria: one PASS/FAIL line each, exit status 1 if any fails.
// Optional argument: path to the hsflow executable, used for the
// command-line determinism check.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "hsflow/asymptotics.hpp"
#include "hsflow/commands.hpp"
#include "hsflow/gallery.hpp"
#include "hsflow/moments.hpp"
#include "hsflow/oracle.hpp"
#include "hsflow/poisson.hpp"
#include "hsflow/random_maps.hpp"

using namespace hsflow;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double value_of(const EventRecord& ev, const std::string& key) {
  for (const auto& [k, v] : ev.values)
    if (k == key) return v;
  return std::nan("");
}

Trajectory run_or_partial(const RunConfig& c) {
  try {
    return run_simulation(c);
  } catch (const RunFailure& e) {
    return e.partial();
  }
}

Result identities() {
  const auto oc = commands::verify_identities(200, 1);
  std::string d;
  for (const auto& c : oc.report["checks"])
    d += c["name"].get<std::string>() + " " + fmt("%.2e", c["max_residual"].get<double>()) + "; ";
  return {oc.exit_code == 0, d};
}

Result cardioid() {
  const RationalDerivative rd(-1.0, {2.0});
  const PoissonData pd = coefficients_A(rd, 1.0);
  const Derivatives dv = rhs(rd, 1.0);
  const double e1 = std::abs(pd.A[0] + 2.0 / 3.0);
  const double e0 = std::abs(pd.A0 + 1.0 / 3.0);
  const double ep = std::abs(eval_P(pd, rd, 0.0) - 1.0 / 3.0);
  const double el = std::abs(dv.omega_dot[0] / rd.zeros()[0] - 1.0);
  const double worst = std::max({e1, e0, ep, el});
  return {worst <= 1e-12, "max deviation " + fmt("%.2e", worst)};
}

Result moment_conservation() {
  double m12 = 0.0, mass = 0.0, n0 = 0.0;
  for (double ta : {0.45, 1.5, 3.0}) {
    RunConfig c;
    c.t0 = ta;
    c.t1 = ta + 1.0;
    c.map = gallery::huntingford_map(ta);
    c.sample_dt = 0.01;
    const Trajectory tr = run_simulation(c);
    if (!tr.events.empty()) return {false, "window starting at " + fmt("%g", ta) + " has events"};
    const auto& s0 = tr.samples.front();
    for (const auto& s : tr.samples) {
      m12 = std::max({m12, std::abs(s.moments.M[1] - 32.0 / 25.0), std::abs(s.moments.M[2] - 0.2)});
      mass = std::max(mass, std::abs(s.moments.M[0].real() - s0.moments.M[0].real() - 2.0 * s.state.Q));
    }
    for (std::size_t i = 1; i < tr.samples.size(); ++i)
      n0 = std::max(n0, tr.samples[i].moments.N0 - tr.samples[i - 1].moments.N0);
  }
  const bool pass = m12 <= 1e-8 && mass <= 1e-8 && n0 <= 1e-10;
  return {pass, "|M1,M2 drift| " + fmt("%.2e", m12) + ", M0 - M0(0) - 2Q " + fmt("%.2e", mass) +
                    ", max N0 increase " + fmt("%.2e", n0)};
}

Result oracle_equivalence() {
  double coeff = 0.0, zero = 0.0;
  auto window = [&](const RationalDerivative& rd, double t0) {
    RunConfig c;
    c.map = rd;
    c.t0 = t0;
    c.t1 = t0 + 0.5;
    c.sample_dt = 0.05;
    c.collision_continuation = true;
    oracle::OracleOptions o;
    o.sample_dt = 0.05;
    const auto rep = oracle::cross_validate(run_simulation(c), oracle::run_oracle(oracle::from_map(rd, t0), c.t1, o));
    coeff = std::max(coeff, rep.max_coeff_diff);
    zero = std::max(zero, rep.max_zero_diff);
    return rep.points.size() == 11;
  };
  const bool full = window(RationalDerivative(-1.0, {2.0}), 0.0) && window(gallery::huntingford_map(0.1), 0.1);
  return {full && coeff <= 1e-7 && zero <= 1e-6,
          "coefficients " + fmt("%.2e", coeff) + ", zeros " + fmt("%.2e", zero)};
}

Result huntingford_script() {
  RunConfig c;
  c.t0 = gallery::huntingford_t0() + 1e-3;
  c.t1 = 6.0;
  c.map = gallery::huntingford_map(c.t0);
  c.collision_continuation = true;
  c.cusp_continuation = true;
  c.sample_dt = 0.01;
  const Trajectory tr = run_simulation(c);
  const auto& ev = tr.events;
  bool ok = ev.size() == 3 && ev[0].kind == EventKind::Collision && ev[0].time < 0.0 &&
            ev[1].kind == EventKind::Cusp && value_of(ev[1], "min_modulus_minus_one") <= 1e-4 &&
            std::abs(ev[1].time) <= 2e-3 && ev[2].kind == EventKind::Collision && ev[2].time > 0.0;
  const auto w = asymptotics::rescaled_zeros(tr.samples.back().state);
  const Complex target(0.0, std::sqrt(5.0 / 3.0));
  double mis = 0.0;
  for (Complex z : w) mis = std::max(mis, std::min(std::abs(z - target), std::abs(z + target)));
  ok = ok && mis <= 0.05;
  std::string d;
  for (const auto& e : ev) d += std::string(to_string(e.kind)) + "@" + fmt("%.5f", e.time) + " ";
  return {ok, d + "| rescaled zero mismatch at t = 6: " + fmt("%.4f", mis)};
}

struct PoleTally {
  double monotone = -std::numeric_limits<double>::infinity();
  double harnack = 0.0;
  double envelope = 0.0;
  long steps = 0;
};

void pole_laws_on(const Trajectory& tr, PoleTally& t) {
  for (std::size_t i = 1; i < tr.steps.size(); ++i) {
    const auto& a = tr.steps[i - 1];
    const auto& b = tr.steps[i];
    if (a.pole_moduli.size() != b.pole_moduli.size() || b.a1 == a.a1) continue;
    ++t.steps;
    for (std::size_t j = 0; j < a.pole_moduli.size(); ++j) {
      const double r = a.pole_moduli[j];
      t.monotone = std::max(t.monotone, r - b.pole_moduli[j]);
      const double ratio = std::log(b.pole_moduli[j] / r) / std::log(b.a1 / a.a1);
      t.harnack = std::max({t.harnack, (r - 1.0) / (r + 1.0) - ratio, ratio - (r + 1.0) / (r - 1.0)});
    }
  }
  const auto env = asymptotics::pole_envelope_check(tr, 1e-6);
  t.envelope = std::max(t.envelope, env.worst_violation);
}

Result pole_laws() {
  PoleTally t;
  RunConfig c;
  c.t0 = 3.0;
  c.t1 = 8.0;
  c.map = gallery::offcenter_disk_map(3.0).normalized();
  c.q_mode = gallery::offcenter_q_mode();
  c.sample_dt = 0.05;
  c.log_steps = true;
  pole_laws_on(run_simulation(c), t);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    RationalDerivative rd;
    do rd = sampling::random_map(rng, 4, 2); while (rd.is_polynomial() || rd.m() < rd.n());
    RunConfig rc;
    rc.map = rd;
    rc.t1 = 1.0;
    rc.sample_dt = 0.05;
    rc.log_steps = true;
    const Trajectory tr = run_or_partial(rc);
    if (tr.samples.size() >= 2) pole_laws_on(tr, t);
  }
  const bool pass = t.monotone < 0.0 && t.harnack <= 1e-6 && t.envelope <= 1e-6;
  return {pass, std::to_string(t.steps) + " steps; max(|p| before - after) " + fmt("%.2e", t.monotone) +
                    ", Harnack violation " + fmt("%.2e", std::max(t.harnack, 0.0)) + ", envelope violation " +
                    fmt("%.2e", t.envelope)};
}

Result conservation() {
  double mod = 0.0, arg = 0.0;
  int runs = 0;
  auto one = [&](const RationalDerivative& rd) {
    RunConfig c;
    c.map = rd;
    c.t1 = 0.05;
    c.sample_dt = 1e-3;
    const Trajectory tr = run_simulation(c);
    if (tr.terminal_event) return;
    const auto r = conservation_residual(tr);
    mod = std::max(mod, r.max_modulus);
    arg = std::max(arg, r.max_argument);
    ++runs;
  };
  one(RationalDerivative(-1.0, {2.0}));
  one(gallery::huntingford_map(1.0));
  one(gallery::offcenter_disk_map(3.0).normalized());
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10; ++i) one(sampling::random_map(rng, 4, 2));
  return {runs >= 10 && mod <= 1e-5 && arg <= 1e-5,
          std::to_string(runs) + " runs; modulus " + fmt("%.2e", mod) + ", argument " + fmt("%.2e", arg)};
}

Result asymptotic_rates() {
  RunConfig c;
  c.t0 = gallery::huntingford_t0() + 1e-3;
  c.t1 = 7.2;
  c.map = gallery::huntingford_map(c.t0);
  c.collision_continuation = true;
  c.cusp_continuation = true;
  c.sample_dt = 0.02;
  const Trajectory tr = run_simulation(c);
  const auto rep = asymptotics::convergence_report(tr);
  const double a1 = tr.samples.back().taylor.a(1).real();
  std::string d = "a1 = " + fmt("%.0f", a1) + "; ";
  for (const auto& dec : rep.decades)
    d += "k=" + std::to_string(dec.k) + " " + fmt("%.2e", dec.residual_lo) + " -> " + fmt("%.2e", dec.residual_hi) +
         (dec.at_floor ? " (roundoff floor) " : " ");
  d += "; product residual " + fmt("%.2e", rep.max_product_residual);
  return {a1 >= 1e3 && rep.pass(), d};
}

Result moment_routes() {
  const auto oc = commands::verify_moment_routes(100, 9);
  return {oc.exit_code == 0, "max relative difference " + fmt("%.2e", oc.report["checks"][0]["max_residual"].get<double>())};
}

Result determinism(const std::string& cli) {
  const fs::path base = fs::temp_directory_path() / "hsflow_acceptance";
  fs::remove_all(base);
  const auto rf = io::parse_run_config(R"({"map": {"gallery": "huntingford"}, "t_span": [-0.12670640594149768, 2.0],
      "sample_dt": 0.005, "collision_continuation": true, "cusp_continuation": true})");
  commands::simulate(rf, base / "a");
  commands::simulate(rf, base / "b");
  bool same = slurp(base / "a" / "trajectory.csv") == slurp(base / "b" / "trajectory.csv") &&
              !slurp(base / "a" / "trajectory.csv").empty();
  std::string d = "library runs identical: " + std::string(same ? "yes" : "no");
  if (!cli.empty()) {
    const fs::path cfg = base / "cfg.json";
    std::ofstream(cfg) << R"({"map": {"gallery": "offcenter", "t": 3}, "q_mode": "offcenter", "t_span": [3, 5]})";
    int rc = 0;
    for (const char* dir : {"c", "d"})
      rc |= std::system(("\"" + cli + "\" simulate \"" + cfg.string() + "\" -o \"" + (base / dir).string() + "\" > /dev/null").c_str());
    const bool cli_same = rc == 0 && slurp(base / "c" / "trajectory.csv") == slurp(base / "d" / "trajectory.csv") &&
                          !slurp(base / "c" / "trajectory.csv").empty();
    same = same && cli_same;
    d += ", command-line runs identical: " + std::string(cli_same ? "yes" : "no");
  }
  return {same, d};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"identity suite on 200 random maps", identities},
      {"cardioid golden values", cardioid},
      {"Huntingford moment conservation", moment_conservation},
      {"root and spectral engines agree", oracle_equivalence},
      {"Huntingford event script", huntingford_script},
      {"pole laws (monotone, Harnack, envelope)", pole_laws},
      {"log-sum conservation law", conservation},
      {"asymptotic decay and conserved product", asymptotic_rates},
      {"Richardson vs contour moments", moment_routes},
      {"byte-identical reruns", [&] { return determinism(cli); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += r.pass ? 0 : 1;
    std::printf("criterion %2zu: %s  %s  (%s)\n", i + 1, r.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
