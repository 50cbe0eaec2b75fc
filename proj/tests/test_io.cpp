#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hsflow/commands.hpp"
#include "hsflow/gallery.hpp"
#include "hsflow/io.hpp"

using namespace hsflow;
using namespace hsflow::io;
namespace fs = std::filesystem;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hsflow_test_io_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Trajectory cardioid_run() {
  RunConfig c;
  c.map = RationalDerivative(-1.0, {2.0});
  c.t1 = 0.3;
  c.sample_dt = 0.05;
  return run_simulation(c);
}

}  // namespace

TEST_CASE("format_double") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(std::strtod(format_double(1.0 / 3.0).c_str(), nullptr) == 1.0 / 3.0);
}

TEST_CASE("map specs") {
  const auto rd = map_from_json(json::parse(R"({"b": [-1, 0], "zeros": [[2, 0]]})"));
  CHECK(rd.m() == 1);
  CHECK(leading_coeff(rd) == doctest::Approx(2.0));

  const auto rt = map_from_json(map_to_json(gallery::offcenter_disk_map(3.0).normalized()));
  const auto ref = gallery::offcenter_disk_map(3.0).normalized();
  CHECK(rt.b() == ref.b());
  CHECK(rt.zeros() == ref.zeros());
  REQUIRE(rt.poles().size() == 1);
  CHECK(rt.poles()[0].order == 2);

  // f = z + 0.8 z^2 + 0.2 z^3: g = 1 + 1.6 z + 0.6 z^2, zeros -1 and -5/3
  const auto tay = map_from_json(json::parse(R"({"taylor": [[1, 0], [0.8, 0], [0.2, 0]]})"));
  REQUIRE(tay.m() == 2);
  std::vector<double> re{tay.zeros()[0].real(), tay.zeros()[1].real()};
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-5.0 / 3.0).epsilon(1e-13));
  CHECK(re[1] == doctest::Approx(-1.0).epsilon(1e-13));

  const auto gal = map_from_json(json::parse(R"({"gallery": "huntingford", "t": 0.5})"));
  const auto ref_h = gallery::huntingford_map(0.5);
  for (Complex w : ref_h.zeros()) {
    double best = 1e9;
    for (Complex v : gal.zeros()) best = std::min(best, std::abs(v - w));
    CHECK(best < 1e-14);
  }

  CHECK(error_of([] { map_from_json(json::parse(R"({"b": [1, 0], "zeros": [[2, 0], [3]]})")); })
            .find("map.zeros[1]") != std::string::npos);
  CHECK(error_of([] { map_from_json(json::parse(R"({"b": [1, 0], "zeroes": []})")); }).find("map.zeroes") !=
        std::string::npos);
  CHECK(error_of([] { map_from_json(json::parse(R"({"b": [0, 1], "zeros": [[2, 0]]})")); }).find("normalize") !=
        std::string::npos);
  const auto rot = map_from_json(json::parse(R"({"b": [0, 1], "zeros": [[2, 0]], "normalize": true})"));
  CHECK(leading_coeff(rot) == doctest::Approx(2.0));
  CHECK(error_of([] { map_from_json(json::parse(R"({"gallery": "nope"})")); }).find("UnknownEntry") !=
        std::string::npos);
}

TEST_CASE("run config") {
  const auto rf = parse_run_config(R"({
    "map": {"b": [1.5, 0]},
    "q_mode": {"constant": 1},
    "t_span": [0, 1],
    "events": {"cusp": 1e-3},
    "engine": "both"
  })");
  CHECK(rf.run.q_mode.kind == QMode::Kind::Constant);
  CHECK(rf.run.events.cusp == 1e-3);
  CHECK(rf.run.events.collision == 1e-5);
  CHECK(rf.run.rtol == 1e-9);
  CHECK(rf.engine == Engine::Both);

  CHECK(error_of([] { parse_run_config(R"({"map": {"b": 1}, "t_span": [1, 0]})"); }).find("t_span") !=
        std::string::npos);
  CHECK(error_of([] { parse_run_config(R"({"map": {"b": 1}, "t_span": [0, 1], "rtol": 0})"); }).find("rtol") !=
        std::string::npos);
  CHECK(error_of([] { parse_run_config(R"({"map": {"b": 1}, "t_span": [0, 1], "q_mode": "fast"})"); })
            .find("q_mode") != std::string::npos);
  CHECK(error_of([] { parse_run_config(R"({"map": {"b": 1}, "t_span": [0, 1], "sample_dt": "x"})"); })
            .find("sample_dt") != std::string::npos);
  const std::string syntax = error_of([] { parse_run_config("{\n  \"map\": {\"b\": 1},\n  \"t_span\" [0, 1]\n}"); });
  CHECK(syntax.find("line 3") != std::string::npos);
}

TEST_CASE("trajectory CSV round trip") {
  const Trajectory tr = cardioid_run();
  std::stringstream ss;
  write_trajectory_csv(ss, tr);
  const std::string text = ss.str();
  std::istringstream hdr(text);
  std::string first;
  std::getline(hdr, first);
  CHECK(first == "t,a1,b_re,b_im,om1_re,om1_im,M0_re,M0_im,M1_re,M1_im,N0,constraint_residual,Q,q,coeff_mode");
  std::size_t lines = 0;
  for (std::string l; std::getline(hdr, l); ++lines)
    CHECK(std::count(l.begin(), l.end(), ',') == std::count(first.begin(), first.end(), ','));
  CHECK(lines == tr.samples.size());

  std::istringstream in(text);
  const Trajectory back = read_trajectory_csv(in);
  REQUIRE(back.samples.size() == tr.samples.size());
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    CHECK(back.samples[i].state.t == tr.samples[i].state.t);
    CHECK(back.samples[i].state.rd.zeros() == tr.samples[i].state.rd.zeros());
    CHECK(back.samples[i].state.Q == tr.samples[i].state.Q);
  }

  std::stringstream again;
  write_trajectory_csv(again, cardioid_run());
  CHECK(again.str() == text);
}

TEST_CASE("rational trajectory keeps pole orders") {
  RunConfig c;
  c.map = gallery::offcenter_disk_map(3.0).normalized();
  c.t1 = 0.2;
  c.sample_dt = 0.1;
  std::stringstream ss;
  write_trajectory_csv(ss, run_simulation(c));
  const Trajectory back = read_trajectory_csv(ss);
  REQUIRE(back.samples.back().state.rd.poles().size() == 1);
  CHECK(back.samples.back().state.rd.poles()[0].order == 2);
}

TEST_CASE("events as JSON lines") {
  RunConfig c;
  c.t0 = gallery::huntingford_t0() + 1e-3;
  c.t1 = 1.0;
  c.map = gallery::huntingford_map(c.t0);
  const Trajectory tr = run_simulation(c);
  REQUIRE(tr.terminal_event);
  std::stringstream ss;
  write_events_jsonl(ss, tr);
  std::vector<json> lines;
  for (std::string l; std::getline(ss, l);) lines.push_back(json::parse(l));
  REQUIRE(lines.size() == tr.events.size());
  CHECK(lines.back()["kind"] == "Collision");
  CHECK(lines.back()["terminal"] == true);
  CHECK(lines.back()["positions"].size() == 2);
  CHECK(lines.back()["time"].get<double>() < 0.0);
}

TEST_CASE("spectral CSV round trip") {
  oracle::OracleOptions o;
  o.sample_dt = 0.1;
  const auto st = oracle::run_oracle(oracle::from_map(RationalDerivative(-1.0, {2.0}), 0.0, 16), 0.3, o);
  std::stringstream ss;
  write_oracle_csv(ss, st);
  const auto back = read_oracle_csv(ss);
  REQUIRE(back.size() == st.size());
  CHECK(back.back().coeffs.coeffs == st.back().coeffs.coeffs);
  CHECK(back.back().node_count == st.back().node_count);
}

TEST_CASE("simulate command") {
  SUBCASE("disk finishes cleanly and the mass column grows by 2Q") {
    const auto out = scratch("disk");
    const auto rf = parse_run_config(R"({"map": {"b": [1.5, 0]}, "q_mode": {"constant": 1}, "t_span": [0, 1], "sample_dt": 0.1})");
    const auto oc = commands::simulate(rf, out);
    CHECK(oc.exit_code == 0);
    std::ifstream in(out / "trajectory.csv");
    const Trajectory tr = read_trajectory_csv(in);
    CHECK(tr.samples.size() == 11);
    std::ifstream raw(out / "trajectory.csv");
    std::string line;
    std::getline(raw, line);
    double worst = 0.0;
    while (std::getline(raw, line)) {
      std::vector<double> v;
      std::stringstream ls(line);
      for (std::string cell; std::getline(ls, cell, ',');) v.push_back(std::strtod(cell.c_str(), nullptr));
      // columns t, a1, b_re, b_im, M0_re, ..., Q at index 8
      worst = std::max(worst, std::abs(v[4] - 2.25 - 2.0 * v[8]));
    }
    CHECK(worst <= 1e-8);
    CHECK(fs::exists(out / "events.jsonl"));
    CHECK(json::parse(slurp(out / "summary.json"))["roots"]["moments"]["pass"] == true);
  }
  SUBCASE("Huntingford stops at the cusp when cusp continuation is off") {
    const auto out = scratch("hunt");
    auto rf = parse_run_config(R"({"map": {"gallery": "huntingford"}, "t_span": [-0.12670640594149768, 1.0],
                                   "collision_continuation": true, "sample_dt": 0.01})");
    const auto oc = commands::simulate(rf, out);
    CHECK(oc.exit_code == 2);
    CHECK(oc.report["roots"]["terminated_by"] == "Cusp");
  }
  SUBCASE("spectral engine with a schedule is an error") {
    const auto out = scratch("sched");
    const auto rf = parse_run_config(R"({"map": {"gallery": "offcenter", "t": 3}, "q_mode": "offcenter",
                                         "t_span": [3, 3.1], "engine": "spectral"})");
    CHECK(commands::simulate(rf, out).exit_code == 1);
  }
  SUBCASE("both engines agree on the cardioid") {
    const auto out = scratch("both");
    const auto rf = parse_run_config(R"({"map": {"b": [-1, 0], "zeros": [[2, 0]]}, "t_span": [0, 0.5],
                                         "sample_dt": 0.05, "engine": "both"})");
    const auto oc = commands::simulate(rf, out);
    CHECK(oc.exit_code == 0);
    CHECK(oc.report["cross"]["pass"] == true);
    const auto vc = commands::verify_cross(out / "trajectory.csv", out / "spectral.csv");
    CHECK(vc.exit_code == 0);
    CHECK(vc.report["max_zero_diff"].get<double>() <= 1e-6);
  }
}

TEST_CASE("identical configs give identical bytes") {
  const auto rf = parse_run_config(R"({"map": {"gallery": "huntingford"}, "t_span": [-0.12670640594149768, 1.0],
                                       "collision_continuation": true, "cusp_continuation": true, "sample_dt": 0.01})");
  const auto a = scratch("det_a"), b = scratch("det_b");
  CHECK(commands::simulate(rf, a).exit_code == 0);
  CHECK(commands::simulate(rf, b).exit_code == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "events.jsonl") == slurp(b / "events.jsonl"));
}

TEST_CASE("verify commands") {
  CHECK(commands::verify_identities(50, 1).exit_code == 0);
  CHECK(commands::verify_moment_routes(50, 2).exit_code == 0);

  const auto out = scratch("verify");
  const auto rf = parse_run_config(R"({"map": {"gallery": "huntingford"}, "t_span": [0.1, 2.0], "sample_dt": 0.05,
                                       "collision_continuation": true})");
  REQUIRE(commands::simulate(rf, out).exit_code == 0);
  CHECK(commands::verify_moments(out / "trajectory.csv").exit_code == 0);

  // shift one zero by 1e-3 in one row
  std::ifstream in(out / "trajectory.csv");
  std::ofstream bad(out / "bad.csv");
  std::string line;
  for (int row = 0; std::getline(in, line); ++row) {
    if (row == 10) {
      const auto a = line.find(',', line.find(',', line.find(',', line.find(',') + 1) + 1) + 1);
      const auto b = line.find(',', a + 1);
      const double w = std::strtod(line.substr(a + 1, b - a - 1).c_str(), nullptr);
      line = line.substr(0, a + 1) + format_double(w + 1e-3) + line.substr(b);
    }
    bad << line << '\n';
  }
  bad.close();
  const auto oc = commands::verify_moments(out / "bad.csv");
  CHECK(oc.exit_code != 0);
  CHECK(oc.report["pass"] == false);
}

TEST_CASE("gallery commands") {
  const json h = commands::gallery_emit("huntingford", 0.0);
  REQUIRE(h["taylor"].size() == 3);
  CHECK(h["taylor"][0][0].get<double>() == 1.0);
  CHECK(h["taylor"][1][0].get<double>() == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(h["taylor"][2][0].get<double>() == doctest::Approx(0.2).epsilon(1e-15));
  const json o = commands::gallery_emit("offcenter", 2.0);
  CHECK(o["b"][0].get<double>() == doctest::Approx(6.0));
  CHECK(o["zeros"].empty());
  CHECK(o["poles"][0]["order"] == 2);
  CHECK(o["poles"][0]["z"][0].get<double>() == 2.0);
  // the emitted spec is 3z / (2 - z)
  const auto rd = map_from_json(o);
  for (Complex z : {Complex(0.5, 0.0), Complex(0.1, 0.4)})
    CHECK(std::abs(eval_f(rd, z) - 3.0 * z / (2.0 - z)) < 1e-13);
  CHECK_THROWS_AS(commands::gallery_emit("nope", 0.0), Error);
  CHECK(commands::gallery_list().size() == gallery::entries().size());
}

TEST_CASE("output directory resolution") {
  RunFile rf;
  ::unsetenv(commands::kOutputDirEnv);
  CHECK(commands::output_dir("", rf) == "hsflow-out");
  ::setenv(commands::kOutputDirEnv, "/tmp/from_env", 1);
  CHECK(commands::output_dir("", rf) == "/tmp/from_env");
  rf.output_dir = "cfg";
  CHECK(commands::output_dir("", rf) == "cfg");
  CHECK(commands::output_dir("cli", rf) == "cli");
  ::unsetenv(commands::kOutputDirEnv);
}
