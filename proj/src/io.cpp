#include "hsflow/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "hsflow/gallery.hpp"
#include "hsflow/moments.hpp"
#include "hsflow/polynomial.hpp"

namespace hsflow::io {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, path + ": " + msg);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number, got " + std::string(j.type_name()));
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "not finite");
  return x;
}

double positive(const json& j, const std::string& path) {
  const double x = number(j, path);
  if (!(x > 0.0)) fail(path, "must be positive");
  return x;
}

int integer(const json& j, const std::string& path, int lo) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  const long long v = j.get<long long>();
  if (v < lo || v > 1'000'000) fail(path, "out of range");
  return static_cast<int>(v);
}

bool boolean(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

Complex complex_value(const json& j, const std::string& path) {
  if (j.is_number()) return {number(j, path), 0.0};
  if (!j.is_array() || j.size() != 2) fail(path, "expected [re, im]");
  return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(path + "." + it.key(), "unknown field");
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& s, long row, const std::string& col) {
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw Error(ErrorKind::ConfigError, "row " + std::to_string(row) + ", column " + col + ": bad number '" + s + "'");
  return x;
}

struct CsvTable {
  std::vector<std::string> header;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<double>> rows;

  bool has(const std::string& c) const { return index.count(c) > 0; }
  double at(std::size_t r, const std::string& c) const {
    const auto it = index.find(c);
    if (it == index.end()) throw Error(ErrorKind::ConfigError, "missing column " + c);
    return rows[r][it->second];
  }
};

CsvTable read_csv(std::istream& is) {
  CsvTable tab;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorKind::ConfigError, "empty CSV");
  tab.header = split(line);
  for (std::size_t i = 0; i < tab.header.size(); ++i) tab.index[tab.header[i]] = i;
  long row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != tab.header.size())
      throw Error(ErrorKind::ConfigError, "row " + std::to_string(row) + ": expected " +
                                              std::to_string(tab.header.size()) + " cells, got " +
                                              std::to_string(cells.size()));
    std::vector<double> v(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) v[i] = parse_cell(cells[i], row, tab.header[i]);
    tab.rows.push_back(std::move(v));
  }
  return tab;
}

int count_prefixed(const CsvTable& tab, const std::string& prefix, const std::string& suffix) {
  int k = 0;
  while (tab.has(prefix + std::to_string(k + 1) + suffix)) ++k;
  return k;
}

QMode parse_q_mode(const json& j, std::string& name) {
  const std::string path = "q_mode";
  if (j.is_string()) {
    name = j.get<std::string>();
    if (name == "unit_growth") return QMode::unit_growth();
    if (name == "offcenter") return gallery::offcenter_q_mode();
    fail(path, "expected \"unit_growth\", \"offcenter\" or {\"constant\": q}");
  }
  if (j.is_object()) {
    reject_unknown(j, path, {"constant"});
    if (!j.contains("constant")) fail(path, "expected {\"constant\": q}");
    const double q = number(j["constant"], path + ".constant");
    if (q == 0.0) fail(path + ".constant", "q must be nonzero");
    name = "constant";
    return QMode::constant(q);
  }
  fail(path, "expected a string or object");
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::ConfigError, "JSON syntax error at line " + std::to_string(line) + ", column " +
                                            std::to_string(col) + ": " + e.what());
  }
}

RationalDerivative map_from_taylor(const TaylorSeries& s) {
  int top = s.order();
  while (top > 0 && s.a(top) == Complex{}) --top;
  if (top < 1) throw Error(ErrorKind::InvalidArgument, "taylor series is identically zero");
  std::vector<Complex> g(static_cast<std::size_t>(top));
  for (int k = 1; k <= top; ++k) g[static_cast<std::size_t>(k - 1)] = double(k) * s.a(k);
  const Complex b = g.back();
  std::vector<Complex> zeros = top > 1 ? polynomial_roots(Polynomial(g)) : std::vector<Complex>{};
  return RationalDerivative(b, std::move(zeros)).normalized();
}

RationalDerivative map_from_json(const json& j, double t_default, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  if (j.contains("gallery")) {
    reject_unknown(j, path, {"gallery", "t"});
    if (!j["gallery"].is_string()) fail(path + ".gallery", "expected an entry name");
    const double t = j.contains("t") ? number(j["t"], path + ".t") : t_default;
    try {
      return gallery::evaluate(j["gallery"].get<std::string>(), t).rd.normalized();
    } catch (const Error& e) {
      fail(path + ".gallery", e.what());
    }
  }
  if (j.contains("taylor")) {
    reject_unknown(j, path, {"taylor"});
    const json& a = j["taylor"];
    if (!a.is_array() || a.empty()) fail(path + ".taylor", "expected a nonempty array of [re, im]");
    TaylorSeries s;
    for (std::size_t k = 0; k < a.size(); ++k)
      s.coeffs.push_back(complex_value(a[k], path + ".taylor[" + std::to_string(k) + "]"));
    const Complex a1 = s.a(1);
    if (!(a1.real() > 0.0) || std::abs(a1.imag()) > 1e-12 * std::abs(a1))
      fail(path + ".taylor[0]", "a_1 must be real and positive");
    try {
      return map_from_taylor(s);
    } catch (const Error& e) {
      fail(path + ".taylor", e.what());
    }
  }
  reject_unknown(j, path, {"b", "zeros", "poles", "normalize"});
  if (!j.contains("b")) fail(path, "needs \"b\" (with \"zeros\"/\"poles\"), \"taylor\" or \"gallery\"");
  const Complex b = complex_value(j["b"], path + ".b");
  std::vector<Complex> zeros;
  if (j.contains("zeros")) {
    if (!j["zeros"].is_array()) fail(path + ".zeros", "expected an array");
    for (std::size_t k = 0; k < j["zeros"].size(); ++k)
      zeros.push_back(complex_value(j["zeros"][k], path + ".zeros[" + std::to_string(k) + "]"));
  }
  std::vector<PoleEntry> poles;
  if (j.contains("poles")) {
    if (!j["poles"].is_array()) fail(path + ".poles", "expected an array");
    for (std::size_t k = 0; k < j["poles"].size(); ++k) {
      const std::string pp = path + ".poles[" + std::to_string(k) + "]";
      const json& p = j["poles"][k];
      if (!p.is_object()) fail(pp, "expected {\"z\": [re, im], \"order\": k}");
      reject_unknown(p, pp, {"z", "order"});
      if (!p.contains("z")) fail(pp + ".z", "missing");
      poles.push_back({complex_value(p["z"], pp + ".z"), p.contains("order") ? integer(p["order"], pp + ".order", 1) : 1});
    }
  }
  const bool normalize = j.contains("normalize") && boolean(j["normalize"], path + ".normalize");
  try {
    RationalDerivative rd(b, std::move(zeros), std::move(poles));
    if (normalize) rd = rd.normalized();
    (void)leading_coeff(rd);
    return rd;
  } catch (const Error& e) {
    fail(path, std::string(e.what()) + (normalize ? "" : " (set \"normalize\": true to rotate b)"));
  }
}

json map_to_json(const RationalDerivative& rd) {
  json j;
  j["b"] = complex_json(rd.b());
  j["zeros"] = json::array();
  for (Complex w : rd.zeros()) j["zeros"].push_back(complex_json(w));
  j["poles"] = json::array();
  for (const PoleEntry& p : rd.poles()) j["poles"].push_back({{"z", complex_json(p.z)}, {"order", p.order}});
  return j;
}

json taylor_to_json(const TaylorSeries& s) {
  json j;
  j["taylor"] = json::array();
  for (Complex c : s.coeffs) j["taylor"].push_back(complex_json(c));
  return j;
}

RunFile parse_run_config(const std::string& text) {
  const json j = parse_json(text);
  if (!j.is_object()) fail("config", "expected a JSON object");
  reject_unknown(j, "config",
                 {"map", "q_mode", "t_span", "rtol", "atol", "events", "sample_dt", "collision_continuation",
                  "cusp_continuation", "collision_window", "taylor_order", "max_step", "engine", "output_dir",
                  "oracle_order"});
  RunFile rf;
  RunConfig& c = rf.run;
  if (!j.contains("t_span")) fail("t_span", "missing");
  const json& ts = j["t_span"];
  if (!ts.is_array() || ts.size() != 2) fail("t_span", "expected [t0, t1]");
  c.t0 = number(ts[0], "t_span[0]");
  c.t1 = number(ts[1], "t_span[1]");
  if (!(c.t1 > c.t0)) fail("t_span", "must be increasing");
  if (!j.contains("map")) fail("map", "missing");
  c.map = map_from_json(j["map"], c.t0);
  if (j.contains("q_mode")) c.q_mode = parse_q_mode(j["q_mode"], rf.q_mode_name);
  if (j.contains("rtol")) c.rtol = positive(j["rtol"], "rtol");
  if (j.contains("atol")) c.atol = positive(j["atol"], "atol");
  if (j.contains("events")) {
    const json& e = j["events"];
    if (!e.is_object()) fail("events", "expected an object");
    reject_unknown(e, "events", {"cusp", "collision", "escape"});
    if (e.contains("cusp")) c.events.cusp = positive(e["cusp"], "events.cusp");
    if (e.contains("collision")) c.events.collision = positive(e["collision"], "events.collision");
    if (e.contains("escape")) c.events.escape = positive(e["escape"], "events.escape");
  }
  if (j.contains("sample_dt")) c.sample_dt = positive(j["sample_dt"], "sample_dt");
  if (j.contains("collision_continuation"))
    c.collision_continuation = boolean(j["collision_continuation"], "collision_continuation");
  if (j.contains("cusp_continuation")) c.cusp_continuation = boolean(j["cusp_continuation"], "cusp_continuation");
  if (j.contains("collision_window")) c.collision_window = positive(j["collision_window"], "collision_window");
  if (j.contains("taylor_order")) c.taylor_order = integer(j["taylor_order"], "taylor_order", 1);
  if (j.contains("max_step")) {
    c.max_step = number(j["max_step"], "max_step");
    if (c.max_step < 0.0) fail("max_step", "must be nonnegative");
  }
  if (j.contains("engine")) {
    if (!j["engine"].is_string()) fail("engine", "expected \"roots\", \"spectral\" or \"both\"");
    const std::string e = j["engine"].get<std::string>();
    if (e == "roots") rf.engine = Engine::Roots;
    else if (e == "spectral") rf.engine = Engine::Spectral;
    else if (e == "both") rf.engine = Engine::Both;
    else fail("engine", "expected \"roots\", \"spectral\" or \"both\"");
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) fail("output_dir", "expected a string");
    rf.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("oracle_order")) rf.oracle_order = integer(j["oracle_order"], "oracle_order", 4);
  return rf;
}

RunFile load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::vector<std::string> trajectory_columns(int m, int ell, int K) {
  std::vector<std::string> c{"t", "a1", "b_re", "b_im"};
  for (int k = 1; k <= m; ++k) {
    c.push_back("om" + std::to_string(k) + "_re");
    c.push_back("om" + std::to_string(k) + "_im");
  }
  for (int j = 1; j <= ell; ++j) {
    c.push_back("ze" + std::to_string(j) + "_re");
    c.push_back("ze" + std::to_string(j) + "_im");
  }
  for (int k = 0; k <= K; ++k) {
    c.push_back("M" + std::to_string(k) + "_re");
    c.push_back("M" + std::to_string(k) + "_im");
  }
  c.insert(c.end(), {"N0", "constraint_residual", "Q", "q", "coeff_mode"});
  for (int j = 1; j <= ell; ++j) c.push_back("ze" + std::to_string(j) + "_order");
  return c;
}

std::string trajectory_column_help() {
  return "Trajectory CSV columns (every row has every column):\n"
         "  t                    time\n"
         "  a1                   f'(0), real positive\n"
         "  b_re, b_im           scale b of g = b prod(z - om_k) / prod(z - ze_j)^n_j\n"
         "  omK_re, omK_im       zero K of g (nan once it has left to infinity)\n"
         "  zeJ_re, zeJ_im       distinct pole J of g\n"
         "  MK_re, MK_im         harmonic moment M_K, K = 0..m\n"
         "  N0                   sum_{j>=2} j |a_j|^2\n"
         "  constraint_residual  |Im a1| / |a1| before re-phasing\n"
         "  Q                    accumulated source\n"
         "  q                    source strength at t\n"
         "  coeff_mode           1 while integrating coefficients (near collisions/escapes)\n"
         "  zeJ_order            order of pole J\n";
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  int m = 0, ell = 0, K = 0;
  for (const Sample& s : traj.samples) {
    m = std::max(m, s.state.rd.m() + s.state.zeros_at_infinity);
    ell = std::max(ell, s.state.rd.ell());
    K = std::max(K, static_cast<int>(s.moments.M.size()) - 1);
  }
  const auto cols = trajectory_columns(m, ell, K);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const Sample& s : traj.samples) {
    std::vector<double> v{s.state.t, s.taylor.a(1).real(), s.state.rd.b().real(), s.state.rd.b().imag()};
    const auto& z = s.state.rd.zeros();
    for (int k = 0; k < m; ++k) {
      const bool have = k < static_cast<int>(z.size());
      v.push_back(have ? z[static_cast<std::size_t>(k)].real() : nan);
      v.push_back(have ? z[static_cast<std::size_t>(k)].imag() : nan);
    }
    const auto& p = s.state.rd.poles();
    for (int j = 0; j < ell; ++j) {
      const bool have = j < static_cast<int>(p.size());
      v.push_back(have ? p[static_cast<std::size_t>(j)].z.real() : nan);
      v.push_back(have ? p[static_cast<std::size_t>(j)].z.imag() : nan);
    }
    for (int k = 0; k <= K; ++k) {
      const bool have = k < static_cast<int>(s.moments.M.size());
      v.push_back(have ? s.moments.M[static_cast<std::size_t>(k)].real() : nan);
      v.push_back(have ? s.moments.M[static_cast<std::size_t>(k)].imag() : nan);
    }
    v.insert(v.end(), {s.moments.N0, s.state.constraint_residual, s.state.Q, s.state.q,
                       s.state.rep == Representation::Coefficients ? 1.0 : 0.0});
    for (int j = 0; j < ell; ++j)
      v.push_back(j < static_cast<int>(p.size()) ? p[static_cast<std::size_t>(j)].order : nan);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << format_double(v[i]);
    os << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& is, int taylor_order) {
  const CsvTable tab = read_csv(is);
  const int m = count_prefixed(tab, "om", "_re");
  const int ell = count_prefixed(tab, "ze", "_re");
  int K = -1;
  while (tab.has("M" + std::to_string(K + 1) + "_re")) ++K;
  Trajectory traj;
  traj.moment_order = std::max(K, 0);
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    SimState s;
    s.t = tab.at(r, "t");
    std::vector<Complex> zeros;
    for (int k = 1; k <= m; ++k) {
      const Complex w(tab.at(r, "om" + std::to_string(k) + "_re"), tab.at(r, "om" + std::to_string(k) + "_im"));
      if (std::isfinite(w.real()) && std::isfinite(w.imag())) zeros.push_back(w);
      else ++s.zeros_at_infinity;
    }
    std::vector<PoleEntry> poles;
    for (int j = 1; j <= ell; ++j) {
      const std::string p = "ze" + std::to_string(j);
      const Complex z(tab.at(r, p + "_re"), tab.at(r, p + "_im"));
      if (!std::isfinite(z.real())) continue;
      const int order = tab.has(p + "_order") ? static_cast<int>(tab.at(r, p + "_order")) : 1;
      poles.push_back({z, order});
    }
    s.rd = RationalDerivative(Complex(tab.at(r, "b_re"), tab.at(r, "b_im")), zeros, poles);
    if (tab.has("Q")) s.Q = tab.at(r, "Q");
    if (tab.has("q")) s.q = tab.at(r, "q");
    if (tab.has("constraint_residual")) s.constraint_residual = tab.at(r, "constraint_residual");
    if (tab.has("coeff_mode") && tab.at(r, "coeff_mode") != 0.0) s.rep = Representation::Coefficients;
    traj.samples.push_back(make_sample(s, taylor_order, traj.moment_order));
  }
  return traj;
}

json event_to_json(const EventRecord& ev, bool terminal) {
  json j;
  j["kind"] = std::string(to_string(ev.kind));
  j["time"] = ev.time;
  j["indices"] = ev.indices;
  j["positions"] = json::array();
  for (Complex z : ev.positions) {
    if (std::isfinite(z.real()) && std::isfinite(z.imag())) j["positions"].push_back(complex_json(z));
    else j["positions"].push_back("infinity");
  }
  j["values"] = json::object();
  for (const auto& [k, v] : ev.values) j["values"][k] = v;
  j["note"] = ev.note;
  j["terminal"] = terminal;
  return j;
}

void write_events_jsonl(std::ostream& os, const Trajectory& traj) {
  const auto& term = traj.terminal_event;
  bool term_listed = false;
  for (std::size_t i = 0; i < traj.events.size(); ++i) {
    const EventRecord& ev = traj.events[i];
    const bool is_term = term && i + 1 == traj.events.size() && ev.kind == term->kind && ev.time == term->time;
    term_listed = term_listed || is_term;
    os << event_to_json(ev, is_term).dump() << '\n';
  }
  if (term && !term_listed) os << event_to_json(*term, true).dump() << '\n';
}

json summary_json(const Trajectory& traj) {
  json j;
  j["samples"] = traj.samples.size();
  j["events"] = traj.events.size();
  j["terminated_by"] = traj.terminal_event ? json(std::string(to_string(traj.terminal_event->kind))) : json(nullptr);
  if (!traj.samples.empty()) {
    const Sample& f = traj.samples.back();
    j["final"] = {{"t", f.state.t},
                  {"a1", f.taylor.a(1).real()},
                  {"Q", f.state.Q},
                  {"map", map_to_json(f.state.rd)},
                  {"zeros_at_infinity", f.state.zeros_at_infinity}};
  }
  j["stats"] = {{"accepted", traj.stats.accepted},
                {"rejected", traj.stats.rejected_on_error},
                {"coefficient_steps", traj.stats.coefficient_steps},
                {"max_two_form_mismatch", traj.stats.max_two_form_mismatch},
                {"max_constraint_residual", traj.stats.max_constraint_residual}};
  try {
    const MomentReport rep = trajectory_moment_report(traj);
    json checks = json::array();
    for (const MomentCheck& c : rep.checks)
      checks.push_back({{"name", c.name}, {"pass", c.pass}, {"max_residual", c.max_residual}, {"tolerance", c.tolerance}});
    j["moments"] = {{"pass", rep.pass()}, {"checks", checks}};
  } catch (const Error& e) {
    j["moments"] = {{"skipped", e.what()}};
  }
  try {
    const ConservationResidual cr = conservation_residual(traj);
    j["conservation"] = {{"max_modulus_residual", cr.max_modulus}, {"max_argument_residual", cr.max_argument}};
  } catch (const Error& e) {
    j["conservation"] = {{"skipped", e.what()}};
  }
  return j;
}

void write_oracle_csv(std::ostream& os, const std::vector<oracle::SpectralState>& states) {
  int N = 0;
  for (const auto& s : states) N = std::max(N, s.coeffs.order());
  os << "t,a1,q,Q,node_count,order,constraint_residual";
  for (int k = 1; k <= N; ++k) os << ",a" << k << "_re,a" << k << "_im";
  os << '\n';
  for (const auto& s : states) {
    os << format_double(s.t) << ',' << format_double(s.coeffs.a(1).real()) << ',' << format_double(s.q) << ','
       << format_double(s.Q) << ',' << s.node_count << ',' << s.coeffs.order() << ','
       << format_double(s.constraint_residual);
    for (int k = 1; k <= N; ++k) os << ',' << format_double(s.coeffs.a(k).real()) << ',' << format_double(s.coeffs.a(k).imag());
    os << '\n';
  }
}

std::vector<oracle::SpectralState> read_oracle_csv(std::istream& is) {
  const CsvTable tab = read_csv(is);
  if (!tab.has("order") || !tab.has("a1_re")) throw Error(ErrorKind::ConfigError, "not a spectral trajectory CSV");
  std::vector<oracle::SpectralState> out;
  for (std::size_t r = 0; r < tab.rows.size(); ++r) {
    oracle::SpectralState s;
    s.t = tab.at(r, "t");
    s.q = tab.at(r, "q");
    s.Q = tab.at(r, "Q");
    s.node_count = static_cast<int>(tab.at(r, "node_count"));
    s.constraint_residual = tab.at(r, "constraint_residual");
    const int N = static_cast<int>(tab.at(r, "order"));
    for (int k = 1; k <= N; ++k)
      s.coeffs.coeffs.emplace_back(tab.at(r, "a" + std::to_string(k) + "_re"), tab.at(r, "a" + std::to_string(k) + "_im"));
    out.push_back(std::move(s));
  }
  return out;
}

json cross_report_json(const oracle::CrossReport& rep) {
  json pts = json::array();
  for (const auto& p : rep.points) pts.push_back({{"t", p.t}, {"coeff_diff", p.coeff_diff}, {"zero_diff", p.zero_diff}});
  return {{"pass", rep.pass()},
          {"max_coeff_diff", rep.max_coeff_diff},
          {"max_zero_diff", rep.max_zero_diff},
          {"coeff_tolerance", rep.coeff_tolerance},
          {"zero_tolerance", rep.zero_tolerance},
          {"zeros_compared", rep.zeros_compared},
          {"points", pts}};
}

}  // namespace hsflow::io
