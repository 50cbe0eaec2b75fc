#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "hsflow/dynamics.hpp"
#include "hsflow/oracle.hpp"

namespace hsflow::io {

using json = nlohmann::json;

/// %.17g, with nan/inf spelled out.
std::string format_double(double x);

/// Parse JSON text; syntax errors become ConfigError with line and column.
json parse_json(const std::string& text);

/// Map spec: {"b", "zeros", "poles"}, {"taylor"} or {"gallery", "t"}.
/// `path` prefixes field names in diagnostics; t_default is used when a
/// gallery spec has no "t".
RationalDerivative map_from_json(const json& j, double t_default = 0.0,
                                 const std::string& path = "map");
json map_to_json(const RationalDerivative& rd);
json taylor_to_json(const TaylorSeries& s);
/// g = sum k a_k z^{k-1} factored into its zeros, then re-phased.
RationalDerivative map_from_taylor(const TaylorSeries& s);

enum class Engine { Roots, Spectral, Both };

struct RunFile {
  RunConfig run;
  Engine engine = Engine::Roots;
  std::string output_dir;
  int oracle_order = oracle::kDefaultOrder;
  /// Name of the q mode as written in the config.
  std::string q_mode_name = "unit_growth";
};

/// Full run config with field-level diagnostics (ConfigError).
RunFile parse_run_config(const std::string& text);
RunFile load_run_config(const std::filesystem::path& path);

/// Column names of the trajectory CSV for a run with m zeros, ell distinct
/// poles and moments M_0..M_K.
std::vector<std::string> trajectory_columns(int m, int ell, int K);
/// One line per column with its meaning, for --help.
std::string trajectory_column_help();

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
/// Rebuild samples (state, Taylor series, moments recomputed from the state).
Trajectory read_trajectory_csv(std::istream& is, int taylor_order = 16);

json event_to_json(const EventRecord& ev, bool terminal = false);
void write_events_jsonl(std::ostream& os, const Trajectory& traj);

/// Final state, event count, conservation and moment residuals, step stats.
json summary_json(const Trajectory& traj);

void write_oracle_csv(std::ostream& os, const std::vector<oracle::SpectralState>& states);
std::vector<oracle::SpectralState> read_oracle_csv(std::istream& is);

json cross_report_json(const oracle::CrossReport& rep);

}  // namespace hsflow::io
