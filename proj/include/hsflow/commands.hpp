#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hsflow/io.hpp"

namespace hsflow::commands {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "HSFLOW_OUTPUT_DIR";

struct Outcome {
  int exit_code = 0;
  io::json report;
};

/// Explicit directory if given, else the config's output_dir, else
/// $HSFLOW_OUTPUT_DIR, else ./hsflow-out.
std::filesystem::path output_dir(const std::string& explicit_dir, const io::RunFile& rf);

/// Runs the configured engine(s) and writes trajectory.csv, events.jsonl,
/// summary.json (roots), spectral.csv (spectral) and cross.json (both).
/// Exit 0 on a clean finish, 2 when an event stopped the run, 1 on error.
Outcome simulate(const io::RunFile& rf, const std::filesystem::path& out);

/// Spectral engine only.
Outcome oracle_run(const io::RunFile& rf, const std::filesystem::path& out);

/// Reflection identity, Im P(0), P*(pole) = -P(pole) and the two zero
/// velocity forms on random locally univalent maps (m <= 4, n <= 2).
Outcome verify_identities(int count, std::uint64_t seed);
/// Richardson enumeration against contour moments on random polynomial maps.
Outcome verify_moment_routes(int count, std::uint64_t seed);
/// Moment conservation report on a trajectory CSV.
Outcome verify_moments(const std::filesystem::path& trajectory_csv);
/// Convergence, scaling and pole-envelope reports on a trajectory CSV.
Outcome verify_asymptotics(const std::filesystem::path& trajectory_csv);
/// Root-engine trajectory CSV against a spectral CSV.
Outcome verify_cross(const std::filesystem::path& trajectory_csv, const std::filesystem::path& spectral_csv);

io::json gallery_list();
/// Polynomial entries as {"taylor"}, rational ones as {"b", "zeros", "poles"}.
io::json gallery_emit(const std::string& name, double t);

}  // namespace hsflow::commands
