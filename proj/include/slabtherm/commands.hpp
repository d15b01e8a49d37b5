#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "slabtherm/config.hpp"
#include "slabtherm/diagnostics.hpp"
#include "slabtherm/io.hpp"
#include "slabtherm/mc_oracle.hpp"
#include "slabtherm/transport_solver.hpp"

namespace slabtherm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;  ///< I/O or configuration failure
inline constexpr int kExitNotConverged = 2;
inline constexpr int kExitCheckFailed = 3;  ///< a validator ran but a check failed

struct RunOptions {
  std::string config_path;
  std::optional<std::string> out_dir;  ///< overrides the config's `out`
  unsigned threads = 0;                ///< 0 = hardware concurrency
  std::optional<std::uint64_t> seed;   ///< overrides the config's `seed`
};

/// Config from options, with the command-line overrides applied.
Config resolve_config(const RunOptions& options);

struct SolveSummary {
  bool converged = false;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  double crossover = 0.0;       ///< NaN when j_inel never takes over
  double mb_dev_final = 0.0;    ///< at the last depth node; NaN without inelastic flux
  double slope = 0.0;           ///< interior affine fit of j_total
  double intercept = 0.0;
  double r2 = 0.0;
  bool boundary_dominated = false;
  double transmitted = 0.0;     ///< leakage of the elastic line (linear runs)
  double reflected = 0.0;
  double max_clamp = 0.0;
  double max_number_residual = 0.0;
  double max_energy_residual = 0.0;
  double tail_mass = 0.0;
};

struct SolveRun {
  TransportSystem system;
  SolveResult result;
  FluxProfile profile;
  SolveSummary summary;
};

/// solve_stationary (or solve_linear when `linear`) plus diagnostics.
SolveRun run_solve(const Config& config, unsigned threads, bool linear);

/// Depth nodes for the spectrum tables: configured depths, else first
/// cell, b/3 and last cell.
std::vector<std::size_t> spectrum_nodes(const Config& config, const DepthGrid& dgrid);

/// profile.csv, spectrum_<k>.csv, conservation.csv, residuals.csv,
/// summary.csv and manifest.txt.
void write_solve_outputs(const std::filesystem::path& dir, const Config& config, const SolveRun& run,
                         const std::string& command);

int cmd_solve(const RunOptions& options, std::ostream& log);
int cmd_linear(const RunOptions& options, std::ostream& log);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

std::vector<Check> validate_kernels(const Config& config, unsigned threads);
std::vector<Check> validate_walk(const Config& config, unsigned threads, const std::filesystem::path* dir = nullptr);
std::vector<Check> validate_collision(const Config& config, unsigned threads,
                                      const std::filesystem::path* dir = nullptr);

/// which: kernels | walk | collision. Unknown names throw ConfigError.
int cmd_validate(const std::string& which, const RunOptions& options, std::ostream& log);

/// Parameters cmd_scan accepts.
const std::vector<std::string>& scan_parameters();

/// Runs cmd_solve per value into <out>/<param>_<i>/ and writes
/// <out>/scan_<param>.csv. With `hold_collisions` and param == "b", alpha
/// is reset to keep b² alpha at the base configuration's value.
int cmd_scan(const std::string& param, const std::vector<double>& values, bool hold_collisions,
             const RunOptions& options, std::ostream& log);

}  // namespace slabtherm
