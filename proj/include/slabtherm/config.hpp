#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slabtherm/scenario.hpp"
#include "slabtherm/transport_solver.hpp"

namespace slabtherm {

/// Fully resolved run configuration.
struct Config {
  Scenario scenario;
  std::uint64_t seed = 1;
  std::uint64_t n_walkers = 1000000;
  std::uint64_t n_samples = 10000000;
  std::string out = "out";
  /// Depths for spectrum tables; empty means first cell, b/3 and last cell.
  std::vector<double> spectrum_depths;
  /// (e1, e2) pairs for the collision validator.
  std::vector<std::pair<double, double>> collision_pairs{{1.0, 1.0}, {1.0, 4.0}, {0.5, 2.0}};
  Scheme scheme = Scheme::accelerated;
  std::size_t anderson_depth = 16;
  std::vector<std::string> warnings;  ///< regime warnings; not part of equality

  bool operator==(const Config& o) const;
};

/// Keys accepted by parse_config, in rendering order.
const std::vector<std::string>& config_keys();

/// Parses "key = value" lines; '#' starts a comment. b and alpha are
/// required, everything else has a default. Unknown, duplicate or
/// unparsable keys raise ConfigError carrying the 1-based line number.
Config parse_config(std::string_view text);

/// Reads and parses a file. I/O failures throw std::runtime_error.
Config load_config(const std::string& path);

/// Canonical text form; parse_config(render_config(c)) == c.
std::string render_config(const Config& config);

SolverControls controls_from(const Config& config, unsigned threads);

/// 17 significant digits, enough to round-trip any double.
std::string format_number(double v);

}  // namespace slabtherm
