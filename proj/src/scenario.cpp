#include "slabtherm/scenario.hpp"

#include <cmath>
#include <sstream>

namespace slabtherm {

namespace {

double require(const std::map<std::string, double>& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) throw ConfigError(key, "missing required key '" + key + "'");
  if (!std::isfinite(it->second)) throw ConfigError(key, "key '" + key + "' is not a finite number");
  return it->second;
}

double optional(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (!std::isfinite(it->second)) throw ConfigError(key, "key '" + key + "' is not a finite number");
  return it->second;
}

std::size_t count_value(const std::map<std::string, double>& params, const std::string& key,
                        std::size_t fallback) {
  double v = optional(params, key, static_cast<double>(fallback));
  if (v < 1.0 || v != std::floor(v)) throw ConfigError(key, "key '" + key + "' must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

ScenarioBuild build_scenario(const std::map<std::string, double>& params) {
  ScenarioBuild out;
  Scenario& s = out.scenario;

  s.b = require(params, "b");
  if (s.b <= 0.0) throw ConfigError("b", "b must be positive");
  s.alpha = require(params, "alpha");
  if (s.alpha < 0.0) throw ConfigError("alpha", "alpha must be non-negative");

  s.e_i = optional(params, "e_i", 1.0);
  if (s.e_i != 1.0) throw ConfigError("e_i", "e_i is the energy unit and must equal 1");

  s.e_max = optional(params, "e_max", s.e_max);
  if (s.e_max < 2.0 * s.e_i) throw ConfigError("e_max", "e_max must be at least 2*e_i");
  s.n_e = count_value(params, "n_e", s.n_e);
  s.n_z = count_value(params, "n_z", s.n_z);
  if (s.n_z < 2) throw ConfigError("n_z", "n_z must be at least 2");

  s.damping = optional(params, "damping", s.damping);
  if (!(s.damping > 0.0 && s.damping <= 1.0)) throw ConfigError("damping", "damping must lie in (0, 1]");
  s.tol = optional(params, "tol", s.tol);
  if (s.tol <= 0.0) throw ConfigError("tol", "tol must be positive");
  s.max_iter = count_value(params, "max_iter", s.max_iter);

  // Grid admissibility is part of validation.
  (void)build_energy_grid(s.e_max, s.n_e, s.e_i);

  if (s.alpha >= 0.1) {
    std::ostringstream msg;
    msg << "alpha = " << s.alpha << " strains the dilute-collision regime (alpha << 1 assumed)";
    out.warnings.push_back(msg.str());
  }
  if (s.alpha > 0.0 && s.collision_count() < 1.0) {
    std::ostringstream msg;
    msg << "b^2*alpha = " << s.collision_count() << " < 1: too few collisions to observe thermalization";
    out.warnings.push_back(msg.str());
  }
  return out;
}

EnergyGrid build_energy_grid(double e_max, std::size_t n_e, double e_i) {
  if (n_e < 1) throw ConfigError("n_e", "n_e must be at least 1");
  if (!(e_i > 0.0) || !(e_max >= e_i)) throw ConfigError("e_max", "need 0 < e_i <= e_max");

  double ratio = e_i * static_cast<double>(n_e) / e_max;
  double m = std::round(ratio);
  if (m < 1.0 || std::abs(ratio - m) > 1e-9 * ratio) {
    throw ConfigError("n_e", "e_i is not a node of the uniform grid (e_i/Δ must be an integer)");
  }

  EnergyGrid g;
  const auto per_ei = static_cast<std::size_t>(m);
  g.spacing = e_i / m;
  g.idx_ei = per_ei - 1;
  g.nodes.resize(n_e);
  g.weights.assign(n_e, g.spacing);
  g.sqrt_nodes.resize(n_e);
  for (std::size_t k = 0; k < n_e; ++k) {
    // Integer multiples of e_i/m, so the node at k+1 == m is e_i exactly.
    g.nodes[k] = static_cast<double>(k + 1) * e_i / m;
    g.sqrt_nodes[k] = std::sqrt(g.nodes[k]);
  }
  g.nodes[g.idx_ei] = e_i;
  g.sqrt_nodes[g.idx_ei] = std::sqrt(e_i);
  g.weights.back() = 0.5 * g.spacing;
  g.weights.front() *= 1.0 + kSqrtEndpointCorrection;
  return g;
}

std::size_t DepthGrid::cell_of(double z) const {
  if (z <= 0.0) return 0;
  auto j = static_cast<std::size_t>(z / width);
  return j >= size() ? size() - 1 : j;
}

DepthGrid build_depth_grid(double b, std::size_t n_z) {
  if (n_z < 2) throw ConfigError("n_z", "n_z must be at least 2");
  if (!(b > 0.0)) throw ConfigError("b", "b must be positive");
  DepthGrid g;
  g.width = b / static_cast<double>(n_z);
  g.cell_edges.resize(n_z + 1);
  g.nodes.resize(n_z);
  for (std::size_t j = 0; j <= n_z; ++j) g.cell_edges[j] = b * static_cast<double>(j) / static_cast<double>(n_z);
  g.cell_edges.back() = b;
  for (std::size_t j = 0; j < n_z; ++j)
    g.nodes[j] = b * (static_cast<double>(j) + 0.5) / static_cast<double>(n_z);
  return g;
}

}  // namespace slabtherm
