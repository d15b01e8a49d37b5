#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace slabtherm {

/// Raised for any invalid configuration value. `key()` names the offending
/// key; `line()` is the 1-based source line, or 0 when not applicable.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        key_(std::move(key)),
        line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Dimensionless problem definition.
///
/// Lengths are in units of the disorder mean free path, energies in units of
/// the incident energy and densities in units of the incident density. In
/// these units the whole two-body interaction strength collapses into
/// `alpha`, the ratio of disorder to interaction mean free paths.
struct Scenario {
  double b = 0.0;        ///< optical thickness
  double alpha = 0.0;    ///< interaction ratio
  double e_i = 1.0;      ///< incident energy (always 1)
  double e_max = 6.0;
  std::size_t n_e = 240;
  std::size_t n_z = 250;
  double damping = 1.0;
  double tol = 1e-10;
  std::size_t max_iter = 10000;

  /// Expected number of two-body collisions along a diffusive traversal.
  double collision_count() const { return b * b * alpha; }
};

struct ScenarioBuild {
  Scenario scenario;
  std::vector<std::string> warnings;
};

/// Build a validated scenario from numeric key/value pairs. `b` and `alpha`
/// are required; every numerical control falls back to its default.
ScenarioBuild build_scenario(const std::map<std::string, double>& params);

/// -ζ(-1/2). Trapezoidal sums of √x g(x) from a square-root endpoint
/// underestimate the integral by this amount times h^{3/2} g(0); scaling
/// the weight of the node next to the endpoint by (1 + this) restores O(h²).
inline constexpr double kSqrtEndpointCorrection = 0.20788622497735456602;

/// Uniform energy grid E_k = k*Δ, k = 1..n_e, with E_i landing exactly on a
/// node. Zero energy is excluded. Weights are trapezoidal for an integrand
/// vanishing at E = 0, with the first weight scaled by
/// 1 + kSqrtEndpointCorrection: densities and kernels near E = 0 behave
/// like √E, and integrands vanishing linearly stay O(Δ²) either way.
struct EnergyGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> sqrt_nodes;
  double spacing = 0.0;
  std::size_t idx_ei = 0;  ///< 0-based index of the node equal to E_i

  std::size_t size() const { return nodes.size(); }
  double e_i() const { return nodes[idx_ei]; }
  double e_max() const { return nodes.back(); }
};

EnergyGrid build_energy_grid(double e_max, std::size_t n_e, double e_i);

/// Cell-centred uniform tiling of [0, b].
struct DepthGrid {
  std::vector<double> nodes;
  std::vector<double> cell_edges;
  double width = 0.0;

  std::size_t size() const { return nodes.size(); }
  double thickness() const { return cell_edges.back(); }
  /// Index of the cell containing depth z (clamped to the slab).
  std::size_t cell_of(double z) const;
};

DepthGrid build_depth_grid(double b, std::size_t n_z);

}  // namespace slabtherm
