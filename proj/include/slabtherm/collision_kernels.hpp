#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "slabtherm/scenario.hpp"

namespace slabtherm {

/// Inelastic two-body kernel: rate density for a pair (e1, e2) to emit one
/// particle at energy e, in units where the prefactor is alpha. Arguments
/// are symmetrised, so the order of e1 and e2 does not matter.
double kernel_f(double e1, double e2, double e, double alpha);

/// Gain quadrature multiplier at 1-based energy node `m` for a pair whose
/// 1-based node indices sum to `pair_sum`. The flux-weighted kernel vanishes
/// like a square root at E = E_a + E_b, a grid node, so the node just below
/// it gets the same endpoint correction the grid applies at E = 0.
inline double gain_weight_factor(std::size_t m, std::size_t pair_sum) {
  return m + 1 == pair_sum ? 1.0 + kSqrtEndpointCorrection : 1.0;
}

/// Pointwise kernel samples on the energy grid.
struct FTables {
  std::size_t n = 0;
  double alpha = 0.0;
  std::vector<double> f_cc;      ///< f̂(E_a, E_b; E_m), index (a*n + b)*n + m
  std::vector<double> f_ei_ei;   ///< f̂(E_i, E_i; E_m)
  std::vector<double> f_n_ei;    ///< f̂(E_n, E_i; E_m), index n*n_e + m

  double at(std::size_t a, std::size_t b, std::size_t m) const { return f_cc[(a * n + b) * n + m]; }
};

/// Tabulates f̂ at all node triples. Energies beyond e_max are simply not
/// represented; the sum-rule construction of ĝ uses the same truncation.
FTables build_f_tables(const EnergyGrid& egrid, double e_i, double alpha);

/// Elastic (loss) kernel ĝ and the elastic-line f̂ rows.
///
/// ĝ(E_a; E_b) is defined by the discrete particle-flux sum rule
///   √E_b ĝ(E_a; E_b) + Σ_m w_m c_m √E_m f̂(E_a, E_b; E_m) = 0,
/// with c_m the endpoint-corrected gain factors, so the assembled collision
/// operator conserves discrete particle flux to rounding.
struct CollisionTables {
  std::size_t n = 0;
  std::size_t idx_ei = 0;
  double alpha = 0.0;
  std::vector<double> f_ei_ei;   ///< f̂(E_i, E_i; E_m)
  std::vector<double> f_n_ei;    ///< f̂(E_n, E_i; E_m), index n*n_e + m
  std::vector<double> g_cc;      ///< ĝ(E_a; E_b), index a*n_e + b
  std::vector<double> g_n_ei;    ///< ĝ(E_n; E_i)
  std::vector<double> g_ei_m;    ///< ĝ(E_i; E_m)
  double g_ei_ei = 0.0;          ///< ĝ(E_i; E_i)
  std::optional<FTables> dense;  ///< full 3-index f̂ table when built from one

  double g(std::size_t a, std::size_t b) const { return g_cc[a * n + b]; }
};

/// Completes `f` with the sum-rule ĝ. Keeps the dense table.
CollisionTables build_g_from_sum_rule(FTables f, const EnergyGrid& egrid);

/// Same ĝ (bitwise) as build_g_from_sum_rule(build_f_tables(...)) without
/// storing the n_e³ table.
CollisionTables build_collision_tables(const EnergyGrid& egrid, double alpha);

/// Σ_m w_m c_m √E_m f̂(E_a, E_b; E_m) for 0-based node indices a, b.
double gain_number_sum(const EnergyGrid& egrid, std::size_t a, std::size_t b, double alpha);

/// Σ_m w_m c_m 2E_m √E_m f̂(E_a, E_b; E_m) for 0-based node indices a, b.
double gain_energy_sum(const EnergyGrid& egrid, std::size_t a, std::size_t b, double alpha);

/// ĝ(E_a; E_b) from the energy-flux rule,
/// (E_a + E_b) √E_b g̃ = -Σ_m w_m c_m 2E_m √E_m f̂.
double g_from_energy_rule(const EnergyGrid& egrid, std::size_t a, std::size_t b, double alpha);

/// Closed-form continuum loss kernel: -(α/(√E_1 E_2)) √a (b + a/3) with
/// a = min(E_1, E_2), b = max(E_1, E_2).
double continuum_g(double e1, double e2, double alpha);

}  // namespace slabtherm
