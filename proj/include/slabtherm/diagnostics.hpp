#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "slabtherm/transport_solver.hpp"

namespace slabtherm {

/// Energy-resolved flux J_E = √E I_E in units of the incident flux.
struct SpectralFlux {
  std::vector<double> elastic;    ///< n_z, coefficient of δ(E - E_i)
  std::vector<double> continuum;  ///< n_z x n_e
  std::size_t n_e = 0;
};

SpectralFlux spectral_flux(const SpectralField& field, const EnergyGrid& egrid);

struct FluxProfile {
  std::vector<double> z;
  std::vector<double> j_total;
  std::vector<double> j_el;
  std::vector<double> j_inel;
  std::vector<double> mb_dev;  ///< NaN where the inelastic flux vanishes
};

/// Elastic/inelastic decomposition of the total flux at every depth node.
/// mb_dev is filled via mb_deviation.
FluxProfile flux_split(const SpectralField& field, const EnergyGrid& egrid, const DepthGrid& dgrid);

/// Maxwell-Boltzmann flux distribution 4E exp(-2E/E_i)/E_i², mean energy E_i.
double mb_flux_distribution(double e, double e_i);

/// Inelastic spectrum at depth node j normalised to unit energy integral.
/// Empty when the inelastic flux vanishes there.
std::vector<double> normalized_inelastic_spectrum(const SpectralField& field, const EnergyGrid& egrid,
                                                  std::size_t j);

/// √(E_i Σ_m w_m (Ĵ(E_m) - J^MB(E_m))²) for a unit-normalised spectrum Ĵ.
double spectrum_mb_distance(const std::vector<double>& normalized, const EnergyGrid& egrid);

/// Deviation of the normalised inelastic spectrum at depth node j from the
/// Maxwell-Boltzmann flux distribution; std::nullopt when there is no
/// inelastic flux at that depth.
std::optional<double> mb_deviation(const SpectralField& field, const EnergyGrid& egrid, std::size_t j);

/// Normalised flux spectrum left by a single collision of two particles at
/// E_i: √E f̂(E_i, E_i; E) on the grid, unit energy integral.
std::vector<double> single_collision_spectrum(const EnergyGrid& egrid);

ConservationReport conservation_audit(const SpectralField& field, const CollisionTables& tables,
                                      const EnergyGrid& egrid, unsigned threads = 1);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
  bool boundary_dominated = false;  ///< slab too thin for a diffusive interior
};

/// Least-squares affine fit of j_total over the interior window [0.1 b, 0.9 b].
LinearFit linear_fit_interior(const FluxProfile& profile, double b);

/// Smallest depth z* such that j_inel > j_el at every node at or beyond it.
/// std::nullopt if the inelastic flux never takes over.
std::optional<double> crossover_depth(const FluxProfile& profile);

/// Transmitted and reflected fractions of the incident flux for the elastic
/// (linear) density, from the per-node escape probabilities plus the
/// uncollided beam.
struct LeakageSplit {
  double transmitted = 0.0;
  double reflected = 0.0;
};

LeakageSplit leakage(const std::vector<double>& density, const PropagatorMatrix& propagator,
                     const DepthGrid& dgrid);

}  // namespace slabtherm
