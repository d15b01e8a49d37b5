#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "slabtherm/collision_kernels.hpp"
#include "slabtherm/propagator.hpp"
#include "slabtherm/scenario.hpp"

namespace slabtherm {

/// Spectral density I_E(z) on the grids: the coefficient of δ(E - E_i) per
/// depth node, plus the inelastic continuum per (depth, energy) node.
struct SpectralField {
  std::size_t n_z = 0;
  std::size_t n_e = 0;
  std::vector<double> elastic;    ///< n_z
  std::vector<double> continuum;  ///< row-major n_z x n_e

  SpectralField() = default;
  SpectralField(std::size_t nz, std::size_t ne) : n_z(nz), n_e(ne), elastic(nz, 0.0), continuum(nz * ne, 0.0) {}

  std::span<double> row(std::size_t j) { return {continuum.data() + j * n_e, n_e}; }
  std::span<const double> row(std::size_t j) const { return {continuum.data() + j * n_e, n_e}; }
  double& at(std::size_t j, std::size_t m) { return continuum[j * n_e + m]; }
  double at(std::size_t j, std::size_t m) const { return continuum[j * n_e + m]; }

  double sup_norm() const;
  bool operator==(const SpectralField&) const = default;
};

/// Per-depth collision residuals and bookkeeping.
struct ConservationReport {
  std::vector<double> number_residual;  ///< relative to the local gain/loss scale
  std::vector<double> energy_residual;  ///< relative to the local gain/loss scale
  std::vector<double> number_absolute;
  std::vector<double> energy_absolute;
  double max_number_residual = 0.0;
  double max_energy_residual = 0.0;
  double max_clamp = 0.0;
  double tail_mass = 0.0;  ///< inelastic flux in the top 10% of energy nodes / total
};

/// Depth nodes are processed in blocks of this many rows. The block layout
/// is fixed by n_z alone, which keeps every sweep bitwise reproducible for
/// any worker count.
inline constexpr std::size_t kDepthBlock = 16;

/// Bilinear collision operator Γ[I] assembled from CollisionTables.
///
/// The continuum–continuum gain Σ_n Σ_p w_n w_p f̂(E_n,E_p;E_m) Ĩ_n Ĩ_p is
/// evaluated in O(n_e²) per depth by splitting the pair sum into the three
/// branches of f̂ (prefix sums for the two lower branches, an incrementally
/// grown self-convolution for the upper one). Loss and elastic-partner
/// terms are one dense product per depth block.
class CollisionOperator {
 public:
  CollisionOperator(const CollisionTables& tables, const EnergyGrid& egrid);

  std::size_t size() const { return n_; }
  double alpha() const { return alpha_; }

  struct Workspace {
    std::vector<double> coupled;  ///< rows x (2 n_e + 1) block product
    std::vector<double> u, u_rev, tail, left, partial, conv;
  };
  Workspace make_workspace(std::size_t rows = kDepthBlock) const;

  /// Γ for `elastic.size()` consecutive depth nodes; `cont` and `gamma_cc`
  /// are row-major with n_e columns.
  void apply_rows(std::span<const double> elastic, std::span<const double> cont, std::span<double> gamma_el,
                  std::span<double> gamma_cc, Workspace& ws) const;

 private:
  void add_pair_gain(std::span<const double> cont, std::span<double> gamma_cc, Workspace& ws) const;

  std::size_t n_ = 0;
  std::size_t idx_ei_ = 0;
  double alpha_ = 0.0;
  double sqrt_spacing_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> inv_sqrt_e_;
  std::vector<double> sqrt_int_;      ///< √k for k = 0..2n
  double g_ei_ei_ = 0.0;
  std::vector<double> g_ei_m_;        ///< ĝ(E_i; E_m)
  std::vector<double> elastic_gain_;  ///< c_m f̂(E_i, E_i; E_m)
  /// Row-major n x (2n + 1): [w_n ĝ(E_n; E_m) | 2 w_n c_m f̂(E_n, E_i; E_m) | w_n ĝ(E_n; E_i)]
  std::vector<double> coupling_;
};

/// Γ for every depth node. Uses the structured operator.
SpectralField collision_operator(const SpectralField& field, const CollisionTables& tables, const EnergyGrid& egrid,
                                 unsigned threads = 1);

/// Reference Γ straight from the dense f̂ table (tables.dense must be set).
/// O(n_e³) per depth; meant for validation on small grids.
SpectralField collision_operator_dense(const SpectralField& field, const CollisionTables& tables,
                                       const EnergyGrid& egrid);

/// Everything the fixed-point map needs, built once per scenario.
struct TransportSystem {
  Scenario scenario;
  EnergyGrid egrid;
  DepthGrid dgrid;
  PropagatorMatrix propagator;
  std::vector<double> source;
  CollisionTables tables;
};

TransportSystem build_transport_system(const Scenario& scenario);

struct ClampStats {
  std::size_t events = 0;
  double max_magnitude = 0.0;
};

/// F[I] = source + K I + Γ[I], with negative entries clamped at zero.
/// `op == nullptr` drops the collision term (linear problem).
SpectralField transport_rhs(const SpectralField& field, const PropagatorMatrix& propagator,
                            std::span<const double> source, const CollisionOperator* op, unsigned threads = 1,
                            ClampStats* clamps = nullptr);

/// Convenience overload building the operator from tables.
SpectralField transport_rhs(const SpectralField& field, const PropagatorMatrix& propagator,
                            std::span<const double> source, const CollisionTables& tables,
                            const EnergyGrid& egrid, unsigned threads = 1, ClampStats* clamps = nullptr);

/// `source`: plain damped source iteration, one scattering order per sweep.
/// `accelerated`: the same fixed-point map and stopping test, with the
/// damped corrections Anderson-mixed over the last `anderson_depth` sweeps.
/// Without collisions the correction F[I] - I is first passed through the
/// exact linear transport inverse (I - K)^{-1}.
enum class Scheme { source, accelerated };

struct SolverControls {
  double damping = 1.0;
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  unsigned threads = 1;
  Scheme scheme = Scheme::accelerated;
  std::size_t anderson_depth = 16;
};

SolverControls controls_from(const Scenario& scenario, unsigned threads = 1);

struct SolveResult {
  SpectralField field;
  std::size_t iterations = 0;
  /// ‖F[I] - I‖_sup / ‖F[I]‖_sup per sweep. When converged, the returned
  /// field is the iterate whose residual met the tolerance.
  std::vector<double> residual_history;
  bool converged = false;
  ClampStats clamps;
  std::optional<ConservationReport> conservation;
};

/// Linear multiple-scattering solution (interactions off), iterated from
/// the zero field. The continuum stays identically zero.
SolveResult solve_linear(const TransportSystem& system, const SolverControls& controls);

/// Damped fixed-point iteration I <- (1-θ) I + θ F[I], started from the
/// linear solution. Non-convergence is reported through `converged`, never
/// thrown. For alpha == 0 this returns solve_linear's result unchanged.
SolveResult solve_stationary(const TransportSystem& system, const SolverControls& controls);

/// Same iteration from an explicit starting field.
SolveResult solve_from(const TransportSystem& system, const SolverControls& controls, SpectralField initial);

}  // namespace slabtherm
