#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slabtherm/scenario.hpp"

namespace slabtherm {

/// Exponential integral E_1(x) for x > 0. Throws std::domain_error otherwise.
double exp_integral_e1(double x);

/// Generalised exponential integral E_n(x), n >= 1, x >= 0 (x > 0 for n = 1).
double exp_integral(int n, double x);

/// Plane-integrated single-scattering kernel, (1/2) E_1(|dz|).
/// Log-singular at dz = 0; callers integrate over cells instead.
double milne_kernel(double dz);

/// ∫_0^x E_1(t) dt = 1 - E_2(x).
double milne_kernel_antiderivative(double x);

/// Dense depth-coupling matrix of the slab.
///
/// k(j, jp) is the probability that a particle emitted isotropically at the
/// centre of cell j has its next disorder collision inside cell jp. The
/// kernel only depends on |j - jp| so the matrix is symmetric Toeplitz.
class PropagatorMatrix {
 public:
  PropagatorMatrix() = default;
  explicit PropagatorMatrix(const DepthGrid& grid);

  std::size_t size() const { return n_; }
  double operator()(std::size_t j, std::size_t jp) const { return k_[j * n_ + jp]; }
  std::span<const double> row(std::size_t j) const { return {k_.data() + j * n_, n_}; }
  const std::vector<double>& row_sums() const { return row_sums_; }

  /// Per-node escape probabilities through the z = 0 and z = b faces.
  const std::vector<double>& escape_front() const { return escape_front_; }
  const std::vector<double>& escape_back() const { return escape_back_; }

  /// y = K x.
  void apply(std::span<const double> x, std::span<double> y) const;

  /// Y = K X for row-major X, Y of shape n x ncols, restricted to output rows
  /// [row_begin, row_end). Rounding depends on the block shape, so callers
  /// that need reproducibility split rows into fixed-size blocks.
  void apply_columns(std::span<const double> x, std::span<double> y, std::size_t ncols,
                     std::size_t row_begin, std::size_t row_end) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> k_;
  std::vector<double> row_sums_;
  std::vector<double> escape_front_;
  std::vector<double> escape_back_;
};

PropagatorMatrix build_propagator_matrix(const DepthGrid& grid);

/// Uncollided first-collision density e^{-z_j} of the normally incident
/// beam. It feeds the elastic line only and does not depend on alpha.
std::vector<double> ballistic_source(const DepthGrid& dgrid, const EnergyGrid& egrid);

}  // namespace slabtherm
