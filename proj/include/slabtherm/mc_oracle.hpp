#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace slabtherm {

/// Tally histogram. `counts` holds in-range samples only; `outside` counts
/// absorbed or out-of-range outcomes, so counts + outside == n_samples.
struct McHistogram {
  std::vector<double> bin_edges;
  std::vector<std::uint64_t> counts;
  std::uint64_t n_samples = 0;
  std::uint64_t outside = 0;
  std::uint64_t seed = 0;

  std::size_t bins() const { return counts.size(); }
  /// counts / (n_samples * bin width)
  std::vector<double> density() const;
  /// Binomial standard error of density().
  std::vector<double> density_error() const;
  bool operator==(const McHistogram&) const = default;
};

/// Histogram with `nbins` uniform bins on [lo, hi] and no tallies.
McHistogram make_histogram(double lo, double hi, std::size_t nbins, std::uint64_t seed = 0);

/// Samples drawn per random stream. Streams are seeded from (seed, stream
/// index), so results do not depend on how streams are spread over workers.
inline constexpr std::size_t kMcStreamBlock = 4096;

struct SlabWalkResult {
  McHistogram collisions;            ///< scattering events per depth bin; n_samples = walkers
  std::vector<double> density_error;  ///< batch-means standard error of the collision density
  std::uint64_t transmitted = 0;
  std::uint64_t reflected = 0;

  double transmitted_fraction() const;
  double reflected_fraction() const;
  double transmitted_error() const;
  double reflected_error() const;
  bool operator==(const SlabWalkResult&) const = default;
};

/// Random walk through a slab of optical thickness b: walkers enter at
/// z = 0 along +z, fly Exponential(1) paths, and re-emit isotropically in 3D
/// at every scattering until they leave through either face. The collision
/// density collisions.density() estimates the solver's elastic field.
SlabWalkResult mc_slab_walk(double b, std::uint64_t n_walkers, std::uint64_t seed, unsigned threads = 1,
                            std::size_t nbins = 50);

/// Outgoing energy of one partner after an s-wave collision of two
/// particles with energies e1, e2 and isotropic incoming directions. Pairs
/// are accepted with probability |k1 - k2| / (|k1| + |k2|), i.e. weighted by
/// their relative speed, as collision rates are. Histogram on [0, e1 + e2].
McHistogram mc_pair_collision(double e1, double e2, std::uint64_t n_samples, std::uint64_t seed,
                              unsigned threads = 1, std::size_t nbins = 100);

/// Bin probabilities of the normalised flux-weighted kernel √E f̂(e1, e2; E)
/// over the given edges, integrated from kernel_f with Gauss-Legendre
/// panels split at the kinks.
std::vector<double> kernel_bin_probabilities(double e1, double e2, std::span<const double> edges);

/// Multinomial sample of `n` draws from `probabilities` into a histogram
/// with the given edges. Used to check the comparison statistic itself.
McHistogram sample_histogram(std::span<const double> edges, std::span<const double> probabilities,
                             std::uint64_t n, std::uint64_t seed);

struct HistogramComparison {
  double max_abs_z = 0.0;
  double fraction_beyond_3sigma = 0.0;
  std::size_t bins_compared = 0;
};

/// Per-bin z-scores (c - N p) / √(N p (1 - p)) against the expected bin
/// probabilities. Bins with p == 0 and no counts are skipped; counts where
/// p == 0 give an infinite score. Throws std::invalid_argument for an empty
/// histogram or when `probabilities` does not cover the histogram support.
HistogramComparison compare_histogram_to_kernel(const McHistogram& hist, std::span<const double> probabilities);

}  // namespace slabtherm
