#include "slabtherm/mc_oracle.hpp"

#include <algorithm>
#include <bit>
#include <initializer_list>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "slabtherm/collision_kernels.hpp"
#include "slabtherm/parallel.hpp"

namespace slabtherm {

std::vector<double> McHistogram::density() const {
  std::vector<double> d(counts.size(), 0.0);
  if (n_samples == 0) return d;
  for (std::size_t k = 0; k < counts.size(); ++k)
    d[k] = static_cast<double>(counts[k]) / (static_cast<double>(n_samples) * (bin_edges[k + 1] - bin_edges[k]));
  return d;
}

std::vector<double> McHistogram::density_error() const {
  std::vector<double> e(counts.size(), 0.0);
  if (n_samples == 0) return e;
  const double n = static_cast<double>(n_samples);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double p = static_cast<double>(counts[k]) / n;
    e[k] = std::sqrt(p * (1.0 - p) / n) / (bin_edges[k + 1] - bin_edges[k]);
  }
  return e;
}

McHistogram make_histogram(double lo, double hi, std::size_t nbins, std::uint64_t seed) {
  if (nbins == 0 || !(hi > lo)) throw std::invalid_argument("make_histogram: need nbins >= 1 and hi > lo");
  McHistogram h;
  h.bin_edges.resize(nbins + 1);
  for (std::size_t k = 0; k <= nbins; ++k)
    h.bin_edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(nbins);
  h.bin_edges[nbins] = hi;
  h.counts.assign(nbins, 0);
  h.seed = seed;
  return h;
}

namespace {

// Independent engine per (seed, oracle, stream).
std::mt19937_64 stream_engine(std::uint64_t seed, std::uint32_t salt, std::uint64_t stream,
                              std::initializer_list<double> tags = {}) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), salt,
                                   static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  for (double t : tags) {
    const auto bits = std::bit_cast<std::uint64_t>(t);
    words.push_back(static_cast<std::uint32_t>(bits));
    words.push_back(static_cast<std::uint32_t>(bits >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

constexpr std::uint32_t kWalkSalt = 0x5EAB0001u;
constexpr std::uint32_t kPairSalt = 0x5EAB0002u;
constexpr std::uint32_t kSampleSalt = 0x5EAB0003u;

std::size_t bin_index(double x, double lo, double hi, std::size_t nbins) {
  auto k = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(nbins));
  return std::min(k, nbins - 1);
}

struct Vec3 {
  double x, y, z;
};

Vec3 isotropic(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double mu = 2.0 * u(rng) - 1.0;
  const double phi = 2.0 * std::numbers::pi * u(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
  return {s * std::cos(phi), s * std::sin(phi), mu};
}

double norm(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

}  // namespace

double SlabWalkResult::transmitted_fraction() const {
  return collisions.n_samples ? static_cast<double>(transmitted) / static_cast<double>(collisions.n_samples) : 0.0;
}

double SlabWalkResult::reflected_fraction() const {
  return collisions.n_samples ? static_cast<double>(reflected) / static_cast<double>(collisions.n_samples) : 0.0;
}

double SlabWalkResult::transmitted_error() const {
  const double p = transmitted_fraction();
  return collisions.n_samples ? std::sqrt(p * (1.0 - p) / static_cast<double>(collisions.n_samples)) : 0.0;
}

double SlabWalkResult::reflected_error() const {
  const double p = reflected_fraction();
  return collisions.n_samples ? std::sqrt(p * (1.0 - p) / static_cast<double>(collisions.n_samples)) : 0.0;
}

SlabWalkResult mc_slab_walk(double b, std::uint64_t n_walkers, std::uint64_t seed, unsigned threads,
                            std::size_t nbins) {
  if (!(b > 0.0)) throw std::invalid_argument("mc_slab_walk: b must be positive");
  if (n_walkers == 0) throw std::invalid_argument("mc_slab_walk: need at least one walker");
  const std::size_t streams = (n_walkers + kMcStreamBlock - 1) / kMcStreamBlock;

  struct Tally {
    std::vector<std::uint64_t> counts;
    std::uint64_t walkers = 0, transmitted = 0, reflected = 0;
  };
  std::vector<Tally> tallies(streams);
  parallel_for(streams, threads, [&](std::size_t s) {
    auto rng = stream_engine(seed, kWalkSalt, s);
    std::exponential_distribution<double> path(1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tally& t = tallies[s];
    t.counts.assign(nbins, 0);
    const std::uint64_t begin = s * kMcStreamBlock;
    t.walkers = std::min<std::uint64_t>(n_walkers, begin + kMcStreamBlock) - begin;
    for (std::uint64_t w = 0; w < t.walkers; ++w) {
      double z = 0.0;
      double mu = 1.0;
      for (;;) {
        z += mu * path(rng);
        if (z < 0.0) {
          ++t.reflected;
          break;
        }
        if (z > b) {
          ++t.transmitted;
          break;
        }
        ++t.counts[bin_index(z, 0.0, b, nbins)];
        mu = 2.0 * u(rng) - 1.0;
      }
    }
  });

  SlabWalkResult out;
  out.collisions = make_histogram(0.0, b, nbins, seed);
  out.collisions.n_samples = n_walkers;
  for (const Tally& t : tallies) {
    for (std::size_t k = 0; k < nbins; ++k) out.collisions.counts[k] += t.counts[k];
    out.transmitted += t.transmitted;
    out.reflected += t.reflected;
  }
  // Walkers leave through a face, never by absorption inside.
  out.collisions.outside = 0;

  // Batch means over streams: each stream's collision density is one
  // estimate, weighted by its walker count.
  const std::vector<double> mean = out.collisions.density();
  out.density_error.assign(nbins, 0.0);
  const double n = static_cast<double>(n_walkers);
  const double width = b / static_cast<double>(nbins);
  if (streams >= 2) {
    const double k = static_cast<double>(streams);
    for (const Tally& t : tallies) {
      const double share = static_cast<double>(t.walkers) / n;
      for (std::size_t bin = 0; bin < nbins; ++bin) {
        const double d = static_cast<double>(t.counts[bin]) / (static_cast<double>(t.walkers) * width);
        const double diff = share * (d - mean[bin]);
        out.density_error[bin] += diff * diff;
      }
    }
    for (double& e : out.density_error) e = std::sqrt(e * k / (k - 1.0));
  } else {
    for (std::size_t bin = 0; bin < nbins; ++bin)
      out.density_error[bin] = std::sqrt(static_cast<double>(out.collisions.counts[bin])) / (n * width);
  }
  return out;
}

McHistogram mc_pair_collision(double e1, double e2, std::uint64_t n_samples, std::uint64_t seed, unsigned threads,
                              std::size_t nbins) {
  if (!(e1 > 0.0) || !(e2 > 0.0)) throw std::invalid_argument("mc_pair_collision: energies must be positive");
  const double total = e1 + e2;
  const double k1 = std::sqrt(e1);
  const double k2 = std::sqrt(e2);
  const std::size_t streams = (n_samples + kMcStreamBlock - 1) / kMcStreamBlock;
  std::vector<std::vector<std::uint64_t>> tallies(streams);

  parallel_for(streams, threads, [&](std::size_t s) {
    // The pair energies are part of the stream key: the sampler is scale
    // invariant, so pairs like (1, 4) and (0.5, 2) would otherwise repeat draws.
    auto rng = stream_engine(seed, kPairSalt, s, {e1, e2});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto& counts = tallies[s];
    counts.assign(nbins, 0);
    const std::uint64_t begin = s * kMcStreamBlock;
    const std::uint64_t want = std::min<std::uint64_t>(n_samples, begin + kMcStreamBlock) - begin;
    for (std::uint64_t got = 0; got < want;) {
      const Vec3 n1 = isotropic(rng);
      const Vec3 n2 = isotropic(rng);
      const Vec3 p1{k1 * n1.x, k1 * n1.y, k1 * n1.z};
      const Vec3 p2{k2 * n2.x, k2 * n2.y, k2 * n2.z};
      const Vec3 rel{p1.x - p2.x, p1.y - p2.y, p1.z - p2.z};
      const double speed = norm(rel);
      if (u(rng) * (k1 + k2) >= speed) continue;
      // Relative momentum q = (p1 - p2)/2 keeps its length and turns isotropically.
      const double q = 0.5 * speed;
      const Vec3 nq = isotropic(rng);
      const Vec3 p3{0.5 * (p1.x + p2.x) + q * nq.x, 0.5 * (p1.y + p2.y) + q * nq.y,
                    0.5 * (p1.z + p2.z) + q * nq.z};
      const double e3 = p3.x * p3.x + p3.y * p3.y + p3.z * p3.z;
      ++counts[bin_index(std::min(e3, total), 0.0, total, nbins)];
      ++got;
    }
  });

  McHistogram h = make_histogram(0.0, total, nbins, seed);
  h.n_samples = n_samples;
  for (const auto& c : tallies)
    for (std::size_t k = 0; k < nbins; ++k) h.counts[k] += c[k];
  return h;
}

namespace {

// ∫_a^c √E f̂(e1, e2; E) dE with the kinks of f̂ as panel breaks.
double flux_kernel_integral(double e1, double e2, double a, double c) {
  const double lo = std::min(e1, e2);
  const double hi = std::max(e1, e2);
  a = std::max(a, 0.0);
  c = std::min(c, e1 + e2);
  if (!(c > a)) return 0.0;
  std::vector<double> cuts{a};
  for (double k : {lo, hi})
    if (k > a && k < c) cuts.push_back(k);
  cuts.push_back(c);
  const double top = e1 + e2;
  auto h = [&](double e) { return e > 0.0 ? std::sqrt(e) * kernel_f(e1, e2, e, 1.0) : 0.0; };
  using Rule = boost::math::quadrature::gauss<double, 15>;
  constexpr int kPanels = 4;
  auto panels = [](auto&& fn, double x0, double x1) {
    const double step = (x1 - x0) / kPanels;
    double s = 0.0;
    for (int p = 0; p < kPanels; ++p) s += Rule::integrate(fn, x0 + p * step, x0 + (p + 1) * step);
    return s;
  };
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double x0 = cuts[i];
    const double x1 = cuts[i + 1];
    // The integrand has square-root endpoints at 0 and e1 + e2; E = t²
    // (or e1 + e2 - t²) makes it smooth there.
    if (x0 == 0.0) {
      sum += panels([&](double t) { return 2.0 * t * h(t * t); }, 0.0, std::sqrt(x1));
    } else if (x1 == top) {
      sum += panels([&](double t) { return 2.0 * t * h(top - t * t); }, 0.0, std::sqrt(top - x0));
    } else {
      sum += panels(h, x0, x1);
    }
  }
  return sum;
}

}  // namespace

std::vector<double> kernel_bin_probabilities(double e1, double e2, std::span<const double> edges) {
  if (!(e1 > 0.0) || !(e2 > 0.0)) throw std::invalid_argument("kernel_bin_probabilities: energies must be positive");
  if (edges.size() < 2) throw std::invalid_argument("kernel_bin_probabilities: need at least one bin");
  const double total = flux_kernel_integral(e1, e2, 0.0, e1 + e2);
  std::vector<double> p(edges.size() - 1);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) p[k] = flux_kernel_integral(e1, e2, edges[k], edges[k + 1]) / total;
  return p;
}

McHistogram sample_histogram(std::span<const double> edges, std::span<const double> probabilities, std::uint64_t n,
                             std::uint64_t seed) {
  if (edges.size() != probabilities.size() + 1) throw std::invalid_argument("sample_histogram: shape mismatch");
  McHistogram h;
  h.bin_edges.assign(edges.begin(), edges.end());
  h.counts.assign(probabilities.size(), 0);
  h.n_samples = n;
  h.seed = seed;
  auto rng = stream_engine(seed, kSampleSalt, 0);
  std::discrete_distribution<std::size_t> pick(probabilities.begin(), probabilities.end());
  for (std::uint64_t i = 0; i < n; ++i) ++h.counts[pick(rng)];
  return h;
}

HistogramComparison compare_histogram_to_kernel(const McHistogram& hist, std::span<const double> probabilities) {
  const std::uint64_t n = std::accumulate(hist.counts.begin(), hist.counts.end(), std::uint64_t{0});
  if (hist.counts.empty() || n == 0) throw std::invalid_argument("compare_histogram_to_kernel: empty histogram");
  if (probabilities.size() != hist.counts.size())
    throw std::invalid_argument("compare_histogram_to_kernel: support mismatch (bin count)");
  const double mass = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::invalid_argument("compare_histogram_to_kernel: support mismatch (reference mass outside the bins)");

  HistogramComparison out;
  std::size_t beyond = 0;
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    const double p = probabilities[k];
    const double c = static_cast<double>(hist.counts[k]);
    double z;
    if (p <= 0.0) {
      if (c == 0.0) continue;
      z = std::numeric_limits<double>::infinity();
    } else {
      z = (c - nn * p) / std::sqrt(nn * p * (1.0 - p));
    }
    ++out.bins_compared;
    out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
    if (std::abs(z) > 3.0) ++beyond;
  }
  out.fraction_beyond_3sigma =
      out.bins_compared ? static_cast<double>(beyond) / static_cast<double>(out.bins_compared) : 0.0;
  return out;
}

}  // namespace slabtherm
