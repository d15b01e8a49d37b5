#include "doctest.h"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "slabtherm/diagnostics.hpp"

using namespace slabtherm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Continuum holding the Maxwell-Boltzmann flux: I = J / √E.
SpectralField mb_field(const EnergyGrid& g, std::size_t nz, double scale = 1.0) {
  SpectralField f(nz, g.size());
  for (std::size_t j = 0; j < nz; ++j)
    for (std::size_t m = 0; m < g.size(); ++m)
      f.at(j, m) = scale * mb_flux_distribution(g.nodes[m], 1.0) / g.sqrt_nodes[m];
  return f;
}

FluxProfile synthetic_profile(std::vector<double> z, std::vector<double> el, std::vector<double> inel) {
  FluxProfile p;
  p.z = std::move(z);
  p.j_el = std::move(el);
  p.j_inel = std::move(inel);
  for (std::size_t j = 0; j < p.z.size(); ++j) p.j_total.push_back(p.j_el[j] + p.j_inel[j]);
  p.mb_dev.assign(p.z.size(), 0.0);
  return p;
}

}  // namespace

TEST_CASE("Maxwell-Boltzmann flux distribution") {
  boost::math::quadrature::exp_sinh<double> q;
  const double norm = q.integrate([](double e) { return mb_flux_distribution(e, 1.0); }, 0.0, kInf);
  const double mean = q.integrate([](double e) { return e * mb_flux_distribution(e, 1.0); }, 0.0, kInf);
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
  // Mode at E_i / 2 with value 2/(e E_i).
  CHECK(mb_flux_distribution(0.5, 1.0) == doctest::Approx(2.0 / std::numbers::e).epsilon(1e-15));
  CHECK(mb_flux_distribution(0.5 - 1e-4, 1.0) < mb_flux_distribution(0.5, 1.0));
  CHECK(mb_flux_distribution(0.5 + 1e-4, 1.0) < mb_flux_distribution(0.5, 1.0));
  // Scaling with a different incident energy keeps unit norm and mean E_i.
  const double mean2 = q.integrate([](double e) { return e * mb_flux_distribution(e, 2.0); }, 0.0, kInf);
  CHECK(mean2 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("spectral flux") {
  const EnergyGrid g = build_energy_grid(6.0, 240, 1.0);
  SpectralField f = mb_field(g, 2, 3.0);
  f.elastic = {1.0, 0.25};
  const SpectralFlux j = spectral_flux(f, g);
  CHECK(j.elastic[0] == 1.0);
  CHECK(j.elastic[1] == 0.25);
  for (std::size_t m = 0; m < g.size(); ++m)
    CHECK(j.continuum[m] == doctest::Approx(3.0 * mb_flux_distribution(g.nodes[m], 1.0)).epsilon(1e-14));
}

TEST_CASE("flux split is additive and vanishes without collisions") {
  const EnergyGrid g = build_energy_grid(4.0, 40, 1.0);
  const DepthGrid d = build_depth_grid(3.0, 6);
  SpectralField f = mb_field(g, 6, 0.1);
  for (std::size_t j = 0; j < 6; ++j) f.elastic[j] = 1.0 / (1.0 + j);
  const FluxProfile p = flux_split(f, g, d);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(p.j_total[j] == p.j_el[j] + p.j_inel[j]);
    CHECK(p.j_el[j] == f.elastic[j]);
    CHECK(p.j_inel[j] > 0.0);
  }

  SpectralField linear(6, g.size());
  linear.elastic.assign(6, 0.5);
  const FluxProfile q = flux_split(linear, g, d);
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(q.j_inel[j] == 0.0);
    CHECK(std::isnan(q.mb_dev[j]));
  }
}

TEST_CASE("mb deviation") {
  const EnergyGrid g = build_energy_grid(6.0, 240, 1.0);
  const SpectralField f = mb_field(g, 1, 7.0);
  const auto dev = mb_deviation(f, g, 0);
  REQUIRE(dev.has_value());
  // Only the flux beyond e_max and O(Δ²) quadrature error remain.
  CHECK(*dev < 2e-4);
  // Without truncation the remainder is second order in the spacing.
  double previous = 0.0;
  for (std::size_t n_e : {480u, 960u, 1920u}) {
    const EnergyGrid wide = build_energy_grid(12.0, n_e, 1.0);
    const double d = *mb_deviation(mb_field(wide, 1), wide, 0);
    CHECK(d < 0.5 * wide.spacing * wide.spacing);
    if (previous > 0.0) CHECK(previous / d == doctest::Approx(4.0).epsilon(0.1));
    previous = d;
  }

  const SpectralField empty(1, g.size());
  CHECK_FALSE(mb_deviation(empty, g, 0).has_value());

  const auto single = single_collision_spectrum(g);
  double norm = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) norm += g.weights[m] * single[m];
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-14));
  const double single_dev = spectrum_mb_distance(single, g);
  CHECK(single_dev > 0.1);
  // Shape √E below E_i and √(2 - E) above; ∫ = 4/3 before normalisation.
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double e = g.nodes[m];
    const double shape = e < 1.0 ? std::sqrt(e) : (e < 2.0 ? std::sqrt(2.0 - e) : 0.0);
    CHECK(single[m] == doctest::Approx(0.75 * shape).epsilon(2e-3));
  }
  CHECK(single[g.idx_ei - 10] / single[g.idx_ei + 10] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalised inelastic spectrum") {
  const EnergyGrid g = build_energy_grid(6.0, 240, 1.0);
  const SpectralField f = mb_field(g, 3, 0.02);
  const auto spec = normalized_inelastic_spectrum(f, g, 1);
  double norm = 0.0, mean = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    norm += g.weights[m] * spec[m];
    mean += g.weights[m] * g.nodes[m] * spec[m];
  }
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("interior affine fit") {
  FluxProfile p;
  for (int j = 0; j < 100; ++j) {
    const double z = 0.5 * (j + 0.5);
    p.z.push_back(z);
    p.j_total.push_back(3.0 - 0.05 * z);
  }
  const LinearFit fit = linear_fit_interior(p, 50.0);
  CHECK(fit.slope == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.points == 80);
  CHECK_FALSE(fit.boundary_dominated);

  FluxProfile thin;
  for (int j = 0; j < 20; ++j) {
    thin.z.push_back(0.1 * (j + 0.5));
    thin.j_total.push_back(1.0 - 0.3 * thin.z.back());
  }
  CHECK(linear_fit_interior(thin, 2.0).boundary_dominated);

  FluxProfile sparse;
  sparse.z = {0.5, 1.5};
  sparse.j_total = {1.0, 0.5};
  CHECK_THROWS_AS(linear_fit_interior(sparse, 2.0), std::invalid_argument);
}

TEST_CASE("crossover depth") {
  const auto p = synthetic_profile({0.5, 1.5, 2.5, 3.5}, {1.0, 0.6, 0.3, 0.1}, {0.0, 0.4, 0.5, 0.6});
  const auto z = crossover_depth(p);
  REQUIRE(z.has_value());
  // j_inel - j_el: -0.2 at 1.5, +0.2 at 2.5.
  CHECK(*z == doctest::Approx(2.0).epsilon(1e-14));

  CHECK_FALSE(crossover_depth(synthetic_profile({0.5, 1.5}, {1.0, 0.9}, {0.1, 0.2})).has_value());
  // A dip back below j_el moves z* past it.
  const auto dip = synthetic_profile({0.5, 1.5, 2.5, 3.5}, {0.1, 0.5, 0.3, 0.1}, {0.5, 0.4, 0.5, 0.6});
  CHECK(*crossover_depth(dip) > 1.5);
  const auto everywhere = synthetic_profile({0.5, 1.5}, {0.1, 0.1}, {0.5, 0.6});
  CHECK(*crossover_depth(everywhere) == 0.5);
}

TEST_CASE("linear leakage conserves the sampled source") {
  for (double b : {2.0, 10.0, 50.0}) {
    const Scenario sc = build_scenario({{"b", b}, {"alpha", 0.0}, {"n_z", 5.0 * b}}).scenario;
    const TransportSystem sys = build_transport_system(sc);
    const SolveResult r = solve_linear(sys, controls_from(sc));
    REQUIRE(r.converged);
    const LeakageSplit leak = leakage(r.field.elastic, sys.propagator, sys.dgrid);
    CAPTURE(b);
    // Without absorption everything injected leaves: the ballistic part plus
    // h Σ e^{-z_j}, the midpoint sum of the source, which is (h/2)/sinh(h/2)
    // times its exact integral.
    const double h = sys.dgrid.width;
    const double injected = std::exp(-b) + (1.0 - std::exp(-b)) * (0.5 * h) / std::sinh(0.5 * h);
    CHECK(leak.transmitted + leak.reflected == doctest::Approx(injected).epsilon(1e-9));
    CHECK(leak.transmitted + leak.reflected == doctest::Approx(1.0).epsilon(h * h / 20.0));
    CHECK(leak.transmitted > 0.0);
    CHECK(leak.reflected > leak.transmitted);
  }
}

TEST_CASE("conservation audit is independent of the worker count") {
  const EnergyGrid g = build_energy_grid(6.0, 120, 1.0);
  const CollisionTables t = build_collision_tables(g, 0.004);
  SpectralField f = mb_field(g, 40, 0.3);
  for (std::size_t j = 0; j < 40; ++j) f.elastic[j] = std::exp(-0.1 * j);
  const ConservationReport a = conservation_audit(f, t, g, 1);
  const ConservationReport b = conservation_audit(f, t, g, 3);
  CHECK(a.number_residual == b.number_residual);
  CHECK(a.energy_residual == b.energy_residual);
  CHECK(a.tail_mass == b.tail_mass);
  CHECK(a.max_number_residual <= 1e-12);
  // The top 10% of a 6 E_i grid holds ∫_{5.4}^{6} J^MB dE of the MB flux.
  const double window = 11.8 * std::exp(-10.8) - 13.0 * std::exp(-12.0);
  CHECK(a.tail_mass == doctest::Approx(window).epsilon(0.02));
}
