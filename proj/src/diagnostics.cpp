#include "slabtherm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "slabtherm/parallel.hpp"

namespace slabtherm {

SpectralFlux spectral_flux(const SpectralField& field, const EnergyGrid& egrid) {
  SpectralFlux out;
  out.n_e = field.n_e;
  out.elastic.resize(field.n_z);
  out.continuum.resize(field.continuum.size());
  const double sqrt_ei = std::sqrt(egrid.e_i());
  for (std::size_t j = 0; j < field.n_z; ++j) {
    out.elastic[j] = sqrt_ei * field.elastic[j];
    for (std::size_t m = 0; m < field.n_e; ++m)
      out.continuum[j * field.n_e + m] = egrid.sqrt_nodes[m] * field.at(j, m);
  }
  return out;
}

double mb_flux_distribution(double e, double e_i) { return 4.0 * e * std::exp(-2.0 * e / e_i) / (e_i * e_i); }

namespace {

double inelastic_flux(const SpectralField& field, const EnergyGrid& egrid, std::size_t j) {
  double s = 0.0;
  for (std::size_t m = 0; m < field.n_e; ++m) s += egrid.weights[m] * egrid.sqrt_nodes[m] * field.at(j, m);
  return s;
}

}  // namespace

std::vector<double> normalized_inelastic_spectrum(const SpectralField& field, const EnergyGrid& egrid,
                                                  std::size_t j) {
  const double total = inelastic_flux(field, egrid, j);
  if (!(total > 0.0)) return {};
  std::vector<double> out(field.n_e);
  for (std::size_t m = 0; m < field.n_e; ++m) out[m] = egrid.sqrt_nodes[m] * field.at(j, m) / total;
  return out;
}

double spectrum_mb_distance(const std::vector<double>& normalized, const EnergyGrid& egrid) {
  double s = 0.0;
  for (std::size_t m = 0; m < normalized.size(); ++m) {
    double d = normalized[m] - mb_flux_distribution(egrid.nodes[m], egrid.e_i());
    s += egrid.weights[m] * d * d;
  }
  return std::sqrt(egrid.e_i() * s);
}

std::optional<double> mb_deviation(const SpectralField& field, const EnergyGrid& egrid, std::size_t j) {
  auto spec = normalized_inelastic_spectrum(field, egrid, j);
  if (spec.empty()) return std::nullopt;
  return spectrum_mb_distance(spec, egrid);
}

std::vector<double> single_collision_spectrum(const EnergyGrid& egrid) {
  std::vector<double> out(egrid.size());
  double total = 0.0;
  for (std::size_t m = 0; m < egrid.size(); ++m) {
    out[m] = egrid.sqrt_nodes[m] * kernel_f(egrid.e_i(), egrid.e_i(), egrid.nodes[m], 1.0);
    total += egrid.weights[m] * out[m];
  }
  for (double& v : out) v /= total;
  return out;
}

FluxProfile flux_split(const SpectralField& field, const EnergyGrid& egrid, const DepthGrid& dgrid) {
  FluxProfile p;
  p.z = dgrid.nodes;
  const std::size_t nz = field.n_z;
  p.j_el.resize(nz);
  p.j_inel.resize(nz);
  p.j_total.resize(nz);
  p.mb_dev.resize(nz);
  const double sqrt_ei = std::sqrt(egrid.e_i());
  for (std::size_t j = 0; j < nz; ++j) {
    p.j_el[j] = sqrt_ei * field.elastic[j];
    p.j_inel[j] = inelastic_flux(field, egrid, j);
    p.j_total[j] = p.j_el[j] + p.j_inel[j];
    p.mb_dev[j] = mb_deviation(field, egrid, j).value_or(std::numeric_limits<double>::quiet_NaN());
  }
  return p;
}

ConservationReport conservation_audit(const SpectralField& field, const CollisionTables& tables,
                                      const EnergyGrid& egrid, unsigned threads) {
  const std::size_t nz = field.n_z;
  const std::size_t ne = field.n_e;
  ConservationReport rep;
  rep.number_residual.assign(nz, 0.0);
  rep.energy_residual.assign(nz, 0.0);
  rep.number_absolute.assign(nz, 0.0);
  rep.energy_absolute.assign(nz, 0.0);
  std::vector<double> tail(nz, 0.0);

  const SpectralField gamma_all = collision_operator(field, tables, egrid, threads);
  const double ei = egrid.e_i();
  const double sqrt_ei = std::sqrt(ei);
  parallel_for_chunks(nz, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t j = lo; j < hi; ++j) {
      const double el = field.elastic[j];
      auto cont = field.row(j);
      const double gamma_el = gamma_all.elastic[j];
      auto gamma = gamma_all.row(j);

      // Loss rates set the scale the residuals are measured against.
      double el_loss = tables.g_ei_ei * el;
      for (std::size_t k = 0; k < ne; ++k) el_loss += egrid.weights[k] * tables.g_n_ei[k] * cont[k];
      double number_scale = sqrt_ei * std::abs(el * el_loss);
      double energy_scale = ei * number_scale;
      double number = sqrt_ei * gamma_el;
      double energy = ei * sqrt_ei * gamma_el;
      for (std::size_t m = 0; m < ne; ++m) {
        const double wm = egrid.weights[m] * egrid.sqrt_nodes[m];
        number += wm * gamma[m];
        energy += wm * egrid.nodes[m] * gamma[m];
        if (cont[m] != 0.0) {
          double loss = tables.g_ei_m[m] * el;
          for (std::size_t k = 0; k < ne; ++k) loss += egrid.weights[k] * tables.g(k, m) * cont[k];
          number_scale += wm * std::abs(cont[m] * loss);
          energy_scale += wm * egrid.nodes[m] * std::abs(cont[m] * loss);
        }
      }
      rep.number_absolute[j] = number;
      rep.energy_absolute[j] = energy;
      rep.number_residual[j] = number_scale > 0.0 ? std::abs(number) / number_scale : 0.0;
      rep.energy_residual[j] = energy_scale > 0.0 ? std::abs(energy) / energy_scale : 0.0;

      double total = 0.0;
      double top = 0.0;
      const std::size_t top_begin = ne - std::max<std::size_t>(1, ne / 10);
      for (std::size_t m = 0; m < ne; ++m) {
        double v = egrid.weights[m] * egrid.sqrt_nodes[m] * cont[m];
        total += v;
        if (m >= top_begin) top += v;
      }
      tail[j] = total > 0.0 ? top / total : 0.0;
    }
  });
  for (std::size_t j = 0; j < nz; ++j) {
    rep.max_number_residual = std::max(rep.max_number_residual, rep.number_residual[j]);
    rep.max_energy_residual = std::max(rep.max_energy_residual, rep.energy_residual[j]);
    rep.tail_mass = std::max(rep.tail_mass, tail[j]);
  }
  return rep;
}

LinearFit linear_fit_interior(const FluxProfile& profile, double b) {
  const double lo = 0.1 * b;
  const double hi = 0.9 * b;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < profile.z.size(); ++j) {
    const double z = profile.z[j];
    if (z < lo || z > hi) continue;
    const double y = profile.j_total[j];
    sx += z;
    sy += y;
    sxx += z * z;
    sxy += z * y;
    syy += y * y;
    ++n;
  }
  if (n < 3) throw std::invalid_argument("linear_fit_interior: fewer than 3 interior nodes");
  const double nn = static_cast<double>(n);
  const double cov = sxy - sx * sy / nn;
  const double varx = sxx - sx * sx / nn;
  const double vary = syy - sy * sy / nn;
  LinearFit fit;
  fit.points = n;
  fit.slope = cov / varx;
  fit.intercept = (sy - fit.slope * sx) / nn;
  fit.r2 = vary > 0.0 ? cov * cov / (varx * vary) : 1.0;
  fit.boundary_dominated = b < 10.0;
  return fit;
}

std::optional<double> crossover_depth(const FluxProfile& profile) {
  const std::size_t n = profile.z.size();
  if (n == 0 || !(profile.j_inel[n - 1] > profile.j_el[n - 1])) return std::nullopt;
  std::size_t i = n - 1;
  while (i > 0 && profile.j_inel[i - 1] > profile.j_el[i - 1]) --i;
  if (i == 0) return profile.z[0];
  // Linear interpolation of the sign change of j_inel - j_el.
  const double d0 = profile.j_inel[i - 1] - profile.j_el[i - 1];
  const double d1 = profile.j_inel[i] - profile.j_el[i];
  const double t = d0 / (d0 - d1);
  return profile.z[i - 1] + t * (profile.z[i] - profile.z[i - 1]);
}

LeakageSplit leakage(const std::vector<double>& density, const PropagatorMatrix& propagator,
                     const DepthGrid& dgrid) {
  LeakageSplit out;
  out.transmitted = std::exp(-dgrid.thickness());
  for (std::size_t j = 0; j < dgrid.size(); ++j) {
    out.transmitted += dgrid.width * density[j] * propagator.escape_back()[j];
    out.reflected += dgrid.width * density[j] * propagator.escape_front()[j];
  }
  return out;
}

}  // namespace slabtherm
