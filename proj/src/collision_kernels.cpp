#include "slabtherm/collision_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slabtherm {

double kernel_f(double e1, double e2, double e, double alpha) {
  if (!(e1 > 0.0) || !(e2 > 0.0)) throw std::domain_error("kernel_f: pair energies must be positive");
  const double lo = std::min(e1, e2);
  const double hi = std::max(e1, e2);
  const double total = lo + hi;
  if (!(e > 0.0) || e >= total) return 0.0;
  double shape;
  if (e < lo) {
    shape = std::sqrt(e);
  } else if (e <= hi) {
    shape = std::sqrt(lo);
  } else {
    shape = std::sqrt(total - e);
  }
  return alpha * shape / std::sqrt(lo * hi * e);
}

namespace {

// Shared accumulation loop so that table-backed and direct builds of ĝ agree
// bitwise. `f_at(m)` returns f̂(E_a, E_b; E_m).
template <class FAt>
double gain_sum(const EnergyGrid& egrid, std::size_t a, std::size_t b, FAt&& f_at, bool energy) {
  const std::size_t pair_sum = a + b + 2;
  const std::size_t m_end = std::min(egrid.size(), pair_sum - 1);
  double acc = 0.0;
  for (std::size_t m = 0; m < m_end; ++m) {
    double term = egrid.weights[m] * gain_weight_factor(m + 1, pair_sum) * egrid.sqrt_nodes[m] * f_at(m);
    if (energy) term *= 2.0 * egrid.nodes[m];
    acc += term;
  }
  return acc;
}

void fill_elastic_rows(CollisionTables& t, const EnergyGrid& egrid) {
  const std::size_t n = egrid.size();
  const std::size_t i = egrid.idx_ei;
  t.g_n_ei.resize(n);
  t.g_ei_m.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    t.g_n_ei[k] = t.g_cc[k * n + i];
    t.g_ei_m[k] = t.g_cc[i * n + k];
  }
  t.g_ei_ei = t.g_cc[i * n + i];
}

}  // namespace

FTables build_f_tables(const EnergyGrid& egrid, double e_i, double alpha) {
  const std::size_t n = egrid.size();
  if (egrid.e_i() != e_i) throw std::invalid_argument("build_f_tables: e_i is not the grid's incident node");
  FTables t;
  t.n = n;
  t.alpha = alpha;
  t.f_cc.assign(n * n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      double* row_ab = t.f_cc.data() + (a * n + b) * n;
      double* row_ba = t.f_cc.data() + (b * n + a) * n;
      const std::size_t m_end = std::min(n, a + b + 1);
      for (std::size_t m = 0; m < m_end; ++m) {
        double v = kernel_f(egrid.nodes[a], egrid.nodes[b], egrid.nodes[m], alpha);
        row_ab[m] = v;
        row_ba[m] = v;
      }
    }
  }
  const std::size_t i = egrid.idx_ei;
  t.f_ei_ei.assign(t.f_cc.begin() + static_cast<std::ptrdiff_t>((i * n + i) * n),
                   t.f_cc.begin() + static_cast<std::ptrdiff_t>((i * n + i + 1) * n));
  t.f_n_ei.resize(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t m = 0; m < n; ++m) t.f_n_ei[a * n + m] = t.at(a, i, m);
  return t;
}

CollisionTables build_g_from_sum_rule(FTables f, const EnergyGrid& egrid) {
  const std::size_t n = egrid.size();
  if (f.n != n) throw std::invalid_argument("build_g_from_sum_rule: table/grid size mismatch");
  CollisionTables t;
  t.n = n;
  t.idx_ei = egrid.idx_ei;
  t.alpha = f.alpha;
  t.g_cc.resize(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double* row = f.f_cc.data() + (a * n + b) * n;
      double s = gain_sum(egrid, a, b, [row](std::size_t m) { return row[m]; }, false);
      t.g_cc[a * n + b] = -s / egrid.sqrt_nodes[b];
    }
  }
  t.f_ei_ei = f.f_ei_ei;
  t.f_n_ei = f.f_n_ei;
  fill_elastic_rows(t, egrid);
  t.dense = std::move(f);
  return t;
}

CollisionTables build_collision_tables(const EnergyGrid& egrid, double alpha) {
  const std::size_t n = egrid.size();
  const std::size_t i = egrid.idx_ei;
  CollisionTables t;
  t.n = n;
  t.idx_ei = i;
  t.alpha = alpha;
  t.g_cc.resize(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      double s = gain_number_sum(egrid, a, b, alpha);
      t.g_cc[a * n + b] = -s / egrid.sqrt_nodes[b];
      t.g_cc[b * n + a] = -s / egrid.sqrt_nodes[a];
    }
  }
  t.f_ei_ei.resize(n);
  t.f_n_ei.resize(n * n);
  for (std::size_t m = 0; m < n; ++m) t.f_ei_ei[m] = kernel_f(egrid.e_i(), egrid.e_i(), egrid.nodes[m], alpha);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t m = 0; m < n; ++m)
      t.f_n_ei[a * n + m] = kernel_f(egrid.nodes[a], egrid.e_i(), egrid.nodes[m], alpha);
  fill_elastic_rows(t, egrid);
  return t;
}

double gain_number_sum(const EnergyGrid& egrid, std::size_t a, std::size_t b, double alpha) {
  const double ea = egrid.nodes[a];
  const double eb = egrid.nodes[b];
  return gain_sum(egrid, a, b, [&](std::size_t m) { return kernel_f(ea, eb, egrid.nodes[m], alpha); }, false);
}

double gain_energy_sum(const EnergyGrid& egrid, std::size_t a, std::size_t b, double alpha) {
  const double ea = egrid.nodes[a];
  const double eb = egrid.nodes[b];
  return gain_sum(egrid, a, b, [&](std::size_t m) { return kernel_f(ea, eb, egrid.nodes[m], alpha); }, true);
}

double g_from_energy_rule(const EnergyGrid& egrid, std::size_t a, std::size_t b, double alpha) {
  const double s = gain_energy_sum(egrid, a, b, alpha);
  return -s / ((egrid.nodes[a] + egrid.nodes[b]) * egrid.sqrt_nodes[b]);
}

double continuum_g(double e1, double e2, double alpha) {
  const double lo = std::min(e1, e2);
  const double hi = std::max(e1, e2);
  return -alpha * std::sqrt(lo) * (hi + lo / 3.0) / (std::sqrt(e1) * e2);
}

}  // namespace slabtherm
