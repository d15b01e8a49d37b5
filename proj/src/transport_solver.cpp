#include "slabtherm/transport_solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "slabtherm/diagnostics.hpp"
#include "slabtherm/parallel.hpp"

namespace slabtherm {

double SpectralField::sup_norm() const {
  double s = 0.0;
  for (double v : elastic) s = std::max(s, std::abs(v));
  for (double v : continuum) s = std::max(s, std::abs(v));
  return s;
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Eight independent partial sums; the combination order is fixed, so the
// result is the same on every call for the same inputs.
inline double dot_lanes(const double* a, const double* b, std::size_t len) {
  double acc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8)
    for (std::size_t l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  double s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
  for (; i < len; ++i) s += a[i] * b[i];
  return s;
}

std::size_t block_count(std::size_t nz) { return (nz + kDepthBlock - 1) / kDepthBlock; }

// Runs body(r0, r1, worker_state) over the fixed depth blocks.
template <class State, class MakeState, class Body>
void for_each_block(std::size_t nz, unsigned threads, MakeState&& make_state, Body&& body) {
  const std::size_t nb = block_count(nz);
  parallel_for_chunks(nb, threads, [&](std::size_t lo, std::size_t hi) {
    State state = make_state();
    for (std::size_t blk = lo; blk < hi; ++blk)
      body(blk * kDepthBlock, std::min(nz, (blk + 1) * kDepthBlock), state);
  });
}

}  // namespace

CollisionOperator::CollisionOperator(const CollisionTables& tables, const EnergyGrid& egrid)
    : n_(egrid.size()), idx_ei_(egrid.idx_ei), alpha_(tables.alpha), sqrt_spacing_(std::sqrt(egrid.spacing)) {
  if (tables.n != n_ || tables.idx_ei != idx_ei_)
    throw std::invalid_argument("CollisionOperator: tables do not match the energy grid");
  const std::size_t n = n_;
  const std::size_t ei_node = idx_ei_ + 1;
  const std::size_t cols = 2 * n + 1;
  weights_ = egrid.weights;
  inv_sqrt_e_.resize(n);
  for (std::size_t k = 0; k < n; ++k) inv_sqrt_e_[k] = 1.0 / egrid.sqrt_nodes[k];
  sqrt_int_.resize(2 * n + 2);
  for (std::size_t k = 0; k < sqrt_int_.size(); ++k) sqrt_int_[k] = std::sqrt(static_cast<double>(k));

  g_ei_ei_ = tables.g_ei_ei;
  g_ei_m_ = tables.g_ei_m;
  elastic_gain_.resize(n);
  for (std::size_t m = 0; m < n; ++m)
    elastic_gain_[m] = gain_weight_factor(m + 1, 2 * ei_node) * tables.f_ei_ei[m];
  coupling_.resize(n * cols);
  for (std::size_t k = 0; k < n; ++k) {
    double* row = coupling_.data() + k * cols;
    for (std::size_t m = 0; m < n; ++m) {
      row[m] = weights_[k] * tables.g(k, m);
      row[n + m] = 2.0 * weights_[k] * gain_weight_factor(m + 1, k + 1 + ei_node) * tables.f_n_ei[k * n + m];
    }
    row[2 * n] = weights_[k] * tables.g_n_ei[k];
  }
}

CollisionOperator::Workspace CollisionOperator::make_workspace(std::size_t rows) const {
  Workspace ws;
  ws.coupled.assign(rows * (2 * n_ + 1), 0.0);
  ws.u.assign(n_ + 1, 0.0);
  ws.u_rev.assign(n_ + 1, 0.0);
  ws.tail.assign(n_ + 1, 0.0);
  ws.left.assign(n_ + 1, 0.0);
  ws.partial.assign(2 * n_ + 2, 0.0);
  ws.conv.assign(2 * n_ + 2, 0.0);
  return ws;
}

void CollisionOperator::apply_rows(std::span<const double> elastic, std::span<const double> cont,
                                   std::span<double> gamma_el, std::span<double> gamma_cc, Workspace& ws) const {
  const std::size_t n = n_;
  const std::size_t rows = elastic.size();
  const std::size_t cols = 2 * n + 1;
  if (cont.size() != rows * n || gamma_el.size() != rows || gamma_cc.size() != rows * n)
    throw std::invalid_argument("CollisionOperator::apply_rows: shape mismatch");
  if (ws.coupled.size() < rows * cols) ws.coupled.resize(rows * cols);

  const auto ri = static_cast<Eigen::Index>(rows);
  const auto ni = static_cast<Eigen::Index>(n);
  const auto ci = static_cast<Eigen::Index>(cols);
  Eigen::Map<const RowMat> cmat(cont.data(), ri, ni);
  Eigen::Map<const RowMat> kmat(coupling_.data(), ni, ci);
  Eigen::Map<RowMat> out(ws.coupled.data(), ri, ci);
  out.noalias() = cmat * kmat;

  for (std::size_t r = 0; r < rows; ++r) {
    const double el = elastic[r];
    const double* c = cont.data() + r * n;
    const double* loss = ws.coupled.data() + r * cols;
    const double* mixed = loss + n;
    double* g = gamma_cc.data() + r * n;
    gamma_el[r] = el * (g_ei_ei_ * el + loss[2 * n]);
    const double el2 = el * el;
    bool any_cont = false;
    for (std::size_t m = 0; m < n; ++m) {
      g[m] = c[m] * (g_ei_m_[m] * el + loss[m]) + el2 * elastic_gain_[m] + el * mixed[m];
      any_cont = any_cont || c[m] != 0.0;
    }
    if (any_cont) add_pair_gain({c, n}, {g, n}, ws);
  }
}

void CollisionOperator::add_pair_gain(std::span<const double> cont, std::span<double> gamma_cc,
                                      Workspace& ws) const {
  // Node indices are 1-based here: E_k = k Δ. In index units the kernel
  // shape for the pair (n, p), lo = min, hi = max, is √m below lo, √lo up
  // to hi and √(n + p - m) above.
  const std::size_t n = n_;
  double* u = ws.u.data();
  double* ur = ws.u_rev.data();
  double* tail = ws.tail.data();
  double* left = ws.left.data();
  double* partial = ws.partial.data();
  double* conv = ws.conv.data();
  const double* sq = sqrt_int_.data();
  u[0] = 0.0;
  for (std::size_t k = 1; k <= n; ++k) u[k] = weights_[k - 1] * cont[k - 1] * inv_sqrt_e_[k - 1];
  // ur[i] = u[n - i], so u[t - q] = ur[n - t + q] runs forward with q.
  for (std::size_t i = 0; i <= n; ++i) ur[i] = u[n - i];
  tail[n] = 0.0;
  for (std::size_t k = n; k >= 1; --k) tail[k - 1] = tail[k] + u[k];
  left[0] = 0.0;
  for (std::size_t k = 1; k <= n; ++k) left[k] = left[k - 1] + u[k] * sq[k];
  // conv[t] = Σ_{q + p = t} u_q u_p for t = 2..n+1.
  for (std::size_t t = 2; t <= n + 1; ++t) {
    const std::size_t lo = t > n ? t - n : 1;
    const std::size_t hi = std::min(t - 1, n);
    conv[t] = dot_lanes(u + lo, ur + (n - t + lo), hi - lo + 1);
  }
  std::fill(partial, partial + 2 * n + 2, 0.0);

  const double prefactor = alpha_ * sqrt_spacing_;
  for (std::size_t m = 1; m <= n; ++m) {
    const double sm = sq[m];
    double s = sm * tail[m] * tail[m];
    s += 2.0 * left[m] * tail[m - 1] - sm * u[m] * u[m];
    // Pairs with both members below m whose upper branch reaches m.
    if (m >= 3) s += dot_lanes(partial + m + 1, sq + 1, m - 2);
    // Square-root endpoint correction for pairs whose support ends at m + 1.
    s += kSqrtEndpointCorrection * conv[m + 1];
    gamma_cc[m - 1] += prefactor * inv_sqrt_e_[m - 1] * s;

    const double um = u[m];
    if (um != 0.0) {
      const double two_um = 2.0 * um;
      double* pm = partial + m;
      for (std::size_t q = 1; q < m; ++q) pm[q] += two_um * u[q];
      partial[2 * m] += um * um;
    }
  }
}

SpectralField collision_operator(const SpectralField& field, const CollisionTables& tables, const EnergyGrid& egrid,
                                 unsigned threads) {
  if (field.n_e != egrid.size()) throw std::invalid_argument("collision_operator: field/grid shape mismatch");
  CollisionOperator op(tables, egrid);
  SpectralField out(field.n_z, field.n_e);
  const std::size_t ne = field.n_e;
  for_each_block<CollisionOperator::Workspace>(
      field.n_z, threads, [&] { return op.make_workspace(); },
      [&](std::size_t r0, std::size_t r1, CollisionOperator::Workspace& ws) {
        const std::size_t rows = r1 - r0;
        op.apply_rows({field.elastic.data() + r0, rows}, {field.continuum.data() + r0 * ne, rows * ne},
                      {out.elastic.data() + r0, rows}, {out.continuum.data() + r0 * ne, rows * ne}, ws);
      });
  return out;
}

SpectralField collision_operator_dense(const SpectralField& field, const CollisionTables& tables,
                                       const EnergyGrid& egrid) {
  if (!tables.dense) throw std::invalid_argument("collision_operator_dense: tables carry no dense f table");
  const std::size_t n = egrid.size();
  if (field.n_e != n || tables.n != n) throw std::invalid_argument("collision_operator_dense: shape mismatch");
  const FTables& f = *tables.dense;
  const std::size_t ei_node = egrid.idx_ei + 1;
  const auto& w = egrid.weights;
  SpectralField out(field.n_z, n);
  for (std::size_t j = 0; j < field.n_z; ++j) {
    const double el = field.elastic[j];
    auto cont = field.row(j);
    double el_loss = tables.g_ei_ei * el;
    for (std::size_t k = 0; k < n; ++k) el_loss += w[k] * tables.g_n_ei[k] * cont[k];
    out.elastic[j] = el * el_loss;
    for (std::size_t m = 0; m < n; ++m) {
      double loss = tables.g_ei_m[m] * el;
      for (std::size_t k = 0; k < n; ++k) loss += w[k] * tables.g(k, m) * cont[k];
      double gain = gain_weight_factor(m + 1, 2 * ei_node) * tables.f_ei_ei[m] * el * el;
      double mixed = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        mixed += w[k] * gain_weight_factor(m + 1, k + 1 + ei_node) * tables.f_n_ei[k * n + m] * cont[k];
      gain += 2.0 * el * mixed;
      double pair = 0.0;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          pair += w[a] * w[b] * gain_weight_factor(m + 1, a + b + 2) * f.at(a, b, m) * cont[a] * cont[b];
      out.at(j, m) = cont[m] * loss + gain + pair;
    }
  }
  return out;
}

TransportSystem build_transport_system(const Scenario& scenario) {
  TransportSystem sys;
  sys.scenario = scenario;
  sys.egrid = build_energy_grid(scenario.e_max, scenario.n_e, scenario.e_i);
  sys.dgrid = build_depth_grid(scenario.b, scenario.n_z);
  sys.propagator = build_propagator_matrix(sys.dgrid);
  sys.source = ballistic_source(sys.dgrid, sys.egrid);
  sys.tables = build_collision_tables(sys.egrid, scenario.alpha);
  return sys;
}

SpectralField transport_rhs(const SpectralField& field, const PropagatorMatrix& propagator,
                            std::span<const double> source, const CollisionOperator* op, unsigned threads,
                            ClampStats* clamps) {
  const std::size_t nz = field.n_z;
  const std::size_t ne = field.n_e;
  if (propagator.size() != nz || source.size() != nz || field.elastic.size() != nz ||
      field.continuum.size() != nz * ne)
    throw std::invalid_argument("transport_rhs: depth grid mismatch");
  if (op != nullptr && op->size() != ne) throw std::invalid_argument("transport_rhs: energy grid mismatch");

  SpectralField out(nz, ne);
  const bool has_continuum =
      std::any_of(field.continuum.begin(), field.continuum.end(), [](double v) { return v != 0.0; });
  const bool propagate_continuum = ne > 0 && (op != nullptr || has_continuum);
  std::vector<ClampStats> per_block(block_count(nz));

  struct State {
    CollisionOperator::Workspace ws;
    std::vector<double> gamma_el, gamma_cc;
  };
  for_each_block<State>(
      nz, threads,
      [&] {
        State st;
        if (op != nullptr) {
          st.ws = op->make_workspace();
          st.gamma_el.resize(kDepthBlock);
          st.gamma_cc.resize(kDepthBlock * ne);
        }
        return st;
      },
      [&](std::size_t r0, std::size_t r1, State& st) {
        const std::size_t rows = r1 - r0;
        propagator.apply_columns(field.elastic, out.elastic, 1, r0, r1);
        for (std::size_t j = r0; j < r1; ++j) out.elastic[j] += source[j];
        if (propagate_continuum) propagator.apply_columns(field.continuum, out.continuum, ne, r0, r1);
        if (op != nullptr) {
          op->apply_rows({field.elastic.data() + r0, rows}, {field.continuum.data() + r0 * ne, rows * ne},
                         {st.gamma_el.data(), rows}, {st.gamma_cc.data(), rows * ne}, st.ws);
          for (std::size_t r = 0; r < rows; ++r) out.elastic[r0 + r] += st.gamma_el[r];
          double* dst = out.continuum.data() + r0 * ne;
          for (std::size_t k = 0; k < rows * ne; ++k) dst[k] += st.gamma_cc[k];
        }
        ClampStats& cs = per_block[r0 / kDepthBlock];
        auto clamp = [&cs](double& v) {
          if (v < 0.0) {
            ++cs.events;
            cs.max_magnitude = std::max(cs.max_magnitude, -v);
            v = 0.0;
          }
        };
        for (std::size_t j = r0; j < r1; ++j) clamp(out.elastic[j]);
        for (std::size_t k = r0 * ne; k < r1 * ne; ++k) clamp(out.continuum[k]);
      });
  if (clamps != nullptr) {
    for (const auto& cs : per_block) {
      clamps->events += cs.events;
      clamps->max_magnitude = std::max(clamps->max_magnitude, cs.max_magnitude);
    }
  }
  return out;
}

SpectralField transport_rhs(const SpectralField& field, const PropagatorMatrix& propagator,
                            std::span<const double> source, const CollisionTables& tables,
                            const EnergyGrid& egrid, unsigned threads, ClampStats* clamps) {
  CollisionOperator op(tables, egrid);
  return transport_rhs(field, propagator, source, &op, threads, clamps);
}

SolverControls controls_from(const Scenario& scenario, unsigned threads) {
  SolverControls c;
  c.damping = scenario.damping;
  c.tol = scenario.tol;
  c.max_iter = scenario.max_iter;
  c.threads = threads;
  return c;
}

namespace {

// sup|F - X| / sup|F| over both parts of the field.
double relative_residual(const SpectralField& x, const SpectralField& f) {
  double diff = 0.0;
  double norm = 0.0;
  auto scan = [&](const std::vector<double>& cur, const std::vector<double>& next) {
    for (std::size_t k = 0; k < cur.size(); ++k) {
      diff = std::max(diff, std::abs(next[k] - cur[k]));
      norm = std::max(norm, std::abs(next[k]));
    }
  };
  scan(x.elastic, f.elastic);
  scan(x.continuum, f.continuum);
  return norm > 0.0 ? diff / norm : 0.0;
}

bool all_finite(const SpectralField& f) {
  auto ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return ok(f.elastic) && ok(f.continuum);
}

SolveResult iterate_source(const TransportSystem& sys, const CollisionOperator* op, const SolverControls& ctl,
                           SpectralField field) {
  SolveResult result;
  const double theta = ctl.damping;
  for (std::size_t it = 0; it < ctl.max_iter; ++it) {
    SpectralField next = transport_rhs(field, sys.propagator, sys.source, op, ctl.threads, &result.clamps);
    const double residual = relative_residual(field, next);
    result.residual_history.push_back(residual);
    result.iterations = it + 1;
    if (residual <= ctl.tol) {
      result.converged = true;
      break;
    }
    if (theta == 1.0) {
      field = std::move(next);
    } else {
      for (std::size_t k = 0; k < field.elastic.size(); ++k)
        field.elastic[k] = (1.0 - theta) * field.elastic[k] + theta * next.elastic[k];
      for (std::size_t k = 0; k < field.continuum.size(); ++k)
        field.continuum[k] = (1.0 - theta) * field.continuum[k] + theta * next.continuum[k];
    }
  }
  result.field = std::move(field);
  return result;
}

// (I - K)^{-1} as a dense row-major matrix. I - K is symmetric positive
// definite because every row of K sums to less than one.
std::vector<double> transport_inverse(const PropagatorMatrix& k) {
  const auto n = static_cast<Eigen::Index>(k.size());
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - k(i, j);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw std::runtime_error("transport_inverse: I - K is not positive definite");
  RowMat inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  return {inv.data(), inv.data() + inv.size()};
}

// y = M x on fixed row blocks, x and y row-major n x ncols.
void apply_dense_blocks(const std::vector<double>& m, std::size_t n, const double* x, double* y,
                        std::size_t ncols, unsigned threads) {
  const auto ni = static_cast<Eigen::Index>(n);
  const auto nc = static_cast<Eigen::Index>(ncols);
  Eigen::Map<const RowMat> xmat(x, ni, nc);
  parallel_for(block_count(n), threads, [&](std::size_t blk) {
    const std::size_t r0 = blk * kDepthBlock;
    const auto rows = static_cast<Eigen::Index>(std::min(n, r0 + kDepthBlock) - r0);
    Eigen::Map<const RowMat> mmat(m.data() + r0 * n, rows, ni);
    Eigen::Map<RowMat> ymat(y + r0 * ncols, rows, nc);
    ymat.noalias() = mmat * xmat;
  });
}

// Field <-> flat vector, elastic entries first.
void flatten(const SpectralField& f, Eigen::VectorXd& v) {
  v.resize(static_cast<Eigen::Index>(f.elastic.size() + f.continuum.size()));
  std::copy(f.elastic.begin(), f.elastic.end(), v.data());
  std::copy(f.continuum.begin(), f.continuum.end(), v.data() + f.elastic.size());
}

void unflatten(const Eigen::VectorXd& v, SpectralField& f) {
  std::copy(v.data(), v.data() + f.elastic.size(), f.elastic.begin());
  std::copy(v.data() + f.elastic.size(), v.data() + v.size(), f.continuum.begin());
}

// Anderson mixing in the Walker-Ni form. The least-squares problem
// min ‖f_k - ΔF γ‖ is kept as a thin QR factorisation that is updated by
// Gram-Schmidt when a difference is appended and by Givens rotations when
// the oldest one is dropped, so a step costs O(depth · dim).
class AndersonMixer {
 public:
  explicit AndersonMixer(std::size_t depth) : depth_(depth), r_(Eigen::MatrixXd::Zero(depth, depth)) {}

  void reset() {
    q_.clear();
    dg_.clear();
    has_prev_ = false;
  }

  // f = G(x) - x and g = G(x); writes the mixed next iterate.
  void step(const Eigen::VectorXd& f, const Eigen::VectorXd& g, Eigen::VectorXd& out) {
    if (depth_ > 0 && has_prev_) {
      if (q_.size() == depth_) drop_oldest();
      append(f - prev_f_, g - prev_g_);
    }
    prev_f_ = f;
    prev_g_ = g;
    has_prev_ = depth_ > 0;
    out = g;
    // Drop old differences while R is badly conditioned.
    while (q_.size() > 1 && condition_estimate() > kMaxCondition) drop_oldest();
    const std::size_t k = q_.size();
    if (k == 0) return;
    Eigen::VectorXd gamma(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) gamma[static_cast<Eigen::Index>(i)] = q_[i].dot(f);
    const auto ki = static_cast<Eigen::Index>(k);
    r_.topLeftCorner(ki, ki).triangularView<Eigen::Upper>().solveInPlace(gamma);
    if (!gamma.allFinite()) return;
    for (std::size_t i = 0; i < k; ++i) out.noalias() -= gamma[static_cast<Eigen::Index>(i)] * dg_[i];
  }

 private:
  static constexpr double kMaxCondition = 1e10;

  double condition_estimate() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t i = 0; i < q_.size(); ++i) {
      const double d = std::abs(r_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  }

  void append(Eigen::VectorXd df, Eigen::VectorXd dg) {
    const double original = df.norm();
    if (!(original > 0.0) || !std::isfinite(original)) return;
    const auto k = static_cast<Eigen::Index>(q_.size());
    r_.col(k).setZero();
    // Two Gram-Schmidt passes keep Q orthogonal to working precision.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < k; ++i) {
        const double c = q_[static_cast<std::size_t>(i)].dot(df);
        r_(i, k) += c;
        df.noalias() -= c * q_[static_cast<std::size_t>(i)];
      }
    }
    const double norm = df.norm();
    if (norm <= 1e-14 * original) return;
    r_(k, k) = norm;
    q_.push_back(df / norm);
    dg_.push_back(std::move(dg));
  }

  void drop_oldest() {
    const auto k = static_cast<Eigen::Index>(q_.size());
    // Shift R left by one column; the result is upper Hessenberg.
    for (Eigen::Index j = 0; j + 1 < k; ++j) r_.col(j) = r_.col(j + 1);
    r_.col(k - 1).setZero();
    for (Eigen::Index i = 0; i + 1 < k; ++i) {
      const double a = r_(i, i);
      const double b = r_(i + 1, i);
      const double h = std::hypot(a, b);
      if (h == 0.0) continue;
      const double c = a / h;
      const double s = b / h;
      for (Eigen::Index j = i; j + 1 < k; ++j) {
        const double top = r_(i, j);
        const double bot = r_(i + 1, j);
        r_(i, j) = c * top + s * bot;
        r_(i + 1, j) = -s * top + c * bot;
      }
      r_(i + 1, i) = 0.0;
      Eigen::VectorXd& qi = q_[static_cast<std::size_t>(i)];
      Eigen::VectorXd& qn = q_[static_cast<std::size_t>(i + 1)];
      Eigen::VectorXd tmp = c * qi + s * qn;
      qn = -s * qi + c * qn;
      qi = std::move(tmp);
    }
    r_.row(k - 1).setZero();
    q_.pop_back();
    dg_.pop_front();
  }

  std::size_t depth_;
  Eigen::MatrixXd r_;
  std::deque<Eigen::VectorXd> q_;
  std::deque<Eigen::VectorXd> dg_;
  Eigen::VectorXd prev_f_, prev_g_;
  bool has_prev_ = false;
};

// Anderson-mixed fixed-point iteration. Every sweep evaluates F at the
// current iterate and stops on the plain fixed-point residual, so the
// certificate is identical to the source scheme's. The underlying map is
// G(X) = X + θ (F[X] - X); for the linear problem the correction is first
// passed through the exact inverse (I - K)^{-1}, which makes G exact there.
SolveResult iterate_accelerated(const TransportSystem& sys, const CollisionOperator* op, const SolverControls& ctl,
                                SpectralField field) {
  SolveResult result;
  const std::size_t nz = field.n_z;
  const std::size_t ne = field.n_e;
  const double theta = ctl.damping;
  const bool precondition = op == nullptr;
  std::vector<double> inverse;
  if (precondition) inverse = transport_inverse(sys.propagator);

  AndersonMixer mixer(ctl.anderson_depth);
  double best = std::numeric_limits<double>::infinity();
  SpectralField correction(nz, ne);
  Eigen::VectorXd x, f, g, x_new;

  for (std::size_t it = 0; it < ctl.max_iter; ++it) {
    SpectralField next = transport_rhs(field, sys.propagator, sys.source, op, ctl.threads, &result.clamps);
    const double residual = relative_residual(field, next);
    result.residual_history.push_back(residual);
    result.iterations = it + 1;
    if (residual <= ctl.tol) {
      result.converged = true;
      break;
    }
    if (!std::isfinite(residual)) break;

    for (std::size_t k = 0; k < next.elastic.size(); ++k) next.elastic[k] -= field.elastic[k];
    for (std::size_t k = 0; k < next.continuum.size(); ++k) next.continuum[k] -= field.continuum[k];
    if (precondition) {
      apply_dense_blocks(inverse, nz, next.elastic.data(), correction.elastic.data(), 1, ctl.threads);
      if (ne > 0)
        apply_dense_blocks(inverse, nz, next.continuum.data(), correction.continuum.data(), ne, ctl.threads);
    } else {
      correction = std::move(next);
    }

    flatten(field, x);
    flatten(correction, f);
    f *= theta;
    g = x + f;
    // A residual far above the best so far means the history went stale.
    if (residual > 10.0 * best) mixer.reset();
    best = std::min(best, residual);
    mixer.step(f, g, x_new);
    unflatten(x_new.cwiseMax(0.0), field);
    if (!all_finite(field)) break;
  }
  result.field = std::move(field);
  return result;
}

SolveResult iterate(const TransportSystem& sys, const CollisionOperator* op, const SolverControls& ctl,
                    SpectralField field) {
  if (!(ctl.damping > 0.0 && ctl.damping <= 1.0)) throw std::invalid_argument("damping must lie in (0, 1]");
  if (ctl.scheme == Scheme::source) return iterate_source(sys, op, ctl, std::move(field));
  return iterate_accelerated(sys, op, ctl, std::move(field));
}

}  // namespace

SolveResult solve_linear(const TransportSystem& system, const SolverControls& controls) {
  SolveResult r = iterate(system, nullptr, controls, SpectralField(system.dgrid.size(), system.egrid.size()));
  return r;
}

SolveResult solve_from(const TransportSystem& system, const SolverControls& controls, SpectralField initial) {
  if (initial.n_z != system.dgrid.size() || initial.n_e != system.egrid.size())
    throw std::invalid_argument("solve_from: initial field has the wrong shape");
  if (system.tables.alpha == 0.0) return iterate(system, nullptr, controls, std::move(initial));
  CollisionOperator op(system.tables, system.egrid);
  SolveResult r = iterate(system, &op, controls, std::move(initial));
  r.conservation = conservation_audit(r.field, system.tables, system.egrid, controls.threads);
  r.conservation->max_clamp = r.clamps.max_magnitude;
  return r;
}

SolveResult solve_stationary(const TransportSystem& system, const SolverControls& controls) {
  SolveResult linear = solve_linear(system, controls);
  if (system.tables.alpha == 0.0) {
    linear.conservation = conservation_audit(linear.field, system.tables, system.egrid, controls.threads);
    return linear;
  }
  return solve_from(system, controls, std::move(linear.field));
}

}  // namespace slabtherm
