#include "slabtherm/propagator.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>

namespace slabtherm {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
constexpr int kMaxTerms = 500;

// Modified Lentz evaluation of the continued fraction for E_n, valid for x > 1.
double exp_integral_cf(int n, double x) {
  double b = x + n;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxTerms; ++i) {
    double a = -static_cast<double>(i) * (n - 1 + i);
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) <= kEps) return h * std::exp(-x);
  }
  throw std::runtime_error("exp_integral: continued fraction failed to converge");
}

// Power series for E_n, valid for 0 < x <= 1.
double exp_integral_series(int n, double x) {
  const int nm1 = n - 1;
  double ans = nm1 != 0 ? 1.0 / nm1 : -std::log(x) - std::numbers::egamma;
  double fact = 1.0;
  for (int i = 1; i <= kMaxTerms; ++i) {
    fact *= -x / i;
    double del;
    if (i != nm1) {
      del = -fact / (i - nm1);
    } else {
      double psi = -std::numbers::egamma;
      for (int ii = 1; ii <= nm1; ++ii) psi += 1.0 / ii;
      del = fact * (-std::log(x) + psi);
    }
    ans += del;
    if (std::abs(del) < std::abs(ans) * kEps) return ans;
  }
  throw std::runtime_error("exp_integral: series failed to converge");
}

}  // namespace

double exp_integral(int n, double x) {
  if (n < 1) throw std::domain_error("exp_integral: order must be >= 1");
  if (!(x >= 0.0) || (n == 1 && x == 0.0)) throw std::domain_error("exp_integral: argument out of domain");
  if (x == 0.0) return 1.0 / (n - 1);
  if (x > 1.0) return exp_integral_cf(n, x);
  return exp_integral_series(n, x);
}

double exp_integral_e1(double x) {
  if (!(x > 0.0)) throw std::domain_error("exp_integral_e1: x must be positive");
  return exp_integral(1, x);
}

double milne_kernel(double dz) { return 0.5 * exp_integral_e1(std::abs(dz)); }

double milne_kernel_antiderivative(double x) { return 1.0 - exp_integral(2, x); }

PropagatorMatrix::PropagatorMatrix(const DepthGrid& grid) : n_(grid.size()) {
  const double h = grid.width;
  const double b = grid.thickness();

  // Toeplitz symbol: cell integral of (1/2)E_1 at separation d*h.
  // Off-diagonal: (1/2)[E_2(dh - h/2) - E_2(dh + h/2)]; diagonal: 1 - E_2(h/2).
  std::vector<double> symbol(n_);
  std::vector<double> e2_edges(n_ + 1);
  for (std::size_t d = 0; d <= n_; ++d) {
    double dist = (static_cast<double>(d) - 0.5) * h;
    e2_edges[d] = d == 0 ? 0.0 : exp_integral(2, dist);
  }
  symbol[0] = 1.0 - exp_integral(2, 0.5 * h);
  for (std::size_t d = 1; d < n_; ++d) symbol[d] = 0.5 * (e2_edges[d] - e2_edges[d + 1]);

  k_.resize(n_ * n_);
  row_sums_.assign(n_, 0.0);
  escape_front_.resize(n_);
  escape_back_.resize(n_);
  for (std::size_t j = 0; j < n_; ++j) {
    double sum = 0.0;
    for (std::size_t jp = 0; jp < n_; ++jp) {
      double v = symbol[j > jp ? j - jp : jp - j];
      k_[j * n_ + jp] = v;
      sum += v;
    }
    row_sums_[j] = sum;
    escape_front_[j] = 0.5 * exp_integral(2, grid.nodes[j]);
    escape_back_[j] = 0.5 * exp_integral(2, b - grid.nodes[j]);
  }
}

void PropagatorMatrix::apply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t j = 0; j < n_; ++j) {
    const double* kr = k_.data() + j * n_;
    double acc = 0.0;
    for (std::size_t jp = 0; jp < n_; ++jp) acc += kr[jp] * x[jp];
    y[j] = acc;
  }
}

void PropagatorMatrix::apply_columns(std::span<const double> x, std::span<double> y, std::size_t ncols,
                                     std::size_t row_begin, std::size_t row_end) const {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto n = static_cast<Eigen::Index>(n_);
  const auto nc = static_cast<Eigen::Index>(ncols);
  const auto rows = static_cast<Eigen::Index>(row_end - row_begin);
  Eigen::Map<const RowMat> kmat(k_.data() + row_begin * n_, rows, n);
  Eigen::Map<const RowMat> xmat(x.data(), n, nc);
  Eigen::Map<RowMat> ymat(y.data() + row_begin * ncols, rows, nc);
  ymat.noalias() = kmat * xmat;
}

PropagatorMatrix build_propagator_matrix(const DepthGrid& grid) { return PropagatorMatrix(grid); }

std::vector<double> ballistic_source(const DepthGrid& dgrid, [[maybe_unused]] const EnergyGrid& egrid) {
  std::vector<double> s(dgrid.size());
  for (std::size_t j = 0; j < dgrid.size(); ++j) s[j] = std::exp(-dgrid.nodes[j]);
  return s;
}

}  // namespace slabtherm
