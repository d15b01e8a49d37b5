// Acceptance runner: one PASS/FAIL line per criterion, detail lines indented.
// Usage: acceptance [--criterion N]   (N = 1..7; all when omitted)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "slabtherm/collision_kernels.hpp"
#include "slabtherm/commands.hpp"

using namespace slabtherm;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Runs on every hardware thread; results do not depend on the count.
constexpr unsigned kThreads = 0;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void item(const std::string& name, bool ok, const std::string& text) {
    pass = pass && ok;
    detail << "    " << (ok ? "ok   " : "FAIL ") << name << ": " << text << '\n';
  }
};

std::string num(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

Config config(const std::string& text) { return parse_config(text); }

Config slab(double b, double alpha, const std::string& extra = {}) {
  return config("b = " + format_number(b) + "\nalpha = " + format_number(alpha) + "\n" + extra);
}

struct Timed {
  SolveRun run;
  double seconds = 0.0;
};

Timed timed_solve(const Config& c, bool linear) {
  const auto t0 = Clock::now();
  Timed t{run_solve(c, kThreads, linear), 0.0};
  t.seconds = seconds_since(t0);
  return t;
}

// Relative L2 distance of two spectra with the grid quadrature weights.
double relative_l2(const std::vector<double>& a, const std::vector<double>& ref, const EnergyGrid& g) {
  double num2 = 0.0, den2 = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    num2 += g.weights[m] * (a[m] - ref[m]) * (a[m] - ref[m]);
    den2 += g.weights[m] * ref[m] * ref[m];
  }
  return std::sqrt(num2 / den2);
}

Verdict criterion_1() {
  Verdict v;
  const Config c = slab(50.0, 0.0);
  const Timed lin = timed_solve(c, true);
  const SolveSummary& s = lin.run.summary;
  v.item("converged", s.converged, std::to_string(s.iterations) + " sweeps");
  v.item("interior affine fit", s.r2 >= 0.999, "r2 " + num(s.r2) + " >= 0.999, slope " + num(s.slope));

  const auto t0 = Clock::now();
  const SlabWalkResult walk = mc_slab_walk(50.0, 1000000, c.seed, kThreads);
  const double mc_seconds = seconds_since(t0);
  // The solver's discretisation error is far below the MC error, so the
  // combined standard error is the walk's own.
  const double se = walk.transmitted_error();
  const double diff = std::abs(walk.transmitted_fraction() - s.transmitted);
  v.item("transmission vs walk oracle", diff <= 3.0 * se,
         "solver " + num(s.transmitted) + ", MC " + num(walk.transmitted_fraction()) + " +- " + num(se) + " (" +
             num(diff / se) + " SE, limit 3)");
  v.item("solver runtime", lin.seconds < 60.0, num(lin.seconds) + " s < 60 s");
  v.item("MC runtime", mc_seconds < 30.0, num(mc_seconds) + " s < 30 s");
  return v;
}

Verdict criterion_2() {
  Verdict v;
  const Timed ref = timed_solve(slab(50.0, 0.004), false);
  const Timed lin = timed_solve(slab(50.0, 0.0), true);
  const FluxProfile& p = ref.run.profile;
  const FluxProfile& q = lin.run.profile;
  v.item("converged", ref.run.summary.converged,
         std::to_string(ref.run.summary.iterations) + " sweeps, " + num(ref.seconds) + " s");

  double worst = 0.0;
  for (std::size_t j = 0; j < p.z.size(); ++j) worst = std::max(worst, std::abs(p.j_total[j] - q.j_total[j]));
  worst /= q.j_total.front();
  v.item("(i) total flux coincides with the linear flux", worst <= 0.01,
         "max |j_total - j_linear| / j_linear(0) = " + num(worst) + " <= 0.01");

  const double z = ref.run.summary.crossover;
  const bool exists = std::isfinite(z);
  v.item("(ii) crossover in the first third", exists && z < 50.0 / 3.0, "z* = " + num(z) + " < " + num(50.0 / 3.0));
  for (const auto& [label, extra] : {std::pair<std::string, std::string>{"n_z = 500", "n_z = 500\n"},
                                     std::pair<std::string, std::string>{"n_e = 480", "n_e = 480\n"}}) {
    const Timed fine = timed_solve(slab(50.0, 0.004, extra), false);
    const double zf = fine.run.summary.crossover;
    const double rel = std::abs(zf - z) / z;
    v.item("(ii) crossover stable under " + label, exists && fine.run.summary.converged && rel <= 0.05,
           "z* = " + num(zf) + ", relative change " + num(rel) + " <= 0.05");
  }

  bool additive = true;
  for (std::size_t j = 0; j < p.z.size(); ++j) additive = additive && p.j_total[j] == p.j_el[j] + p.j_inel[j];
  v.item("(iii) j_total = j_el + j_inel", additive, additive ? "bitwise at every depth" : "mismatch");
  return v;
}

Verdict criterion_3() {
  Verdict v;
  const Timed ref = timed_solve(slab(50.0, 0.004), false);
  const SolveRun& run = ref.run;
  const EnergyGrid& g = run.system.egrid;
  const FluxProfile& p = run.profile;
  v.item("converged", run.summary.converged, std::to_string(run.summary.iterations) + " sweeps");

  const auto shallow = normalized_inelastic_spectrum(run.result.field, g, 0);
  const auto single = single_collision_spectrum(g);
  const double l2 = relative_l2(shallow, single, g);
  v.item("shallow spectrum matches one collision of two E_i particles", l2 <= 0.02,
         "relative L2 at z = " + num(p.z.front()) + ": " + num(l2) + " <= 0.02");

  const double last = p.mb_dev.back();
  const std::size_t quarter = run.system.dgrid.cell_of(50.0 / 4.0);
  double quarter_min = p.mb_dev.front();
  for (std::size_t j = 0; j <= quarter; ++j) quarter_min = std::min(quarter_min, p.mb_dev[j]);
  v.item("mb_dev(b) below every depth of the first quarter", last < quarter_min,
         "mb_dev(b) = " + num(last) + ", min over z <= b/4 = " + num(quarter_min));

  const std::size_t third = run.system.dgrid.cell_of(50.0 / 3.0);
  const double rel = std::abs(last - p.mb_dev[third]) / p.mb_dev[third];
  v.item("spectrum only slightly altered beyond b/3", rel < 0.10,
         "mb_dev(b/3) = " + num(p.mb_dev[third]) + ", relative change " + num(rel) + " < 0.10");
  return v;
}

Verdict criterion_4() {
  Verdict v;
  std::vector<double> finals;
  for (double b : {10.0, 20.0, 50.0}) {
    const Timed t = timed_solve(slab(b, 10.0 / (b * b)), false);
    finals.push_back(t.run.summary.mb_dev_final);
    v.item("b = " + num(b) + " converged", t.run.summary.converged, "mb_dev(b) = " + num(finals.back()));
  }
  const auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
  const double spread = (*hi - *lo) / *lo;
  v.item("final mb_dev agrees at alpha b^2 = 10", spread <= 0.25, "(max - min) / min = " + num(spread) + " <= 0.25");

  std::vector<double> scan;
  for (double alpha : {0.001, 0.004, 0.01}) {
    const Timed t = timed_solve(slab(50.0, alpha), false);
    scan.push_back(t.run.summary.mb_dev_final);
    v.item("alpha = " + num(alpha) + " converged", t.run.summary.converged, "mb_dev(b) = " + num(scan.back()));
  }
  const bool decreasing = scan[0] > scan[1] && scan[1] > scan[2];
  v.item("mb_dev(b) strictly decreasing in alpha", decreasing,
         num(scan[0]) + " > " + num(scan[1]) + " > " + num(scan[2]));
  return v;
}

// Max relative energy residual of the collision operator on a smooth field
// whose continuum lies below e_max / 2, so no pair leaves the grid.
double untruncated_energy_residual(std::size_t n_e, double alpha) {
  const EnergyGrid g = build_energy_grid(6.0, n_e, 1.0);
  const CollisionTables t = build_collision_tables(g, alpha);
  SpectralField f(4, g.size());
  for (std::size_t j = 0; j < 4; ++j) {
    f.elastic[j] = 1.0 / (1.0 + static_cast<double>(j));
    for (std::size_t m = 0; m < g.size(); ++m) {
      const double e = g.nodes[m];
      f.at(j, m) = e < 3.0 ? (0.2 + 0.1 * static_cast<double>(j)) * e * (3.0 - e) : 0.0;
    }
  }
  return conservation_audit(f, t, g, 1).max_energy_residual;
}

Verdict criterion_5() {
  Verdict v;
  const Config c = slab(50.0, 0.004);
  const auto t0 = Clock::now();
  const std::vector<Check> checks = validate_kernels(c, kThreads);
  for (const Check& k : checks)
    v.item(k.name, k.pass, "value " + num(k.value) + ", threshold " + num(k.threshold) +
                               (k.detail.empty() ? "" : " (" + k.detail + ")"));

  // Convergence of the discrete g(2;1) towards the stated limit -5 alpha / 3.
  const double alpha = c.scenario.alpha;
  auto g21 = [&](std::size_t n_e) {
    const EnergyGrid g = build_energy_grid(6.0, n_e, 1.0);
    const auto node = [&](double e) { return static_cast<std::size_t>(std::lround(e / g.spacing)) - 1; };
    return -gain_number_sum(g, node(2.0), node(1.0), alpha);
  };
  const double stated = -5.0 * alpha / 3.0;
  const double ec = std::abs(g21(240) - stated);
  const double ef = std::abs(g21(480) - stated);
  v.item("g(2;1) -> -5 alpha/3 at second order", ec / ef >= 3.5 && ec / ef <= 4.5,
         "errors " + num(ec / alpha) + ", " + num(ef / alpha) + " alpha, ratio " + num(ec / ef) +
             " (limit of the discrete g is " + num(continuum_g(2.0, 1.0, 1.0)) + " alpha)");

  // Energy residual: quarters when Δ halves, or already sits at roundoff.
  constexpr double kRoundoff = 1e-12;
  const double rc = untruncated_energy_residual(240, alpha);
  const double rf = untruncated_energy_residual(480, alpha);
  const bool quarters = rf <= rc / 4.0 * 1.25;
  v.item("energy residual quarters when the spacing halves", quarters || rf <= kRoundoff,
         "n_e = 240: " + num(rc) + ", n_e = 480: " + num(rf) + (quarters ? "" : " (roundoff floor " + num(kRoundoff) + ")"));

  const double elapsed = seconds_since(t0);
  v.item("suite runtime", elapsed < 5.0, num(elapsed) + " s < 5 s");
  return v;
}

Verdict criterion_6() {
  Verdict v;
  Config c = slab(50.0, 0.004);
  c.n_samples = 10000000;
  for (const auto& pair : std::vector<std::pair<double, double>>{{1.0, 1.0}, {1.0, 4.0}, {0.5, 2.0}}) {
    c.collision_pairs = {pair};
    const auto t0 = Clock::now();
    const std::vector<Check> checks = validate_collision(c, kThreads);
    const double elapsed = seconds_since(t0);
    const Check& k = checks.front();
    const std::string label = "(" + num(pair.first) + ", " + num(pair.second) + ")";
    v.item(label + " bins beyond 3 sigma", k.pass, num(100.0 * k.value) + "% <= 1%, " + k.detail);
    v.item(label + " runtime", elapsed < 60.0, num(elapsed) + " s < 60 s");
  }
  return v;
}

Verdict criterion_7() {
  Verdict v;
  const fs::path root = fs::temp_directory_path() / "slabtherm_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  write_text(root / "run.cfg", "b = 50\nalpha = 0.004\n");

  std::ostringstream log;
  std::vector<fs::path> outs;
  for (unsigned threads : {1u, 4u}) {
    RunOptions o;
    o.config_path = (root / "run.cfg").string();
    o.out_dir = (root / ("threads_" + std::to_string(threads))).string();
    o.threads = threads;
    const int code = cmd_solve(o, log);
    v.item("solve with " + std::to_string(threads) + " threads", code == kExitOk, "exit code " + std::to_string(code));
    outs.push_back(*o.out_dir);
  }
  // manifest.txt records the output directory, so it differs by design.
  std::size_t compared = 0;
  bool identical = true;
  for (const auto& entry : fs::directory_iterator(outs[0])) {
    const fs::path name = entry.path().filename();
    if (name == "manifest.txt") continue;
    ++compared;
    const bool same = fs::exists(outs[1] / name) && read_text(entry.path()) == read_text(outs[1] / name);
    if (!same) v.item("table " + name.string(), false, "differs between thread counts");
    identical = identical && same;
  }
  v.item("data tables byte-identical", identical && compared > 0, std::to_string(compared) + " tables compared");

  const bool walk = mc_slab_walk(50.0, 100000, 7, 1) == mc_slab_walk(50.0, 100000, 7, 4);
  v.item("slab walk identical for 1 and 4 threads", walk, "b = 50, 1e5 walkers, seed 7");
  const bool pair = mc_pair_collision(1.0, 4.0, 1000000, 7, 1) == mc_pair_collision(1.0, 4.0, 1000000, 7, 4);
  v.item("pair sampler identical for 1 and 4 threads", pair, "(1, 4), 1e6 samples, seed 7");
  fs::remove_all(root);
  return v;
}

const std::vector<std::pair<std::string, std::function<Verdict()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Verdict()>>> list = {
      {"linear regime and walk oracle", criterion_1},
      {"flux profile of the reference slab", criterion_2},
      {"spectra of the reference slab", criterion_3},
      {"thermalisation at fixed collision count", criterion_4},
      {"kernel exactness suite", criterion_5},
      {"collision kinematics oracle", criterion_6},
      {"determinism", criterion_7}};
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"slabtherm acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-7)")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);

  bool all_pass = true;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (only != 0 && n != only) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria()[i].second();
    } catch (const std::exception& e) {
      v.item("exception", false, e.what());
    }
    std::cout << v.detail.str() << (v.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << criteria()[i].first
              << " (" << num(seconds_since(t0)) << " s)" << std::endl;
    all_pass = all_pass && v.pass;
  }
  return all_pass ? 0 : 1;
}
