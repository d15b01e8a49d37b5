#include "slabtherm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <tuple>

#include "slabtherm/collision_kernels.hpp"
#include "slabtherm/parallel.hpp"

namespace slabtherm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::map<std::string, double> scenario_params(const Scenario& s) {
  return {{"b", s.b},
          {"alpha", s.alpha},
          {"e_i", s.e_i},
          {"e_max", s.e_max},
          {"n_e", static_cast<double>(s.n_e)},
          {"n_z", static_cast<double>(s.n_z)},
          {"damping", s.damping},
          {"tol", s.tol},
          {"max_iter", static_cast<double>(s.max_iter)}};
}

std::string manifest_text(const Config& config, const std::string& command,
                          const std::vector<std::string>& results) {
  std::string out = "# slabtherm " SLABTHERM_VERSION "\n# command = " + command + '\n';
  out += render_config(config);
  for (const auto& w : config.warnings) out += "# warning: " + w + '\n';
  for (const auto& r : results) out += "# " + r + '\n';
  return out;
}

std::string check_line(const Check& c) {
  std::ostringstream o;
  o << (c.pass ? "PASS " : "FAIL ") << c.name << ": value " << format_number(c.value) << ", threshold "
    << format_number(c.threshold);
  if (!c.detail.empty()) o << " (" << c.detail << ')';
  return o.str();
}

Table checks_table(const std::vector<Check>& checks, const std::string& which) {
  Table t;
  t.preamble.push_back("validator = " + which);
  for (std::size_t i = 0; i < checks.size(); ++i)
    t.preamble.push_back("check " + std::to_string(i) + ": " + check_line(checks[i]));
  t.columns = {"check", "value", "threshold", "pass"};
  for (std::size_t i = 0; i < checks.size(); ++i)
    t.rows.push_back({static_cast<double>(i), checks[i].value, checks[i].threshold, checks[i].pass ? 1.0 : 0.0});
  return t;
}

template <class Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    log << "configuration error";
    if (e.line() > 0) log << " at line " << e.line();
    log << ": " << e.what() << '\n';
  } catch (const IoError& e) {
    log << "I/O error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
  }
  return kExitIo;
}

}  // namespace

Config resolve_config(const RunOptions& options) {
  Config cfg = load_config(options.config_path);
  if (options.out_dir) cfg.out = *options.out_dir;
  if (options.seed) cfg.seed = *options.seed;
  return cfg;
}

SolveRun run_solve(const Config& config, unsigned threads, bool linear) {
  SolveRun run;
  run.system = build_transport_system(config.scenario);
  const SolverControls ctl = controls_from(config, threads);
  run.result = linear ? solve_linear(run.system, ctl) : solve_stationary(run.system, ctl);
  run.profile = flux_split(run.result.field, run.system.egrid, run.system.dgrid);

  SolveSummary& s = run.summary;
  s.converged = run.result.converged;
  s.iterations = run.result.iterations;
  s.final_residual = run.result.residual_history.empty() ? kNaN : run.result.residual_history.back();
  s.crossover = crossover_depth(run.profile).value_or(kNaN);
  s.mb_dev_final = run.profile.mb_dev.back();
  try {
    const LinearFit fit = linear_fit_interior(run.profile, config.scenario.b);
    s.slope = fit.slope;
    s.intercept = fit.intercept;
    s.r2 = fit.r2;
    s.boundary_dominated = fit.boundary_dominated;
  } catch (const std::invalid_argument&) {
    s.slope = s.intercept = s.r2 = kNaN;
    s.boundary_dominated = true;
  }
  if (linear) {
    const LeakageSplit leak = leakage(run.result.field.elastic, run.system.propagator, run.system.dgrid);
    s.transmitted = leak.transmitted;
    s.reflected = leak.reflected;
  } else {
    s.transmitted = s.reflected = kNaN;
  }
  s.max_clamp = run.result.clamps.max_magnitude;
  if (run.result.conservation) {
    s.max_number_residual = run.result.conservation->max_number_residual;
    s.max_energy_residual = run.result.conservation->max_energy_residual;
    s.tail_mass = run.result.conservation->tail_mass;
  } else {
    s.max_number_residual = s.max_energy_residual = s.tail_mass = kNaN;
  }
  return run;
}

std::vector<std::size_t> spectrum_nodes(const Config& config, const DepthGrid& dgrid) {
  std::vector<std::size_t> nodes;
  if (config.spectrum_depths.empty()) {
    nodes = {0, dgrid.cell_of(dgrid.thickness() / 3.0), dgrid.size() - 1};
  } else {
    for (double z : config.spectrum_depths) nodes.push_back(dgrid.cell_of(z));
  }
  return nodes;
}

void write_solve_outputs(const std::filesystem::path& dir, const Config& config, const SolveRun& run,
                         const std::string& command) {
  ensure_directory(dir);
  const auto& sys = run.system;
  const auto& prof = run.profile;
  const std::string scenario_line =
      "b = " + format_number(config.scenario.b) + ", alpha = " + format_number(config.scenario.alpha);

  Table profile;
  profile.preamble = {"command = " + command, scenario_line,
                      "fluxes in units of the incident flux; z in disorder mean free paths",
                      "mb_dev: L2 distance of the unit-normalised inelastic flux spectrum from 4E exp(-2E)"};
  profile.columns = {"z", "j_total", "j_el", "j_inel", "mb_dev"};
  for (std::size_t j = 0; j < prof.z.size(); ++j)
    profile.rows.push_back({prof.z[j], prof.j_total[j], prof.j_el[j], prof.j_inel[j], prof.mb_dev[j]});
  write_table(dir / "profile.csv", profile);

  const std::vector<double> single = single_collision_spectrum(sys.egrid);
  const auto nodes = spectrum_nodes(config, sys.dgrid);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::size_t j = nodes[k];
    const auto spec = normalized_inelastic_spectrum(run.result.field, sys.egrid, j);
    Table t;
    t.preamble = {"command = " + command, scenario_line, "z = " + format_number(sys.dgrid.nodes[j]),
                  "depth_node = " + std::to_string(j),
                  "j_inel: inelastic flux spectrum normalised to unit energy integral (nan when absent)",
                  "j_single: normalised spectrum after one collision of two particles at E_i"};
    t.columns = {"E", "j_inel", "j_mb", "j_single"};
    for (std::size_t m = 0; m < sys.egrid.size(); ++m) {
      const double e = sys.egrid.nodes[m];
      t.rows.push_back({e, spec.empty() ? kNaN : spec[m], mb_flux_distribution(e, sys.egrid.e_i()), single[m]});
    }
    write_table(dir / ("spectrum_" + std::to_string(k) + ".csv"), t);
  }

  if (run.result.conservation) {
    const auto& c = *run.result.conservation;
    Table t;
    t.preamble = {"command = " + command, scenario_line,
                  "residuals of the collision operator on the final field, relative to the local loss rate",
                  "max_clamp = " + format_number(c.max_clamp), "tail_mass = " + format_number(c.tail_mass)};
    t.columns = {"z", "number_residual", "energy_residual", "number_absolute", "energy_absolute"};
    for (std::size_t j = 0; j < c.number_residual.size(); ++j)
      t.rows.push_back({sys.dgrid.nodes[j], c.number_residual[j], c.energy_residual[j], c.number_absolute[j],
                        c.energy_absolute[j]});
    write_table(dir / "conservation.csv", t);
  }

  Table res;
  res.preamble = {"command = " + command, "relative sup-norm fixed-point residual per sweep"};
  res.columns = {"iteration", "residual"};
  for (std::size_t i = 0; i < run.result.residual_history.size(); ++i)
    res.rows.push_back({static_cast<double>(i + 1), run.result.residual_history[i]});
  write_table(dir / "residuals.csv", res);

  const SolveSummary& s = run.summary;
  Table sum;
  sum.preamble = {"command = " + command, scenario_line,
                  "transmitted/reflected: elastic-line leakage (linear runs only)"};
  sum.columns = {"converged", "iterations",  "final_residual", "crossover_z",       "mb_dev_final",
                 "slope",     "intercept",   "r2",             "transmitted",       "reflected",
                 "max_clamp", "max_number_residual", "max_energy_residual", "tail_mass"};
  sum.rows.push_back({s.converged ? 1.0 : 0.0, static_cast<double>(s.iterations), s.final_residual, s.crossover,
                      s.mb_dev_final, s.slope, s.intercept, s.r2, s.transmitted, s.reflected, s.max_clamp,
                      s.max_number_residual, s.max_energy_residual, s.tail_mass});
  write_table(dir / "summary.csv", sum);

  write_text(dir / "manifest.txt",
             manifest_text(config, command,
                           {"converged = " + std::string(s.converged ? "true" : "false"),
                            "iterations = " + std::to_string(s.iterations),
                            "mb_dev normalisation = unit energy integral"}));
}

namespace {

int solve_command(const RunOptions& options, std::ostream& log, bool linear) {
  return guarded(log, [&] {
    const Config cfg = resolve_config(options);
    for (const auto& w : cfg.warnings) log << "warning: " << w << '\n';
    const SolveRun run = run_solve(cfg, options.threads, linear);
    write_solve_outputs(cfg.out, cfg, run, linear ? "linear" : "solve");
    const SolveSummary& s = run.summary;
    log << (linear ? "linear" : "solve") << ": " << (s.converged ? "converged" : "NOT converged") << " after "
        << s.iterations << " sweeps (residual " << format_number(s.final_residual) << "), outputs in " << cfg.out
        << '\n';
    return s.converged ? kExitOk : kExitNotConverged;
  });
}

}  // namespace

int cmd_solve(const RunOptions& options, std::ostream& log) { return solve_command(options, log, false); }
int cmd_linear(const RunOptions& options, std::ostream& log) { return solve_command(options, log, true); }

std::vector<Check> validate_kernels(const Config& config, unsigned threads) {
  std::vector<Check> checks;
  auto add = [&](std::string name, double value, double threshold, bool pass, std::string detail = {}) {
    checks.push_back({std::move(name), value, threshold, pass, std::move(detail)});
  };
  const Scenario& sc = config.scenario;
  const double alpha = sc.alpha > 0.0 ? sc.alpha : 1.0;
  const std::string alpha_note = sc.alpha > 0.0 ? "" : "alpha = 0 in config, kernels checked with alpha = 1";
  const EnergyGrid egrid = build_energy_grid(sc.e_max, sc.n_e, sc.e_i);
  const std::size_t n = egrid.size();

  {
    const double below = std::abs(kernel_f(1.0, 1.0, 0.5, alpha) - alpha) / alpha;
    add("f_branch_below", below, 1e-14, below <= 1e-14, "f(1,1;0.5) = alpha");
    const double above = std::abs(kernel_f(1.0, 1.0, 1.5, alpha) - alpha * std::sqrt(0.5 / 1.5)) / alpha;
    add("f_branch_above", above, 1e-14, above <= 1e-14, "f(1,1;1.5) = alpha sqrt(1/3)");
    const double outside = std::abs(kernel_f(1.0, 1.0, 2.5, alpha)) + std::abs(kernel_f(1.0, 1.0, 2.0, alpha)) +
                           std::abs(kernel_f(1.0, 4.0, 5.5, alpha));
    add("f_support", outside, 0.0, outside == 0.0, "f vanishes for E >= E1 + E2");
  }
  {
    double pair = 0.0;
    double reflect = 0.0;
    double negative = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b <= a; ++b) {
        const double ea = egrid.nodes[a];
        const double eb = egrid.nodes[b];
        for (std::size_t m = 0; m < n; ++m) {
          const double em = egrid.nodes[m];
          const double f = kernel_f(ea, eb, em, alpha);
          negative = std::max(negative, -f);
          pair = std::max(pair, std::abs(f - kernel_f(eb, ea, em, alpha)));
          // E' = E_a + E_b - E_m is the 0-based node a + b - m.
          if (a + b >= m && a + b - m < n) {
            const std::size_t mp = a + b - m;
            const double fp = kernel_f(ea, eb, egrid.nodes[mp], alpha);
            const double lhs = egrid.sqrt_nodes[m] * f;
            const double rhs = egrid.sqrt_nodes[mp] * fp;
            const double scale = std::max(std::abs(lhs), alpha * 1e-300);
            reflect = std::max(reflect, std::abs(lhs - rhs) / scale);
          }
        }
      }
    }
    add("f_nonnegative", negative, 0.0, negative <= 0.0);
    add("f_pair_symmetry", pair, 0.0, pair == 0.0, "f(a,b;m) == f(b,a;m) on all node triples");
    add("f_flux_reflection", reflect, 1e-13, reflect <= 1e-13, "sqrt(E) f(a,b;E) == sqrt(E') f(a,b;E')");
  }

  const CollisionTables tables = build_collision_tables(egrid, alpha);
  {
    double gmax = -std::numeric_limits<double>::infinity();
    double sum_rule = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        const double g = tables.g(a, b);
        gmax = std::max(gmax, g);
        const double gain = gain_number_sum(egrid, a, b, alpha);
        sum_rule = std::max(sum_rule, std::abs(egrid.sqrt_nodes[b] * g + gain) / std::abs(gain));
      }
    }
    add("g_nonpositive", gmax, 0.0, gmax <= 0.0);
    add("number_sum_rule", sum_rule, 1e-13, sum_rule <= 1e-13, "|sqrt(E_b) g + sum_m w c sqrt(E_m) f| / gain");
  }
  {
    // O(Δ²) convergence of ĝ towards the closed form on a refinement pair.
    const EnergyGrid fine = build_energy_grid(sc.e_max, 2 * sc.n_e, sc.e_i);
    auto g_at = [&](const EnergyGrid& grid, double e1, double e2) {
      const auto node = [&](double e) { return static_cast<std::size_t>(std::lround(e / grid.spacing)) - 1; };
      const double gain = gain_number_sum(grid, node(e1), node(e2), alpha);
      return -gain / std::sqrt(e2);
    };
    for (auto [e1, e2, name] : {std::tuple{1.0, 1.0, "g11_convergence"}, std::tuple{2.0, 1.0, "g21_convergence"}}) {
      const double exact = continuum_g(e1, e2, alpha);
      const double err_coarse = std::abs(g_at(egrid, e1, e2) - exact);
      const double err_fine = std::abs(g_at(fine, e1, e2) - exact);
      const double ratio = err_coarse / err_fine;
      std::ostringstream d;
      d << "continuum " << format_number(exact / alpha) << " alpha; errors " << format_number(err_coarse / alpha)
        << ", " << format_number(err_fine / alpha) << " alpha";
      add(name, ratio, 3.5, ratio >= 3.5 && ratio <= 4.5, d.str());
    }
  }
  {
    // The energy-rule g and the number-rule g agree to O(Δ²).
    double worst = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (egrid.nodes[a] + egrid.nodes[b] > egrid.e_max()) continue;
        const double g = tables.g(a, b);
        worst = std::max(worst, std::abs(g_from_energy_rule(egrid, a, b, alpha) - g) / std::abs(g));
      }
    }
    const double bound = egrid.spacing * egrid.spacing;
    add("two_sum_rule_consistency", worst, bound, worst <= bound, "max relative |g_energy - g_number|, bound Δ²");
  }
  {
    // Random fields: number conservation of the assembled operator.
    constexpr std::size_t kFields = 100;
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SpectralField field(kFields, n);
    for (std::size_t j = 0; j < kFields; ++j) {
      field.elastic[j] = 2.0 * u(rng);
      for (std::size_t m = 0; m < n; ++m) field.at(j, m) = u(rng);
    }
    const ConservationReport rep = conservation_audit(field, tables, egrid, threads);
    add("collision_number_conservation", rep.max_number_residual, 1e-12, rep.max_number_residual <= 1e-12,
        "100 random fields");
  }
  if (!alpha_note.empty())
    for (auto& c : checks) c.detail += c.detail.empty() ? alpha_note : "; " + alpha_note;
  return checks;
}

std::vector<Check> validate_walk(const Config& config, unsigned threads, const std::filesystem::path* dir) {
  std::vector<Check> checks;
  Config lin = config;
  const SolveRun run = run_solve(lin, threads, true);
  const SlabWalkResult walk = mc_slab_walk(config.scenario.b, config.n_walkers, config.seed, threads);

  const double dt = walk.transmitted_fraction() - run.summary.transmitted;
  const double se = walk.transmitted_error();
  std::ostringstream d;
  d << "MC " << format_number(walk.transmitted_fraction()) << " +- " << format_number(se) << ", solver "
    << format_number(run.summary.transmitted);
  checks.push_back({"walk_transmission", std::abs(dt) / se, 3.0, std::abs(dt) <= 3.0 * se, d.str()});
  const double dr = walk.reflected_fraction() - run.summary.reflected;
  const double se_r = walk.reflected_error();
  checks.push_back({"walk_reflection", std::abs(dr) / se_r, 3.0, std::abs(dr) <= 3.0 * se_r, ""});

  // Collision density per bin against the solver's elastic field averaged over the same bins.
  const auto& dgrid = run.system.dgrid;
  const auto density = walk.collisions.density();
  const std::size_t bins = density.size();
  std::vector<double> solver(bins, 0.0);
  std::vector<double> weight(bins, 0.0);
  for (std::size_t j = 0; j < dgrid.size(); ++j) {
    const auto& edges = walk.collisions.bin_edges;
    for (std::size_t k = 0; k < bins; ++k) {
      const double overlap = std::max(
          0.0, std::min(edges[k + 1], dgrid.cell_edges[j + 1]) - std::max(edges[k], dgrid.cell_edges[j]));
      solver[k] += overlap * run.result.field.elastic[j];
      weight[k] += overlap;
    }
  }
  std::size_t beyond = 0;
  Table t;
  t.preamble = {"collision density per incident particle: Monte Carlo walk vs linear solver",
                "b = " + format_number(config.scenario.b), "walkers = " + std::to_string(config.n_walkers),
                "seed = " + std::to_string(config.seed)};
  t.columns = {"z_lo", "z_hi", "mc_density", "mc_error", "solver_density", "z_score"};
  for (std::size_t k = 0; k < bins; ++k) {
    solver[k] /= weight[k];
    const double z = (density[k] - solver[k]) / walk.density_error[k];
    if (std::abs(z) > 3.0) ++beyond;
    t.rows.push_back({walk.collisions.bin_edges[k], walk.collisions.bin_edges[k + 1], density[k],
                      walk.density_error[k], solver[k], z});
  }
  const double frac = static_cast<double>(beyond) / static_cast<double>(bins);
  checks.push_back({"walk_density_profile", frac, 0.05, frac <= 0.05, "fraction of depth bins beyond 3 sigma"});
  if (dir != nullptr) {
    ensure_directory(*dir);
    write_table(*dir / "walk_density.csv", t);
  }
  return checks;
}

std::vector<Check> validate_collision(const Config& config, unsigned threads, const std::filesystem::path* dir) {
  std::vector<Check> checks;
  for (std::size_t i = 0; i < config.collision_pairs.size(); ++i) {
    const auto [e1, e2] = config.collision_pairs[i];
    const McHistogram h = mc_pair_collision(e1, e2, config.n_samples, config.seed, threads);
    const auto p = kernel_bin_probabilities(e1, e2, h.bin_edges);
    const HistogramComparison cmp = compare_histogram_to_kernel(h, p);
    std::ostringstream name;
    name << "collision_" << format_number(e1) << '_' << format_number(e2);
    std::ostringstream d;
    d << "max |z| " << format_number(cmp.max_abs_z) << " over " << cmp.bins_compared << " bins";
    checks.push_back({name.str(), cmp.fraction_beyond_3sigma, 0.01, cmp.fraction_beyond_3sigma <= 0.01, d.str()});
    if (dir != nullptr) {
      ensure_directory(*dir);
      Table t;
      t.preamble = {"outgoing-energy histogram of s-wave pair collisions vs normalised sqrt(E) f(e1,e2;E)",
                    "e1 = " + format_number(e1), "e2 = " + format_number(e2),
                    "samples = " + std::to_string(config.n_samples), "seed = " + std::to_string(config.seed)};
      t.columns = {"e_lo", "e_hi", "count", "expected", "z_score"};
      const double nn = static_cast<double>(h.n_samples);
      for (std::size_t k = 0; k < h.bins(); ++k) {
        const double c = static_cast<double>(h.counts[k]);
        const double z = p[k] > 0.0 ? (c - nn * p[k]) / std::sqrt(nn * p[k] * (1.0 - p[k])) : kNaN;
        t.rows.push_back({h.bin_edges[k], h.bin_edges[k + 1], c, nn * p[k], z});
      }
      write_table(*dir / ("collision_" + std::to_string(i) + ".csv"), t);
    }
  }
  return checks;
}

int cmd_validate(const std::string& which, const RunOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    if (which != "kernels" && which != "walk" && which != "collision")
      throw ConfigError("validate", "unknown validator '" + which + "' (expected kernels, walk or collision)");
    const Config cfg = resolve_config(options);
    const std::filesystem::path dir = cfg.out;
    ensure_directory(dir);
    std::vector<Check> checks;
    if (which == "kernels") checks = validate_kernels(cfg, options.threads);
    if (which == "walk") checks = validate_walk(cfg, options.threads, &dir);
    if (which == "collision") checks = validate_collision(cfg, options.threads, &dir);
    bool ok = true;
    for (const auto& c : checks) {
      log << check_line(c) << '\n';
      ok = ok && c.pass;
    }
    write_table(dir / ("validate_" + which + ".csv"), checks_table(checks, which));
    write_text(dir / "manifest.txt",
               manifest_text(cfg, "validate " + which, {"passed = " + std::string(ok ? "true" : "false")}));
    return ok ? kExitOk : kExitCheckFailed;
  });
}

const std::vector<std::string>& scan_parameters() {
  static const std::vector<std::string> params = {"b", "alpha", "e_max", "n_e", "n_z", "damping", "tol", "max_iter"};
  return params;
}

int cmd_scan(const std::string& param, const std::vector<double>& values, bool hold_collisions,
             const RunOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    const auto& params = scan_parameters();
    if (std::find(params.begin(), params.end(), param) == params.end())
      throw ConfigError(param, "cannot scan over unknown parameter '" + param + "'");
    if (values.empty()) throw ConfigError(param, "scan needs at least one value");
    if (hold_collisions && param != "b") throw ConfigError(param, "holding b^2 alpha fixed only applies to b scans");
    const Config base = resolve_config(options);
    const double collisions = base.scenario.collision_count();
    const std::filesystem::path root = base.out;
    ensure_directory(root);

    Table t;
    t.preamble = {"scan over " + param, hold_collisions ? "b^2 alpha held at " + format_number(collisions) : "",
                  "mb_dev_final at the last depth node; crossover_z nan when absent"};
    if (!hold_collisions) t.preamble.erase(t.preamble.begin() + 1);
    t.columns = {"value", "b", "alpha", "collisions", "crossover_z", "mb_dev_final", "slope", "r2", "converged",
                 "iterations"};
    bool all_converged = true;
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto p = scenario_params(base.scenario);
      p[param] = values[i];
      if (hold_collisions) p["alpha"] = collisions / (values[i] * values[i]);
      Config cfg = base;
      const ScenarioBuild built = build_scenario(p);
      cfg.scenario = built.scenario;
      cfg.warnings = built.warnings;
      cfg.out = (root / (param + "_" + std::to_string(i))).string();
      for (const auto& w : cfg.warnings) log << "warning [" << param << " = " << format_number(values[i]) << "]: " << w << '\n';
      const SolveRun run = run_solve(cfg, options.threads, false);
      write_solve_outputs(cfg.out, cfg, run, "scan " + param);
      const SolveSummary& s = run.summary;
      all_converged = all_converged && s.converged;
      t.rows.push_back({values[i], cfg.scenario.b, cfg.scenario.alpha, cfg.scenario.collision_count(), s.crossover,
                        s.mb_dev_final, s.slope, s.r2, s.converged ? 1.0 : 0.0, static_cast<double>(s.iterations)});
      log << param << " = " << format_number(values[i]) << ": mb_dev_final " << format_number(s.mb_dev_final)
          << (s.converged ? "" : " (NOT converged)") << '\n';
    }
    write_table(root / ("scan_" + param + ".csv"), t);
    write_text(root / "manifest.txt", manifest_text(base, "scan " + param, {}));
    return all_converged ? kExitOk : kExitNotConverged;
  });
}

}  // namespace slabtherm
