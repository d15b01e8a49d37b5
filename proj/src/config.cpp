#include "slabtherm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace slabtherm {

namespace {

constexpr std::string_view kWhitespace = " \t\r\n";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kWhitespace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kWhitespace);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

// Keys forwarded to build_scenario.
const std::set<std::string, std::less<>> kScenarioKeys = {"b",       "alpha", "e_i", "e_max",   "n_e",
                                                           "n_z",     "damping", "tol", "max_iter"};

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "b",    "alpha",     "e_i",       "e_max", "n_e",             "n_z",             "damping", "tol",
      "max_iter", "seed", "n_walkers", "n_samples", "out", "spectrum_depths", "collision_pairs", "scheme",
      "anderson_depth"};
  return keys;
}

bool Config::operator==(const Config& o) const {
  const Scenario& a = scenario;
  const Scenario& c = o.scenario;
  return a.b == c.b && a.alpha == c.alpha && a.e_i == c.e_i && a.e_max == c.e_max && a.n_e == c.n_e &&
         a.n_z == c.n_z && a.damping == c.damping && a.tol == c.tol && a.max_iter == c.max_iter &&
         seed == o.seed && n_walkers == o.n_walkers && n_samples == o.n_samples && out == o.out &&
         spectrum_depths == o.spectrum_depths && collision_pairs == o.collision_pairs && scheme == o.scheme &&
         anderson_depth == o.anderson_depth;
}

Config parse_config(std::string_view text) {
  Config cfg;
  std::map<std::string, double> numeric;
  std::map<std::string, int> line_of;
  const std::set<std::string, std::less<>> known(config_keys().begin(), config_keys().end());

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("", "expected 'key = value'", line_no);
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", "empty key", line_no);
    if (!known.contains(key)) throw ConfigError(key, "unknown key '" + key + "'", line_no);
    if (line_of.contains(key)) throw ConfigError(key, "duplicate key '" + key + "'", line_no);
    line_of[key] = line_no;
    auto bad = [&](const std::string& what) {
      return ConfigError(key, "cannot parse value of '" + key + "': " + what, line_no);
    };

    if (kScenarioKeys.contains(key)) {
      double v;
      if (!parse_double(value, v)) throw bad("expected a finite number");
      numeric[key] = v;
    } else if (key == "seed" || key == "n_walkers" || key == "n_samples" || key == "anderson_depth") {
      std::uint64_t v;
      if (!parse_u64(value, v)) throw bad("expected a non-negative integer");
      if (key == "seed") cfg.seed = v;
      if (key == "n_walkers") cfg.n_walkers = v;
      if (key == "n_samples") cfg.n_samples = v;
      if (key == "anderson_depth") cfg.anderson_depth = v;
    } else if (key == "out") {
      if (value.empty()) throw bad("empty path");
      cfg.out = std::string(value);
    } else if (key == "scheme") {
      if (value == "source")
        cfg.scheme = Scheme::source;
      else if (value == "accelerated")
        cfg.scheme = Scheme::accelerated;
      else
        throw bad("expected 'source' or 'accelerated'");
    } else if (key == "spectrum_depths") {
      cfg.spectrum_depths.clear();
      if (!value.empty()) {
        for (auto part : split(value, ',')) {
          double v;
          if (!parse_double(part, v)) throw bad("expected a comma-separated list of numbers");
          cfg.spectrum_depths.push_back(v);
        }
      }
    } else if (key == "collision_pairs") {
      cfg.collision_pairs.clear();
      if (!value.empty()) {
        for (auto part : split(value, ',')) {
          const auto colon = part.find(':');
          double e1, e2;
          if (colon == std::string_view::npos || !parse_double(trim(part.substr(0, colon)), e1) ||
              !parse_double(trim(part.substr(colon + 1)), e2) || !(e1 > 0.0) || !(e2 > 0.0))
            throw bad("expected pairs like '1:1, 1:4' with positive energies");
          cfg.collision_pairs.emplace_back(e1, e2);
        }
      }
    }
  }

  try {
    ScenarioBuild built = build_scenario(numeric);
    cfg.scenario = built.scenario;
    cfg.warnings = std::move(built.warnings);
  } catch (const ConfigError& e) {
    auto it = line_of.find(e.key());
    throw ConfigError(e.key(), e.what(), it == line_of.end() ? 0 : it->second);
  }
  for (double z : cfg.spectrum_depths) {
    if (!(z >= 0.0 && z <= cfg.scenario.b))
      throw ConfigError("spectrum_depths", "spectrum depths must lie in [0, b]", line_of["spectrum_depths"]);
  }
  if (cfg.n_walkers == 0) throw ConfigError("n_walkers", "n_walkers must be positive", line_of["n_walkers"]);
  if (cfg.n_samples == 0) throw ConfigError("n_samples", "n_samples must be positive", line_of["n_samples"]);
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw std::runtime_error("cannot read config file '" + path + "'");
  return parse_config(buf.str());
}

std::string render_config(const Config& c) {
  const Scenario& s = c.scenario;
  std::ostringstream o;
  o << "b = " << format_number(s.b) << '\n'
    << "alpha = " << format_number(s.alpha) << '\n'
    << "e_i = " << format_number(s.e_i) << '\n'
    << "e_max = " << format_number(s.e_max) << '\n'
    << "n_e = " << s.n_e << '\n'
    << "n_z = " << s.n_z << '\n'
    << "damping = " << format_number(s.damping) << '\n'
    << "tol = " << format_number(s.tol) << '\n'
    << "max_iter = " << s.max_iter << '\n'
    << "seed = " << c.seed << '\n'
    << "n_walkers = " << c.n_walkers << '\n'
    << "n_samples = " << c.n_samples << '\n'
    << "out = " << c.out << '\n'
    << "spectrum_depths =";
  for (std::size_t i = 0; i < c.spectrum_depths.size(); ++i)
    o << (i ? ", " : " ") << format_number(c.spectrum_depths[i]);
  o << "\ncollision_pairs =";
  for (std::size_t i = 0; i < c.collision_pairs.size(); ++i)
    o << (i ? ", " : " ") << format_number(c.collision_pairs[i].first) << ':'
      << format_number(c.collision_pairs[i].second);
  o << "\nscheme = " << (c.scheme == Scheme::source ? "source" : "accelerated") << '\n'
    << "anderson_depth = " << c.anderson_depth << '\n';
  return o.str();
}

SolverControls controls_from(const Config& config, unsigned threads) {
  SolverControls ctl = controls_from(config.scenario, threads);
  ctl.scheme = config.scheme;
  ctl.anderson_depth = config.anderson_depth;
  return ctl;
}

}  // namespace slabtherm
