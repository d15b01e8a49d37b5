#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "slabtherm/commands.hpp"

using namespace slabtherm;
namespace fs = std::filesystem;

namespace {

struct ParseFailure {
  std::string key;
  int line = 0;
};

ParseFailure parse_failure(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return {e.key(), e.line()};
  }
  return {"<none>", -1};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("slabtherm_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  write_text(p, text);
  return p;
}

RunOptions options_for(const fs::path& cfg, const fs::path& out, unsigned threads = 1) {
  RunOptions o;
  o.config_path = cfg.string();
  o.out_dir = out.string();
  o.threads = threads;
  return o;
}

}  // namespace

TEST_CASE("parse the reference configuration") {
  const Config c = parse_config("b = 50\nalpha = 0.004\n");
  CHECK(c.scenario.b == 50.0);
  CHECK(c.scenario.alpha == 0.004);
  CHECK(c.scenario.n_e == 240);
  CHECK(c.scenario.n_z == 250);
  CHECK(c.seed == 1);
  CHECK(c.out == "out");
  CHECK(c.scheme == Scheme::accelerated);
  CHECK(c.warnings.empty());
}

TEST_CASE("comments and blank lines") {
  const Config c = parse_config("# slab\n\n  b = 10   # thickness\nalpha=0.1\n\tseed = 42\n");
  CHECK(c.scenario.b == 10.0);
  CHECK(c.seed == 42);
  CHECK(c.warnings.size() == 1);
}

TEST_CASE("configuration errors") {
  auto f = parse_failure("");
  CHECK(f.key == "b");
  f = parse_failure("b = 50\nb = 40\nalpha = 0\n");
  CHECK(f.key == "b");
  CHECK(f.line == 2);
  f = parse_failure("b = 50\nalpha = 0\nbeta = 3\n");
  CHECK(f.key == "beta");
  CHECK(f.line == 3);
  f = parse_failure("b = fifty\nalpha = 0\n");
  CHECK(f.key == "b");
  CHECK(f.line == 1);
  f = parse_failure("b = 50\nalpha = -1\n");
  CHECK(f.key == "alpha");
  CHECK(f.line == 2);
  f = parse_failure("b = 50\nalpha = 0\nseed = -3\n");
  CHECK(f.key == "seed");
  f = parse_failure("b = 50\nalpha = 0\nscheme = newton\n");
  CHECK(f.key == "scheme");
  f = parse_failure("b = 50\nalpha = 0\nspectrum_depths = 1, 70\n");
  CHECK(f.key == "spectrum_depths");
  f = parse_failure("b = 50\nalpha = 0\ncollision_pairs = 1:0\n");
  CHECK(f.key == "collision_pairs");
  f = parse_failure("b = 50\nalpha 0\n");
  CHECK(f.line == 2);
}

TEST_CASE("render and parse round trip") {
  Config c = parse_config(
      "b = 12.5\nalpha = 0.0123456789012345\nn_z = 77\nseed = 18446744073709551615\nout = some dir/x\n"
      "spectrum_depths = 0.1, 3.3333333333333335\ncollision_pairs = 1:1, 0.3:2.7\nscheme = source\n"
      "anderson_depth = 4\ntol = 1e-12\n");
  const Config again = parse_config(render_config(c));
  CHECK(again == c);
  CHECK(render_config(again) == render_config(c));
  CHECK(again.out == "some dir/x");
  CHECK(again.seed == 18446744073709551615ull);

  const Config empty_lists = parse_config("b = 1\nalpha = 0\nspectrum_depths =\ncollision_pairs =\n");
  CHECK(empty_lists.collision_pairs.empty());
  CHECK(parse_config(render_config(empty_lists)) == empty_lists);
}

TEST_CASE("table render and parse") {
  Table t;
  t.preamble = {"first", "second line"};
  t.columns = {"x", "y"};
  t.rows = {{0.1, 1.0 / 3.0}, {std::nan(""), -2.5e-300}};
  const std::string text = render_table(t);
  CHECK(text.find("# first\n") == 0);
  CHECK(text.find("0.33333333333333331") != std::string::npos);
  CHECK(text.find("nan") != std::string::npos);
  const Table back = parse_table(text);
  CHECK(back.preamble == t.preamble);
  CHECK(back.columns == t.columns);
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[0] == t.rows[0]);
  CHECK(std::isnan(back.rows[1][0]));
  CHECK(back.rows[1][1] == t.rows[1][1]);
  CHECK(render_table(back) == text);
}

TEST_CASE("I/O failures") {
  CHECK_THROWS_AS(read_text("/nonexistent/slabtherm/file.csv"), IoError);
  const fs::path dir = scratch("io");
  write_text(dir / "blocker", "x");
  CHECK_THROWS_AS(ensure_directory(dir / "blocker"), IoError);
  CHECK_THROWS_AS(write_text(dir / "blocker" / "inner.txt", "y"), IoError);
  CHECK_THROWS_AS(load_config((dir / "missing.cfg").string()), std::runtime_error);
}

TEST_CASE("solve without interactions has no inelastic flux") {
  const fs::path dir = scratch("solve_alpha0");
  const fs::path cfg = write_config(dir, "b = 5\nalpha = 0\nn_z = 25\nn_e = 40\ne_max = 4\n");
  std::ostringstream log;
  CHECK(cmd_solve(options_for(cfg, dir / "out"), log) == kExitOk);
  const Table p = read_table(dir / "out" / "profile.csv");
  CHECK(p.columns == std::vector<std::string>{"z", "j_total", "j_el", "j_inel", "mb_dev"});
  CHECK(p.rows.size() == 25);
  for (const auto& row : p.rows) {
    CHECK(row[3] == 0.0);
    CHECK(row[1] == row[2]);
  }
  for (const char* f : {"spectrum_0.csv", "spectrum_1.csv", "spectrum_2.csv", "conservation.csv", "residuals.csv",
                        "summary.csv", "manifest.txt"})
    CHECK(fs::exists(dir / "out" / f));
}

TEST_CASE("non-convergence exits with code 2 and still writes outputs") {
  const fs::path dir = scratch("noconv");
  const fs::path cfg = write_config(dir, "b = 5\nalpha = 0.04\nn_z = 25\nn_e = 40\ne_max = 4\nmax_iter = 1\n");
  std::ostringstream log;
  CHECK(cmd_solve(options_for(cfg, dir / "out"), log) == kExitNotConverged);
  CHECK(log.str().find("NOT converged") != std::string::npos);
  const Table r = read_table(dir / "out" / "residuals.csv");
  CHECK(r.rows.size() == 1);
  const Table s = read_table(dir / "out" / "summary.csv");
  CHECK(s.rows.at(0).at(0) == 0.0);
}

TEST_CASE("configuration and I/O failures exit with code 1") {
  const fs::path dir = scratch("bad");
  std::ostringstream log;
  CHECK(cmd_solve(options_for(dir / "missing.cfg", dir / "out"), log) == kExitIo);
  const fs::path cfg = write_config(dir, "b = 5\nalpha = 0\nwhat = 1\n");
  std::ostringstream log2;
  CHECK(cmd_solve(options_for(cfg, dir / "out"), log2) == kExitIo);
  CHECK(log2.str().find("line 3") != std::string::npos);

  const fs::path good = write_config(dir, "b = 5\nalpha = 0\nn_z = 25\nn_e = 40\ne_max = 4\n");
  std::ostringstream log3;
  CHECK(cmd_validate("everything", options_for(good, dir / "out"), log3) == kExitIo);
  std::ostringstream log4;
  CHECK(cmd_scan("alpha", {}, false, options_for(good, dir / "out"), log4) == kExitIo);
  std::ostringstream log5;
  CHECK(cmd_scan("colour", {1.0}, false, options_for(good, dir / "out"), log5) == kExitIo);
  std::ostringstream log6;
  CHECK(cmd_scan("alpha", {0.01}, true, options_for(good, dir / "out"), log6) == kExitIo);
}

TEST_CASE("manifest records the configuration and repeated runs are identical") {
  const fs::path dir = scratch("repeat");
  const fs::path cfg = write_config(dir, "b = 5\nalpha = 0.04\nn_z = 25\nn_e = 40\ne_max = 4\n");
  std::ostringstream log;
  REQUIRE(cmd_solve(options_for(cfg, dir / "a", 1), log) == kExitOk);
  REQUIRE(cmd_solve(options_for(cfg, dir / "b", 3), log) == kExitOk);
  const std::string manifest = read_text(dir / "a" / "manifest.txt");
  CHECK(manifest.find("# command = solve") != std::string::npos);
  CHECK(manifest.find("alpha = 0.040000000000000001") != std::string::npos);
  CHECK(manifest.find("converged = true") != std::string::npos);
  CHECK(manifest.find("out = " + (dir / "a").string()) != std::string::npos);
  for (const char* f : {"profile.csv", "spectrum_0.csv", "spectrum_1.csv", "spectrum_2.csv", "conservation.csv",
                        "residuals.csv", "summary.csv"}) {
    CAPTURE(f);
    CHECK(read_text(dir / "a" / f) == read_text(dir / "b" / f));
  }
}

TEST_CASE("kernel validator passes on a small grid") {
  const fs::path dir = scratch("validate");
  const fs::path cfg = write_config(dir, "b = 5\nalpha = 0.01\nn_e = 120\ne_max = 6\n");
  std::ostringstream log;
  CHECK(cmd_validate("kernels", options_for(cfg, dir / "out"), log) == kExitOk);
  CHECK(log.str().find("FAIL") == std::string::npos);
}

TEST_CASE("small scan writes one row per value") {
  const fs::path dir = scratch("scan");
  const fs::path cfg = write_config(dir, "b = 5\nalpha = 0.04\nn_z = 25\nn_e = 40\ne_max = 4\n");
  std::ostringstream log;
  REQUIRE(cmd_scan("alpha", {0.02, 0.04}, false, options_for(cfg, dir / "out"), log) == kExitOk);
  const Table t = read_table(dir / "out" / "scan_alpha.csv");
  CHECK(t.rows.size() == 2);
  CHECK(t.rows[0][0] == 0.02);
  CHECK(fs::exists(dir / "out" / "alpha_0" / "profile.csv"));
  CHECK(fs::exists(dir / "out" / "alpha_1" / "summary.csv"));
}
