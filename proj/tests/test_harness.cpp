#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "nsk/harness.hpp"

using namespace nsk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("nsk_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string error_of(std::string_view text) {
  try {
    (void)parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

CommandContext context(const fs::path& out, std::ostream& log, unsigned jobs = 1) {
  CommandContext c;
  c.out = out;
  c.jobs = jobs;
  c.log = &log;
  return c;
}

}  // namespace

TEST_CASE("parse_config fills defaults") {
  const auto c = parse_config("[exponents]\nalpha = 1\nbeta = -1\n");
  CHECK(c.run.grid.n == 256);
  CHECK(c.run.grid.length == 1.0);
  CHECK(c.run.exponents.gamma == 2.0);
  CHECK(c.run.exponents.epsilon == 0.01);
  CHECK(c.run.integrator.cfl == 0.25);
  CHECK(c.run.integrator.sample_every == 10);
  CHECK(c.run.initial.rho0.preset == "reference_density");
}

TEST_CASE("parse_config reads every section") {
  const auto c = parse_config(R"(seed = 42
# comment
[grid]
n = 128
length = 2.5
[exponents]
alpha = 1.5
beta = 0.25
gamma = 1.4
epsilon = 0
[initial]
rho0 = 1.5
rho0_modes = 1:0.1:0.2, 3:0:-0.05
u0 = 0
u0_modes = 2:0.01:0
floor = 0.5
[integrator]
cfl = 0.3
t_end = 0.02
sample_every = 4
dt = 1e-6
max_steps = 1000
[output]
dir = somewhere
precision = 12
[map]
resolution = 5
search = no
[sweep]
epsilon = 0.1, 0.05
n = 64, 128
[converge]
space_n = 32, 64
sample_every = 8, 4
)");
  CHECK(c.run.seed == 42);
  CHECK(c.map.seed == 42);
  CHECK(c.run.grid.length == 2.5);
  CHECK(c.run.exponents.gamma == 1.4);
  REQUIRE(c.run.initial.rho0.modes.size() == 2);
  CHECK(c.run.initial.rho0.modes[1].k == 3);
  CHECK(c.run.initial.rho0.modes[1].sin_amp == -0.05);
  CHECK(c.run.integrator.dt == 1e-6);
  CHECK(c.run.output.dir == "somewhere");
  CHECK(!c.map.search);
  CHECK(c.sweep.epsilon == std::vector<double>{0.1, 0.05});
  CHECK(c.sweep.n == std::vector<std::size_t>{64, 128});
  CHECK(c.converge.sample_every == std::vector<int>{8, 4});
}

TEST_CASE("parse_config errors") {
  CHECK_THAT(error_of("[grid]\nfoo = 1\n"), Catch::Matchers::ContainsSubstring("unknown key 'foo'"));
  CHECK_THAT(error_of("bar = 1\n"), Catch::Matchers::ContainsSubstring("unknown key 'bar'"));
  CHECK_THAT(error_of("[nowhere]\nx = 1\n"), Catch::Matchers::ContainsSubstring("unknown section"));
  CHECK_THAT(error_of("[exponents]\nalpha = 0.4\n"), Catch::Matchers::ContainsSubstring("α>1/2"));
  CHECK_THAT(error_of("[exponents]\nalpha = 5\ngamma = 2\n"), Catch::Matchers::ContainsSubstring("requires 2·gamma > alpha"));
  CHECK_THAT(error_of("[exponents]\ngamma = 1\n"), Catch::Matchers::ContainsSubstring("requires gamma > 1"));
  CHECK_THAT(error_of("\n\n[grid]\nlength = 1.0.0\n"), Catch::Matchers::ContainsSubstring("line 4"));
  CHECK_THAT(error_of("[grid]\nn = 12x\n"), Catch::Matchers::ContainsSubstring("malformed integer"));
  CHECK_THAT(error_of("[grid]\nn = 64\nn = 32\n"), Catch::Matchers::ContainsSubstring("duplicate key"));
  CHECK_THAT(error_of("[grid]\nn 64\n"), Catch::Matchers::ContainsSubstring("line 2"));
  CHECK_THAT(error_of("[initial]\nrho0 = water\n"), Catch::Matchers::ContainsSubstring("presets"));
  CHECK_THAT(error_of("[initial]\nrho0 = 1\nrho0_modes = 1:0\n"), Catch::Matchers::ContainsSubstring("k:cos:sin"));
  CHECK_THAT(error_of("[initial]\nrho0_modes = 1:0:0.1\n"), Catch::Matchers::ContainsSubstring("constant part"));
  CHECK_THAT(error_of("[initial]\nrho0 = 1\nrho0_modes = 1:0:0.9999\n"), Catch::Matchers::ContainsSubstring("floor"));
  CHECK_THAT(error_of("[integrator]\ncfl = 0\n"), Catch::Matchers::ContainsSubstring("cfl"));
  CHECK_THAT(error_of("[map]\nsearch = maybe\n"), Catch::Matchers::ContainsSubstring("boolean"));
}

TEST_CASE("resolved configuration text parses back unchanged") {
  const auto c = parse_config("seed = 9\n[exponents]\nalpha = 0.7\nbeta = 0.1\n[initial]\nrho0 = 1.25\nrho0_modes = 2:0.1:0.3\n"
                              "[sweep]\nalpha = 0.7, 0.9\n[integrator]\nt_end = 0.123456789012345678\n");
  const auto text = to_config_text(c);
  const auto back = parse_config(text);
  CHECK(to_config_text(back) == text);
  CHECK(back.run.integrator.t_end == c.run.integrator.t_end);
  CHECK(back.run.initial.rho0.modes[0].sin_amp == 0.3);
}

TEST_CASE("csv tables") {
  CsvTable t{"x/1", {"a", "b"}, {}};
  t.add_numeric_row({0.1, 1.0 / 3.0});
  t.add_numeric_row({-1e-300, 12345678.9});
  const auto back = parse_csv(t.str());
  CHECK(back.schema == "x/1");
  CHECK(back.columns == t.columns);
  CHECK(back.numeric_row(0) == std::vector<double>{0.1, 1.0 / 3.0});
  CHECK(back.numeric_row(1) == std::vector<double>{-1e-300, 12345678.9});
  CHECK_THROWS_AS(t.add_row({"1"}), Error);
  CHECK_THROWS_AS(parse_csv("no schema\na,b\n"), Error);
  CHECK_THROWS_AS(parse_csv("# schema=x/1\na,b\n1,2,3\n"), Error);
}

TEST_CASE("cmd_run writes re-parseable, deterministic diagnostics") {
  auto c = parse_config("[grid]\nn = 64\n[integrator]\nt_end = 0.003\n");
  std::ostringstream log;
  const auto a = scratch("run_a"), b = scratch("run_b");
  REQUIRE(cmd_run(c, context(a, log)) == exit_code::ok);
  REQUIRE(cmd_run(c, context(b, log)) == exit_code::ok);
  const auto text = detail::read_text(a / "diagnostics.csv");
  CHECK(text == detail::read_text(b / "diagnostics.csv"));
  const auto table = parse_csv(text);
  const auto records = records_from(table);
  const auto traj = run(c.run);
  REQUIRE(records.size() == traj.records.size());
  for (std::size_t i = 0; i < records.size(); ++i) CHECK(to_row(records[i]) == to_row(traj.records[i]));
  // E column is monotone
  for (std::size_t i = 1; i < records.size(); ++i) CHECK(records[i].E <= records[i - 1].E + 1e-9 * records[0].E);
  // sidecar holds the seed, schema and a configuration that parses back
  const auto side = detail::read_text(a / "run.sidecar.ini");
  CHECK_THAT(side, Catch::Matchers::ContainsSubstring("schema_version = nsk-diagnostics/1"));
  CHECK_THAT(side, Catch::Matchers::ContainsSubstring("# seed = 0"));
  CHECK(to_config_text(parse_config(side)) == to_config_text(c));
}

TEST_CASE("cmd_run reports solver termination with exit code 3") {
  auto c = parse_config("[grid]\nn = 64\n[integrator]\ndt = 1e-3\nt_end = 0.1\n");
  std::ostringstream log;
  const auto out = scratch("run_fail");
  CHECK(cmd_run(c, context(out, log)) == exit_code::terminated);
  CHECK(fs::exists(out / "diagnostics.csv"));
  CHECK_THAT(log.str(), Catch::Matchers::ContainsSubstring("stability_failure"));
}

TEST_CASE("cmd_check on 2 + sin(2 pi x)") {
  auto c = parse_config("[exponents]\nalpha = 1\nbeta = -1\nepsilon = 0\n[initial]\nrho0 = 2\nrho0_modes = 1:0:1\nu0 = 0\n");
  std::ostringstream log;
  const auto out = scratch("check");
  CHECK(cmd_check(c, context(out, log)) == exit_code::ok);
  const auto t = parse_csv(detail::read_text(out / "check.csv"));
  CHECK(t.schema == kCheckSchema);
  const auto status = t.column("status");
  std::size_t passed = 0;
  for (const auto& row : t.rows) {
    CHECK(row[status] != "fail");
    passed += row[status] == "pass";
  }
  CHECK(passed >= 10);
}

TEST_CASE("cmd_map flips the analytic column across the boundary lines") {
  auto c = parse_config("seed = 3\n[map]\nresolution = 5\nsamples = 5\nsearch = false\n");
  std::ostringstream log;
  const auto out = scratch("map");
  REQUIRE(cmd_map(c, context(out, log, 2)) == exit_code::ok);
  const auto text = detail::read_text(out / "map.csv");
  const auto t = parse_csv(text);
  REQUIRE(t.rows.size() == 25);
  const auto ca = t.column("alpha"), cb = t.column("beta"), cz = t.column("analytic");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double a = t.number(i, ca), b = t.number(i, cb);
    const auto& label = t.rows[i][cz];
    if (b > 2 * a - 1 + 1e-9 || b < 2 * a - 4 - 1e-9) CHECK(label == "inadmissible");
    else if (b < 2 * a - 1 - 1e-9 && b > 2 * a - 4 + 1e-9) CHECK(label == "admissible");
    else CHECK(label == "boundary");
  }
  // thread count does not change the output
  const auto out1 = scratch("map1");
  REQUIRE(cmd_map(c, context(out1, log, 1)) == exit_code::ok);
  CHECK(detail::read_text(out1 / "map.csv") == text);
}

TEST_CASE("sweep runs the cartesian product") {
  auto c = parse_config("[grid]\nn = 32\n[integrator]\nt_end = 0.002\n[sweep]\nalpha = 1, 1.5\nepsilon = 0.1, 0.05, 0.01\n");
  CHECK(sweep_configs(c).size() == 6);
  std::ostringstream log;
  const auto a = scratch("sweep_a"), b = scratch("sweep_b");
  REQUIRE(cmd_sweep(c, context(a, log, 1)) == exit_code::ok);
  REQUIRE(cmd_sweep(c, context(b, log, 3)) == exit_code::ok);
  CHECK(detail::read_text(a / "sweep.csv") == detail::read_text(b / "sweep.csv"));
  for (int i = 0; i < 6; ++i) {
    const auto name = "run_00" + std::to_string(i);
    CHECK(detail::read_text(a / name / "diagnostics.csv") == detail::read_text(b / name / "diagnostics.csv"));
  }
  CHECK_THROWS_AS(sweep_configs(parse_config("[sweep]\nalpha = 0.3\n")), ConfigError);
}

TEST_CASE("cmd_converge") {
  auto c = parse_config("[grid]\nn = 64\n[integrator]\nt_end = 0.01\n[converge]\ntime_n = 32\nspace_n = 32, 64\nsample_every = 20, 10\n");
  std::ostringstream log;
  const auto out = scratch("converge");
  REQUIRE(cmd_converge(c, context(out, log, 2)) == exit_code::ok);
  const auto t = parse_csv(detail::read_text(out / "converge.csv"));
  const auto study = t.column("study"), order = t.column("order");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i][study] == "time" && !std::isnan(t.number(i, order))) CHECK(std::abs(t.number(i, order) - 4.0) <= 0.2);
    if (t.rows[i][study] == "sampling" && !std::isnan(t.number(i, order))) CHECK(t.number(i, order) >= 1.9);
  }
  std::vector<std::string> failures;
  CHECK_THROWS_AS(convergence_study(parse_config("[converge]\nspace_n = 64\n"), 1, failures), ConfigError);
}
