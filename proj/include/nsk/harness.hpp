#pragma once

// Subcommands behind the command-line tool. Each writes its CSV artifacts plus a sidecar
// with the seed, schema version and resolved configuration, and returns the exit code.

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nsk/coercivity.hpp"
#include "nsk/config.hpp"
#include "nsk/csv.hpp"
#include "nsk/diagnostics.hpp"
#include "nsk/functionals.hpp"
#include "nsk/solver.hpp"

namespace nsk {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int invalid = 2;
inline constexpr int terminated = 3;
}  // namespace exit_code

namespace fs = std::filesystem;

struct CommandContext {
  fs::path out = "out";
  unsigned jobs = 1;
  std::ostream* log = nullptr;

  std::ostream& os() const { return *log; }
};

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Runs fn(i) for i < count on up to `jobs` threads; the first exception is rethrown.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  {
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Sidecar: comment lines with schema, seed and time, then the resolved configuration.
/// The file parses back as a configuration.
inline void write_sidecar(const fs::path& path, const Config& config, std::string_view schema) {
  std::ostringstream os;
  os << "# schema_version = " << schema << "\n# seed = " << config.run.seed << "\n# written = " << detail::timestamp()
     << "\n" << to_config_text(config);
  detail::write_text(path, os.str());
}

inline CsvTable diagnostics_table(const Trajectory& traj, int precision = 17) {
  CsvTable t{std::string(kDiagnosticsSchema), diagnostics_columns(), {}};
  for (const auto& r : traj.records) t.add_numeric_row(to_row(r), precision);
  return t;
}

inline std::vector<DiagnosticsRecord> records_from(const CsvTable& t) {
  if (t.schema != kDiagnosticsSchema) throw Error("csv: expected schema " + std::string(kDiagnosticsSchema));
  if (t.columns != diagnostics_columns()) throw Error("csv: diagnostics header does not match the schema");
  std::vector<DiagnosticsRecord> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) out.push_back(from_row(t.numeric_row(i)));
  return out;
}

inline int cmd_run(const Config& config, const CommandContext& ctx) {
  const auto traj = run(config.run);
  detail::write_text(ctx.out / "diagnostics.csv", diagnostics_table(traj, config.run.output.precision).str());
  write_sidecar(ctx.out / "run.sidecar.ini", config, kDiagnosticsSchema);
  const auto& r0 = traj.records.front();
  const auto& r1 = traj.records.back();
  ctx.os() << "run: " << to_string(traj.reason) << " at t = " << r1.t << " after " << traj.steps << " steps, "
           << traj.records.size() << " samples\n"
           << "  energy residual " << std::abs(r1.energy_residual) / r0.E << " (relative), BD residual "
           << std::abs(r1.bd_residual) / r0.F << ", mass drift " << std::abs(r1.mass - r0.mass) / r0.mass << "\n";
  if (traj.reason != Termination::completed) {
    ctx.os() << "  " << traj.message << "\n";
    return exit_code::terminated;
  }
  return exit_code::ok;
}

struct CheckLine {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  std::string status;  // pass, fail, skip
  std::string note;
};

namespace detail {

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s > 0.0 ? std::abs(a - b) / s : 0.0;
}

}  // namespace detail

/// Cross-form identities and inequalities on the configured initial profile.
inline std::vector<CheckLine> check_profile(const Config& config) {
  const auto& rc = config.run;
  const Model model(rc.params());
  const auto s = initial_state(rc);
  const auto& rho = s.rho;
  const auto& law = model.law;
  const auto& p = model.params;
  const bool theta_zero = std::abs(p.theta) <= kThetaZeroTolerance;
  std::vector<CheckLine> out;

  auto equal = [&](std::string name, double value, double reference, double tol) {
    const double d = detail::rel_diff(value, reference);
    out.push_back({std::move(name), value, reference, tol, d <= tol ? "pass" : "fail", ""});
  };
  auto below = [&](std::string name, double lhs, double rhs, double tol) {
    out.push_back({std::move(name), lhs, rhs, tol, lhs <= rhs * (1.0 + tol) ? "pass" : "fail", ""});
  };
  auto skip = [&](std::string name, std::string why) { out.push_back({std::move(name), 0, 0, 0, "skip", std::move(why)}); };

  const double jd = j_direct(rho, law);
  equal("j_general_vs_direct", j_general_form(rho, law), jd, 1e-7);
  if (!law.power_law()) {
    skip("j_theta_vs_direct", "theta form needs eps = 0");
  } else {
    equal("j_theta_vs_direct", j_theta_form(rho, law), jd, 1e-7);
  }
  if (theta_zero) {
    skip("bernis", "no estimate at theta = 0");
  } else {
    const auto b = bernis_pair(rho, p.theta);
    below("bernis", b.lhs, b.rhs, 1e-10);
    const auto [ibp_a, ibp_b] = integration_by_parts_pair(rho, p.theta);
    equal("integration_by_parts", ibp_a, ibp_b, 1e-9);
  }
  const auto gb = generalized_bernis_pair(rho, law);
  if (p.delta >= -2.0 && p.delta <= 1.0) {
    below("generalized_bernis", gb.lhs, gb.rhs, 1e-10);
  } else {
    skip("generalized_bernis", "holds for -2 <= delta <= 1 only");
  }
  if (p.delta > -2.0 && p.delta < 1.0) {
    const auto g = gbd_bound_pair(rho, law);
    out.push_back({"gbd_bound_ratio", g.lhs > 0.0 ? g.rhs / g.lhs : 0.0, 0.0, 0.0, g.rhs > 0.0 || g.lhs == 0.0 ? "pass" : "fail",
                   "J over the weighted second-order norm; positive in the range"});
  } else {
    skip("gbd_bound_ratio", "needs -2 < delta < 1");
  }
  if (!law.power_law() || theta_zero || std::abs(p.beta + 2.0) <= kThetaZeroTolerance) {
    skip("korteweg_decomposition", "constants exist for eps = 0, beta != -2, theta != 0");
  } else {
    const auto c = korteweg_weak_constants(p);
    const auto force = korteweg_force(rho, law);
    const double bar = relative_l2_difference(force, korteweg_divergence_bar(rho, c));
    const double th = relative_l2_difference(force, korteweg_divergence_theta(rho, c));
    out.push_back({"korteweg_decomposition_bar", bar, 0.0, 1e-8, bar <= 1e-8 ? "pass" : "fail", ""});
    out.push_back({"korteweg_decomposition_theta", th, 0.0, 1e-8, th <= 1e-8 ? "pass" : "fail", ""});
  }
  const auto rec = sample(s, model, ResidualHistory{});
  equal("energy_two_routes", rec.E, energy(rho, s.u, model), 1e-13);
  equal("bd_entropy_two_routes", rec.F, bd_entropy(rho, s.u, model), 1e-13);
  equal("j_two_routes", rec.J, jd, 1e-10);
  const double tail = spectral::modal_tail_fraction(rho);
  out.push_back({"modal_tail", tail, 0.0, kResolutionTailLimit, tail < kResolutionTailLimit ? "pass" : "fail",
                 "spectral energy fraction in the top 10% of modes"});
  return out;
}

inline int cmd_check(const Config& config, const CommandContext& ctx) {
  const auto lines = check_profile(config);
  CsvTable t{std::string(kCheckSchema), {"name", "value", "reference", "tolerance", "status"}, {}};
  bool ok = true;
  for (const auto& l : lines) {
    t.add_row({l.name, format_number(l.value), format_number(l.reference), format_number(l.tolerance), l.status});
    ok = ok && l.status != "fail";
    ctx.os() << std::left << std::setw(30) << l.name << ' ' << std::setw(5) << l.status << "  " << std::setprecision(6)
             << l.value;
    if (l.reference != 0.0) ctx.os() << " vs " << l.reference;
    if (!l.note.empty()) ctx.os() << "  (" << l.note << ")";
    ctx.os() << '\n';
  }
  detail::write_text(ctx.out / "check.csv", t.str());
  write_sidecar(ctx.out / "check.sidecar.ini", config, kCheckSchema);
  ctx.os() << (ok ? "check: all passed\n" : "check: FAILED\n");
  return ok ? exit_code::ok : exit_code::check_failed;
}

inline const std::vector<std::string>& map_columns() {
  static const std::vector<std::string> cols{
      "alpha",    "beta",        "analytic",        "coefficient_value", "distance_to_boundary",
      "sampled_min_J", "samples", "resolution_warnings", "searched", "counterexample_found",
      "counterexample_n", "counterexample_J", "counterexample_J_direct", "seed"};
  return cols;
}

inline CsvTable map_table(const std::vector<AdmissibilityVerdict>& cells, const MapOptions& opt) {
  CsvTable t{std::string(kMapSchema), map_columns(), {}};
  for (const auto& v : cells) {
    const double dist = distance_to_boundary(v.alpha, v.beta);
    const bool searched = opt.search && v.analytic == Analytic::inadmissible && dist >= opt.search_distance;
    const auto& cx = v.counterexample;
    t.add_row({format_number(v.alpha), format_number(v.beta), to_string(v.analytic), format_number(v.coefficient_value),
               format_number(dist), format_number(v.sampled_min_J), std::to_string(v.samples),
               std::to_string(v.resolution_warnings), searched ? "1" : "0", cx ? "1" : "0",
               std::to_string(cx ? cx->n : 0), format_number(cx ? cx->j_refined : 0.0),
               format_number(cx ? cx->j_direct_refined : 0.0), std::to_string(v.seed)});
  }
  return t;
}

inline int cmd_map(const Config& config, const CommandContext& ctx) {
  auto opt = config.map;
  opt.seed = config.run.seed;
  opt.jobs = ctx.jobs;
  const auto cells = admissibility_map(opt);
  detail::write_text(ctx.out / "map.csv", map_table(cells, opt).str());
  write_sidecar(ctx.out / "map.sidecar.ini", config, kMapSchema);
  std::size_t adm = 0, bad_adm = 0, searched = 0, found = 0;
  for (const auto& v : cells) {
    if (v.analytic != Analytic::inadmissible) {
      ++adm;
      if (v.sampled_min_J < -1e-10) ++bad_adm;
    } else if (opt.search && distance_to_boundary(v.alpha, v.beta) >= opt.search_distance) {
      ++searched;
      if (v.counterexample) ++found;
    }
  }
  ctx.os() << "map: " << cells.size() << " cells, " << adm << " admissible (" << bad_adm
           << " with negative sampled J), counterexamples found on " << found << " of " << searched
           << " searched inadmissible cells\n";
  return exit_code::ok;
}

struct ConvergeRow {
  std::string study;
  std::size_t level = 0;
  double parameter = 0.0;
  double error = 0.0;
  double order = NAN;
};

inline std::vector<ConvergeRow> convergence_study(const Config& config, unsigned jobs, std::vector<std::string>& failures) {
  const auto& base = config.run;
  const auto& cc = config.converge;
  if (cc.space_n.size() < 2) throw ConfigError("converge: space_n needs at least two grids");
  if (cc.sample_every.size() < 2) throw ConfigError("converge: sample_every needs at least two entries");
  if (!(cc.time_cfl > 0.0 && cc.time_cfl <= 1.0)) throw ConfigError("converge: requires 0 < time_cfl <= 1");
  for (std::size_t i = 1; i < cc.space_n.size(); ++i) {
    if (cc.space_n[i] % cc.space_n[0] != 0) throw ConfigError("converge: every space_n must be a multiple of the first");
  }

  std::vector<RunConfig> runs;
  // time: dt0, dt0/2, dt0/4 on time_n
  RunConfig tc = base;
  tc.grid.n = cc.time_n;
  tc.integrator.sample_every = 1 << 30;
  validate(tc);
  const double T = tc.integrator.t_end;
  const double dt0 = T / std::ceil(T / stable_dt(initial_state(tc), Model(tc.params()), cc.time_cfl));
  for (int i = 0; i < 3; ++i) {
    auto c = tc;
    c.integrator.dt = dt0 / (1 << i);
    runs.push_back(c);
  }
  for (auto n : cc.space_n) {
    auto c = base;
    c.grid.n = n;
    c.integrator.sample_every = 1 << 30;
    runs.push_back(c);
  }
  for (int s : cc.sample_every) {
    auto c = base;
    c.integrator.sample_every = s;
    runs.push_back(c);
  }
  for (const auto& c : runs) validate(c);

  std::vector<Trajectory> trajs(runs.size());
  detail::parallel_for(runs.size(), jobs, [&](std::size_t i) { trajs[i] = run(runs[i]); });
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    if (trajs[i].reason != Termination::completed) failures.push_back(trajs[i].message);
  }
  if (!failures.empty()) return {};

  auto diff = [](const State& a, const State& b, std::size_t stride_a, std::size_t stride_b, std::size_t n) {
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      e = std::max(e, std::abs(a.rho[j * stride_a] - b.rho[j * stride_b]) + std::abs(a.u[j * stride_a] - b.u[j * stride_b]));
    }
    return e;
  };
  std::vector<ConvergeRow> rows;
  const auto& t0 = trajs[0].states.back();
  const auto& t1 = trajs[1].states.back();
  const auto& t2 = trajs[2].states.back();
  const double e1 = diff(t0, t1, 1, 1, cc.time_n), e2 = diff(t1, t2, 1, 1, cc.time_n);
  rows.push_back({"time", 0, dt0, e1, NAN});
  rows.push_back({"time", 1, dt0 / 2, e2, std::log2(e1 / e2)});

  const std::size_t ns = cc.space_n.size();
  const auto& fine = trajs[3 + ns - 1].states.back();
  const std::size_t n0 = cc.space_n[0];
  double prev = NAN;
  for (std::size_t i = 0; i + 1 < ns; ++i) {
    const auto& st = trajs[3 + i].states.back();
    const double e = diff(st, fine, cc.space_n[i] / n0, cc.space_n.back() / n0, n0);
    rows.push_back({"space", i, static_cast<double>(cc.space_n[i]), e, std::isnan(prev) ? NAN : std::log(prev / e) / std::log(static_cast<double>(cc.space_n[i]) / static_cast<double>(cc.space_n[i - 1]))});
    prev = e;
  }

  prev = NAN;
  for (std::size_t i = 0; i < cc.sample_every.size(); ++i) {
    const auto& tr = trajs[3 + ns + i];
    const double e = std::abs(tr.records.back().energy_residual) / tr.records.front().E;
    const double ratio = i ? static_cast<double>(cc.sample_every[i - 1]) / cc.sample_every[i] : NAN;
    rows.push_back({"sampling", i, static_cast<double>(cc.sample_every[i]), e, i ? std::log(prev / e) / std::log(ratio) : NAN});
    prev = e;
  }
  return rows;
}

inline int cmd_converge(const Config& config, const CommandContext& ctx) {
  std::vector<std::string> failures;
  const auto rows = convergence_study(config, ctx.jobs, failures);
  write_sidecar(ctx.out / "converge.sidecar.ini", config, kConvergeSchema);
  if (!failures.empty()) {
    for (const auto& f : failures) ctx.os() << "converge: run terminated: " << f << '\n';
    return exit_code::terminated;
  }
  CsvTable t{std::string(kConvergeSchema), {"study", "level", "parameter", "error", "order"}, {}};
  for (const auto& r : rows) {
    t.add_row({r.study, std::to_string(r.level), format_number(r.parameter), format_number(r.error), format_number(r.order)});
    ctx.os() << std::left << std::setw(9) << r.study << " level " << r.level << "  parameter " << r.parameter
             << "  error " << r.error;
    if (!std::isnan(r.order)) ctx.os() << "  order " << r.order;
    ctx.os() << '\n';
  }
  detail::write_text(ctx.out / "converge.csv", t.str());
  return exit_code::ok;
}

/// Cartesian product of the sweep lists over the base run; empty lists keep the base value.
inline std::vector<Config> sweep_configs(const Config& config) {
  const auto& w = config.sweep;
  const auto& e = config.run.exponents;
  auto or_base = [](const std::vector<double>& v, double b) { return v.empty() ? std::vector<double>{b} : v; };
  const auto alphas = or_base(w.alpha, e.alpha), betas = or_base(w.beta, e.beta), gammas = or_base(w.gamma, e.gamma),
             epss = or_base(w.epsilon, e.epsilon);
  const auto ns = w.n.empty() ? std::vector<std::size_t>{config.run.grid.n} : w.n;
  std::vector<Config> out;
  for (double a : alphas)
    for (double b : betas)
      for (double g : gammas)
        for (double ep : epss)
          for (auto n : ns) {
            Config c = config;
            c.run.exponents = {a, b, g, ep};
            c.run.grid.n = n;
            c.sweep = {};
            validate(c.run);
            (void)initial_state(c.run);
            out.push_back(std::move(c));
          }
  return out;
}

inline int cmd_sweep(const Config& config, const CommandContext& ctx) {
  const auto configs = sweep_configs(config);
  std::vector<Trajectory> trajs(configs.size());
  detail::parallel_for(configs.size(), ctx.jobs, [&](std::size_t i) {
    trajs[i] = run(configs[i].run);
    std::ostringstream name;
    name << "run_" << std::setw(3) << std::setfill('0') << i;
    const auto dir = ctx.out / name.str();
    detail::write_text(dir / "diagnostics.csv", diagnostics_table(trajs[i], configs[i].run.output.precision).str());
    write_sidecar(dir / "run.sidecar.ini", configs[i], kDiagnosticsSchema);
  });
  CsvTable t{std::string(kSweepSchema),
             {"index", "alpha", "beta", "gamma", "epsilon", "n", "reason", "steps", "t_final", "energy_residual",
              "bd_residual", "min_rho"},
             {}};
  bool all = true;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& e = configs[i].run.exponents;
    const auto& tr = trajs[i];
    const auto& r0 = tr.records.front();
    const auto& r1 = tr.records.back();
    double min_rho = INFINITY;
    for (const auto& r : tr.records) min_rho = std::min(min_rho, r.min_rho);
    t.add_row({std::to_string(i), format_number(e.alpha), format_number(e.beta), format_number(e.gamma),
               format_number(e.epsilon), std::to_string(configs[i].run.grid.n), to_string(tr.reason),
               std::to_string(tr.steps), format_number(r1.t), format_number(std::abs(r1.energy_residual) / r0.E),
               format_number(std::abs(r1.bd_residual) / r0.F), format_number(min_rho)});
    all = all && tr.reason == Termination::completed;
    ctx.os() << "run_" << std::setw(3) << std::setfill('0') << i << std::setfill(' ') << "  alpha " << e.alpha
             << " beta " << e.beta << " gamma " << e.gamma << " eps " << e.epsilon << " n " << configs[i].run.grid.n
             << ": " << to_string(tr.reason) << '\n';
  }
  detail::write_text(ctx.out / "sweep.csv", t.str());
  write_sidecar(ctx.out / "sweep.sidecar.ini", config, kSweepSchema);
  return all ? exit_code::ok : exit_code::terminated;
}

}  // namespace nsk
