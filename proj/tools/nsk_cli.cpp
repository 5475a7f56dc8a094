// nsk: run, check, map, converge and sweep from a configuration file.
//
// Exit codes: 0 success, 1 failed check or I/O error, 2 invalid input, 3 solver termination.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "nsk/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
};

nsk::Config load(const Options& o) {
  auto c = o.config.empty() ? nsk::parse_config("") : nsk::parse_config(nsk::detail::read_text(o.config));
  if (o.seed) {
    c.run.seed = *o.seed;
    c.map.seed = *o.seed;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic 1D Navier-Stokes-Korteweg simulator and coercivity toolkit"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "configuration file (key = value with [section] headers)");
    sub->add_option("--out", opt.out, "output directory (default: output.dir of the configuration)");
    sub->add_option("--seed", opt.seed, "seed overriding the configuration");
    sub->add_option("--jobs", opt.jobs, "worker threads for maps, sweeps and convergence triples")->check(CLI::PositiveNumber);
  };

  using Command = int (*)(const nsk::Config&, const nsk::CommandContext&);
  struct Sub {
    const char* name;
    const char* help;
    Command fn;
  };
  const Sub subs[] = {
      {"run", "integrate one configuration and write diagnostics.csv", nsk::cmd_run},
      {"check", "cross-form identities and inequalities on the initial profile", nsk::cmd_check},
      {"map", "admissibility raster with sampled J and counterexample search", nsk::cmd_map},
      {"converge", "dt, grid and sampling refinement studies", nsk::cmd_converge},
      {"sweep", "run every combination of the [sweep] lists", nsk::cmd_sweep},
  };
  Command chosen = nullptr;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    sub->callback([&chosen, fn = s.fn] { chosen = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nsk::exit_code::invalid;
  }

  try {
    const auto config = load(opt);
    nsk::CommandContext ctx;
    ctx.out = opt.out.empty() ? config.run.output.dir : opt.out;
    ctx.jobs = opt.jobs;
    ctx.log = &std::cout;
    return chosen(config, ctx);
  } catch (const nsk::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nsk::exit_code::invalid;
  } catch (const nsk::UnsupportedError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nsk::exit_code::invalid;
  } catch (const nsk::PositivityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nsk::exit_code::invalid;
  } catch (const nsk::StabilityFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nsk::exit_code::terminated;
  } catch (const nsk::PositivityFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return nsk::exit_code::terminated;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
