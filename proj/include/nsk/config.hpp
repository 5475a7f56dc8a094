#pragma once

// Plain key = value configuration with [section] headers.
//
//   seed = 3
//   [grid]        n, length
//   [exponents]   alpha, beta, gamma, epsilon
//   [initial]     rho0, rho0_modes, u0, u0_modes, floor
//   [integrator]  cfl, t_end, sample_every, dt, max_steps
//   [output]      dir, precision
//   [map]         alpha_min, alpha_max, beta_min, beta_max, resolution, samples, sample_n,
//                 search, search_distance, budget, max_n
//   [sweep]       alpha, beta, gamma, epsilon, n   (comma-separated lists)
//   [converge]    time_n, time_cfl, space_n, sample_every
//
// rho0/u0 take a preset name or a number (the constant part); *_modes lists k:cos:sin triples.
// Lines starting with '#' or ';' are comments.

#include <charconv>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nsk/coercivity.hpp"
#include "nsk/error.hpp"
#include "nsk/state.hpp"

namespace nsk {

struct SweepConfig {
  std::vector<double> alpha, beta, gamma, epsilon;
  std::vector<std::size_t> n;
};

struct ConvergeConfig {
  std::size_t time_n = 32;     // grid of the dt study
  double time_cfl = 0.4;       // coarsest fixed dt as a fraction of the stable bound
  std::vector<std::size_t> space_n{64, 128, 256};
  std::vector<int> sample_every{40, 20, 10};
};

struct Config {
  RunConfig run;
  MapOptions map;
  SweepConfig sweep;
  ConvergeConfig converge;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;

  std::string where() const {
    return "line " + std::to_string(line) + ": " + (section.empty() ? "" : section + ".") + key;
  }
};

inline std::string bad_value(const Entry& e, std::string_view what) {
  return e.where() + ": malformed " + std::string(what) + " '" + e.value + "'";
}

inline double parse_double(const Entry& e, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty()) throw ConfigError(bad_value(e, "number"));
  return v;
}

inline std::int64_t parse_int(const Entry& e, std::string_view text) {
  text = trim(text);
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end || text.empty()) throw ConfigError(bad_value(e, "integer"));
  return v;
}

inline std::size_t parse_size(const Entry& e, std::string_view text) {
  const auto v = parse_int(e, text);
  if (v < 0) throw ConfigError(e.where() + ": must be nonnegative");
  return static_cast<std::size_t>(v);
}

inline bool parse_bool(const Entry& e) {
  const auto v = trim(e.value);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(bad_value(e, "boolean"));
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T, class F>
std::vector<T> parse_list(const Entry& e, F&& one) {
  std::vector<T> out;
  if (trim(e.value).empty()) return out;
  for (auto item : split(e.value, ',')) out.push_back(one(e, item));
  return out;
}

inline std::vector<Mode> parse_modes(const Entry& e) {
  std::vector<Mode> out;
  if (trim(e.value).empty()) return out;
  for (auto item : split(e.value, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3) throw ConfigError(bad_value(e, "mode (expected k:cos:sin)"));
    out.push_back(Mode{static_cast<int>(parse_int(e, parts[0])), parse_double(e, parts[1]), parse_double(e, parts[2])});
  }
  return out;
}

inline void set_field_base(FieldSpec& f, const Entry& e) {
  const auto v = trim(e.value);
  double c = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), c);
  if (ec == std::errc() && p == v.data() + v.size() && !v.empty()) {
    f.constant = c;
    f.preset.clear();
    return;
  }
  for (const auto& name : preset_names()) {
    if (v == name) {
      f.preset = name;
      f.constant = 0.0;
      return;
    }
  }
  throw ConfigError(e.where() + ": expected a number or one of the presets, got '" + e.value + "'");
}

inline std::vector<Entry> read_entries(std::string_view text) {
  std::vector<Entry> out;
  std::string section;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    const auto raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    Entry e{section, std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no};
    if (e.key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    for (const auto& prev : out) {
      if (prev.section == e.section && prev.key == e.key) {
        throw ConfigError(e.where() + ": duplicate key (first set on line " + std::to_string(prev.line) + ")");
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace detail

/// Parses and validates a configuration; every missing key keeps its default.
inline Config parse_config(std::string_view text) {
  using namespace detail;
  Config c;
  auto& r = c.run;
  for (const auto& e : read_entries(text)) {
    const auto& s = e.section;
    const auto& k = e.key;
    auto num = [&] { return parse_double(e, e.value); };
    auto size = [&] { return parse_size(e, e.value); };
    bool known = true;
    if (s.empty()) {
      if (k == "seed") r.seed = static_cast<std::uint64_t>(parse_size(e, e.value));
      else known = false;
    } else if (s == "grid") {
      if (k == "n") r.grid.n = size();
      else if (k == "length") r.grid.length = num();
      else known = false;
    } else if (s == "exponents") {
      if (k == "alpha") r.exponents.alpha = num();
      else if (k == "beta") r.exponents.beta = num();
      else if (k == "gamma") r.exponents.gamma = num();
      else if (k == "epsilon") r.exponents.epsilon = num();
      else known = false;
    } else if (s == "initial") {
      if (k == "rho0") set_field_base(r.initial.rho0, e);
      else if (k == "u0") set_field_base(r.initial.u0, e);
      else if (k == "rho0_modes") r.initial.rho0.modes = parse_modes(e);
      else if (k == "u0_modes") r.initial.u0.modes = parse_modes(e);
      else if (k == "floor") r.initial.floor = num();
      else known = false;
    } else if (s == "integrator") {
      if (k == "cfl") r.integrator.cfl = num();
      else if (k == "t_end") r.integrator.t_end = num();
      else if (k == "sample_every") r.integrator.sample_every = static_cast<int>(parse_int(e, e.value));
      else if (k == "dt") r.integrator.dt = num();
      else if (k == "max_steps") r.integrator.max_steps = size();
      else known = false;
    } else if (s == "output") {
      if (k == "dir") r.output.dir = e.value;
      else if (k == "precision") r.output.precision = static_cast<int>(parse_int(e, e.value));
      else known = false;
    } else if (s == "map") {
      auto& m = c.map;
      if (k == "alpha_min") m.alpha_min = num();
      else if (k == "alpha_max") m.alpha_max = num();
      else if (k == "beta_min") m.beta_min = num();
      else if (k == "beta_max") m.beta_max = num();
      else if (k == "resolution") m.resolution = size();
      else if (k == "samples") m.samples_per_cell = size();
      else if (k == "sample_n") m.sample_n = size();
      else if (k == "search") m.search = parse_bool(e);
      else if (k == "search_distance") m.search_distance = num();
      else if (k == "budget") m.search_options.budget = size();
      else if (k == "max_n") m.search_options.max_n = size();
      else known = false;
    } else if (s == "sweep") {
      auto& w = c.sweep;
      if (k == "alpha") w.alpha = parse_list<double>(e, parse_double);
      else if (k == "beta") w.beta = parse_list<double>(e, parse_double);
      else if (k == "gamma") w.gamma = parse_list<double>(e, parse_double);
      else if (k == "epsilon") w.epsilon = parse_list<double>(e, parse_double);
      else if (k == "n") w.n = parse_list<std::size_t>(e, parse_size);
      else known = false;
    } else if (s == "converge") {
      auto& v = c.converge;
      if (k == "time_n") v.time_n = size();
      else if (k == "time_cfl") v.time_cfl = num();
      else if (k == "space_n") v.space_n = parse_list<std::size_t>(e, parse_size);
      else if (k == "sample_every") {
        v.sample_every = parse_list<int>(e, [](const Entry& en, std::string_view t) { return static_cast<int>(parse_int(en, t)); });
      } else known = false;
    } else {
      throw ConfigError("line " + std::to_string(e.line) + ": unknown section [" + s + "]");
    }
    if (!known) throw ConfigError("unknown key '" + k + "' (" + e.where() + ")");
  }
  for (const auto* f : {&r.initial.rho0, &r.initial.u0}) {
    if (!f->preset.empty() && !f->modes.empty()) {
      throw ConfigError("initial: Fourier modes need a numeric constant part, not the preset '" + f->preset + "'");
    }
  }
  c.map.seed = r.seed;
  validate(r);
  (void)initial_state(r);
  return c;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    if constexpr (std::is_floating_point_v<T>) os << fmt(v[i]);
    else os << v[i];
  }
  return os.str();
}

inline void write_field(std::ostream& os, const char* name, const FieldSpec& f) {
  if (!f.preset.empty()) {
    os << name << " = " << f.preset << '\n';
    return;
  }
  os << name << " = " << fmt(f.constant) << '\n';
  if (!f.modes.empty()) {
    os << name << "_modes = ";
    for (std::size_t i = 0; i < f.modes.size(); ++i) {
      if (i) os << ", ";
      os << f.modes[i].k << ':' << fmt(f.modes[i].cos_amp) << ':' << fmt(f.modes[i].sin_amp);
    }
    os << '\n';
  }
}

}  // namespace detail

/// The fully resolved configuration in the input syntax; parse_config reads it back unchanged.
inline std::string to_config_text(const Config& c) {
  using detail::fmt;
  using detail::join;
  const auto& r = c.run;
  std::ostringstream os;
  os << "seed = " << r.seed << "\n\n[grid]\nn = " << r.grid.n << "\nlength = " << fmt(r.grid.length) << "\n\n";
  os << "[exponents]\nalpha = " << fmt(r.exponents.alpha) << "\nbeta = " << fmt(r.exponents.beta)
     << "\ngamma = " << fmt(r.exponents.gamma) << "\nepsilon = " << fmt(r.exponents.epsilon) << "\n\n";
  os << "[initial]\n";
  detail::write_field(os, "rho0", r.initial.rho0);
  detail::write_field(os, "u0", r.initial.u0);
  os << "floor = " << fmt(r.initial.floor) << "\n\n";
  os << "[integrator]\ncfl = " << fmt(r.integrator.cfl) << "\nt_end = " << fmt(r.integrator.t_end)
     << "\nsample_every = " << r.integrator.sample_every << "\ndt = " << fmt(r.integrator.dt)
     << "\nmax_steps = " << r.integrator.max_steps << "\n\n";
  os << "[output]\ndir = " << r.output.dir << "\nprecision = " << r.output.precision << "\n\n";
  const auto& m = c.map;
  os << "[map]\nalpha_min = " << fmt(m.alpha_min) << "\nalpha_max = " << fmt(m.alpha_max)
     << "\nbeta_min = " << fmt(m.beta_min) << "\nbeta_max = " << fmt(m.beta_max) << "\nresolution = " << m.resolution
     << "\nsamples = " << m.samples_per_cell << "\nsample_n = " << m.sample_n
     << "\nsearch = " << (m.search ? "true" : "false") << "\nsearch_distance = " << fmt(m.search_distance)
     << "\nbudget = " << m.search_options.budget << "\nmax_n = " << m.search_options.max_n << "\n\n";
  const auto& w = c.sweep;
  os << "[sweep]\nalpha = " << join(w.alpha) << "\nbeta = " << join(w.beta) << "\ngamma = " << join(w.gamma)
     << "\nepsilon = " << join(w.epsilon) << "\nn = " << join(w.n) << "\n\n";
  const auto& v = c.converge;
  os << "[converge]\ntime_n = " << v.time_n << "\ntime_cfl = " << fmt(v.time_cfl) << "\nspace_n = " << join(v.space_n)
     << "\nsample_every = " << join(v.sample_every) << "\n";
  return os.str();
}

}  // namespace nsk
