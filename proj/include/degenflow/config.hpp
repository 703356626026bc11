/**
 * @file config.hpp
 * @brief Sectioned key = value run configuration with strict key checking.
 *
 * Sections and keys (all optional unless noted; lists are comma separated):
 *
 *   [params]    p, delta, eps, n
 *   [grid]      lower, upper (one value or n values), points (one or n),
 *               t0, dt, levels
 *   [data]      initial, boundary, source, value, slope, amplitude, omega,
 *               source_scale, mollify
 *   [solver]    max_iter, abs_tol, damping, fallback
 *   [lemmas]    p_values, delta_values, n_values, samples, tolerance, seed,
 *               shards, negate
 *   [estimates] center, t_center, radius, axis, h_multiples, snapshot, refine
 *   [sweep]     eps_values, slack, center, radius
 *
 * Unknown sections or keys, keys outside a section, duplicates and
 * unparsable values raise ConfigError.
 */
#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "degenflow/core.hpp"
#include "degenflow/grid.hpp"
#include "degenflow/inequality_lab.hpp"
#include "degenflow/io.hpp"
#include "degenflow/profiles.hpp"
#include "degenflow/solver.hpp"

namespace degenflow::config {

struct EstimateSettings {
  std::optional<Vec> center;       // default: box midpoint
  std::optional<double> t_center;  // default: last level
  std::optional<double> radius;    // R of the outer cylinder; default fits the box
  int axis = 0;
  std::vector<int> h_multiples{4, 2, 1};
  std::string snapshot;  // load u from here instead of solving
  bool refine = false;   // repeat on the once-refined grid and report stability
};

struct SweepSettings {
  std::vector<double> eps_values{0.1, 0.05, 0.025, 0.0125};
  double slack = 0.1;
  std::optional<Vec> center;
  std::optional<double> radius;
};

struct Config {
  Params params;
  Grid grid = Grid::box(2, 0.0, 1.0, 33, 0.0, 0.01, 11);
  profiles::DataSettings data;
  solver::NonlinearSettings newton;
  lab::LemmaSuiteConfig lemmas;
  EstimateSettings estimates;
  SweepSettings sweep;
  std::string hash;  // FNV-1a of the source text
};

namespace detail {

using Ptree = boost::property_tree::ptree;

inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"params", {"p", "delta", "eps", "n"}},
      {"grid", {"lower", "upper", "points", "t0", "dt", "levels"}},
      {"data",
       {"initial", "boundary", "source", "value", "slope", "amplitude", "omega", "source_scale", "mollify"}},
      {"solver", {"max_iter", "abs_tol", "damping", "fallback"}},
      {"lemmas", {"p_values", "delta_values", "n_values", "samples", "tolerance", "seed", "shards", "negate"}},
      {"estimates", {"center", "t_center", "radius", "axis", "h_multiples", "snapshot", "refine"}},
      {"sweep", {"eps_values", "slack", "center", "radius"}},
  };
  return s;
}

[[nodiscard]] inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

template <class T>
[[nodiscard]] T parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config: bad value for " + key + ": '" + raw + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) throw ConfigError("config: non-finite value for " + key);
  return v;
}

template <class T>
[[nodiscard]] std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  if (trim(raw).empty()) return out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
  return out;
}

[[nodiscard]] inline bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + raw + "'");
}

[[nodiscard]] inline Vec to_vec(const std::vector<double>& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

/// One value broadcast to n, or exactly n values.
template <class T>
[[nodiscard]] std::vector<T> per_axis(const std::string& key, const std::vector<T>& v, int n) {
  if (v.size() == 1) return std::vector<T>(static_cast<std::size_t>(n), v[0]);
  if (v.size() != static_cast<std::size_t>(n)) throw ConfigError("config: " + key + " needs 1 or n values");
  return v;
}

}  // namespace detail

/// Parses configuration text; `name` only labels error messages.
[[nodiscard]] inline Config parse(const std::string& text, const std::string& name = "<config>") {
  detail::Ptree tree;
  try {
    std::istringstream is(text);
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(name + ":" + std::to_string(e.line()) + ": " + e.message());
  }

  // Strict schema pass before anything is interpreted.
  std::map<std::string, std::map<std::string, std::string>> kv;
  for (const auto& [section, body] : tree) {
    const auto it = detail::schema().find(section);
    if (it == detail::schema().end() || !body.data().empty())
      throw ConfigError(name + ": unknown section [" + section + "] or key outside any section");
    for (const auto& [key, node] : body) {
      if (!it->second.count(key)) throw ConfigError(name + ": unknown key '" + key + "' in [" + section + "]");
      kv[section][key] = node.data();
    }
  }
  auto get = [&](const char* s, const char* k) -> std::optional<std::string> {
    const auto a = kv.find(s);
    if (a == kv.end()) return std::nullopt;
    const auto b = a->second.find(k);
    if (b == a->second.end()) return std::nullopt;
    return b->second;
  };
  auto key = [](const char* s, const char* k) { return std::string(s) + "." + k; };
  auto num = [&](const char* s, const char* k, double& out) {
    if (auto v = get(s, k)) out = detail::parse_number<double>(key(s, k), *v);
  };
  auto integer = [&](const char* s, const char* k, int& out) {
    if (auto v = get(s, k)) out = detail::parse_number<int>(key(s, k), *v);
  };
  auto flag = [&](const char* s, const char* k, bool& out) {
    if (auto v = get(s, k)) out = detail::parse_bool(key(s, k), *v);
  };
  auto text_of = [&](const char* s, const char* k, std::string& out) {
    if (auto v = get(s, k)) out = detail::trim(*v);
  };

  Config c;
  c.hash = io::fnv1a_hex(text);

  num("params", "p", c.params.p);
  num("params", "delta", c.params.delta);
  num("params", "eps", c.params.eps);
  integer("params", "n", c.params.n);
  c.params.validate();
  const int n = c.params.n;

  {
    std::vector<double> lo{0.0}, hi{1.0};
    std::vector<int> pts{33};
    if (auto v = get("grid", "lower")) lo = detail::parse_list<double>("grid.lower", *v);
    if (auto v = get("grid", "upper")) hi = detail::parse_list<double>("grid.upper", *v);
    if (auto v = get("grid", "points")) pts = detail::parse_list<int>("grid.points", *v);
    Grid g;
    g.n = n;
    g.lower = detail::per_axis("grid.lower", lo, n);
    g.upper = detail::per_axis("grid.upper", hi, n);
    g.nx = detail::per_axis("grid.points", pts, n);
    g.t0 = 0.0;
    g.dt = 0.01;
    g.nt = 11;
    num("grid", "t0", g.t0);
    num("grid", "dt", g.dt);
    integer("grid", "levels", g.nt);
    try {
      g.validate();
    } catch (const DomainError& e) {
      throw ConfigError(name + ": [grid] " + e.what());
    }
    c.grid = g;
  }

  auto& d = c.data;
  text_of("data", "initial", d.initial);
  text_of("data", "boundary", d.boundary);
  text_of("data", "source", d.source);
  num("data", "value", d.value);
  if (auto v = get("data", "slope")) d.slope = detail::parse_list<double>("data.slope", *v);
  num("data", "amplitude", d.amplitude);
  num("data", "omega", d.omega);
  num("data", "source_scale", d.source_scale);
  flag("data", "mollify", d.mollify);
  // Resolve names now so typos fail at load time.
  (void)profiles::make_profile(d.initial, d, n);
  (void)profiles::make_profile(d.boundary.empty() ? d.initial : d.boundary, d, n);
  (void)profiles::make_source(d.source, d, c.params);

  integer("solver", "max_iter", c.newton.max_iter);
  num("solver", "abs_tol", c.newton.abs_tol);
  num("solver", "damping", c.newton.damping);
  flag("solver", "fallback", c.newton.fallback);
  c.newton.validate();

  auto& L = c.lemmas;
  if (auto v = get("lemmas", "p_values")) L.p_values = detail::parse_list<double>("lemmas.p_values", *v);
  if (auto v = get("lemmas", "delta_values")) L.delta_values = detail::parse_list<double>("lemmas.delta_values", *v);
  if (auto v = get("lemmas", "n_values")) L.n_values = detail::parse_list<int>("lemmas.n_values", *v);
  if (auto v = get("lemmas", "samples")) L.samples = detail::parse_number<std::size_t>("lemmas.samples", *v);
  num("lemmas", "tolerance", L.tolerance);
  if (auto v = get("lemmas", "seed")) L.seed = detail::parse_number<std::uint64_t>("lemmas.seed", *v);
  integer("lemmas", "shards", L.shards);
  text_of("lemmas", "negate", L.negate);

  auto& E = c.estimates;
  if (auto v = get("estimates", "center")) E.center = detail::to_vec(detail::parse_list<double>("estimates.center", *v));
  if (auto v = get("estimates", "t_center")) E.t_center = detail::parse_number<double>("estimates.t_center", *v);
  if (auto v = get("estimates", "radius")) E.radius = detail::parse_number<double>("estimates.radius", *v);
  integer("estimates", "axis", E.axis);
  if (auto v = get("estimates", "h_multiples")) E.h_multiples = detail::parse_list<int>("estimates.h_multiples", *v);
  text_of("estimates", "snapshot", E.snapshot);
  flag("estimates", "refine", E.refine);
  if (E.axis < 0 || E.axis >= n) throw ConfigError(name + ": estimates.axis out of range");
  for (int m : E.h_multiples)
    if (m <= 0) throw ConfigError(name + ": estimates.h_multiples must be positive");

  auto& S = c.sweep;
  if (auto v = get("sweep", "eps_values")) S.eps_values = detail::parse_list<double>("sweep.eps_values", *v);
  num("sweep", "slack", S.slack);
  if (auto v = get("sweep", "center")) S.center = detail::to_vec(detail::parse_list<double>("sweep.center", *v));
  if (auto v = get("sweep", "radius")) S.radius = detail::parse_number<double>("sweep.radius", *v);
  for (double e : S.eps_values)
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError(name + ": sweep.eps_values must lie in (0, 1]");
  for (const auto* ctr : {&E.center, &S.center})
    if (*ctr && (*ctr)->size() != static_cast<std::size_t>(n))
      throw ConfigError(name + ": cylinder center needs n coordinates");
  return c;
}

[[nodiscard]] inline Config load(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  return parse(text, path);
}

/// Default cylinder: centered in the box, largest radius that fits the box
/// and the time window ending at the last level.
[[nodiscard]] inline Cylinder default_cylinder(const Grid& g, const std::optional<Vec>& center,
                                               const std::optional<double>& t_center,
                                               const std::optional<double>& radius) {
  Cylinder q;
  q.t_center = t_center.value_or(g.t_end());
  if (center) {
    q.center = *center;
  } else {
    q.center = Vec(static_cast<std::size_t>(g.n));
    for (int a = 0; a < g.n; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      q.center[ua] = 0.5 * (g.lower[ua] + g.upper[ua]);
    }
  }
  if (radius) {
    q.radius = *radius;
  } else {
    double r = std::sqrt(std::max(0.0, q.t_center - g.t0));
    for (int a = 0; a < g.n; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      r = std::min({r, q.center[ua] - g.lower[ua], g.upper[ua] - q.center[ua]});
    }
    q.radius = r;
  }
  return q;
}

/// ProblemSpec for `grid` with eps overridden; f is mollified when asked.
[[nodiscard]] inline solver::ProblemSpec make_problem(const Config& c, const Grid& grid, double eps) {
  Params prm = c.params;
  prm.eps = eps;
  const auto& d = c.data;
  const auto u0 = profiles::make_profile(d.initial, d, prm.n);
  const auto trace = profiles::make_profile(d.boundary.empty() ? d.initial : d.boundary, d, prm.n);
  ScalarField f = ScalarField::sample(grid, profiles::make_source(d.source, d, prm));
  if (d.mollify) f = solver::mollify(f, eps);
  return {prm, grid, std::move(f), ScalarField::sample(grid.slice_grid(grid.t0), u0), trace, c.newton};
}

[[nodiscard]] inline solver::ProblemSpec make_problem(const Config& c) {
  return make_problem(c, c.grid, c.params.eps);
}

/// Same box and time levels, spacing halved: m -> 2m - 1 points per axis.
[[nodiscard]] inline Grid refined(const Grid& g) {
  Grid r = g;
  for (int& m : r.nx) m = 2 * m - 1;
  return r;
}

}  // namespace degenflow::config
