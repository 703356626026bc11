/**
 * @file profiles.hpp
 * @brief Named initial/boundary profiles and sources, including a smooth
 * nondegenerate manufactured solution with its analytic forcing.
 */
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "degenflow/core.hpp"
#include "degenflow/flux.hpp"

namespace degenflow::profiles {

/// u*(x, t) = 2 x1 + x2 + sum_{i>2} x_i / 2 + 0.1 sin(pi x1) cos(pi x2) + t + a x1 sin(w t).
/// On [0,1]^n with |a| <= 0.2 the gradient norm stays above 1.6.
struct Manufactured {
  double amp = 0.0;    // a
  double omega = 3.0;  // w

  [[nodiscard]] double value(const Vec& x, double t) const {
    using std::numbers::pi;
    double v = 2.0 * x[0] + x[1] + 0.1 * std::sin(pi * x[0]) * std::cos(pi * x[1]) + t + amp * x[0] * std::sin(omega * t);
    for (std::size_t i = 2; i < x.size(); ++i) v += 0.5 * x[i];
    return v;
  }

  [[nodiscard]] Vec gradient(const Vec& x, double t) const {
    using std::numbers::pi;
    Vec g(x.size());
    g[0] = 2.0 + 0.1 * pi * std::cos(pi * x[0]) * std::cos(pi * x[1]) + amp * std::sin(omega * t);
    g[1] = 1.0 - 0.1 * pi * std::sin(pi * x[0]) * std::sin(pi * x[1]);
    for (std::size_t i = 2; i < x.size(); ++i) g[i] = 0.5;
    return g;
  }

  [[nodiscard]] double time_derivative(const Vec& x, double t) const {
    return 1.0 + amp * omega * x[0] * std::cos(omega * t);
  }

  /// u*_t - div A_eps(Du*) = u*_t - tr(DA_eps(Du*) D^2 u*).
  [[nodiscard]] double forcing(const Vec& x, double t, const Params& params) const {
    using std::numbers::pi;
    const std::size_t n = x.size();
    std::array<double, kMaxDim * kMaxDim> jac{};
    flux::jacobian_A_eps(gradient(x, t), params, std::span<double>(jac.data(), n * n));
    const double s1 = std::sin(pi * x[0]), c1 = std::cos(pi * x[0]);
    const double s2 = std::sin(pi * x[1]), c2 = std::cos(pi * x[1]);
    const double h11 = -0.1 * pi * pi * s1 * c2;
    const double h22 = h11;
    const double h12 = -0.1 * pi * pi * c1 * s2;
    const double div = jac[0] * h11 + jac[1] * h12 + jac[n] * h12 + jac[n + 1] * h22;
    return time_derivative(x, t) - div;
  }
};

using Profile = std::function<double(const Vec&, double)>;

/// Knobs shared by the named profiles and sources; unused ones are ignored.
struct DataSettings {
  std::string initial = "constant";
  std::string boundary;  // empty: same profile as `initial`
  std::string source = "zero";
  double value = 0.0;         // constant level / linear offset / constant source
  std::vector<double> slope;  // linear; empty means all ones
  double amplitude = 0.0;     // manufactured a, plateau a
  double omega = 3.0;         // manufactured w
  double source_scale = 1.0;  // smooth source
  bool mollify = false;       // replace f by f^eps, eps = params.eps
};

inline const std::vector<std::string> kProfileNames{"constant", "linear", "manufactured", "plateau"};
inline const std::vector<std::string> kSourceNames{"zero", "constant", "manufactured", "smooth"};

/// constant:     value
/// linear:       value + slope . x
/// manufactured: u* above with (amplitude, omega)
/// plateau:      amplitude * sum_i sin(x_i) / sqrt(n); slopes <= |amplitude|
[[nodiscard]] inline Profile make_profile(const std::string& name, const DataSettings& s, int n) {
  if (name == "constant") return [v = s.value](const Vec&, double) { return v; };
  if (name == "linear") {
    std::vector<double> k = s.slope.empty() ? std::vector<double>(static_cast<std::size_t>(n), 1.0) : s.slope;
    if (k.size() != static_cast<std::size_t>(n)) throw ConfigError("profile linear: slope needs n entries");
    return [k, v = s.value](const Vec& x, double) {
      double r = v;
      for (std::size_t i = 0; i < k.size(); ++i) r += k[i] * x[i];
      return r;
    };
  }
  if (name == "manufactured") {
    return [m = Manufactured{s.amplitude, s.omega}](const Vec& x, double t) { return m.value(x, t); };
  }
  if (name == "plateau") {
    return [a = s.amplitude / std::sqrt(static_cast<double>(n))](const Vec& x, double) {
      double r = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) r += std::sin(x[i]);
      return a * r;
    };
  }
  throw ConfigError("unknown profile '" + name + "'");
}

/// zero, constant (value), manufactured (forcing of u* for `params`),
/// smooth: source_scale * sin(pi x1) cos(pi x2) (1 + t).
[[nodiscard]] inline Profile make_source(const std::string& name, const DataSettings& s, const Params& params) {
  if (name == "zero") return [](const Vec&, double) { return 0.0; };
  if (name == "constant") return [v = s.value](const Vec&, double) { return v; };
  if (name == "manufactured") {
    return [m = Manufactured{s.amplitude, s.omega}, params](const Vec& x, double t) { return m.forcing(x, t, params); };
  }
  if (name == "smooth") {
    return [c = s.source_scale](const Vec& x, double t) {
      using std::numbers::pi;
      return c * std::sin(pi * x[0]) * std::cos(pi * x[1]) * (1.0 + t);
    };
  }
  throw ConfigError("unknown source '" + name + "'");
}

}  // namespace degenflow::profiles
