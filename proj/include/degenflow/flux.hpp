/**
 * @file flux.hpp
 * @brief Pointwise evaluation of the degenerate flux and its companions.
 *
 * H_lambda(xi) = (|xi|-1)_+^lambda xi/|xi|, the nondegenerate map
 * V_p(xi) = (1+|xi|^2)^{(p-2)/4} xi, the regularized flux
 * A_eps(xi) = H_{p-1}(xi) + eps (1+|xi|^2)^{(p-2)/2} xi, the gates g_k and
 * G_delta together with their derivatives.
 *
 * Everything here is pure; call it from as many threads as you like.
 */
#pragma once

#include <cmath>
#include <span>
#include <string>

#include "degenflow/core.hpp"
#include "degenflow/quadrature.hpp"

namespace degenflow::flux {

namespace detail {

inline void require_finite(const Vec& xi, const char* who) {
  if (!xi.all_finite()) throw InvalidInput(std::string(who) + ": non-finite component");
}

}  // namespace detail

/// (|xi|-1)_+^lambda xi/|xi|; exactly zero whenever |xi| <= 1.
[[nodiscard]] inline Vec eval_H(const Vec& xi, double lambda) {
  detail::require_finite(xi, "eval_H");
  if (!(lambda > 0.0)) throw ParameterError("eval_H: lambda must be positive");
  Vec out(xi.size());
  const double r = norm(xi);
  const double excess = r - 1.0;
  if (excess <= 0.0) return out;
  const double scale = rpow(excess, lambda) / r;
  for (std::size_t i = 0; i < xi.size(); ++i) out[i] = scale * xi[i];
  return out;
}

[[nodiscard]] inline Vec eval_V(const Vec& xi, double p) {
  detail::require_finite(xi, "eval_V");
  if (!(p >= 2.0)) throw ParameterError("eval_V: p must satisfy p >= 2");
  return rpow(1.0 + norm2(xi), (p - 2.0) / 4.0) * xi;
}

/// (1+|xi|^2)^{(p-2)/2} xi, the field V_p squares into.
[[nodiscard]] inline Vec eval_nondegenerate(const Vec& xi, double p) {
  detail::require_finite(xi, "eval_nondegenerate");
  return rpow(1.0 + norm2(xi), (p - 2.0) / 2.0) * xi;
}

[[nodiscard]] inline Vec eval_A_eps(const Vec& xi, const Params& params) {
  detail::require_finite(xi, "eval_A_eps");
  Vec out = eval_H(xi, params.p - 1.0);
  if (params.eps != 0.0) {
    const double w = params.eps * rpow(1.0 + norm2(xi), (params.p - 2.0) / 2.0);
    for (std::size_t i = 0; i < xi.size(); ++i) out[i] += w * xi[i];
  }
  return out;
}

/// Row-major n x n Jacobian of A_eps at xi, written into jac.
///
/// At p = 2 the degenerate part jumps across |xi| = 1; the zero branch is
/// taken on |xi| <= 1, which is the generalized Jacobian the Newton solver
/// uses.
inline void jacobian_A_eps(const Vec& xi, const Params& params, std::span<double> jac) {
  const std::size_t n = xi.size();
  std::fill(jac.begin(), jac.begin() + static_cast<std::ptrdiff_t>(n * n), 0.0);
  const double p = params.p;
  const double r2 = norm2(xi);
  const double r = std::sqrt(r2);

  if (r > 1.0) {
    const double e = r - 1.0;
    const double tangential = rpow(e, p - 1.0) / r;
    const double radial = (p - 1.0) * rpow(e, p - 2.0);
    // tangential (I - xx^T/r^2) + radial xx^T/r^2
    const double k = (radial - tangential) / r2;
    for (std::size_t a = 0; a < n; ++a) {
      jac[a * n + a] += tangential;
      for (std::size_t b = 0; b < n; ++b) jac[a * n + b] += k * xi[a] * xi[b];
    }
  }
  if (params.eps != 0.0) {
    const double base = 1.0 + r2;
    const double w = params.eps * rpow(base, (p - 2.0) / 2.0);
    const double k = w * (p - 2.0) / base;
    for (std::size_t a = 0; a < n; ++a) {
      jac[a * n + a] += w;
      for (std::size_t b = 0; b < n; ++b) jac[a * n + b] += k * xi[a] * xi[b];
    }
  }
}

// ---------------------------------------------------------------------------
// g_k(s) = s^2/(k+s^2)

[[nodiscard]] inline double eval_g(double s, double k) {
  if (!(k > 1.0)) throw ParameterError("eval_g: k must exceed 1");
  if (!(s >= 0.0)) throw InvalidInput("eval_g: s must be nonnegative");
  const double s2 = s * s;
  return s2 / (k + s2);
}

[[nodiscard]] inline double eval_g_prime(double s, double k) {
  if (!(k > 1.0)) throw ParameterError("eval_g_prime: k must exceed 1");
  if (!(s >= 0.0)) throw InvalidInput("eval_g_prime: s must be nonnegative");
  const double d = k + s * s;
  return 2.0 * k * s / (d * d);
}

// ---------------------------------------------------------------------------
// G_delta(t) = int_0^t s (s+delta)^{(p-2)/2} / sqrt(1+delta+s^2) ds

namespace detail {

inline void require_t(double t, const char* who) {
  if (!std::isfinite(t) || t < 0.0) throw InvalidInput(std::string(who) + ": t must be finite and >= 0");
}

[[nodiscard]] inline double G_integrand(double s, double p, double delta) {
  return s * rpow(s + delta, (p - 2.0) / 2.0) / std::sqrt(1.0 + delta + s * s);
}

}  // namespace detail

[[nodiscard]] inline double eval_G_prime(double t, const Params& params) {
  detail::require_t(t, "eval_G_prime");
  return detail::G_integrand(t, params.p, params.delta);
}

/// G_delta(b) - G_delta(a) for 0 <= a <= b as a single quadrature.
[[nodiscard]] inline double eval_G_increment(double a, double b, const Params& params) {
  detail::require_t(a, "eval_G_increment");
  detail::require_t(b, "eval_G_increment");
  if (a > b) return -eval_G_increment(b, a, params);
  const double c = 1.0 + params.delta;
  if (params.p == 2.0) {
    // sqrt(c+b^2) - sqrt(c+a^2), written without cancellation.
    const double sa = std::sqrt(c + a * a);
    const double sb = std::sqrt(c + b * b);
    return (b - a) * (b + a) / (sa + sb);
  }
  const double p = params.p;
  const double delta = params.delta;
  return quadrature::adaptive_simpson(
      [p, delta](double s) { return detail::G_integrand(s, p, delta); }, a, b,
      {.abs_tol = 1e-10, .max_intervals = 10000});
}

[[nodiscard]] inline double eval_G(double t, const Params& params) {
  detail::require_t(t, "eval_G");
  return eval_G_increment(0.0, t, params);
}

/// G_delta((|xi| - delta - 1)_+), the gated quantity whose gradient the
/// higher-differentiability estimates control.
[[nodiscard]] inline double eval_gated_G(double grad_norm, const Params& params) {
  return eval_G(positive_part(grad_norm - params.delta - 1.0), params);
}

}  // namespace degenflow::flux
