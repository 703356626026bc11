/**
 * @file core.hpp
 * @brief Shared vocabulary: parameter triple, small gradient vectors, errors
 * and the power helpers used by every other header.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>

namespace degenflow {

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise malformed numeric input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its admissible range (k <= 1, alpha <= 0, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Geometry problems: shifts leaving the grid, cylinders outside the domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Nonlinear solve failure; carries the last residual and where it happened.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual, int iterations, int time_index = -1)
      : Error(what), residual_(residual), iterations_(iterations), time_index_(time_index) {}

  [[nodiscard]] double residual() const noexcept { return residual_; }
  [[nodiscard]] int iterations() const noexcept { return iterations_; }
  [[nodiscard]] int time_index() const noexcept { return time_index_; }

 private:
  double residual_;
  int iterations_;
  int time_index_;
};

// ---------------------------------------------------------------------------
// Powers
//
// Integer exponents go through repeated multiplication, everything else
// through exp/log. Property-test tolerances are tuned against this split.

[[nodiscard]] constexpr double ipow(double x, int k) noexcept {
  if (k < 0) return 1.0 / ipow(x, -k);
  double result = 1.0;
  double base = x;
  while (k > 0) {
    if (k & 1) result *= base;
    base *= base;
    k >>= 1;
  }
  return result;
}

/// x^e for x >= 0. 0^0 == 1, 0^e == 0 for e > 0.
[[nodiscard]] inline double rpow(double x, double e) noexcept {
  if (e == 0.0) return 1.0;
  const double r = std::nearbyint(e);
  if (r == e && std::abs(r) <= 64.0) return ipow(x, static_cast<int>(r));
  if (x == 0.0) return e > 0.0 ? 0.0 : HUGE_VAL;
  return std::exp(e * std::log(x));
}

[[nodiscard]] inline double positive_part(double x) noexcept { return x > 0.0 ? x : 0.0; }

// ---------------------------------------------------------------------------
// Vec: a gradient-sized vector with inline storage.

inline constexpr std::size_t kMaxDim = 8;

class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n) : n_(n) {
    if (n > kMaxDim) throw InvalidInput("Vec: dimension exceeds kMaxDim");
  }
  Vec(std::initializer_list<double> values) : Vec(values.size()) {
    std::copy(values.begin(), values.end(), c_.begin());
  }
  explicit Vec(std::span<const double> values) : Vec(values.size()) {
    std::copy(values.begin(), values.end(), c_.begin());
  }

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  double& operator[](std::size_t i) noexcept { return c_[i]; }
  double operator[](std::size_t i) const noexcept { return c_[i]; }

  double* begin() noexcept { return c_.data(); }
  double* end() noexcept { return c_.data() + n_; }
  [[nodiscard]] const double* begin() const noexcept { return c_.data(); }
  [[nodiscard]] const double* end() const noexcept { return c_.data() + n_; }
  [[nodiscard]] std::span<const double> span() const noexcept { return {c_.data(), n_}; }

  [[nodiscard]] bool all_finite() const noexcept {
    return std::all_of(begin(), end(), [](double v) { return std::isfinite(v); });
  }

  Vec& operator+=(const Vec& o) noexcept {
    for (std::size_t i = 0; i < n_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) noexcept {
    for (std::size_t i = 0; i < n_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Vec& operator*=(double a) noexcept {
    for (std::size_t i = 0; i < n_; ++i) c_[i] *= a;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
  friend Vec operator*(double s, Vec a) noexcept { return a *= s; }
  friend Vec operator*(Vec a, double s) noexcept { return a *= s; }
  friend bool operator==(const Vec& a, const Vec& b) noexcept {
    return a.n_ == b.n_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  std::array<double, kMaxDim> c_{};
  std::size_t n_ = 0;
};

[[nodiscard]] inline double dot(const Vec& a, const Vec& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

[[nodiscard]] inline double norm2(const Vec& a) noexcept { return dot(a, a); }
[[nodiscard]] inline double norm(const Vec& a) noexcept { return std::sqrt(norm2(a)); }

// ---------------------------------------------------------------------------
// Params

/// Growth exponent p, threshold shift delta, regularization weight eps and
/// spatial dimension n.
struct Params {
  double p = 2.0;
  double delta = 0.5;
  double eps = 0.0;
  int n = 2;

  void validate() const {
    if (!std::isfinite(p) || p < 2.0) throw ParameterError("Params: p must satisfy p >= 2");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("Params: delta must lie in (0, 1)");
    if (!(eps >= 0.0 && eps <= 1.0)) throw ParameterError("Params: eps must lie in [0, 1]");
    if (n < 2 || static_cast<std::size_t>(n) > kMaxDim)
      throw ParameterError("Params: n must satisfy 2 <= n <= kMaxDim");
  }
};

}  // namespace degenflow
