/**
 * @file inequality_lab.hpp
 * @brief Both sides of the algebraic inequalities behind the estimates,
 * exposed as oriented gaps for randomized property testing.
 *
 * Every gap is oriented so that gap >= 0 means the inequality holds. Sides
 * are reported as displayed: `lhs` is the left-hand side of the inequality
 * as written, `rhs` the right-hand side.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "degenflow/core.hpp"
#include "degenflow/flux.hpp"
#include "degenflow/grid.hpp"
#include "degenflow/io.hpp"

namespace degenflow::lab {

namespace id {
inline constexpr std::string_view kBrascoMonotonicity = "brasco_monotonicity";
inline constexpr std::string_view kBrascoLipschitz = "brasco_lipschitz";
inline constexpr std::string_view kBogeleinUpper = "bogelein_upper";
inline constexpr std::string_view kBogeleinLower = "bogelein_lower";
inline constexpr std::string_view kLindqvistLower = "lindqvist_lower";
inline constexpr std::string_view kLindqvistUpper = "lindqvist_upper";
inline constexpr std::string_view kYoungType = "young_type";
inline constexpr std::string_view kGHComparison = "gh_comparison";
inline constexpr std::string_view kGDeltaBounds = "G_delta_bounds";
inline constexpr std::string_view kInterpolation = "interpolation";
}  // namespace id

struct GapInputs {
  Vec xi;
  Vec eta;
  double s = 0.0;
  double k = 0.0;
  double A = 0.0;
  double B = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  double p = 0.0;
  double delta = 0.0;
};

struct GapSample {
  GapInputs inputs;
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  std::string_view tag;

  [[nodiscard]] double scale() const { return std::max({1.0, std::abs(lhs), std::abs(rhs)}); }
  [[nodiscard]] double normalized_gap() const { return gap / scale(); }
  [[nodiscard]] bool holds(double rel_tol = 1e-12) const { return gap >= -rel_tol * scale(); }
  /// lhs / rhs with 0/0 reported as 0.
  [[nodiscard]] double ratio() const {
    if (lhs == 0.0) return 0.0;
    return lhs / rhs;
  }
};

// ---------------------------------------------------------------------------
// Brasco: monotonicity and Lipschitz bounds of H_{p-1} in terms of H_{p/2}

[[nodiscard]] inline GapSample brasco_monotonicity_gap(const Vec& xi, const Vec& eta, double p) {
  if (!(p >= 2.0)) throw ParameterError("brasco_monotonicity_gap: p >= 2 required");
  const Vec dh = flux::eval_H(xi, p - 1.0) - flux::eval_H(eta, p - 1.0);
  const Vec dhalf = flux::eval_H(xi, p / 2.0) - flux::eval_H(eta, p / 2.0);
  GapSample g;
  g.inputs = {.xi = xi, .eta = eta, .p = p};
  g.tag = id::kBrascoMonotonicity;
  g.lhs = dot(dh, xi - eta);
  g.rhs = 4.0 / (p * p) * norm2(dhalf);
  g.gap = g.lhs - g.rhs;
  return g;
}

[[nodiscard]] inline GapSample brasco_lipschitz_gap(const Vec& xi, const Vec& eta, double p) {
  if (!(p >= 2.0)) throw ParameterError("brasco_lipschitz_gap: p >= 2 required");
  const Vec hx = flux::eval_H(xi, p / 2.0);
  const Vec he = flux::eval_H(eta, p / 2.0);
  const double e = (p - 2.0) / p;
  GapSample g;
  g.inputs = {.xi = xi, .eta = eta, .p = p};
  g.tag = id::kBrascoLipschitz;
  g.lhs = norm(flux::eval_H(xi, p - 1.0) - flux::eval_H(eta, p - 1.0));
  g.rhs = (p - 1.0) * (rpow(norm(hx), e) + rpow(norm(he), e)) * norm(hx - he);
  g.gap = g.rhs - g.lhs;
  return g;
}

// ---------------------------------------------------------------------------
// Boegelein-type two-sided bounds for |xi| > 1

namespace detail {

inline void require_outside_unit_ball(const Vec& xi, const char* who) {
  if (!(norm(xi) > 1.0)) throw PreconditionError(std::string(who) + ": |xi| > 1 required");
}

}  // namespace detail

/// |H_{p-1}(xi) - H_{p-1}(eta)| divided by the constant-free right-hand side.
[[nodiscard]] inline double bogelein_upper_ratio(const Vec& xi, const Vec& eta, double p) {
  detail::require_outside_unit_ball(xi, "bogelein_upper_ratio");
  const double ex = norm(xi) - 1.0;
  const double lhs = norm(flux::eval_H(xi, p - 1.0) - flux::eval_H(eta, p - 1.0));
  if (lhs == 0.0) return 0.0;
  const double bracket = rpow(ex + positive_part(norm(eta) - 1.0), p - 1.0) / ex;
  return lhs / (bracket * norm(xi - eta));
}

[[nodiscard]] inline GapSample bogelein_upper_gap(const Vec& xi, const Vec& eta, double p, double c_p) {
  detail::require_outside_unit_ball(xi, "bogelein_upper_gap");
  if (!(c_p > 0.0)) throw ParameterError("bogelein_upper_gap: constant must be positive");
  const double ex = norm(xi) - 1.0;
  GapSample g;
  g.inputs = {.xi = xi, .eta = eta, .p = p};
  g.tag = id::kBogeleinUpper;
  g.lhs = norm(flux::eval_H(xi, p - 1.0) - flux::eval_H(eta, p - 1.0));
  g.rhs = c_p * rpow(ex + positive_part(norm(eta) - 1.0), p - 1.0) / ex * norm(xi - eta);
  g.gap = g.rhs - g.lhs;
  return g;
}

[[nodiscard]] inline GapSample bogelein_lower_gap(const Vec& xi, const Vec& eta, double p) {
  detail::require_outside_unit_ball(xi, "bogelein_lower_gap");
  const double rx = norm(xi);
  const double c = std::min(1.0, p - 1.0) / rpow(2.0, p + 1.0);
  GapSample g;
  g.inputs = {.xi = xi, .eta = eta, .p = p};
  g.tag = id::kBogeleinLower;
  g.lhs = dot(flux::eval_H(eta, p - 1.0) - flux::eval_H(xi, p - 1.0), eta - xi);
  g.rhs = c * rpow(rx - 1.0, p) / (rx * (rx + norm(eta))) * norm2(eta - xi);
  g.gap = g.lhs - g.rhs;
  return g;
}

// ---------------------------------------------------------------------------
// Lindqvist chain for V_p

struct LindqvistSides {
  double v_diff2;    // |V_p(xi) - V_p(eta)|^2
  double middle;     // (1 + |xi|^2 + |eta|^2)^{(p-2)/2} |xi - eta|^2
  double monotone;   // <a(xi) - a(eta), xi - eta>, a(z) = (1+|z|^2)^{(p-2)/2} z
};

[[nodiscard]] inline LindqvistSides lindqvist_sides(const Vec& xi, const Vec& eta, double p) {
  if (!(p >= 2.0)) throw ParameterError("lindqvist: p >= 2 required");
  const Vec d = xi - eta;
  return {norm2(flux::eval_V(xi, p) - flux::eval_V(eta, p)),
          rpow(1.0 + norm2(xi) + norm2(eta), (p - 2.0) / 2.0) * norm2(d),
          dot(flux::eval_nondegenerate(xi, p) - flux::eval_nondegenerate(eta, p), d)};
}

/// Largest constant the pair forces on c_1(p): max of both link ratios.
[[nodiscard]] inline double lindqvist_required_constant(const Vec& xi, const Vec& eta, double p) {
  const LindqvistSides s = lindqvist_sides(xi, eta, p);
  if (s.middle == 0.0) return 0.0;
  return std::max(s.v_diff2 / s.middle, s.middle / s.monotone);
}

/// {left link, right link} of the chain with constant c1.
[[nodiscard]] inline std::pair<GapSample, GapSample> lindqvist_gap(const Vec& xi, const Vec& eta, double p, double c1) {
  if (!(c1 > 0.0)) throw ParameterError("lindqvist_gap: constant must be positive");
  const LindqvistSides s = lindqvist_sides(xi, eta, p);
  GapSample left;
  left.inputs = {.xi = xi, .eta = eta, .p = p};
  left.tag = id::kLindqvistLower;
  left.lhs = s.v_diff2 / c1;
  left.rhs = s.middle;
  left.gap = left.rhs - left.lhs;
  GapSample right = left;
  right.tag = id::kLindqvistUpper;
  right.lhs = s.middle;
  right.rhs = c1 * s.monotone;
  right.gap = right.rhs - right.lhs;
  return {left, right};
}

// ---------------------------------------------------------------------------
// g_k inequalities

/// A B s g'_k((s-k)_+) <= 2 sqrt(2) k [alpha A^2 g_k((s-k)_+) + alpha sigma A^2 + c_alpha B^2],
/// with c_alpha = 1/(4 alpha) from the Young step.
[[nodiscard]] inline GapSample young_type_gap(double A, double B, double s, double k, double alpha, double sigma) {
  if (!(k > 1.0)) throw ParameterError("young_type_gap: k must exceed 1");
  if (!(alpha > 0.0) || !(sigma > 0.0)) throw ParameterError("young_type_gap: alpha and sigma must be positive");
  if (!(A >= 0.0) || !(B >= 0.0) || !(s >= 0.0)) throw InvalidInput("young_type_gap: A, B, s must be nonnegative");
  const double t = positive_part(s - k);
  const double c_alpha = 1.0 / (4.0 * alpha);
  GapSample g;
  g.inputs.s = s;
  g.inputs.k = k;
  g.inputs.A = A;
  g.inputs.B = B;
  g.inputs.alpha = alpha;
  g.inputs.sigma = sigma;
  g.tag = id::kYoungType;
  g.lhs = A * B * s * flux::eval_g_prime(t, k);
  g.rhs = 2.0 * std::sqrt(2.0) * k * (alpha * A * A * flux::eval_g(t, k) + alpha * sigma * A * A + c_alpha * B * B);
  g.gap = g.rhs - g.lhs;
  return g;
}

/// s g'_k((s^2-k)_+).
[[nodiscard]] inline double gk_prime_profile(double s, double k) {
  return s * flux::eval_g_prime(positive_part(s * s - k), k);
}

/// sup_s s g'_k((s^2-k)_+): geometric ladder in w = s^2 - k, then golden-section
/// refinement around the best rung.
[[nodiscard]] inline double gk_prime_bound(double k) {
  if (!(k > 1.0)) throw ParameterError("gk_prime_bound: k must exceed 1");
  auto phi = [k](double w) { return gk_prime_profile(std::sqrt(k + w), k); };
  constexpr int kRungs = 4000;
  const double w_lo = 1e-8;
  const double w_hi = 100.0 * (k + 1.0);
  const double ratio = std::pow(w_hi / w_lo, 1.0 / (kRungs - 1));
  double best = 0.0;
  int best_i = 0;
  for (int i = 0; i < kRungs; ++i) {
    const double v = phi(w_lo * std::pow(ratio, i));
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  double a = w_lo * std::pow(ratio, std::max(0, best_i - 1));
  double b = w_lo * std::pow(ratio, std::min(kRungs - 1, best_i + 1));
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = phi(c);
  double fd = phi(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, b); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = phi(d);
    }
  }
  return std::max({best, fc, fd});
}

// ---------------------------------------------------------------------------
// G_delta versus H_{p/2}

[[nodiscard]] inline GapSample gh_comparison_gap(const Vec& xi, const Vec& eta, const Params& params) {
  const double p = params.p;
  const double a = positive_part(norm(xi) - params.delta - 1.0);
  const double b = positive_part(norm(eta) - params.delta - 1.0);
  const double dG = (a == b) ? 0.0 : flux::eval_G_increment(std::min(a, b), std::max(a, b), params);
  GapSample g;
  g.inputs = {.xi = xi, .eta = eta, .p = p, .delta = params.delta};
  g.tag = id::kGHComparison;
  g.lhs = dG * dG;
  g.rhs = 4.0 / (p * p) * norm2(flux::eval_H(xi, p / 2.0) - flux::eval_H(eta, p / 2.0));
  g.gap = g.rhs - g.lhs;
  return g;
}

// ---------------------------------------------------------------------------
// Two-sided bounds on G_delta

namespace detail {

/// log of K = (delta/(2 sqrt(1+delta)))^{p/(p-2)} (p(sqrt(1+delta)-delta)/delta + 2)^{2/(p-2)},
/// rearranged so p -> 2+ does not overflow:
/// K = b * (b m)^{2/(p-2)} with b m = 1 + (p-2)/2 (1 - delta/sqrt(1+delta)).
[[nodiscard]] inline double log_c_equation_rhs(double p, double delta) {
  const double sq = std::sqrt(1.0 + delta);
  const double b = delta / (2.0 * sq);
  const double x = 0.5 * (p - 2.0) * (1.0 - delta / sq);
  return std::log(b) + 2.0 / (p - 2.0) * std::log1p(x);
}

}  // namespace detail

/// c_{p,delta} < 2/p from 1/(2 - p c) = K(p, delta); 1/2 at p = 2.
[[nodiscard]] inline double compute_c_p_delta(double p, double delta) {
  if (!(p >= 2.0)) throw ParameterError("compute_c_p_delta: p >= 2 required");
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("compute_c_p_delta: delta in (0,1) required");
  if (p == 2.0) return 0.5;
  const double K = std::exp(detail::log_c_equation_rhs(p, delta));
  return (2.0 - 1.0 / K) / p;
}

/// Shift t~ such that c (t+delta)^{p/2} - t~ <= G_delta(t). At p = 2 it is
/// (sqrt(1+delta)+delta)/2; for p > 2 the lower bound needs no shift.
[[nodiscard]] inline double G_lower_shift(double p, double delta) {
  if (p == 2.0) return 0.5 * (std::sqrt(1.0 + delta) + delta);
  return 0.0;
}

/// Both sides of the defining equation of c_{p,delta}:
/// (2 sqrt(1+delta))^{p/2} (2 - p c)^{-(p-2)/2} 2/(p(p-2))
///   = 2 sqrt(1+delta)/(p-2) delta^{p/2-1} - (2/p) delta^{p/2}.
[[nodiscard]] inline std::pair<double, double> c_p_delta_equation_sides(double p, double delta, double c) {
  if (!(p > 2.0)) throw ParameterError("c_p_delta_equation_sides: p > 2 required");
  const double sq = std::sqrt(1.0 + delta);
  const double lhs = rpow(2.0 * sq, p / 2.0) * rpow(1.0 / (2.0 - p * c), (p - 2.0) / 2.0) * 2.0 / (p * (p - 2.0));
  const double rhs = 2.0 * sq / (p - 2.0) * rpow(delta, p / 2.0 - 1.0) - 2.0 / p * rpow(delta, p / 2.0);
  return {lhs, rhs};
}

struct GBoundsCheck {
  double c = 0.0;
  double shift = 0.0;
  double min_lower_gap = HUGE_VAL;  // G - (c (t+delta)^{p/2} - shift), normalized
  double min_upper_gap = HUGE_VAL;  // (2/p)(t+delta)^{p/2} - G, normalized
  std::size_t samples = 0;
};

/// Checks both bounds on t_i = t_max * i/(samples-1); G is accumulated panel
/// by panel so every node costs one short quadrature.
[[nodiscard]] inline GBoundsCheck check_G_bounds(double p, double delta, double t_max = 100.0,
                                                 std::size_t samples = 10000) {
  GBoundsCheck out;
  out.c = compute_c_p_delta(p, delta);
  out.shift = G_lower_shift(p, delta);
  out.samples = samples;
  const Params params{.p = p, .delta = delta};
  double G = 0.0;
  double t_prev = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = t_max * static_cast<double>(i) / static_cast<double>(samples - 1);
    G += flux::eval_G_increment(t_prev, t, params);
    t_prev = t;
    const double y = rpow(t + delta, p / 2.0);
    const double lower = out.c * y - out.shift;
    const double upper = 2.0 / p * y;
    const double scale = std::max({1.0, std::abs(G), std::abs(upper)});
    out.min_lower_gap = std::min(out.min_lower_gap, (G - lower) / scale);
    out.min_upper_gap = std::min(out.min_upper_gap, (upper - G) / scale);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Interpolation inequality on a discrete cylinder

/// lhs = int_Q |v|^{p + p q / n}, rhs = (sup_s int_B |v(.,s)|^q)^{p/n} int_Q |Dv|^p.
/// The constant is unknown, so the sample's `gap` is left at zero and the
/// quantity of interest is ratio() = lhs/rhs. v must vanish off the ball.
[[nodiscard]] inline GapSample interpolation_check(const ScalarField& v, const Cylinder& q_r, double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw ParameterError("interpolation_check: p, q >= 1 required");
  q_r.check_inside(v.grid);
  const Grid& g = v.grid;
  const auto ball = q_r.space_mask(g);
  double vmax = 0.0;
  for (double x : v.values) vmax = std::max(vmax, std::abs(x));
  for (int k : q_r.levels(g))
    for (std::size_t i = 0; i < ball.size(); ++i)
      if (!ball[i] && std::abs(v.at(k, i)) > 1e-14 * std::max(1.0, vmax))
        throw PreconditionError("interpolation_check: v must vanish outside the ball");
  const double n = g.n;
  GapSample s;
  s.tag = id::kInterpolation;
  s.inputs.p = p;
  s.lhs = integral_pow(v, p + p * q / n, q_r);
  const double grad = integral_pow(pointwise_norm(gradient(v)), p, q_r);
  s.rhs = rpow(sup_slice_integral(v, q, q_r), p / n) * grad;
  s.gap = 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Sampling

/// splitmix64 step; used to derive independent shard seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, double p, double delta, int n,
                                               int shard) {
  std::uint64_t h = mix_seed(base);
  for (char c : tag) h = mix_seed(h ^ static_cast<unsigned char>(c));
  h = mix_seed(h ^ static_cast<std::uint64_t>(std::llround(p * 1000.0)));
  h = mix_seed(h ^ static_cast<std::uint64_t>(std::llround(delta * 1000.0)));
  h = mix_seed(h ^ static_cast<std::uint64_t>(n));
  return mix_seed(h ^ static_cast<std::uint64_t>(shard));
}

/// Gradient pairs with |xi|, |eta| <= 10: uniform components (rejected into
/// the ball of radius 10) plus strata hugging the degenerate sphere |xi| = 1,
/// the shifted sphere |xi| = 1 + delta, and nearly coincident pairs.
class PairSampler {
 public:
  PairSampler(std::uint64_t seed, int n, double delta) : rng_(seed), n_(n), delta_(delta) {}

  [[nodiscard]] Vec uniform_in_ball() {
    std::uniform_real_distribution<double> u(-kRadius, kRadius);
    Vec v(static_cast<std::size_t>(n_));
    do {
      for (double& c : v) c = u(rng_);
    } while (norm(v) > kRadius);
    return v;
  }

  [[nodiscard]] Vec with_norm_in(double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return u(rng_) * direction();
  }

  [[nodiscard]] std::pair<Vec, Vec> next() {
    const double pick = unit_(rng_);
    if (pick < 0.45) return {uniform_in_ball(), uniform_in_ball()};
    if (pick < 0.60) return {with_norm_in(0.9, 1.1), uniform_in_ball()};
    if (pick < 0.70) return {with_norm_in(0.9, 1.1), with_norm_in(0.9, 1.1)};
    if (pick < 0.80) return {with_norm_in(1.0 + delta_ - 0.1, 1.0 + delta_ + 0.1), uniform_in_ball()};
    if (pick < 0.88)
      return {with_norm_in(1.0 + delta_ - 0.1, 1.0 + delta_ + 0.1), with_norm_in(1.0 + delta_ - 0.1, 1.0 + delta_ + 0.1)};
    return near_pair();
  }

  /// Pairs with |xi| in (1, 10].
  [[nodiscard]] std::pair<Vec, Vec> next_outside_unit() {
    auto pr = next();
    if (norm(pr.first) <= 1.0)
      pr.first = unit_(rng_) < 0.5 ? with_norm_in(1.0 + 1e-9, 1.1) : with_norm_in(1.0 + 1e-9, kRadius);
    return pr;
  }

  std::mt19937_64& engine() { return rng_; }

  static constexpr double kRadius = 10.0;

 private:
  [[nodiscard]] Vec direction() {
    std::normal_distribution<double> nd;
    Vec v(static_cast<std::size_t>(n_));
    double r = 0.0;
    do {
      for (double& c : v) c = nd(rng_);
      r = norm(v);
    } while (r < 1e-12);
    return (1.0 / r) * v;
  }

  [[nodiscard]] std::pair<Vec, Vec> near_pair() {
    Vec xi = uniform_in_ball();
    const double step = std::pow(10.0, -1.0 - 5.0 * unit_(rng_));
    Vec eta = xi + step * direction();
    if (norm(eta) > kRadius) eta = (kRadius / norm(eta)) * eta;
    return {xi, eta};
  }

  std::mt19937_64 rng_;
  int n_;
  double delta_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// Lemma suite

struct LemmaSuiteConfig {
  std::vector<double> p_values{2.0, 2.5, 3.0, 4.0, 6.0};
  std::vector<double> delta_values{0.1, 0.5, 0.9};
  std::vector<int> n_values{2, 3};
  std::size_t samples = 100000;
  double tolerance = 1e-12;
  std::uint64_t seed = 20240601;
  int threads = 1;
  int shards = 8;
  /// Lemma whose gap is negated; a negative-control fixture, empty in real runs.
  std::string negate;
};

struct LemmaRow {
  std::string lemma_id;
  double p = 0.0;
  double delta = 0.0;
  int n = 0;
  std::size_t samples = 0;
  double min_gap = 0.0;  // min over samples of gap / max(1, |lhs|, |rhs|)
  double calibrated_constant = 0.0;
  std::uint64_t seed = 0;

  [[nodiscard]] bool passes(double tol) const { return min_gap >= -tol; }
};

namespace detail {

/// Runs `body(sampler, count)` over shards on up to `threads` threads and
/// reduces the per-shard doubles with `reduce`.
template <class Body, class Reduce>
[[nodiscard]] double run_sharded(const LemmaSuiteConfig& cfg, std::string_view tag, double p, double delta, int n,
                                 double init, Body&& body, Reduce&& reduce) {
  const int shards = std::max(1, cfg.shards);
  std::vector<double> partial(static_cast<std::size_t>(shards), init);
  auto work = [&](int shard) {
    const std::size_t lo = cfg.samples * static_cast<std::size_t>(shard) / static_cast<std::size_t>(shards);
    const std::size_t hi = cfg.samples * static_cast<std::size_t>(shard + 1) / static_cast<std::size_t>(shards);
    PairSampler sampler(derive_seed(cfg.seed, tag, p, delta, n, shard), n, delta);
    partial[static_cast<std::size_t>(shard)] = body(sampler, hi - lo);
  };
  const int threads = std::clamp(cfg.threads, 1, shards);
  if (threads == 1) {
    for (int s = 0; s < shards; ++s) work(s);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int s = t; s < shards; s += threads) work(s);
      });
    for (auto& th : pool) th.join();
  }
  double acc = init;
  for (double v : partial) acc = reduce(acc, v);
  return acc;
}

template <class GapFn>
[[nodiscard]] double min_normalized_gap(const LemmaSuiteConfig& cfg, std::string_view tag, double p, double delta,
                                        int n, GapFn&& gap_of) {
  const double sign = (cfg.negate == tag) ? -1.0 : 1.0;
  return run_sharded(
      cfg, tag, p, delta, n, HUGE_VAL,
      [&](PairSampler& s, std::size_t count) {
        double m = HUGE_VAL;
        for (std::size_t i = 0; i < count; ++i) m = std::min(m, sign * gap_of(s).normalized_gap());
        return m;
      },
      [](double a, double b) { return std::min(a, b); });
}

/// max sampled ratio x 1.05 over a calibration stream distinct from the
/// verification stream.
template <class RatioFn>
[[nodiscard]] double calibrate(const LemmaSuiteConfig& cfg, std::string_view tag, double p, double delta, int n,
                               RatioFn&& ratio_of) {
  LemmaSuiteConfig cal = cfg;
  cal.seed = mix_seed(cfg.seed ^ 0xca11b7a7eULL);
  const double m = run_sharded(
      cal, tag, p, delta, n, 0.0,
      [&](PairSampler& s, std::size_t count) {
        double best = 0.0;
        for (std::size_t i = 0; i < count; ++i) best = std::max(best, ratio_of(s));
        return best;
      },
      [](double a, double b) { return std::max(a, b); });
  return 1.05 * m;
}

}  // namespace detail

/// Empirical c(p) for the upper Boegelein bound.
[[nodiscard]] inline double calibrate_bogelein_constant(const LemmaSuiteConfig& cfg, double p, double delta, int n) {
  return detail::calibrate(cfg, id::kBogeleinUpper, p, delta, n, [p](PairSampler& s) {
    const auto [xi, eta] = s.next_outside_unit();
    return bogelein_upper_ratio(xi, eta, p);
  });
}

/// Empirical c_1(p) for the Lindqvist chain.
[[nodiscard]] inline double calibrate_lindqvist_constant(const LemmaSuiteConfig& cfg, double p, double delta, int n) {
  return detail::calibrate(cfg, id::kLindqvistLower, p, delta, n, [p](PairSampler& s) {
    const auto [xi, eta] = s.next();
    return lindqvist_required_constant(xi, eta, p);
  });
}

/// Draws the scalar arguments of the Young-type inequality.
[[nodiscard]] inline GapSample sample_young(PairSampler& s) {
  auto& rng = s.engine();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double A = 10.0 * u01(rng);
  const double B = 10.0 * u01(rng);
  const double k = 1.0 + 1e-6 + 9.0 * u01(rng);
  const double sv = 3.0 * k * u01(rng);
  const double alpha = std::pow(10.0, -3.0 + 6.0 * u01(rng));
  const double sigma = std::pow(10.0, -3.0 + 6.0 * u01(rng));
  return young_type_gap(A, B, sv, k, alpha, sigma);
}

/// One row per (lemma, p, delta, n).
[[nodiscard]] inline std::vector<LemmaRow> run_lemma_suite(const LemmaSuiteConfig& cfg) {
  if (cfg.p_values.empty() || cfg.delta_values.empty() || cfg.n_values.empty() || cfg.samples == 0)
    throw ConfigError("lemma suite: empty parameter grid");
  std::vector<LemmaRow> rows;
  for (int n : cfg.n_values)
    for (double p : cfg.p_values)
      for (double delta : cfg.delta_values) {
        const Params params{.p = p, .delta = delta, .eps = 0.0, .n = n};
        params.validate();
        auto row = [&](std::string_view tag, double min_gap, double constant) {
          rows.push_back({std::string(tag), p, delta, n, cfg.samples, min_gap, constant,
                          derive_seed(cfg.seed, tag, p, delta, n, 0)});
        };
        row(id::kBrascoMonotonicity,
            detail::min_normalized_gap(cfg, id::kBrascoMonotonicity, p, delta, n,
                                       [p](PairSampler& s) {
                                         const auto [xi, eta] = s.next();
                                         return brasco_monotonicity_gap(xi, eta, p);
                                       }),
            4.0 / (p * p));
        row(id::kBrascoLipschitz,
            detail::min_normalized_gap(cfg, id::kBrascoLipschitz, p, delta, n,
                                       [p](PairSampler& s) {
                                         const auto [xi, eta] = s.next();
                                         return brasco_lipschitz_gap(xi, eta, p);
                                       }),
            p - 1.0);
        const double c_bog = calibrate_bogelein_constant(cfg, p, delta, n);
        row(id::kBogeleinUpper,
            detail::min_normalized_gap(cfg, id::kBogeleinUpper, p, delta, n,
                                       [p, c_bog](PairSampler& s) {
                                         const auto [xi, eta] = s.next_outside_unit();
                                         return bogelein_upper_gap(xi, eta, p, c_bog);
                                       }),
            c_bog);
        row(id::kBogeleinLower,
            detail::min_normalized_gap(cfg, id::kBogeleinLower, p, delta, n,
                                       [p](PairSampler& s) {
                                         const auto [xi, eta] = s.next_outside_unit();
                                         return bogelein_lower_gap(xi, eta, p);
                                       }),
            std::min(1.0, p - 1.0) / rpow(2.0, p + 1.0));
        const double c1 = calibrate_lindqvist_constant(cfg, p, delta, n);
        row(id::kLindqvistLower,
            detail::min_normalized_gap(cfg, id::kLindqvistLower, p, delta, n,
                                       [p, c1](PairSampler& s) {
                                         const auto [xi, eta] = s.next();
                                         return lindqvist_gap(xi, eta, p, c1).first;
                                       }),
            c1);
        row(id::kLindqvistUpper,
            detail::min_normalized_gap(cfg, id::kLindqvistUpper, p, delta, n,
                                       [p, c1](PairSampler& s) {
                                         const auto [xi, eta] = s.next();
                                         return lindqvist_gap(xi, eta, p, c1).second;
                                       }),
            c1);
        row(id::kYoungType,
            detail::min_normalized_gap(cfg, id::kYoungType, p, delta, n, [](PairSampler& s) { return sample_young(s); }),
            0.0);
        row(id::kGHComparison,
            detail::min_normalized_gap(cfg, id::kGHComparison, p, delta, n,
                                       [&params](PairSampler& s) {
                                         const auto [xi, eta] = s.next();
                                         return gh_comparison_gap(xi, eta, params);
                                       }),
            4.0 / (p * p));
        const GBoundsCheck gb = check_G_bounds(p, delta);
        double g_min = std::min(gb.min_lower_gap, gb.min_upper_gap);
        if (cfg.negate == id::kGDeltaBounds) g_min = -std::max(gb.min_lower_gap, gb.min_upper_gap) - 1.0;
        rows.push_back({std::string(id::kGDeltaBounds), p, delta, n, gb.samples, g_min, gb.c, 0});
      }
  return rows;
}

[[nodiscard]] inline bool all_pass(const std::vector<LemmaRow>& rows, double tol) {
  return std::all_of(rows.begin(), rows.end(), [tol](const LemmaRow& r) { return r.passes(tol); });
}

[[nodiscard]] inline std::string lemma_csv(const std::vector<LemmaRow>& rows) {
  std::ostringstream os;
  os << "lemma_id,p,delta,n,samples,min_gap,calibrated_constant,seed\n";
  for (const auto& r : rows)
    os << r.lemma_id << "," << io::fmt_double(r.p) << "," << io::fmt_double(r.delta) << "," << r.n << "," << r.samples
       << "," << io::fmt_double(r.min_gap) << "," << io::fmt_double(r.calibrated_constant) << "," << r.seed << "\n";
  return os.str();
}

}  // namespace degenflow::lab
