/**
 * @file estimates.hpp
 * @brief Both sides of the interior estimates, evaluated on discrete
 * solutions and packaged as EstimateReport.
 *
 * The constants c(n, p) in these estimates are not explicit, so a report
 * records lhs, the labeled right-hand-side terms and their ratio; callers
 * assert finiteness and stability, never a value for the constant.
 *
 * Convention: rhs = prefactor * (sum of rhs_terms)^exponent.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "degenflow/core.hpp"
#include "degenflow/flux.hpp"
#include "degenflow/grid.hpp"
#include "degenflow/io.hpp"

namespace degenflow::estimates {

namespace id {
inline constexpr std::string_view kCaccioppoli = "caccioppoli";
inline constexpr std::string_view kUniform = "uniform_estimate";
inline constexpr std::string_view kDiffquot = "diffquot";
inline constexpr std::string_view kComparison = "comparison";
inline constexpr std::string_view kHigherIntegrability = "higher_integrability";
}  // namespace id

using Terms = std::vector<std::pair<std::string, double>>;

struct EstimateReport {
  std::string id;
  Cylinder inner;
  Cylinder outer;
  double lhs = 0.0;
  Terms lhs_terms;  // components of lhs (informational)
  Terms rhs_terms;
  double prefactor = 1.0;
  double exponent = 1.0;
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs, 0 when lhs = 0
  Params params;
  std::string fingerprint;

  [[nodiscard]] double term(std::string_view label) const {
    for (const auto& [k, v] : rhs_terms)
      if (k == label) return v;
    for (const auto& [k, v] : lhs_terms)
      if (k == label) return v;
    throw InvalidInput("EstimateReport: no term " + std::string(label));
  }
};

namespace detail {

inline void finish(EstimateReport& r) {
  double sum = 0.0;
  for (const auto& t : r.rhs_terms) sum += t.second;
  r.rhs = r.prefactor * rpow(sum, r.exponent);
  r.ratio = r.lhs == 0.0 ? 0.0 : r.lhs / r.rhs;
  if (!std::isfinite(r.ratio) || r.ratio < 0.0) throw DomainError("estimate " + r.id + ": ratio is not finite");
}

inline void check_geometry(const Grid& g, const Cylinder& inner, const Cylinder& outer) {
  outer.check_inside(g);
  inner.check_inside(g);
  if (!(inner.radius < outer.radius)) throw DomainError("estimate: inner cylinder must be strictly smaller");
}

inline void check_field(const ScalarField& F, const Grid& g, const char* what) {
  if (!F.grid.same_space(g) || F.grid.nt != g.nt) throw DomainError(std::string("estimate: ") + what + " is not on the grid");
}

}  // namespace detail

/// |Du| at every node (centered differences).
[[nodiscard]] inline ScalarField gradient_norm(const ScalarField& u) { return pointwise_norm(gradient(u)); }

/// G_delta((|Du| - delta - 1)_+) at every node.
[[nodiscard]] inline ScalarField gated_field(const ScalarField& u, const Params& params) {
  ScalarField out = gradient_norm(u);
  for (double& v : out.values) v = flux::eval_gated_G(v, params);
  return out;
}

/// int_Q |D F|^2 for a nodal scalar F.
[[nodiscard]] inline double gradient_energy(const ScalarField& F, const Cylinder& q) {
  return integral_pow(gradient_norm(F), 2.0, q);
}

/// int_Q (|Du|^p + 1).
[[nodiscard]] inline double energy_term(const ScalarField& grad_norm, double p, const Cylinder& q) {
  return integrate(grad_norm.grid, q, [&](int k, std::size_t i) { return rpow(grad_norm.at(k, i), p) + 1.0; });
}

[[nodiscard]] inline double source_term(const ScalarField& f, const Cylinder& q) { return integral_pow(f, 2.0, q); }

/// Q_{R/16} versus Q_R:
/// int |D G_delta((|Du|-delta-1)_+)|^2 <= c/(R^2 delta^2) [int (|Du|^p+1) + delta^{-p} int |f|^2].
[[nodiscard]] inline EstimateReport caccioppoli_report(const ScalarField& u, const ScalarField& f,
                                                       const Params& params, const Cylinder& q_R) {
  const Grid& g = u.grid;
  detail::check_field(f, g, "f");
  EstimateReport r{std::string(id::kCaccioppoli), q_R.scaled(1.0 / 16.0), q_R, 0.0, {}, {}, 1.0, 1.0, 0.0, 0.0,
                   params, g.fingerprint()};
  detail::check_geometry(g, r.inner, r.outer);
  const double d = params.delta;
  r.lhs = gradient_energy(gated_field(u, params), r.inner);
  r.rhs_terms = {{"grad_p_plus_1", energy_term(gradient_norm(u), params.p, q_R)},
                 {"source", rpow(d, -params.p) * source_term(f, q_R)}};
  r.prefactor = 1.0 / (q_R.radius * q_R.radius * d * d);
  detail::finish(r);
  return r;
}

/// Q_rho versus Q_{2 rho}:
/// sup_tau int_{B_rho} (|Du|^2-1-delta)_+ + int_{Q_rho} |D G|^2
///   <= c/rho^2 [int_{Q_2rho} (1+|Du|^p) + delta^{2-p} int_{Q_2rho} |f|^2].
/// The sup runs over the levels of the time window of Q_{2 rho}.
[[nodiscard]] inline EstimateReport uniform_estimate_report(const ScalarField& u, const ScalarField& f,
                                                            const Params& params, const Cylinder& q_rho) {
  const Grid& g = u.grid;
  detail::check_field(f, g, "f");
  const Cylinder outer = q_rho.scaled(2.0);
  EstimateReport r{std::string(id::kUniform), q_rho, outer, 0.0, {}, {}, 1.0, 1.0, 0.0, 0.0, params, g.fingerprint()};
  detail::check_geometry(g, r.inner, r.outer);
  const ScalarField gn = gradient_norm(u);
  const double d = params.delta;
  const auto ball = q_rho.space_mask(g);
  double sup_term = 0.0;
  for (int k : outer.levels(g)) {
    double s = 0.0;
    for (std::size_t i = 0; i < ball.size(); ++i)
      if (ball[i]) s += positive_part(gn.at(k, i) * gn.at(k, i) - 1.0 - d);
    sup_term = std::max(sup_term, s * g.cell_volume());
  }
  const double grad_term = gradient_energy(gated_field(u, params), q_rho);
  r.lhs = sup_term + grad_term;
  r.lhs_terms = {{"sup_slice", sup_term}, {"gated_gradient", grad_term}};
  r.rhs_terms = {{"grad_p_plus_1", energy_term(gn, params.p, outer)},
                 {"source", rpow(d, 2.0 - params.p) * source_term(f, outer)}};
  r.prefactor = 1.0 / (q_rho.radius * q_rho.radius);
  detail::finish(r);
  return r;
}

/// Q_{rho/2} versus Q_{2 rho}, |h| < rho/4:
/// int |tau_h G|^2 <= c |h|^2/(rho^2 delta^2) [int (1+|Du|^p) + delta^{-p} int |f|^2].
[[nodiscard]] inline EstimateReport diffquot_estimate_report(const ScalarField& u, const ScalarField& f,
                                                             const Params& params, const Cylinder& q_rho, double h,
                                                             int axis = 0) {
  const Grid& g = u.grid;
  detail::check_field(f, g, "f");
  if (!(std::abs(h) < q_rho.radius / 4.0)) throw DomainError("diffquot_estimate_report: need |h| < rho/4");
  const Cylinder outer = q_rho.scaled(2.0);
  EstimateReport r{std::string(id::kDiffquot), q_rho.scaled(0.5), outer, 0.0, {}, {}, 1.0, 1.0, 0.0, 0.0, params,
                   g.fingerprint()};
  detail::check_geometry(g, r.inner, r.outer);
  const double d = params.delta;
  r.lhs = integral_pow(tau_h(gated_field(u, params), axis, h), 2.0, r.inner);
  r.rhs_terms = {{"grad_p_plus_1", energy_term(gradient_norm(u), params.p, outer)},
                 {"source", rpow(d, -params.p) * source_term(f, outer)}};
  r.prefactor = h * h / (q_rho.radius * q_rho.radius * d * d);
  detail::finish(r);
  return r;
}

/// Reports along a halving h-ladder; `lhs_ratios[i]` = lhs(h_i)/lhs(h_{i+1}),
/// which is 4 for exact h^2 scaling.
struct DiffquotLadder {
  std::vector<EstimateReport> reports;
  std::vector<double> lhs_ratios;

  /// lhs(h)/lhs(h/2) within a factor 2 of 4.
  [[nodiscard]] bool h2_scaling() const {
    return !lhs_ratios.empty() &&
           std::all_of(lhs_ratios.begin(), lhs_ratios.end(), [](double q) { return q >= 2.0 && q <= 8.0; });
  }
};

[[nodiscard]] inline DiffquotLadder diffquot_ladder(const ScalarField& u, const ScalarField& f, const Params& params,
                                                    const Cylinder& q_rho, std::span<const double> hs, int axis = 0) {
  DiffquotLadder out;
  for (double h : hs) out.reports.push_back(diffquot_estimate_report(u, f, params, q_rho, h, axis));
  for (std::size_t i = 0; i + 1 < out.reports.size(); ++i) {
    const double a = out.reports[i].lhs;
    const double b = out.reports[i + 1].lhs;
    out.lhs_ratios.push_back(b == 0.0 ? (a == 0.0 ? 4.0 : HUGE_VAL) : a / b);
  }
  return out;
}

/// Cauchy surrogate of the comparison estimate between two regularized
/// solutions on Q_R, u2 standing in for the limit:
/// sup_t ||u1-u2||^2_{L^2(B_R)} + int |H_{p/2}(Du1) - H_{p/2}(Du2)|^2
///   <= d^{(n+2)/(n+1)} (int (|Du2|^p+1))^{n/(p(n+1))} + d^{p(n+2)/(n(p-1)+p)} + eps1 int |Du2|^p,
/// d = ||f^{eps1} - f^{eps2}||_{L^2(Q_R)}, eps1 = params.eps.
[[nodiscard]] inline EstimateReport comparison_report(const ScalarField& u1, const ScalarField& u2,
                                                      const ScalarField& f1, const ScalarField& f2,
                                                      const Params& params, const Cylinder& q_R) {
  const Grid& g = u1.grid;
  detail::check_field(u2, g, "u2");
  detail::check_field(f1, g, "f1");
  detail::check_field(f2, g, "f2");
  EstimateReport r{std::string(id::kComparison), q_R, q_R, 0.0, {}, {}, 1.0, 1.0, 0.0, 0.0, params, g.fingerprint()};
  q_R.check_inside(g);
  const double p = params.p;
  const double n = g.n;

  ScalarField du(g);
  for (std::size_t i = 0; i < du.values.size(); ++i) du.values[i] = u1.values[i] - u2.values[i];
  const double sup_term = sup_slice_integral(du, 2.0, q_R);

  const VectorField g1 = gradient(u1);
  const VectorField g2 = gradient(u2);
  ScalarField hdiff(g);
  for (int k = 0; k < g.nt; ++k)
    for (std::size_t i = 0; i < g.space_size(); ++i)
      hdiff.at(k, i) = norm(flux::eval_H(g1.at(k, i), p / 2.0) - flux::eval_H(g2.at(k, i), p / 2.0));
  const double h_term = integral_pow(hdiff, 2.0, q_R);
  r.lhs = sup_term + h_term;
  r.lhs_terms = {{"sup_L2_sq", sup_term}, {"H_diff_sq", h_term}};

  ScalarField df(g);
  for (std::size_t i = 0; i < df.values.size(); ++i) df.values[i] = f1.values[i] - f2.values[i];
  const double d = lq_norm(df, 2.0, q_R);
  const ScalarField n2 = pointwise_norm(g2);
  const double grad_p = integral_pow(n2, p, q_R);
  const double energy = energy_term(n2, p, q_R);
  r.rhs_terms = {{"T1", rpow(d, (n + 2.0) / (n + 1.0)) * rpow(energy, n / (p * (n + 1.0)))},
                 {"T2", rpow(d, p * (n + 2.0) / (n * (p - 1.0) + p))},
                 {"T3", params.eps * grad_p}};
  detail::finish(r);
  return r;
}

/// Q_{rho/2} versus Q_{2 rho}:
/// int (|Du|-1)_+^{p+4/n} <= c/rho^{2(n+2)/n} [int (1+|Du|^p) + delta^{2-p} int |f|^2]^{2/n+1}.
/// lhs is the degenerate part; the full int |Du|^{p+4/n} is kept in lhs_terms.
[[nodiscard]] inline EstimateReport higher_integrability_report(const ScalarField& u, const ScalarField& f,
                                                                const Params& params, const Cylinder& q_rho) {
  const Grid& g = u.grid;
  detail::check_field(f, g, "f");
  const Cylinder outer = q_rho.scaled(2.0);
  EstimateReport r{std::string(id::kHigherIntegrability), q_rho.scaled(0.5), outer, 0.0, {}, {}, 1.0, 1.0, 0.0, 0.0,
                   params, g.fingerprint()};
  detail::check_geometry(g, r.inner, r.outer);
  const double n = g.n;
  const double q = params.p + 4.0 / n;
  const ScalarField gn = gradient_norm(u);
  ScalarField excess = gn;
  for (double& v : excess.values) v = positive_part(v - 1.0);
  r.lhs = integral_pow(excess, q, r.inner);
  r.lhs_terms = {{"degenerate_part", r.lhs}, {"full", integral_pow(gn, q, r.inner)}};
  r.rhs_terms = {{"grad_p_plus_1", energy_term(gn, params.p, outer)},
                 {"source", rpow(params.delta, 2.0 - params.p) * source_term(f, outer)}};
  r.prefactor = rpow(q_rho.radius, -2.0 * (n + 2.0) / n);
  r.exponent = 2.0 / n + 1.0;
  detail::finish(r);
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr std::string_view kCsvHeader = "estimate_id,rho,R,delta,eps,p,n,lhs,rhs_terms,rhs,ratio";

/// rhs_terms are encoded as "label=value;label=value".
[[nodiscard]] inline std::string csv_row(const EstimateReport& r) {
  std::ostringstream os;
  os << r.id << "," << io::fmt_double(r.inner.radius) << "," << io::fmt_double(r.outer.radius) << ","
     << io::fmt_double(r.params.delta) << "," << io::fmt_double(r.params.eps) << "," << io::fmt_double(r.params.p)
     << "," << r.params.n << "," << io::fmt_double(r.lhs) << ",";
  for (std::size_t i = 0; i < r.rhs_terms.size(); ++i)
    os << (i ? ";" : "") << r.rhs_terms[i].first << "=" << io::fmt_double(r.rhs_terms[i].second);
  os << "," << io::fmt_double(r.rhs) << "," << io::fmt_double(r.ratio);
  return os.str();
}

[[nodiscard]] inline std::string csv(const std::vector<EstimateReport>& reports) {
  std::string out(kCsvHeader);
  out += "\n";
  for (const auto& r : reports) out += csv_row(r) + "\n";
  return out;
}

[[nodiscard]] inline std::string summary(const EstimateReport& r) {
  std::ostringstream os;
  os << r.id << " [" << r.fingerprint << "] rho=" << r.inner.radius << " R=" << r.outer.radius << "\n"
     << "  lhs   = " << r.lhs << "\n";
  for (const auto& [k, v] : r.lhs_terms) os << "    " << k << " = " << v << "\n";
  os << "  rhs   = " << r.prefactor << " * (";
  for (std::size_t i = 0; i < r.rhs_terms.size(); ++i)
    os << (i ? " + " : "") << r.rhs_terms[i].first << "=" << r.rhs_terms[i].second;
  os << ")";
  if (r.exponent != 1.0) os << "^" << r.exponent;
  os << " = " << r.rhs << "\n  ratio = " << r.ratio << "\n";
  return os.str();
}

}  // namespace degenflow::estimates
