/**
 * @file solver.hpp
 * @brief Backward-Euler solver for u_t - div A_eps(Du) = f with Dirichlet
 * data on the whole parabolic boundary of a box, plus the space-time
 * mollifier used to build f^eps.
 *
 * Spatial scheme: one flux per cell face. For the face between nodes a and
 * a + e_s the gradient is reconstructed as
 *
 *   xi_s = (u_{a+e_s} - u_a) / h_s,
 *   xi_r = mean of the centered differences along r at both ends   (r != s),
 *
 * A_eps is evaluated there and the divergence is the face difference. The
 * implicit step is solved by semismooth Newton (sparse LU, Armijo damping)
 * with a preconditioned fixed-point fallback.
 */
#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "degenflow/core.hpp"
#include "degenflow/flux.hpp"
#include "degenflow/grid.hpp"

namespace degenflow::solver {

struct NonlinearSettings {
  int max_iter = 50;
  double abs_tol = 1e-9;
  double damping = 1.0;  // first trial step of the line search
  bool fallback = true;

  void validate() const {
    if (max_iter < 1) throw ParameterError("NonlinearSettings: max_iter must be >= 1");
    if (!(abs_tol > 0.0)) throw ParameterError("NonlinearSettings: abs_tol must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw ParameterError("NonlinearSettings: damping must lie in (0, 1]");
  }
};

/// Dirichlet trace g(x, t) on the lateral boundary.
using Trace = std::function<double(const Vec&, double)>;

struct ProblemSpec {
  Params params;
  Grid grid;
  ScalarField f;        // one value per space-time node
  ScalarField initial;  // single level at grid.t0
  Trace boundary;
  NonlinearSettings newton;

  /// `solving` additionally demands eps > 0.
  void validate(bool solving = true) const {
    params.validate();
    grid.validate();
    newton.validate();
    if (params.n != grid.n) throw ConfigError("ProblemSpec: params.n differs from the grid dimension");
    if (!f.grid.same_space(grid) || f.grid.nt != grid.nt) throw ConfigError("ProblemSpec: f is not on the grid");
    if (!initial.grid.same_space(grid) || initial.grid.nt != 1)
      throw ConfigError("ProblemSpec: initial data must be one level on the grid");
    if (!boundary) throw ConfigError("ProblemSpec: boundary trace missing");
    if (solving && !(params.eps > 0.0)) throw ParameterError("ProblemSpec: eps > 0 is required to solve");
    if (!f.all_finite() || !initial.all_finite()) throw InvalidInput("ProblemSpec: non-finite data");
    // Initial and lateral data must agree where they meet.
    for (std::size_t i = 0; i < grid.space_size(); ++i) {
      if (!grid.on_boundary(i)) continue;
      const double a = initial.at(0, i);
      const double b = boundary(grid.position(i), grid.t0);
      if (std::abs(a - b) > 1e-8 * std::max({1.0, std::abs(a), std::abs(b)}))
        throw PreconditionError("ProblemSpec: initial and boundary data disagree on the parabolic boundary");
    }
  }
};

struct StepLog {
  int level = 0;
  int iterations = 0;
  double residual = 0.0;
  bool fallback = false;
};

struct Solution {
  ScalarField u;
  std::vector<StepLog> log;
};

namespace detail {

/// Face-flux discretization on a fixed grid; unknowns are the interior nodes.
class Discretization {
 public:
  Discretization(const Grid& g, const Params& prm) : g_(g), prm_(prm), ns_(g.space_size()), index_(ns_, -1) {
    for (std::size_t i = 0; i < ns_; ++i)
      if (!g_.on_boundary(i)) {
        index_[i] = static_cast<int>(nodes_.size());
        nodes_.push_back(i);
      }
    for (int a = 0; a < g_.n; ++a) {
      h_[static_cast<std::size_t>(a)] = g_.spacing(a);
      stride_[static_cast<std::size_t>(a)] = g_.stride(a);
    }
  }

  [[nodiscard]] const Grid& grid() const { return g_; }
  [[nodiscard]] const Params& params() const { return prm_; }
  [[nodiscard]] std::size_t unknowns() const { return nodes_.size(); }
  [[nodiscard]] const std::vector<std::size_t>& nodes() const { return nodes_; }
  [[nodiscard]] int index(std::size_t node) const { return index_[node]; }

  /// Visits every face that touches an interior node: f(a, b, s).
  template <class F>
  void for_each_face(F&& f) const {
    for (std::size_t a = 0; a < ns_; ++a)
      for (int s = 0; s < g_.n; ++s) {
        if (!face_exists(a, s)) continue;
        f(a, a + stride_[static_cast<std::size_t>(s)], s);
      }
  }

  [[nodiscard]] Vec face_gradient(std::span<const double> u, std::size_t a, std::size_t b, int s) const {
    Vec xi(static_cast<std::size_t>(g_.n));
    for (int r = 0; r < g_.n; ++r) {
      const auto ur = static_cast<std::size_t>(r);
      if (r == s) {
        xi[ur] = (u[b] - u[a]) / h_[ur];
      } else {
        const std::size_t st = stride_[ur];
        xi[ur] = (u[a + st] - u[a - st] + u[b + st] - u[b - st]) / (4.0 * h_[ur]);
      }
    }
    return xi;
  }

  /// div_h A_eps(Du) at interior nodes; boundary entries are left at 0.
  void divergence(std::span<const double> u, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for_each_face([&](std::size_t a, std::size_t b, int s) {
      const double F = flux::eval_A_eps(face_gradient(u, a, b, s), prm_)[static_cast<std::size_t>(s)] /
                       h_[static_cast<std::size_t>(s)];
      out[a] += F;
      out[b] -= F;
    });
    for (std::size_t i = 0; i < ns_; ++i)
      if (index_[i] < 0) out[i] = 0.0;
  }

  /// Residual over interior unknowns: (u - u_prev)/dt - div A(Du) - f.
  void residual(std::span<const double> u, std::span<const double> u_prev, std::span<const double> f, double dt,
                Eigen::VectorXd& R) const {
    std::vector<double> div(ns_);
    divergence(u, div);
    R.resize(static_cast<Eigen::Index>(nodes_.size()));
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const std::size_t i = nodes_[k];
      R[static_cast<Eigen::Index>(k)] = (u[i] - u_prev[i]) / dt - div[i] - f[i];
    }
  }

  /// Generalized Jacobian of the residual with respect to interior unknowns.
  void jacobian(std::span<const double> u, double dt, Eigen::SparseMatrix<double>& J) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nodes_.size() * static_cast<std::size_t>(1 + 6 * g_.n * g_.n));
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const auto kk = static_cast<int>(k);
      trip.emplace_back(kk, kk, 1.0 / dt);
    }
    const auto n = static_cast<std::size_t>(g_.n);
    std::array<double, kMaxDim * kMaxDim> jac{};
    for_each_face([&](std::size_t a, std::size_t b, int s) {
      const auto us = static_cast<std::size_t>(s);
      flux::jacobian_A_eps(face_gradient(u, a, b, s), prm_, std::span<double>(jac.data(), n * n));
      const double* row = jac.data() + us * n;
      const int ra = index_[a];
      const int rb = index_[b];
      // dF/du_j scaled by 1/h_s; row a gets -, row b gets +.
      auto add = [&](std::size_t node, double dF) {
        const int c = index_[node];
        if (c < 0 || dF == 0.0) return;
        const double v = dF / h_[us];
        if (ra >= 0) trip.emplace_back(ra, c, -v);
        if (rb >= 0) trip.emplace_back(rb, c, v);
      };
      add(a, -row[us] / h_[us]);
      add(b, row[us] / h_[us]);
      for (std::size_t r = 0; r < n; ++r) {
        if (r == us || row[r] == 0.0) continue;
        const double c = row[r] / (4.0 * h_[r]);
        const std::size_t st = stride_[r];
        add(a + st, c);
        add(a - st, -c);
        add(b + st, c);
        add(b - st, -c);
      }
    });
    J.resize(static_cast<Eigen::Index>(nodes_.size()), static_cast<Eigen::Index>(nodes_.size()));
    J.setFromTriplets(trip.begin(), trip.end());
  }

  /// I/dt - eps * (5-point Laplacian) on interior unknowns.
  void preconditioner(double dt, Eigen::SparseMatrix<double>& P) const {
    std::vector<Eigen::Triplet<double>> trip;
    const double eps = std::max(prm_.eps, 1e-12);
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const std::size_t i = nodes_[k];
      const auto kk = static_cast<int>(k);
      double diag = 1.0 / dt;
      for (std::size_t r = 0; r < static_cast<std::size_t>(g_.n); ++r) {
        const double w = eps / (h_[r] * h_[r]);
        diag += 2.0 * w;
        for (std::size_t nb : {i + stride_[r], i - stride_[r]})
          if (index_[nb] >= 0) trip.emplace_back(kk, index_[nb], -w);
      }
      trip.emplace_back(kk, kk, diag);
    }
    P.resize(static_cast<Eigen::Index>(nodes_.size()), static_cast<Eigen::Index>(nodes_.size()));
    P.setFromTriplets(trip.begin(), trip.end());
  }

  /// Largest face-gradient norm over all faces.
  [[nodiscard]] double max_face_slope(std::span<const double> u) const {
    double m = 0.0;
    for_each_face([&](std::size_t a, std::size_t b, int s) { m = std::max(m, norm(face_gradient(u, a, b, s))); });
    return m;
  }

 private:
  // A face (a, a + e_s) is needed when every transverse index of a is interior.
  [[nodiscard]] bool face_exists(std::size_t a, int s) const {
    for (int r = 0; r < g_.n; ++r) {
      const int i = g_.index_along(a, r);
      const int m = g_.nx[static_cast<std::size_t>(r)];
      if (r == s) {
        if (i > m - 2) return false;
      } else if (i < 1 || i > m - 2) {
        return false;
      }
    }
    return true;
  }

  Grid g_;
  Params prm_;
  std::size_t ns_;
  std::vector<int> index_;
  std::vector<std::size_t> nodes_;
  std::array<double, kMaxDim> h_{};
  std::array<std::size_t, kMaxDim> stride_{};
};

[[nodiscard]] inline double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Solves one implicit level in place. `u` holds the boundary values at the
/// new time and the initial iterate in the interior.
class StepSolver {
 public:
  StepSolver(const Discretization& d, const NonlinearSettings& s) : d_(d), s_(s) {}

  StepLog solve(std::vector<double>& u, std::span<const double> u_prev, std::span<const double> f, double dt,
                int level) {
    StepLog log{level, 0, 0.0, false};
    Eigen::VectorXd R;
    d_.residual(u, u_prev, f, dt, R);
    double rsup = sup_norm(R);
    Eigen::SparseMatrix<double> J;
    bool stalled = false;
    while (rsup > s_.abs_tol && log.iterations < s_.max_iter) {
      d_.jacobian(u, dt, J);
      if (!analyzed_) {
        lu_.analyzePattern(J);
        analyzed_ = true;
      }
      lu_.factorize(J);
      if (lu_.info() != Eigen::Success) {
        stalled = true;
        break;
      }
      const Eigen::VectorXd dir = lu_.solve(-R);
      ++log.iterations;
      if (!line_search(u, u_prev, f, dt, dir, R)) {
        stalled = true;
        break;
      }
      rsup = sup_norm(R);
    }
    if (rsup > s_.abs_tol && s_.fallback) {
      log.fallback = true;
      rsup = fixed_point(u, u_prev, f, dt, R, log);
    }
    log.residual = rsup;
    if (rsup > s_.abs_tol) {
      const char* why = stalled ? "implicit step: Newton stalled" : "implicit step: no convergence within max_iter";
      throw SolverError(why, rsup, log.iterations, level);
    }
    return log;
  }

 private:
  // Armijo backtracking on ||R||_2; updates u and R on success.
  bool line_search(std::vector<double>& u, std::span<const double> u_prev, std::span<const double> f, double dt,
                   const Eigen::VectorXd& dir, Eigen::VectorXd& R) {
    const double r0 = R.norm();
    const auto& nodes = d_.nodes();
    std::vector<double> trial = u;
    Eigen::VectorXd Rt;
    for (double alpha = s_.damping; alpha >= 1.0 / 1024.0; alpha *= 0.5) {
      for (std::size_t k = 0; k < nodes.size(); ++k)
        trial[nodes[k]] = u[nodes[k]] + alpha * dir[static_cast<Eigen::Index>(k)];
      d_.residual(trial, u_prev, f, dt, Rt);
      const double rt = Rt.norm();
      if (rt <= (1.0 - 1e-4 * alpha) * r0 || sup_norm(Rt) <= s_.abs_tol) {
        u.swap(trial);
        R.swap(Rt);
        return true;
      }
    }
    return false;
  }

  double fixed_point(std::vector<double>& u, std::span<const double> u_prev, std::span<const double> f, double dt,
                     Eigen::VectorXd& R, StepLog& log) {
    Eigen::SparseMatrix<double> P;
    d_.preconditioner(dt, P);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(P);
    d_.residual(u, u_prev, f, dt, R);
    const int budget = 20 * s_.max_iter;
    for (int it = 0; it < budget && sup_norm(R) > s_.abs_tol; ++it) {
      const Eigen::VectorXd dir = ldlt.solve(-R);
      ++log.iterations;
      if (!line_search(u, u_prev, f, dt, dir, R)) break;
    }
    return sup_norm(R);
  }

  const Discretization& d_;
  NonlinearSettings s_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
};

inline void impose_boundary(const Grid& g, const Trace& trace, double t, std::span<double> u) {
  for (std::size_t i = 0; i < g.space_size(); ++i)
    if (g.on_boundary(i)) u[i] = trace(g.position(i), t);
}

}  // namespace detail

/// div_h A_eps(Du) of one level at interior nodes (0 on the boundary).
[[nodiscard]] inline ScalarField flux_divergence(const ScalarField& slice, const Params& params) {
  if (slice.grid.nt != 1) throw DomainError("flux_divergence: expected a single level");
  const detail::Discretization d(slice.grid, params);
  ScalarField out(slice.grid);
  d.divergence(slice.values, out.values);
  return out;
}

/// Largest face-gradient norm of one level.
[[nodiscard]] inline double max_face_slope(const ScalarField& slice, const Params& params) {
  if (slice.grid.nt != 1) throw DomainError("max_face_slope: expected a single level");
  return detail::Discretization(slice.grid, params).max_face_slope(slice.values);
}

/// One implicit step to `level`; `u_prev` is level - 1. `guess` (optional)
/// replaces u_prev as the interior starting iterate.
[[nodiscard]] inline ScalarField step(const ScalarField& u_prev, int level, const ProblemSpec& spec,
                                      StepLog* log = nullptr, const ScalarField* guess = nullptr) {
  const Grid& g = spec.grid;
  if (level < 1 || level >= g.nt) throw DomainError("step: level out of range");
  if (!u_prev.grid.same_space(g) || u_prev.grid.nt != 1) throw DomainError("step: u_prev must be one level");
  const detail::Discretization d(g, spec.params);
  detail::StepSolver s(d, spec.newton);
  const double t = g.time(level);
  std::vector<double> u = guess ? guess->values : u_prev.values;
  detail::impose_boundary(g, spec.boundary, t, u);
  const StepLog l = s.solve(u, u_prev.values, spec.f.level(level), g.dt, level);
  if (log) *log = l;
  return {g.slice_grid(t), std::move(u)};
}

/// Full evolution; level 0 is the initial datum.
[[nodiscard]] inline Solution solve(const ProblemSpec& spec) {
  spec.validate(true);
  const Grid& g = spec.grid;
  const detail::Discretization d(g, spec.params);
  detail::StepSolver s(d, spec.newton);
  Solution out{ScalarField(g), {}};
  std::copy(spec.initial.values.begin(), spec.initial.values.end(), out.u.level(0).begin());
  std::vector<double> prev(spec.initial.values);
  std::vector<double> older;
  for (int k = 1; k < g.nt; ++k) {
    // Linear extrapolation in time as the first iterate.
    std::vector<double> u = prev;
    if (!older.empty())
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = 2.0 * prev[i] - older[i];
    detail::impose_boundary(g, spec.boundary, g.time(k), u);
    out.log.push_back(s.solve(u, prev, spec.f.level(k), g.dt, k));
    std::copy(u.begin(), u.end(), out.u.level(k).begin());
    older.swap(prev);
    prev.swap(u);
  }
  return out;
}

/// Strong discrete residual at interior nodes of levels >= 1; admits eps = 0.
[[nodiscard]] inline ScalarField residual(const ScalarField& u, const ProblemSpec& spec) {
  spec.validate(false);
  const Grid& g = spec.grid;
  if (!u.grid.same_space(g) || u.grid.nt != g.nt) throw DomainError("residual: u is not on the problem grid");
  const detail::Discretization d(g, spec.params);
  ScalarField out(g);
  Eigen::VectorXd R;
  for (int k = 1; k < g.nt; ++k) {
    d.residual(u.level(k), u.level(k - 1), spec.f.level(k), g.dt, R);
    for (std::size_t j = 0; j < d.nodes().size(); ++j)
      out.at(k, d.nodes()[j]) = R[static_cast<Eigen::Index>(j)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mollification

namespace detail {

/// Normalized (1 - r^2)^3 weights on offsets |j| h < radius.
[[nodiscard]] inline std::vector<double> bump_weights(double radius, double h) {
  const int m = static_cast<int>(std::ceil(radius / h)) - 1;
  std::vector<double> w(static_cast<std::size_t>(2 * std::max(m, 0) + 1));
  double sum = 0.0;
  for (int j = -m; j <= m; ++j) {
    const double r = j * h / radius;
    const double v = std::pow(std::max(0.0, 1.0 - r * r), 3.0);
    w[static_cast<std::size_t>(j + m)] = v;
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

/// Half-sample reflection: -1 -> 0, N -> N-1.
[[nodiscard]] inline int reflect(int i, int N) {
  if (i < 0) return -1 - i;
  if (i >= N) return 2 * N - 1 - i;
  return i;
}

/// 1-D convolution along a strided axis of `count` samples, for every line.
inline void convolve_axis(std::vector<double>& v, std::size_t stride, int count, const std::vector<double>& w) {
  const int m = static_cast<int>(w.size() / 2);
  if (m == 0) return;
  const std::size_t block = stride * static_cast<std::size_t>(count);
  std::vector<double> line(static_cast<std::size_t>(count));
  for (std::size_t base = 0; base < v.size(); base += block)
    for (std::size_t off = 0; off < stride; ++off) {
      for (int i = 0; i < count; ++i) line[static_cast<std::size_t>(i)] = v[base + off + static_cast<std::size_t>(i) * stride];
      for (int i = 0; i < count; ++i) {
        double s = 0.0;
        for (int j = -m; j <= m; ++j)
          s += w[static_cast<std::size_t>(j + m)] * line[static_cast<std::size_t>(reflect(i + j, count))];
        v[base + off + static_cast<std::size_t>(i) * stride] = s;
      }
    }
}

}  // namespace detail

/// f * rho_eps in space-time with a tensor-product (1-r^2)^3 bump of radius
/// eps, data extended by even reflection. Time is smoothed only when the
/// field has more than one level.
[[nodiscard]] inline ScalarField mollify(const ScalarField& f, double eps) {
  if (!(eps >= 0.0)) throw ParameterError("mollify: eps must be nonnegative");
  if (eps == 0.0) return f;
  const Grid& g = f.grid;
  for (int a = 0; a < g.n; ++a)
    if (eps > 0.5 * (g.upper[static_cast<std::size_t>(a)] - g.lower[static_cast<std::size_t>(a)]))
      throw ParameterError("mollify: eps exceeds the domain half-width");
  if (g.nt > 1 && eps > 0.5 * (g.t_end() - g.t0))
    throw ParameterError("mollify: eps exceeds half the time window");
  ScalarField out = f;
  for (int a = 0; a < g.n; ++a)
    detail::convolve_axis(out.values, g.stride(a), g.nx[static_cast<std::size_t>(a)],
                          detail::bump_weights(eps, g.spacing(a)));
  if (g.nt > 1) detail::convolve_axis(out.values, g.space_size(), g.nt, detail::bump_weights(eps, g.dt));
  return out;
}

}  // namespace degenflow::solver
