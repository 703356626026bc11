/**
 * @file grid.hpp
 * @brief Uniform space-time grids, fields on them, difference quotients,
 * parabolic cylinders and the norms every estimate is measured in.
 *
 * Nodes are stored level-major; inside a level axis 0 runs fastest. The
 * quadrature weight of every node is the cell volume times the time step,
 * so all integrals below are plain weighted sums over index masks.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "degenflow/core.hpp"

namespace degenflow {

// ---------------------------------------------------------------------------
// Grid

struct Grid {
  int n = 2;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> nx;
  double t0 = 0.0;
  double dt = 1.0;
  int nt = 1;

  /// Unit-box convenience constructor: [lo, hi]^n with m points per axis.
  [[nodiscard]] static Grid box(int n, double lo, double hi, int m, double t0 = 0.0, double dt = 1.0,
                                int nt = 1) {
    Grid g;
    g.n = n;
    g.lower.assign(static_cast<std::size_t>(n), lo);
    g.upper.assign(static_cast<std::size_t>(n), hi);
    g.nx.assign(static_cast<std::size_t>(n), m);
    g.t0 = t0;
    g.dt = dt;
    g.nt = nt;
    g.validate();
    return g;
  }

  void validate() const {
    if (n < 1 || static_cast<std::size_t>(n) > kMaxDim) throw DomainError("Grid: bad dimension");
    const auto un = static_cast<std::size_t>(n);
    if (lower.size() != un || upper.size() != un || nx.size() != un)
      throw DomainError("Grid: per-axis arrays must have n entries");
    for (std::size_t i = 0; i < un; ++i) {
      if (nx[i] < 3) throw DomainError("Grid: need at least 3 points per axis");
      if (!(upper[i] > lower[i])) throw DomainError("Grid: empty extent");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("Grid: dt must be positive");
    if (nt < 1) throw DomainError("Grid: nt must be >= 1");
  }

  [[nodiscard]] double spacing(int axis) const {
    const auto a = static_cast<std::size_t>(axis);
    return (upper[a] - lower[a]) / static_cast<double>(nx[a] - 1);
  }
  [[nodiscard]] std::size_t space_size() const {
    return std::accumulate(nx.begin(), nx.end(), std::size_t{1},
                           [](std::size_t acc, int m) { return acc * static_cast<std::size_t>(m); });
  }
  [[nodiscard]] std::size_t size() const { return space_size() * static_cast<std::size_t>(nt); }
  [[nodiscard]] std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(nx[static_cast<std::size_t>(a)]);
    return s;
  }
  [[nodiscard]] double coord(int axis, int index) const {
    return lower[static_cast<std::size_t>(axis)] + index * spacing(axis);
  }
  [[nodiscard]] double time(int level) const { return t0 + level * dt; }
  [[nodiscard]] double t_end() const { return time(nt - 1); }
  [[nodiscard]] double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < n; ++a) v *= spacing(a);
    return v;
  }
  [[nodiscard]] double node_weight() const { return cell_volume() * dt; }

  /// Axis index of a spatial node along `axis`.
  [[nodiscard]] int index_along(std::size_t node, int axis) const {
    return static_cast<int>((node / stride(axis)) % static_cast<std::size_t>(nx[static_cast<std::size_t>(axis)]));
  }
  [[nodiscard]] Vec position(std::size_t node) const {
    Vec x(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) x[static_cast<std::size_t>(a)] = coord(a, index_along(node, a));
    return x;
  }
  [[nodiscard]] bool on_boundary(std::size_t node) const {
    for (int a = 0; a < n; ++a) {
      const int i = index_along(node, a);
      if (i == 0 || i == nx[static_cast<std::size_t>(a)] - 1) return true;
    }
    return false;
  }
  /// Euclidean distance from a node to the boundary of the box.
  [[nodiscard]] double boundary_distance(std::size_t node) const {
    double d = HUGE_VAL;
    for (int a = 0; a < n; ++a) {
      const double x = coord(a, index_along(node, a));
      const auto ua = static_cast<std::size_t>(a);
      d = std::min({d, x - lower[ua], upper[ua] - x});
    }
    return d;
  }

  /// Same box with one level at `time`.
  [[nodiscard]] Grid slice_grid(double time) const {
    Grid g = *this;
    g.t0 = time;
    g.nt = 1;
    return g;
  }

  [[nodiscard]] bool same_space(const Grid& o) const {
    return n == o.n && lower == o.lower && upper == o.upper && nx == o.nx;
  }
  friend bool operator==(const Grid& a, const Grid& b) {
    return a.same_space(b) && a.t0 == b.t0 && a.dt == b.dt && a.nt == b.nt;
  }

  [[nodiscard]] std::string fingerprint() const {
    std::ostringstream os;
    os << "n" << n << ":";
    for (int a = 0; a < n; ++a) os << (a ? "x" : "") << nx[static_cast<std::size_t>(a)];
    os << ":nt" << nt << ":dt" << dt;
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Fields

struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(Grid g, double fill = 0.0) : grid(std::move(g)), values(grid.size(), fill) {}
  ScalarField(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) throw DomainError("ScalarField: value count does not match grid");
  }

  /// f(x, t) sampled at every node.
  [[nodiscard]] static ScalarField sample(const Grid& g, const std::function<double(const Vec&, double)>& f) {
    ScalarField out(g);
    const std::size_t ns = g.space_size();
    for (int k = 0; k < g.nt; ++k) {
      const double t = g.time(k);
      for (std::size_t i = 0; i < ns; ++i) out.at(k, i) = f(g.position(i), t);
    }
    return out;
  }

  double& at(int level, std::size_t node) { return values[static_cast<std::size_t>(level) * grid.space_size() + node]; }
  [[nodiscard]] double at(int level, std::size_t node) const {
    return values[static_cast<std::size_t>(level) * grid.space_size() + node];
  }
  [[nodiscard]] std::span<const double> level(int k) const {
    const std::size_t ns = grid.space_size();
    return {values.data() + static_cast<std::size_t>(k) * ns, ns};
  }
  std::span<double> level(int k) {
    const std::size_t ns = grid.space_size();
    return {values.data() + static_cast<std::size_t>(k) * ns, ns};
  }

  [[nodiscard]] ScalarField slice(int k) const {
    const auto lv = level(k);
    return {grid.slice_grid(grid.time(k)), std::vector<double>(lv.begin(), lv.end())};
  }

  [[nodiscard]] static ScalarField from_slices(const Grid& g, const std::vector<ScalarField>& slices) {
    if (static_cast<int>(slices.size()) != g.nt) throw DomainError("from_slices: level count mismatch");
    ScalarField out(g);
    for (int k = 0; k < g.nt; ++k) {
      const auto& s = slices[static_cast<std::size_t>(k)];
      if (!s.grid.same_space(g) || s.grid.nt != 1) throw DomainError("from_slices: slice grid mismatch");
      std::copy(s.values.begin(), s.values.end(), out.level(k).begin());
    }
    return out;
  }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
};

/// n components per node, interleaved.
struct VectorField {
  Grid grid;
  std::vector<double> values;

  VectorField() = default;
  explicit VectorField(Grid g) : grid(std::move(g)), values(grid.size() * static_cast<std::size_t>(grid.n), 0.0) {}

  [[nodiscard]] std::size_t flat(int level, std::size_t node) const {
    return (static_cast<std::size_t>(level) * grid.space_size() + node) * static_cast<std::size_t>(grid.n);
  }
  [[nodiscard]] Vec at(int level, std::size_t node) const {
    return Vec(std::span<const double>(values.data() + flat(level, node), static_cast<std::size_t>(grid.n)));
  }
  void set(int level, std::size_t node, const Vec& v) {
    std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(flat(level, node)));
  }
  double& component(int level, std::size_t node, int c) { return values[flat(level, node) + static_cast<std::size_t>(c)]; }
  [[nodiscard]] double component(int level, std::size_t node, int c) const {
    return values[flat(level, node) + static_cast<std::size_t>(c)];
  }

  [[nodiscard]] ScalarField component_field(int c) const {
    ScalarField out(grid);
    for (int k = 0; k < grid.nt; ++k)
      for (std::size_t i = 0; i < grid.space_size(); ++i) out.at(k, i) = component(k, i, c);
    return out;
  }
};

/// Pointwise map of a vector field to a scalar field.
template <class F>
[[nodiscard]] ScalarField map_nodes(const VectorField& w, F&& f) {
  ScalarField out(w.grid);
  for (int k = 0; k < w.grid.nt; ++k)
    for (std::size_t i = 0; i < w.grid.space_size(); ++i) out.at(k, i) = f(w.at(k, i));
  return out;
}

template <class F>
[[nodiscard]] VectorField map_vectors(const VectorField& w, F&& f) {
  VectorField out(w.grid);
  for (int k = 0; k < w.grid.nt; ++k)
    for (std::size_t i = 0; i < w.grid.space_size(); ++i) out.set(k, i, f(w.at(k, i)));
  return out;
}

[[nodiscard]] inline ScalarField pointwise_norm(const VectorField& w) {
  return map_nodes(w, [](const Vec& v) { return norm(v); });
}

// ---------------------------------------------------------------------------
// Shifts and difference quotients

namespace detail {

[[nodiscard]] inline int shift_steps(const Grid& g, int axis, double h) {
  if (axis < 0 || axis >= g.n) throw DomainError("difference operator: axis out of range");
  const double m = h / g.spacing(axis);
  const double r = std::nearbyint(m);
  if (std::abs(m - r) > 1e-9 * std::max(1.0, std::abs(m)))
    throw DomainError("difference operator: h must be an integer multiple of the spacing");
  const int steps = static_cast<int>(r);
  if (steps == 0) throw DomainError("difference operator: h must be nonzero");
  if (std::abs(steps) >= g.nx[static_cast<std::size_t>(axis)] - 1)
    throw DomainError("difference operator: |h| too large for the grid");
  return steps;
}

/// Spatial node shifted by `steps` along `axis`, or -1 when it leaves the box.
[[nodiscard]] inline std::ptrdiff_t shifted(const Grid& g, std::size_t node, int axis, int steps) {
  const int i = g.index_along(node, axis) + steps;
  if (i < 0 || i >= g.nx[static_cast<std::size_t>(axis)]) return -1;
  return static_cast<std::ptrdiff_t>(node) + static_cast<std::ptrdiff_t>(steps) * static_cast<std::ptrdiff_t>(g.stride(axis));
}

}  // namespace detail

/// tau_{s,h} F(x) = F(x + h e_s) - F(x). Nodes whose shift leaves the box
/// get 0; combine with inner_domain_mask to restrict to Omega_|h|.
[[nodiscard]] inline ScalarField tau_h(const ScalarField& F, int axis, double h) {
  const int steps = detail::shift_steps(F.grid, axis, h);
  ScalarField out(F.grid);
  const std::size_t ns = F.grid.space_size();
  for (int k = 0; k < F.grid.nt; ++k)
    for (std::size_t i = 0; i < ns; ++i) {
      const auto j = detail::shifted(F.grid, i, axis, steps);
      if (j >= 0) out.at(k, i) = F.at(k, static_cast<std::size_t>(j)) - F.at(k, i);
    }
  return out;
}

[[nodiscard]] inline VectorField tau_h(const VectorField& F, int axis, double h) {
  const int steps = detail::shift_steps(F.grid, axis, h);
  VectorField out(F.grid);
  const std::size_t ns = F.grid.space_size();
  for (int k = 0; k < F.grid.nt; ++k)
    for (std::size_t i = 0; i < ns; ++i) {
      const auto j = detail::shifted(F.grid, i, axis, steps);
      if (j >= 0) out.set(k, i, F.at(k, static_cast<std::size_t>(j)) - F.at(k, i));
    }
  return out;
}

[[nodiscard]] inline ScalarField delta_h(const ScalarField& F, int axis, double h) {
  ScalarField out = tau_h(F, axis, h);
  for (double& v : out.values) v /= h;
  return out;
}

[[nodiscard]] inline VectorField delta_h(const VectorField& F, int axis, double h) {
  VectorField out = tau_h(F, axis, h);
  for (double& v : out.values) v /= h;
  return out;
}

/// F(x + h e_s), zero where the shift leaves the box.
[[nodiscard]] inline ScalarField shift(const ScalarField& F, int axis, double h) {
  const int steps = detail::shift_steps(F.grid, axis, h);
  ScalarField out(F.grid);
  for (int k = 0; k < F.grid.nt; ++k)
    for (std::size_t i = 0; i < F.grid.space_size(); ++i) {
      const auto j = detail::shifted(F.grid, i, axis, steps);
      if (j >= 0) out.at(k, i) = F.at(k, static_cast<std::size_t>(j));
    }
  return out;
}

/// Spatial nodes of Omega_r = {x : dist(x, boundary) > r}.
[[nodiscard]] inline std::vector<char> inner_domain_mask(const Grid& g, double r) {
  std::vector<char> m(g.space_size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = g.boundary_distance(i) > r + 1e-12 ? 1 : 0;
  return m;
}

/// True when F vanishes at every node outside Omega_r.
[[nodiscard]] inline bool supported_in(const ScalarField& F, double r) {
  const auto mask = inner_domain_mask(F.grid, r);
  for (int k = 0; k < F.grid.nt; ++k)
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (!mask[i] && F.at(k, i) != 0.0) return false;
  return true;
}

/// |sum F Delta_h G - (-sum G Delta_{-h} F)| over the whole grid. One of the
/// two fields must be supported in Omega_|h|.
[[nodiscard]] inline double parts_identity_check(const ScalarField& F, const ScalarField& G, int axis, double h) {
  if (!F.grid.same_space(G.grid) || F.grid.nt != G.grid.nt) throw DomainError("parts_identity_check: grid mismatch");
  if (!supported_in(G, std::abs(h)) && !supported_in(F, std::abs(h)))
    throw PreconditionError("parts_identity_check: neither field is supported in Omega_|h|");
  const ScalarField dG = delta_h(G, axis, h);
  const ScalarField dF = delta_h(F, axis, -h);
  double lhs = 0.0;
  double rhs = 0.0;
  for (std::size_t i = 0; i < F.values.size(); ++i) {
    lhs += F.values[i] * dG.values[i];
    rhs -= G.values[i] * dF.values[i];
  }
  const double w = F.grid.node_weight();
  return std::abs(lhs - rhs) * w;
}

// ---------------------------------------------------------------------------
// Gradient and divergence

namespace detail {

/// Centered difference at interior nodes, first-order one-sided on the boundary.
[[nodiscard]] inline double axis_derivative(const Grid& g, std::span<const double> lv, std::size_t node, int axis) {
  const int i = g.index_along(node, axis);
  const int m = g.nx[static_cast<std::size_t>(axis)];
  const std::size_t st = g.stride(axis);
  const double h = g.spacing(axis);
  if (i == 0) return (lv[node + st] - lv[node]) / h;
  if (i == m - 1) return (lv[node] - lv[node - st]) / h;
  return (lv[node + st] - lv[node - st]) / (2.0 * h);
}

}  // namespace detail

[[nodiscard]] inline VectorField gradient(const ScalarField& u) {
  const Grid& g = u.grid;
  VectorField out(g);
  for (int k = 0; k < g.nt; ++k) {
    const auto lv = u.level(k);
    for (std::size_t i = 0; i < g.space_size(); ++i)
      for (int a = 0; a < g.n; ++a) out.component(k, i, a) = detail::axis_derivative(g, lv, i, a);
  }
  return out;
}

[[nodiscard]] inline ScalarField divergence(const VectorField& w) {
  const Grid& g = w.grid;
  ScalarField out(g);
  std::vector<double> comp(g.space_size());
  for (int k = 0; k < g.nt; ++k)
    for (int a = 0; a < g.n; ++a) {
      for (std::size_t i = 0; i < comp.size(); ++i) comp[i] = w.component(k, i, a);
      for (std::size_t i = 0; i < comp.size(); ++i) out.at(k, i) += detail::axis_derivative(g, comp, i, a);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Parabolic cylinders

/// Q_rho(z0) = B_rho(x0) x (t0 - rho^2, t0).
struct Cylinder {
  Vec center;
  double t_center = 0.0;
  double radius = 1.0;

  [[nodiscard]] Cylinder scaled(double factor) const { return {center, t_center, radius * factor}; }

  [[nodiscard]] bool contains_point(const Vec& x) const { return norm(x - center) < radius; }

  /// Levels t_k in (t0 - rho^2, t0]; the node at t_k carries (t_{k-1}, t_k].
  [[nodiscard]] bool contains_time(double t) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(t_center));
    return t > t_center - radius * radius + tol && t <= t_center + tol;
  }

  /// Throws DomainError unless the cylinder sits inside the grid and its mask is nonempty.
  void check_inside(const Grid& g) const {
    if (!(radius > 0.0)) throw DomainError("Cylinder: radius must be positive");
    if (center.size() != static_cast<std::size_t>(g.n)) throw DomainError("Cylinder: center dimension mismatch");
    const double tol = 1e-9;
    for (int a = 0; a < g.n; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      if (center[ua] - radius < g.lower[ua] - tol || center[ua] + radius > g.upper[ua] + tol)
        throw DomainError("Cylinder: ball leaves the spatial box");
    }
    if (t_center - radius * radius < g.t0 - tol * std::max(1.0, std::abs(g.t0)) || t_center > g.t_end() + tol)
      throw DomainError("Cylinder: time window leaves the grid");
    if (count_nodes(g) == 0) throw DomainError("Cylinder: mask is empty");
  }

  [[nodiscard]] std::vector<char> space_mask(const Grid& g) const {
    std::vector<char> m(g.space_size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = contains_point(g.position(i)) ? 1 : 0;
    return m;
  }
  [[nodiscard]] std::vector<int> levels(const Grid& g) const {
    std::vector<int> out;
    for (int k = 0; k < g.nt; ++k)
      if (contains_time(g.time(k))) out.push_back(k);
    return out;
  }
  [[nodiscard]] std::size_t count_nodes(const Grid& g) const {
    const auto m = space_mask(g);
    return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)) * levels(g).size();
  }
};

// ---------------------------------------------------------------------------
// Integrals and norms over cylinders

/// Midpoint-rule integral of a nodewise quantity over the cylinder mask.
template <class F>
[[nodiscard]] double integrate(const Grid& g, const Cylinder& q, F&& value_at) {
  const auto mask = q.space_mask(g);
  double sum = 0.0;
  for (int k : q.levels(g))
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) sum += value_at(k, i);
  return sum * g.node_weight();
}

[[nodiscard]] inline double integral_pow(const ScalarField& F, double q, const Cylinder& region) {
  return integrate(F.grid, region, [&](int k, std::size_t i) { return rpow(std::abs(F.at(k, i)), q); });
}

[[nodiscard]] inline double lq_norm(const ScalarField& F, double q, const Cylinder& region) {
  if (!(q >= 1.0)) throw ParameterError("lq_norm: q must be >= 1");
  return rpow(integral_pow(F, q, region), 1.0 / q);
}

[[nodiscard]] inline double lq_norm(const VectorField& F, double q, const Cylinder& region) {
  return lq_norm(pointwise_norm(F), q, region);
}

[[nodiscard]] inline double linf_norm(const ScalarField& F, const Cylinder& region) {
  const auto mask = region.space_mask(F.grid);
  double m = 0.0;
  for (int k : region.levels(F.grid))
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) m = std::max(m, std::abs(F.at(k, i)));
  return m;
}

/// sup over levels of the slice integral of |F|^q on the ball.
[[nodiscard]] inline double sup_slice_integral(const ScalarField& F, double q, const Cylinder& region) {
  const auto mask = region.space_mask(F.grid);
  const double w = F.grid.cell_volume();
  double best = 0.0;
  for (int k : region.levels(F.grid)) {
    double s = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) s += rpow(std::abs(F.at(k, i)), q);
    best = std::max(best, s * w);
  }
  return best;
}

[[nodiscard]] inline double sup_slice_norm(const ScalarField& F, double q, const Cylinder& region) {
  if (!(q >= 1.0)) throw ParameterError("sup_slice_norm: q must be >= 1");
  return rpow(sup_slice_integral(F, q, region), 1.0 / q);
}

/// Whole-grid cylinder surrogate: every node of every level.
[[nodiscard]] inline double integral_all(const ScalarField& F) {
  return std::accumulate(F.values.begin(), F.values.end(), 0.0) * F.grid.node_weight();
}

[[nodiscard]] inline double l2_norm_all(const ScalarField& F) {
  double s = 0.0;
  for (double v : F.values) s += v * v;
  return std::sqrt(s * F.grid.node_weight());
}

/// int_{B_rho} |tau_h F|^p / (|h|^p int_{B_R} |DF|^p), both balls centered
/// at `center`, integrated over every level. Returns 0 for constant F.
[[nodiscard]] inline double diffquot_gradient_bound_check(const ScalarField& F, const Vec& center, double rho, double R,
                                                          int axis, double h, double p = 2.0) {
  if (!(rho > 0.0 && rho < R)) throw ParameterError("diffquot_gradient_bound_check: need 0 < rho < R");
  if (!(std::abs(h) < 0.5 * (R - rho))) throw DomainError("diffquot_gradient_bound_check: need |h| < (R - rho)/2");
  const Grid& g = F.grid;
  const Cylinder outer{center, g.t_end(), R};
  for (int a = 0; a < g.n; ++a) {
    const auto ua = static_cast<std::size_t>(a);
    if (center[ua] - R < g.lower[ua] - 1e-9 || center[ua] + R > g.upper[ua] + 1e-9)
      throw DomainError("diffquot_gradient_bound_check: B_R leaves the box");
  }
  const ScalarField tf = tau_h(F, axis, h);
  const ScalarField grad_norm = pointwise_norm(gradient(F));
  double num = 0.0;
  double den = 0.0;
  const std::size_t ns = g.space_size();
  for (int k = 0; k < g.nt; ++k)
    for (std::size_t i = 0; i < ns; ++i) {
      const double r = norm(g.position(i) - center);
      if (r < rho) num += rpow(std::abs(tf.at(k, i)), p);
      if (r < outer.radius) den += rpow(grad_norm.at(k, i), p);
    }
  den *= rpow(std::abs(h), p);
  if (num == 0.0) return 0.0;
  return num / den;
}

}  // namespace degenflow
