#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "degenflow/profiles.hpp"
#include "degenflow/solver.hpp"

using namespace degenflow;
using solver::ProblemSpec;

namespace {

ProblemSpec make_spec(const Params& prm, const Grid& g, const std::function<double(const Vec&, double)>& u0,
                      solver::Trace trace, const std::function<double(const Vec&, double)>& f) {
  return {prm, g, ScalarField::sample(g, f), ScalarField::sample(g.slice_grid(g.t0), u0), std::move(trace), {}};
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

auto zero = [](const Vec&, double) { return 0.0; };

}  // namespace

TEST(Solver, ConstantDataStaysConstant) {
  const Grid g = Grid::box(2, 0.0, 1.0, 9, 0.0, 0.1, 5);
  const Params prm{3.0, 0.5, 0.1, 2};
  auto c = [](const Vec&, double) { return 1.7; };
  const auto sol = solver::solve(make_spec(prm, g, c, c, zero));
  for (double v : sol.u.values) EXPECT_NEAR(v, 1.7, 1e-12);
  EXPECT_EQ(sol.log.size(), 4u);
}

TEST(Solver, LipschitzFieldIsStationaryAtZeroEps) {
  // Slopes <= 1 on every face: the degenerate flux vanishes, so u_new = u_prev has zero residual.
  const Grid g = Grid::box(2, 0.0, 1.0, 17, 0.0, 0.05, 3);
  const Params prm{2.5, 0.5, 0.0, 2};
  auto u0 = [](const Vec& x, double) { return 0.6 * std::sin(x[0]) + 0.3 * x[1] * x[1]; };
  ProblemSpec spec = make_spec(prm, g, u0, u0, zero);
  const ScalarField slice = spec.initial;
  ASSERT_LE(solver::max_face_slope(slice, prm), 1.0);
  const ScalarField u = ScalarField::from_slices(g, {slice, slice, slice});
  const ScalarField r = solver::residual(u, spec);
  for (double v : r.values) EXPECT_EQ(v, 0.0);
}

TEST(Solver, ResidualOfRandomFieldIsFinite) {
  const Grid g = Grid::box(2, 0.0, 1.0, 9, 0.0, 0.05, 3);
  const Params prm{3.0, 0.5, 0.0, 2};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  ProblemSpec spec = make_spec(prm, g, zero, zero, zero);
  ScalarField u(g);
  for (double& v : u.values) v = U(rng);
  EXPECT_TRUE(solver::residual(u, spec).all_finite());
}

TEST(Solver, SolveOutputHasResidualBelowTolerance) {
  const Params prm{3.0, 0.5, 0.1, 2};
  const profiles::Manufactured ms{0.2, 3.0};
  const Grid g = Grid::box(2, 0.0, 1.0, 17, 0.0, 0.02, 6);
  auto val = [&](const Vec& x, double t) { return ms.value(x, t); };
  ProblemSpec spec = make_spec(prm, g, val, val, [&](const Vec& x, double t) { return ms.forcing(x, t, prm); });
  const auto sol = solver::solve(spec);
  const ScalarField r = solver::residual(sol.u, spec);
  for (double v : r.values) EXPECT_LE(std::abs(v), spec.newton.abs_tol);
  for (const auto& l : sol.log) EXPECT_LE(l.residual, spec.newton.abs_tol);
}

TEST(Solver, ManufacturedSolutionConvergesInSpace) {
  // Time-linear u*: backward Euler is exact in time, leaving the O(h^2) spatial error.
  const Params prm{3.0, 0.5, 0.1, 2};
  const profiles::Manufactured ms{};
  std::vector<double> err;
  for (int m : {9, 17, 33}) {
    const Grid g = Grid::box(2, 0.0, 1.0, m, 0.0, 0.02, 6);
    auto val = [&](const Vec& x, double t) { return ms.value(x, t); };
    const auto sol = solver::solve(
        make_spec(prm, g, val, val, [&](const Vec& x, double t) { return ms.forcing(x, t, prm); }));
    const ScalarField exact = ScalarField::sample(g, val);
    err.push_back(l2(sol.u.level(g.nt - 1), exact.level(g.nt - 1)) * g.spacing(0));
  }
  EXPECT_GT(std::log2(err[0] / err[1]), 1.8);
  EXPECT_GT(std::log2(err[1] / err[2]), 1.8);
}

TEST(Solver, TwoStartingIteratesGiveTheSameStep) {
  const Params prm{2.0, 0.5, 0.05, 2};
  const Grid g = Grid::box(2, 0.0, 1.0, 17, 0.0, 0.05, 2);
  auto u0 = [](const Vec& x, double) { return 3.0 * x[0] * x[0] - x[1]; };
  ProblemSpec spec = make_spec(prm, g, u0, u0, [](const Vec& x, double) { return std::cos(3.0 * x[1]); });
  ScalarField guess = spec.initial;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (double& v : guess.values) v += U(rng);
  const ScalarField a = solver::step(spec.initial, 1, spec);
  const ScalarField b = solver::step(spec.initial, 1, spec, nullptr, &guess);
  EXPECT_LE(sup_diff(a.values, b.values), 10.0 * spec.newton.abs_tol);
}

TEST(Solver, DoublingSourceDoublesResponseInLinearRegime) {
  // p = 2, eps = 1 and |Du| <= 1: A_eps(xi) = xi, a linear heat step.
  const Params prm{2.0, 0.5, 1.0, 2};
  const Grid g = Grid::box(2, 0.0, 1.0, 17, 0.0, 0.01, 4);
  auto f = [](const Vec& x, double) { return 0.5 * std::sin(3.0 * x[0]) * x[1]; };
  auto f2 = [&](const Vec& x, double t) { return 2.0 * f(x, t); };
  const auto s1 = solver::solve(make_spec(prm, g, zero, zero, f));
  const auto s2 = solver::solve(make_spec(prm, g, zero, zero, f2));
  ASSERT_LE(solver::max_face_slope(s2.u.slice(g.nt - 1), prm), 1.0);
  double worst = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < s1.u.values.size(); ++i) {
    worst = std::max(worst, std::abs(s2.u.values[i] - 2.0 * s1.u.values[i]));
    scale = std::max(scale, std::abs(s2.u.values[i]));
  }
  EXPECT_LE(worst, 0.01 * scale);
}

TEST(Solver, DistanceToSteadyStateIsNonincreasing) {
  const Params prm{3.0, 0.5, 0.2, 2};
  auto trace = [](const Vec& x, double) { return 2.0 * x[0] + x[1]; };
  auto u0 = [&](const Vec& x, double t) {
    return trace(x, t) + 0.8 * std::sin(M_PI * x[0]) * std::sin(2.0 * M_PI * x[1]);
  };
  // Steady state: long implicit run with large steps.
  const Grid gs = Grid::box(2, 0.0, 1.0, 17, 0.0, 5.0, 21);
  const auto steady = solver::solve(make_spec(prm, gs, u0, trace, zero));
  const auto ss = steady.u.level(gs.nt - 1);
  const Grid g = Grid::box(2, 0.0, 1.0, 17, 0.0, 0.01, 21);
  const auto sol = solver::solve(make_spec(prm, g, u0, trace, zero));
  double prev = HUGE_VAL;
  for (int k = 0; k < g.nt; ++k) {
    const double d = l2(sol.u.level(k), ss);
    EXPECT_LE(d, prev * (1.0 + 1e-12)) << "level " << k;
    prev = d;
  }
}

TEST(Solver, DegeneratePlateauBarelyMoves) {
  const Params prm{3.0, 0.5, 1e-6, 2};
  const double a = 0.9;
  auto u0 = [&](const Vec& x, double) { return a * (std::sin(x[0]) + std::sin(x[1])) / std::sqrt(2.0); };
  const Grid g = Grid::box(2, -1.0, 1.0, 17, 0.0, 0.05, 11);
  ProblemSpec spec = make_spec(prm, g, u0, u0, zero);
  ASSERT_LE(solver::max_face_slope(spec.initial, prm), 0.99);
  const auto sol = solver::solve(spec);
  EXPECT_LE(sup_diff(sol.u.level(g.nt - 1), sol.u.level(0)), 1e-3);
}

TEST(Solver, NonconvergenceRaisesSolverError) {
  const Params prm{3.0, 0.5, 0.1, 2};
  const Grid g = Grid::box(2, 0.0, 1.0, 9, 0.0, 0.1, 3);
  auto u0 = [](const Vec& x, double) { return 4.0 * x[0] * x[0]; };
  ProblemSpec spec = make_spec(prm, g, u0, u0, [](const Vec&, double) { return 5.0; });
  spec.newton.max_iter = 1;
  spec.newton.fallback = false;
  try {
    (void)solver::solve(spec);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), spec.newton.abs_tol);
    EXPECT_EQ(e.time_index(), 1);
  }
}

TEST(Solver, SpecValidation) {
  const Grid g = Grid::box(2, 0.0, 1.0, 9, 0.0, 0.1, 3);
  ProblemSpec spec = make_spec({3.0, 0.5, 0.0, 2}, g, zero, zero, zero);
  EXPECT_THROW(spec.validate(true), ParameterError);
  EXPECT_NO_THROW(spec.validate(false));
  spec.params.eps = 0.1;
  spec.newton.max_iter = 0;
  EXPECT_THROW(spec.validate(), ParameterError);
  spec.newton.max_iter = 10;
  spec.newton.abs_tol = 0.0;
  EXPECT_THROW(spec.validate(), ParameterError);
  spec.newton.abs_tol = 1e-9;
  spec.boundary = [](const Vec&, double) { return 1.0; };
  EXPECT_THROW(spec.validate(), PreconditionError);
  spec.boundary = zero;
  spec.params.n = 3;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Mollify, ConstantAndIdentity) {
  const Grid g = Grid::box(2, 0.0, 1.0, 21, 0.0, 0.05, 11);
  const ScalarField c(g, 2.5);
  for (double v : solver::mollify(c, 0.2).values) EXPECT_NEAR(v, 2.5, 1e-13);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  ScalarField f(g);
  for (double& v : f.values) v = N(rng);
  EXPECT_EQ(solver::mollify(f, 0.0).values, f.values);
}

TEST(Mollify, SpikeKeepsMassAndL2Contracts) {
  const Grid g = Grid::box(2, 0.0, 1.0, 21, 0.0, 0.05, 11);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N;
  ScalarField spike(g);
  spike.at(5, 3) = 1.0 / g.node_weight();
  ScalarField noise(g);
  for (double& v : noise.values) v = N(rng);
  for (const ScalarField* f : {&spike, &noise}) {
    const ScalarField m = solver::mollify(*f, 0.2);
    const double before = std::accumulate(f->values.begin(), f->values.end(), 0.0);
    const double after = std::accumulate(m.values.begin(), m.values.end(), 0.0);
    EXPECT_NEAR(after, before, 1e-10 * std::max(1.0, std::abs(before)));
    EXPECT_LE(l2_norm_all(m), l2_norm_all(*f) * (1.0 + 1e-14));
  }
  const ScalarField m = solver::mollify(spike, 0.2);
  EXPECT_LT(*std::max_element(m.values.begin(), m.values.end()), 0.1 / g.node_weight());
}

TEST(Mollify, RejectsOversizedRadius) {
  const Grid g = Grid::box(2, 0.0, 1.0, 11, 0.0, 0.1, 5);
  const ScalarField f(g, 1.0);
  EXPECT_THROW((void)solver::mollify(f, 0.6), ParameterError);
  EXPECT_THROW((void)solver::mollify(f, 0.25), ParameterError);  // time window is 0.4
  EXPECT_THROW((void)solver::mollify(f, -1.0), ParameterError);
  EXPECT_NO_THROW((void)solver::mollify(f.slice(0), 0.45));
}
