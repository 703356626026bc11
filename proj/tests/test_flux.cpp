#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "degenflow/flux.hpp"

namespace degenflow::flux {
namespace {

// Composite Simpson with a fixed panel count; independent of the adaptive path.
double simpson_oracle(double t, double p, double delta, int panels = 1000000) {
  auto f = [&](double s) { return s * std::pow(s + delta, (p - 2.0) / 2.0) / std::sqrt(1.0 + delta + s * s); };
  const double h = t / panels;
  double sum = f(0.0) + f(t);
  for (int i = 1; i < panels; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return sum * h / 3.0;
}

TEST(EvalH, ZeroInsideUnitBall) {
  EXPECT_EQ(eval_H({0.0, 0.0}, 2.0), (Vec{0.0, 0.0}));
  EXPECT_EQ(eval_H({0.5, 0.5}, 3.0), (Vec{0.0, 0.0}));
  EXPECT_EQ(eval_H({1.0, 0.0}, 0.5), (Vec{0.0, 0.0}));
}

TEST(EvalH, OutsideUnitBall) {
  const Vec h = eval_H({2.0, 0.0}, 2.0);
  EXPECT_DOUBLE_EQ(h[0], 1.0);
  EXPECT_DOUBLE_EQ(h[1], 0.0);
}

TEST(EvalH, RejectsNonFinite) {
  EXPECT_THROW((void)eval_H({std::nan(""), 0.0}, 2.0), InvalidInput);
  EXPECT_THROW((void)eval_H({HUGE_VAL, 0.0}, 2.0), InvalidInput);
  EXPECT_THROW((void)eval_H({1.0, 0.0}, 0.0), ParameterError);
}

TEST(EvalV, Examples) {
  EXPECT_EQ(eval_V({0.0, 0.0}, 3.7), (Vec{0.0, 0.0}));
  EXPECT_EQ(eval_V({3.0, 4.0}, 2.0), (Vec{3.0, 4.0}));
  const Vec v = eval_V({1.0, 0.0}, 4.0);
  EXPECT_NEAR(v[0], std::sqrt(2.0), 1e-15);
  EXPECT_EQ(v[1], 0.0);
}

TEST(EvalAEps, Examples) {
  for (double p : {2.0, 3.0, 5.5}) {
    const Vec a = eval_A_eps({0.9, 0.0}, {.p = p, .delta = 0.5, .eps = 0.0});
    EXPECT_EQ(a, (Vec{0.0, 0.0}));
  }
  const Vec a2 = eval_A_eps({2.0, 0.0}, {.p = 2.0, .delta = 0.5, .eps = 1.0});
  EXPECT_DOUBLE_EQ(a2[0], 3.0);
  EXPECT_DOUBLE_EQ(a2[1], 0.0);
  const Vec a3 = eval_A_eps({0.0, 2.0}, {.p = 3.0, .delta = 0.5, .eps = 0.5});
  EXPECT_DOUBLE_EQ(a3[0], 0.0);
  EXPECT_NEAR(a3[1], 1.0 + std::sqrt(5.0), 1e-14);
}

TEST(EvalAEps, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (double p : {2.0, 2.5, 3.0, 4.0}) {
    const Params prm{.p = p, .delta = 0.5, .eps = 0.3, .n = 3};
    for (int trial = 0; trial < 200; ++trial) {
      Vec xi{u(rng), u(rng), u(rng)};
      if (std::abs(norm(xi) - 1.0) < 1e-3) continue;
      double jac[9];
      jacobian_A_eps(xi, prm, jac);
      for (int b = 0; b < 3; ++b) {
        const double h = 1e-6;
        Vec xp = xi, xm = xi;
        xp[b] += h;
        xm[b] -= h;
        const Vec d = (1.0 / (2.0 * h)) * (eval_A_eps(xp, prm) - eval_A_eps(xm, prm));
        for (int a = 0; a < 3; ++a) EXPECT_NEAR(jac[a * 3 + b], d[a], 1e-5 * std::max(1.0, std::abs(d[a])));
      }
    }
  }
}

TEST(EvalG, Examples) {
  EXPECT_EQ(eval_g(0.0, 1.5), 0.0);
  EXPECT_EQ(eval_g_prime(0.0, 1.5), 0.0);
  EXPECT_DOUBLE_EQ(eval_g(1.0, 1.5), 0.4);
  EXPECT_DOUBLE_EQ(eval_g_prime(1.0, 1.5), 0.48);
  EXPECT_THROW((void)eval_g(1.0, 1.0), ParameterError);
  EXPECT_THROW((void)eval_g_prime(1.0, 0.5), ParameterError);
}

TEST(EvalG, BoundedAndMonotone) {
  for (double k : {1.01, 1.5, 4.0, 50.0}) {
    double prev = -1.0;
    for (double s = 0.0; s < 1e4; s = s * 1.1 + 0.01) {
      const double g = eval_g(s, k);
      EXPECT_LT(g, 1.0);
      EXPECT_GE(g, prev);
      EXPECT_GE(eval_g_prime(s, k), 0.0);
      prev = g;
    }
  }
}

TEST(EvalGDelta, ZeroAtOrigin) {
  for (double p : {2.0, 3.0, 4.5}) EXPECT_EQ(eval_G(0.0, {.p = p, .delta = 0.3}), 0.0);
}

TEST(EvalGDelta, ClosedFormAtP2) {
  const double g = eval_G(1.0, {.p = 2.0, .delta = 0.5});
  EXPECT_NEAR(g, std::sqrt(2.5) - std::sqrt(1.5), 1e-15);
}

TEST(EvalGDelta, MatchesSimpsonOracle) {
  const Params prm{.p = 4.0, .delta = 0.5};
  const double oracle = simpson_oracle(1.0, 4.0, 0.5);
  EXPECT_NEAR(eval_G(1.0, prm), oracle, 1e-10 * oracle);
}

TEST(EvalGDelta, RejectsNegativeT) {
  EXPECT_THROW((void)eval_G(-0.1, {.p = 3.0, .delta = 0.5}), InvalidInput);
  EXPECT_THROW((void)eval_G_prime(-0.1, {.p = 3.0, .delta = 0.5}), InvalidInput);
}

TEST(EvalGDeltaPrime, Examples) {
  EXPECT_EQ(eval_G_prime(0.0, {.p = 3.0, .delta = 0.5}), 0.0);
  EXPECT_NEAR(eval_G_prime(1.0, {.p = 2.0, .delta = 0.5}), 1.0 / std::sqrt(2.5), 1e-15);
  EXPECT_NEAR(eval_G_prime(1.0, {.p = 2.0, .delta = 0.5}), 0.63246, 5e-6);
}

TEST(EvalGDeltaPrime, MatchesCentralDifference) {
  for (double p : {2.0, 2.5, 3.0, 4.0, 6.0})
    for (double delta : {0.1, 0.5, 0.9})
      for (double t : {0.05, 0.7, 3.0, 12.0}) {
        const Params prm{.p = p, .delta = delta};
        const double h = 1e-6;
        const double fd = (eval_G(t + h, prm) - eval_G(t - h, prm)) / (2.0 * h);
        const double exact = eval_G_prime(t, prm);
        EXPECT_NEAR(fd, exact, 1e-6 * exact) << "p=" << p << " delta=" << delta << " t=" << t;
      }
}

TEST(EvalGDelta, ConvexAndBelowPowerBound) {
  for (double p : {2.0, 2.5, 3.0, 4.0, 6.0})
    for (double delta : {0.1, 0.5, 0.9}) {
      const Params prm{.p = p, .delta = delta};
      double prev_slope = 0.0;
      double prev_G = 0.0;
      for (double t = 0.0; t <= 50.0; t += 0.25) {
        const double slope = eval_G_prime(t, prm);
        EXPECT_GE(slope, prev_slope);
        const double G = eval_G(t, prm);
        EXPECT_GE(G, prev_G);
        EXPECT_LE(G, 2.0 / p * std::pow(t + delta, p / 2.0));
        prev_slope = slope;
        prev_G = G;
      }
    }
}

// |H_{p/2}(xi)|^2 = (|xi|-1)_+^p, A_eps at eps = 0 is H_{p-1}, H commutes with rotations.
TEST(FluxProperties, RandomizedIdentities) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  for (int trial = 0; trial < 2000; ++trial) {
    const double p = 2.0 + 4.0 * (trial % 7) / 6.0;
    const Vec xi2{u(rng), u(rng)};
    const double e = std::max(0.0, norm(xi2) - 1.0);
    EXPECT_NEAR(norm2(eval_H(xi2, p / 2.0)), std::pow(e, p), 1e-12 * std::max(1.0, std::pow(e, p)));
    EXPECT_EQ(eval_A_eps(xi2, {.p = p, .delta = 0.5, .eps = 0.0}), eval_H(xi2, p - 1.0));

    const double th = ang(rng);
    auto rot2 = [&](const Vec& v) {
      return Vec{std::cos(th) * v[0] - std::sin(th) * v[1], std::sin(th) * v[0] + std::cos(th) * v[1]};
    };
    const Vec lhs = eval_H(rot2(xi2), p - 1.0);
    const Vec rhs = rot2(eval_H(xi2, p - 1.0));
    EXPECT_NEAR(norm(lhs - rhs), 0.0, 1e-12 * std::max(1.0, norm(rhs)));

    // 3-D: rotation about a random axis via Rodrigues.
    const Vec xi3{u(rng), u(rng), u(rng)};
    Vec axis{u(rng), u(rng), u(rng)};
    axis = (1.0 / norm(axis)) * axis;
    auto rot3 = [&](const Vec& v) {
      const Vec cross{axis[1] * v[2] - axis[2] * v[1], axis[2] * v[0] - axis[0] * v[2], axis[0] * v[1] - axis[1] * v[0]};
      return std::cos(th) * v + std::sin(th) * cross + (1.0 - std::cos(th)) * dot(axis, v) * axis;
    };
    const Vec l3 = eval_H(rot3(xi3), p / 2.0);
    const Vec r3 = rot3(eval_H(xi3, p / 2.0));
    EXPECT_NEAR(norm(l3 - r3), 0.0, 1e-12 * std::max(1.0, norm(r3)));
  }
}

}  // namespace
}  // namespace degenflow::flux
