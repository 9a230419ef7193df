#include <gtest/gtest.h>

#include <random>

#include "surfshift/pwl.hpp"

using namespace surfshift;

TEST(Bump, PiecewiseDefinition) {
  EXPECT_DOUBLE_EQ(bump_f(0.0, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(bump_f(-1.0, 0.25), 0.0);
  EXPECT_DOUBLE_EQ(bump_f(1.5, 0.25), 0.0);
  EXPECT_DOUBLE_EQ(bump_f(0.875, 0.25), 0.5);
  EXPECT_DOUBLE_EQ(bump_f(-0.875, 0.25), 0.5);
  EXPECT_THROW(bump_f(0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(bump_f(0.0, 0.6), std::invalid_argument);
}

TEST(MakeM, Examples) {
  const auto m = make_m({10.0, 0.0, 0.0, 0.5});
  EXPECT_DOUBLE_EQ(m(0.0), 0.25);
  EXPECT_DOUBLE_EQ(m(1.0), 0.0);
  EXPECT_DOUBLE_EQ(m(-1.0), 0.0);
  EXPECT_DOUBLE_EQ(m.right_deriv(-1.0), 0.5);
  EXPECT_DOUBLE_EQ(m.right_deriv(0.0), 0.0);
  EXPECT_DOUBLE_EQ(m.right_deriv(1.0), 0.0);

  const auto flat = make_m({1.0, 0.0, 1.0, 0.5});
  for (double x : {-3.0, 0.0, 0.7}) EXPECT_EQ(flat(x), 1.0);
  const auto below = make_m({0.5, 2.0, 0.6, 0.5});
  for (double x : {1.0, 2.0, 3.0}) EXPECT_EQ(below(x), 0.6);
}

TEST(MakeM, MatchesBumpFormula) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-3.0, 3.0), T(0.0, 2.0), E(0.01, 0.5);
  for (int i = 0; i < 500; ++i) {
    const BumpParams p{T(rng), U(rng), T(rng), E(rng)};
    const auto m = make_m(p);
    for (int j = 0; j < 20; ++j) {
      const double x = U(rng);
      const double expect = p.tau_v >= p.t ? std::min(p.tau_v - p.t, p.eps / 2) * bump_f(x - p.h, p.eps) + p.t : p.t;
      ASSERT_NEAR(m(x), expect, 1e-14);
      ASSERT_GE(m(x), p.t - 1e-15);
    }
    ASSERT_LE(m.max_abs_slope(), 0.5);
  }
}

TEST(MakeM, ReflectionSymmetry) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-3.0, 3.0), T(0.0, 2.0), E(0.01, 0.5);
  for (int i = 0; i < 300; ++i) {
    const double tau = T(rng), h = U(rng), t = T(rng), eps = E(rng);
    const auto plus = make_m({tau, h, t, eps});
    const auto minus = make_m({tau, -h, t, eps});
    for (int j = 0; j < 10; ++j) {
      const double x = U(rng);
      ASSERT_NEAR(minus(-x), plus(x), 1e-15);
    }
  }
}

TEST(Pwl, ConstantsAndIdempotentMin) {
  const auto c5 = PwlFunction::constant(5.0), c3 = PwlFunction::constant(3.0);
  const auto m = min_with(c5, c3);
  EXPECT_EQ(m(-100.0), 3.0);
  EXPECT_EQ(m(100.0), 3.0);
  EXPECT_EQ(m.right_deriv(0.0), 0.0);

  const auto b = make_m({10.0, 0.3, 0.1, 0.25});
  const auto bb = min_with(b, b);
  for (double x = -2.0; x <= 2.0; x += 0.0625) EXPECT_EQ(bb(x), b(x));

  const auto bump = make_m({10.0, 0.0, 0.0, 0.5});
  const auto capped = min_with(PwlFunction::constant(1.0), bump);
  for (double x = -2.0; x <= 2.0; x += 0.03125) EXPECT_DOUBLE_EQ(capped(x), bump(x));
}

// Random nonnegative functions of the kind the algorithm builds: min(constant, bumps).
static PwlFunction random_requested_shift(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-2.0, 2.0), T(0.0, 1.5), E(0.05, 0.5);
  std::uniform_int_distribution<int> K(0, 4);
  const double tau = T(rng);
  const double eps = E(rng);
  PwlFunction f = PwlFunction::constant(tau);
  const int k = K(rng);
  for (int i = 0; i < k; ++i) f = min_with(f, make_m({tau, U(rng), T(rng) * 0.8, eps}));
  return f;
}

TEST(Pwl, MinIsPointwiseMinimum) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> X(-4.0, 4.0);
  for (int i = 0; i < 400; ++i) {
    const auto f = random_requested_shift(rng);
    const auto g = random_requested_shift(rng);
    const auto m = min_with(f, g);
    ASSERT_LE(m.max_abs_slope(), 0.5);
    for (int j = 0; j < 50; ++j) {
      const double x = X(rng);
      const double fx = f(x), gx = g(x), mx = m(x);
      ASSERT_LE(mx, fx + 1e-13);
      ASSERT_LE(mx, gx + 1e-13);
      ASSERT_NEAR(mx, std::min(fx, gx), 1e-13);
    }
  }
}

TEST(Pwl, MinRightDerivativeMatchesOneSidedDifference) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> X(-4.0, 4.0);
  const double delta = 1e-7;
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    const auto f = random_requested_shift(rng);
    const auto g = random_requested_shift(rng);
    const auto m = min_with(f, g);
    for (int j = 0; j < 50; ++j) {
      const double x = X(rng);
      // Skip points within delta of a breakpoint of the result.
      bool near = false;
      for (double b : m.xs()) near |= std::abs(b - x) <= delta;
      if (near) continue;
      const double numeric = (m(x + delta) - m(x)) / delta;
      ASSERT_NEAR(m.right_deriv(x), numeric, 1e-5);
      // The min rule: smallest right-derivative among the functions attaining the minimum.
      const double fx = f(x), gx = g(x);
      double expect = fx < gx ? f.right_deriv(x) : g.right_deriv(x);
      if (std::abs(fx - gx) < 1e-12) expect = std::min(f.right_deriv(x), g.right_deriv(x));
      ASSERT_NEAR(m.right_deriv(x), expect, 1e-12);
      ++checked;
    }
  }
  EXPECT_GT(checked, 10000);
}

TEST(Pwl, RightDerivativeAtSharedBreakpoint) {
  // At a kink of the minimum the right slope comes from the lower function.
  const auto a = make_m({10.0, 0.0, 0.0, 0.5});   // rises with slope 1/2 from x = -1
  const auto b = make_m({10.0, -1.0, 0.0, 0.25});  // plateau value 0.125 at x = -1
  const auto zero = PwlFunction::constant(0.0);
  const auto m = min_with(a, zero);
  EXPECT_EQ(m.right_deriv(-1.0), 0.0);
  const auto m2 = min_with(a, b);
  EXPECT_NEAR(m2(-1.0), 0.0, 0.0);
  EXPECT_EQ(m2.right_deriv(-1.0), 0.5);
}

TEST(InvertShifted, Examples) {
  EXPECT_EQ(invert_shifted(PwlFunction::constant(0.0), 1.25), 1.25);
  EXPECT_EQ(invert_shifted(PwlFunction::constant(0.5), 1.25), 0.75);
  const auto bump = make_m({10.0, 0.0, 0.0, 0.5});
  EXPECT_DOUBLE_EQ(invert_shifted(bump, 0.25), 0.0);
  EXPECT_THROW(invert_shifted(PwlFunction::from_parts({0.0}, {0.0}, {0.0, 0.75}), 1.0), std::invalid_argument);
}

TEST(InvertShifted, RoundTripResidual) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> Y(-5.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    const auto f = random_requested_shift(rng);
    for (int j = 0; j < 10; ++j) {
      const double y = Y(rng);
      const double h = invert_shifted(f, y);
      ASSERT_LE(std::abs(h + f(h) - y), 1e-12);
    }
  }
}
