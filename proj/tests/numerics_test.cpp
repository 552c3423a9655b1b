#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "chargeflow/errors.hpp"
#include "chargeflow/numerics.hpp"
#include "chargeflow/rng.hpp"

using namespace chargeflow;

TEST(Simpson, PolynomialExact) {
  // Simpson is exact on cubics
  const double v = adaptive_simpson<double>([](double x) { return x * x * x - 2 * x + 1; }, 0.0, 2.0);
  EXPECT_NEAR(v, 4.0 - 4.0 + 2.0, 1e-14);
}

TEST(Simpson, SmoothTranscendental) {
  QuadratureOptions opt;
  opt.abs_tol = 1e-12;
  const double v = adaptive_simpson<double>([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, opt);
  EXPECT_NEAR(v, 2.0, 1e-11);
  const double g = adaptive_simpson<double>([](double x) { return std::exp(-x * x); }, -8.0, 8.0, opt);
  EXPECT_NEAR(g, std::sqrt(std::numbers::pi), 1e-11);
}

TEST(Simpson, VectorValued) {
  auto f = [](double x) { return std::array<double, 2>{x, x * x}; };
  const auto v = adaptive_simpson<std::array<double, 2>>(f, 0.0, 3.0);
  EXPECT_NEAR(v[0], 4.5, 1e-12);
  EXPECT_NEAR(v[1], 9.0, 1e-12);
}

TEST(Simpson, ReversedAndEmptyIntervals) {
  EXPECT_EQ(adaptive_simpson<double>([](double) { return 1.0; }, 1.0, 1.0), 0.0);
  EXPECT_NEAR(adaptive_simpson<double>([](double x) { return x; }, 1.0, 0.0), -0.5, 1e-14);
}

TEST(Simpson, DepthLimitThrows) {
  QuadratureOptions opt;
  opt.abs_tol = 1e-14;
  opt.max_depth = 3;
  try {
    adaptive_simpson<double>([](double x) { return std::sqrt(x); }, 0.0, 1.0, opt);
    FAIL() << "expected QuadratureNotConverged";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QuadratureNotConverged);
  }
}

TEST(FiniteDifference, HessianOfQuadratic) {
  Mat a(3, 3);
  a << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  auto grad = [&](const Vec& x) -> Vec { return a * x; };
  auto f = [&](const Vec& x) { return 0.5 * x.dot(a * x); };
  Vec x(3);
  x << 0.3, -1.2, 2.0;
  EXPECT_LT((fd_hessian_from_gradient(grad, x, 1e-3) - a).norm(), 1e-9);
  EXPECT_LT((fd_hessian_from_values(f, x, 1e-3) - a).norm(), 1e-6);
}

TEST(FiniteDifference, HessianIsSymmetric) {
  auto grad = [](const Vec& x) -> Vec {
    Vec g(2);
    g << std::cos(x(0)) * x(1) * x(1), 2 * std::sin(x(0)) * x(1);
    return g;
  };
  Vec x(2);
  x << 0.4, 1.3;
  const Mat h = fd_hessian_from_gradient(grad, x, 1e-4);
  EXPECT_DOUBLE_EQ(h(0, 1), h(1, 0));
  EXPECT_NEAR(h(0, 1), 2 * std::cos(0.4) * 1.3, 1e-7);
}

TEST(Eigen, MinPairDenseAndPowerAgree) {
  Rng rng(3);
  const int n = 30;
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  }
  m = 0.5 * (m + m.transpose()).eval();
  const EigenPair dense = min_eigenpair(m);
  const EigenPair power = min_eigenpair(m, 4);
  EXPECT_NEAR(dense.value, power.value, 1e-6);
  EXPECT_NEAR(std::abs(dense.vector.dot(power.vector)), 1.0, 1e-5);
  EXPECT_LT((m * dense.vector - dense.value * dense.vector).norm(), 1e-10);
}

TEST(Eigen, SaddleEigenvector) {
  Mat h(2, 2);
  h << 2, 0, 0, -2;
  const EigenPair p = min_eigenpair(h);
  EXPECT_DOUBLE_EQ(p.value, -2.0);
  EXPECT_NEAR(std::abs(p.vector(1)), 1.0, 1e-15);
}

TEST(Hermite, ReproducesCubic) {
  auto f = [](double x) { return x * x * x - x; };
  auto df = [](double x) { return 3 * x * x - 1; };
  const auto v = hermite_cubic(0.5, 1.5, f(0.5), f(1.5), df(0.5), df(1.5), 0.9);
  EXPECT_NEAR(v[0], f(0.9), 1e-14);
  EXPECT_NEAR(v[1], df(0.9), 1e-13);
}

TEST(Rng, CounterIsStateless) {
  CounterRng a(42, 1), b(42, 1), c(42, 2);
  EXPECT_EQ(a.bits(17), b.bits(17));
  EXPECT_NE(a.bits(17), c.bits(17));
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const double u = a.uniform(i);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Rng rng(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
}

TEST(Rng, SequenceReproducible) {
  Rng a(5, 3), b(5, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.below(7), b.below(7));
}
