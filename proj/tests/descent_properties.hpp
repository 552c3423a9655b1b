#pragma once

// Random C^3 test functions with known derivative bounds:
//   f(x) = 1/2 x^T A x + b^T x + sum_i c_i (u_i^T x)^3 / 6,  |u_i| = 1
// The third derivative is bounded by B3 = sum |c_i| in operator norm.

#include <cmath>
#include <vector>

#include "chargeflow/descent.hpp"
#include "chargeflow/rng.hpp"

namespace descentprops {

using chargeflow::Mat;
using chargeflow::Vec;

struct CubicFunction {
  Mat A;
  Vec b;
  std::vector<Vec> u;
  std::vector<double> c;

  double b3() const {
    double s = 0.0;
    for (double v : c) s += std::abs(v);
    return s;
  }
  double value(const Vec& x) const {
    double f = 0.5 * x.dot(A * x) + b.dot(x);
    for (std::size_t i = 0; i < u.size(); ++i) f += c[i] * std::pow(u[i].dot(x), 3) / 6.0;
    return f;
  }
  Vec gradient(const Vec& x) const {
    Vec g = A * x + b;
    for (std::size_t i = 0; i < u.size(); ++i) g += 0.5 * c[i] * std::pow(u[i].dot(x), 2) * u[i];
    return g;
  }
  Mat hessian(const Vec& x) const {
    Mat h = A;
    for (std::size_t i = 0; i < u.size(); ++i) h += c[i] * u[i].dot(x) * (u[i] * u[i].transpose());
    return h;
  }
  chargeflow::FunctionProblem problem() const {
    return chargeflow::FunctionProblem([this](const Vec& x) { return value(x); },
                                       [this](const Vec& x) { return gradient(x); },
                                       [this](const Vec& x) { return hessian(x); });
  }
};

inline Vec unit(chargeflow::Rng& rng, int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v / v.norm();
}

// A has smallest eigenvalue lambda_min exactly, the rest in [lambda_min, top]
inline CubicFunction random_function(std::uint64_t seed, double lambda_min, double top, bool linear) {
  chargeflow::Rng rng(seed, 0xd35c);
  const int n = 2 + static_cast<int>(rng.below(5));
  Mat q = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(q);
  const Mat Q = qr.householderQ();
  Vec lam(n);
  lam(0) = lambda_min;
  for (int i = 1; i < n; ++i) lam(i) = rng.uniform(lambda_min, top);
  CubicFunction f;
  f.A = Q * lam.asDiagonal() * Q.transpose();
  f.A = 0.5 * (f.A + f.A.transpose());
  f.b = linear ? Vec(Vec::NullaryExpr(n, [&](Eigen::Index) { return rng.normal(); })) : Vec::Zero(n);
  const int m = 1 + static_cast<int>(rng.below(4));
  for (int i = 0; i < m; ++i) {
    f.u.push_back(unit(rng, n));
    f.c.push_back(rng.uniform(-2.0, 2.0));
  }
  return f;
}

struct GradCase {
  double decrease = 0.0;
  double bound = 0.0;  // alpha eta^2 / 2
};

// one gradient step with eta = |grad| and alpha below 1/B2 on the segment
inline GradCase gradient_case(std::uint64_t seed) {
  chargeflow::Rng rng(seed, 0x9ad);
  const CubicFunction f = random_function(seed, rng.uniform(-3, 0), rng.uniform(0.5, 5), true);
  const int n = static_cast<int>(f.b.size());
  const Vec x = unit(rng, n) * rng.uniform();
  const Vec g = f.gradient(x);
  Eigen::SelfAdjointEigenSolver<Mat> es(f.A);
  const double a_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  // the step stays inside radius |x| + 1
  const double b2 = a_norm + f.b3() * (x.norm() + 1.0);
  double alpha = rng.uniform(0.05, 1.0) / b2;
  alpha = std::min(alpha, 1.0 / std::max(g.norm(), 1e-300));
  chargeflow::DescentConfig cfg;
  cfg.T = 1;
  cfg.alpha = alpha;
  const auto prob = f.problem();
  const auto rep = chargeflow::gd(prob, x, cfg);
  return {f.value(x) - f.value(rep.x), alpha * g.squaredNorm() / 2.0};
}

struct HessCase {
  double decrease = 0.0;
  double bound_half = 0.0;   // alpha^2 gamma^3 / 2 as stated
  double bound_third = 0.0;  // alpha^2 gamma^3 / 3
};

// one HD step at a point with a tiny gradient, lambda_min = -gamma, alpha <= 1/B3
inline HessCase hessian_case(std::uint64_t seed) {
  chargeflow::Rng rng(seed, 0x4e55);
  const double gamma = rng.uniform(0.1, 2.0);
  CubicFunction f = random_function(seed, -gamma, rng.uniform(0.5, 3), false);
  const int n = static_cast<int>(f.A.rows());
  // move the critical point off the origin slightly: x0 near zero with small gradient
  const Vec x = unit(rng, n) * 1e-9;
  // lambda_min of the Hessian at x, which is what the step uses
  Eigen::SelfAdjointEigenSolver<Mat> es(f.hessian(x));
  const double g_eff = -es.eigenvalues()(0);
  const double alpha = rng.uniform(0.1, 1.0) / f.b3();
  chargeflow::DescentConfig cfg;
  cfg.alpha = alpha;
  const auto prob = f.problem();
  const auto st = chargeflow::hessian_descent_step(prob, x, cfg);
  const double dec = f.value(x) - f.value(st.x);
  const double g3 = std::pow(std::min(gamma, g_eff), 3);
  return {dec, alpha * alpha * g3 / 2.0, alpha * alpha * g3 / 3.0};
}

}  // namespace descentprops
