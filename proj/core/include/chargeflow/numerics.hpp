#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "chargeflow/errors.hpp"

namespace chargeflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  int max_depth = 48;
};

namespace detail {

inline double qnorm(double v) { return std::abs(v); }
template <std::size_t N>
double qnorm(const std::array<double, N>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}
inline double qadd(double a, double b, double s) { return a + s * b; }
template <std::size_t N>
std::array<double, N> qadd(const std::array<double, N>& a, const std::array<double, N>& b, double s) {
  std::array<double, N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] + s * b[i];
  return r;
}
inline double qscale(double a, double s) { return a * s; }
template <std::size_t N>
std::array<double, N> qscale(const std::array<double, N>& a, double s) {
  std::array<double, N> r{};
  for (std::size_t i = 0; i < N; ++i) r[i] = a[i] * s;
  return r;
}

template <class T, class F>
T simpson_rec(const F& f, double a, double b, const T& fa, const T& fm, const T& fb,
              const T& whole, double tol, int depth, const QuadratureOptions& opt, bool& ok) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const T flm = f(lm), frm = f(rm);
  const double h6 = (b - a) / 12.0;
  // S = h/6 (f0 + 4 f1 + f2) on each half
  const T left = qscale(qadd(qadd(fa, flm, 4.0), fm, 1.0), h6);
  const T right = qscale(qadd(qadd(fm, frm, 4.0), fb, 1.0), h6);
  const T both = qadd(left, right, 1.0);
  const T diff = qadd(both, whole, -1.0);
  const double err = qnorm(diff);
  // floor at the rounding noise of the local Simpson sums
  const double noise = 64.0 * 2.220446049250313e-16 * (b - a) *
                       (qnorm(fa) + qnorm(fm) + qnorm(fb) + qnorm(flm) + qnorm(frm));
  const double allowed = std::max({tol, opt.rel_tol * qnorm(both), noise});
  if (err <= 15.0 * allowed) {
    return qadd(both, diff, 1.0 / 15.0);  // Richardson
  }
  if (depth >= opt.max_depth) {
    ok = false;
    return qadd(both, diff, 1.0 / 15.0);
  }
  return qadd(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, opt, ok),
              simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, opt, ok), 1.0);
}

}  // namespace detail

// Adaptive Simpson with Richardson extrapolation. T is double or std::array<double, N>.
template <class T, class F>
T adaptive_simpson(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a == b) return detail::qscale(f(a), 0.0);
  const double m = 0.5 * (a + b);
  const T fa = f(a), fm = f(m), fb = f(b);
  const T whole = detail::qscale(detail::qadd(detail::qadd(fa, fm, 4.0), fb, 1.0), (b - a) / 6.0);
  bool ok = true;
  T res = detail::simpson_rec(f, a, b, fa, fm, fb, whole, opt.abs_tol, 0, opt, ok);
  if (!ok) {
    throw Error(ErrorCode::QuadratureNotConverged, "adaptive Simpson hit its depth limit");
  }
  return res;
}

// Central-difference Hessian of an analytic gradient, symmetrized.
Mat fd_hessian_from_gradient(const std::function<Vec(const Vec&)>& grad, const Vec& x, double h);

// Central second-difference Hessian from values only.
Mat fd_hessian_from_values(const std::function<double(const Vec&)>& f, const Vec& x, double h);

struct EigenPair {
  double value;
  Vec vector;
};

// Smallest eigenpair of a symmetric matrix. Dense solve up to dense_limit,
// shifted power iteration above it.
EigenPair min_eigenpair(const Mat& h, int dense_limit = 256);

// Cubic Hermite on [x0, x1]; returns value and derivative at x.
inline std::array<double, 2> hermite_cubic(double x0, double x1, double y0, double y1, double d0,
                                           double d1, double x) {
  const double h = x1 - x0;
  const double t = (x - x0) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  const double v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
  const double g00 = 6 * t2 - 6 * t, g10 = 3 * t2 - 4 * t + 1;
  const double g01 = -6 * t2 + 6 * t, g11 = 3 * t2 - 2 * t;
  const double dv = (g00 * y0 + g01 * y1) / h + g10 * d0 + g11 * d1;
  return {v, dv};
}

// Fritsch-Carlson limiter: adjusts knot derivatives in place so the
// Hermite interpolant is monotone wherever the data are.
void fritsch_carlson_limit(const std::vector<double>& x, const std::vector<double>& y,
                           std::vector<double>& dy);

}  // namespace chargeflow
