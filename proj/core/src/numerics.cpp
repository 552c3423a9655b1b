#include "chargeflow/numerics.hpp"

#include <Eigen/Eigenvalues>

namespace chargeflow {

Mat fd_hessian_from_gradient(const std::function<Vec(const Vec&)>& grad, const Vec& x, double h) {
  const Eigen::Index n = x.size();
  Mat hess(n, n);
  Vec xp = x, xm = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    hess.col(j) = (grad(xp) - grad(xm)) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return 0.5 * (hess + hess.transpose());
}

Mat fd_hessian_from_values(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  const Eigen::Index n = x.size();
  Mat hess(n, n);
  const double f0 = f(x);
  Vec y = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = x(i) + h;
    const double fp = f(y);
    y(i) = x(i) - h;
    const double fm = f(y);
    y(i) = x(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      y(i) += h; y(j) += h;
      const double fpp = f(y);
      y(j) -= 2 * h;
      const double fpm = f(y);
      y(i) -= 2 * h;
      const double fmm = f(y);
      y(j) += 2 * h;
      const double fmp = f(y);
      y(i) = x(i); y(j) = x(j);
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4 * h * h);
    }
  }
  return hess;
}

EigenPair min_eigenpair(const Mat& h, int dense_limit) {
  const Eigen::Index n = h.rows();
  if (n == 0 || h.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "min_eigenpair needs a square non-empty matrix");
  }
  if (!h.allFinite()) throw Error(ErrorCode::EigenSolveFailure, "non-finite Hessian");
  if (n <= dense_limit) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if (es.info() != Eigen::Success) {
      throw Error(ErrorCode::EigenSolveFailure, "self-adjoint eigensolver failed");
    }
    return {es.eigenvalues()(0), es.eigenvectors().col(0)};
  }
  // power iteration on (s I - H), s an upper bound on the spectrum
  const double s = h.cwiseAbs().rowwise().sum().maxCoeff();
  Vec v = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  double mu = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vec w = s * v - h * v;
    const double nrm = w.norm();
    if (nrm == 0.0) break;
    w /= nrm;
    const double mu_new = w.dot(h * w);
    if (it > 10 && std::abs(mu_new - mu) <= 1e-12 * std::max(1.0, std::abs(mu_new))) {
      return {mu_new, w};
    }
    mu = mu_new;
    v = w;
  }
  throw Error(ErrorCode::EigenSolveFailure, "power iteration did not converge");
}

void fritsch_carlson_limit(const std::vector<double>& x, const std::vector<double>& y,
                           std::vector<double>& dy) {
  const std::size_t n = x.size();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
    if (delta == 0.0) {
      dy[k] = 0.0;
      dy[k + 1] = 0.0;
      continue;
    }
    double a = dy[k] / delta, b = dy[k + 1] / delta;
    if (a < 0.0) { dy[k] = 0.0; a = 0.0; }
    if (b < 0.0) { dy[k + 1] = 0.0; b = 0.0; }
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      dy[k] = tau * a * delta;
      dy[k + 1] = tau * b * delta;
    }
  }
}

}  // namespace chargeflow
