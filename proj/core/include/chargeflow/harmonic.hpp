#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "chargeflow/numerics.hpp"

namespace chargeflow {

// Phi(r) = p(r) e^{-sqrt(lambda) r} / r^{d-2}
struct LambdaHarmonicRadial {
  int d = 3;
  double lambda = 1.0;
  std::vector<double> p;  // ascending coefficients, p[0] = 1

  double mu() const;
  double value(double r) const;
  // n-th radial derivative, any n >= 0
  double derivative(int n, double r) const;
  // coefficients of r p'' - (d-3+2 mu r) p' + mu (d-3) p; zero for a valid p
  std::vector<double> ode_residual() const;
};

LambdaHarmonicRadial lambda_harmonic_poly(int d, double lambda);

enum class Stencil { Central, Forward };

// f'' + (d-1)/r f' by five-point differences. Forward uses points in [r, r+5h]
// only, for functions that are only smooth to the right of r.
double radial_laplacian(const std::function<double(double)>& f, double r, int d, double h,
                        Stencil stencil = Stencil::Central);

// Normalized lens potential of two balls of diameter t at distance r.
// Returns {value, d/dr value}; value(0) = 1, zero for r >= t.
std::array<double, 2> sphere_overlap_potential(double t, int d, double r);

// Same shape scaled so the (d-1)-th derivative equals r on [0, t]
// (requires d = 3 mod 4 for the sign to work out).
std::array<double, 2> sphere_overlap_scaled(double t, int d, double r);

struct GridSpec {
  int points = 4096;           // geometric knots, r = 0 is added on top
  double inner_factor = 0.01;  // first knot at inner_factor * eps
  double r_max = 20.0;

  bool operator==(const GridSpec&) const = default;
};

// Tabulated almost-lambda-harmonic potential, normalized to 1 at r = 0.
class TabulatedPotential {
 public:
  static constexpr int kFormatVersion = 1;

  int d = 3;
  double eps = 0.1;
  double lambda = 1.0;
  double z = 1.0;  // unnormalized value at 0
  GridSpec grid;
  std::vector<double> r;      // r[0] = 0, then geometric, eps is a knot
  std::vector<double> value;  // normalized
  std::vector<double> slope;  // normalized derivative, after the monotone limiter

  // {value, derivative}; beyond the last knot the analytic tail Phi / z is used
  std::array<double, 2> eval(double rr) const;
  double operator()(double rr) const { return eval(rr)[0]; }

  void finalize_lookup();
  std::string to_json() const;
  static TabulatedPotential from_json(const std::string& text);
  void save(const std::string& path) const;
  static TabulatedPotential load(const std::string& path);

 private:
  double log_r1_ = 0.0;
  double inv_log_q_ = 0.0;
  LambdaHarmonicRadial tail_;
};

std::string almost_harmonic_cache_key(int d, double eps, double lambda, const GridSpec& grid);

// Phibar(r) = int_eps^inf Phi''''(x) Phitilde_x(r) dx with
// Phitilde_x(r) = x int_eps^x s^-2 Phi_s(r) ds (Phi_s the scaled lens potential).
TabulatedPotential build_almost_harmonic(int d, double eps, double lambda,
                                         const GridSpec& grid = {},
                                         const QuadratureOptions& quad = {});

// Unnormalized integrand pieces, exposed for tests.
// Phitilde_x(r) and its r-derivative for d = 3, inner integral in closed form.
std::array<double, 2> almost_harmonic_base(double eps, double x, double r);
double almost_harmonic_truncation(double eps, double lambda, double r);
std::array<double, 2> almost_harmonic_unnormalized(double eps, double lambda, double r,
                                                   double x_max, const QuadratureOptions& quad);

// Build or load from $CHARGEFLOW_CACHE_DIR; memoized in-process.
std::shared_ptr<const TabulatedPotential> cached_almost_harmonic(int d, double eps, double lambda,
                                                                 const GridSpec& grid = {});

}  // namespace chargeflow
