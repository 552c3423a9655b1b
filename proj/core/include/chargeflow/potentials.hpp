#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chargeflow/harmonic.hpp"
#include "chargeflow/numerics.hpp"

namespace chargeflow {

enum class PotentialKind {
  Sign,               // sphere, 1 - (2/pi) acos(rho)
  Gaussian,           // exp(-c r^2 / 2)
  ExpLambdaHarmonic,  // p(r) e^{-sqrt(lambda) r} / r^{d-2}; e^{-sqrt(lambda) r} for d = 1
  Polynomial,         // sphere, rho^l
  AlmostHarmonic,     // tabulated construction
  HermiteDual,        // sphere, sum c_i rho^i / sum c_i
  Coulomb,            // r^{2-d}, -ln r for d = 2
};

enum class Manifold { Euclidean, Sphere };

class Potential {
 public:
  static Potential sign();
  static Potential gaussian(double c);
  // regularized_diagonal: report Phi(theta, theta) = 1 instead of failing
  static Potential exp_lambda_harmonic(double lambda, int d, bool regularized_diagonal = false);
  static Potential polynomial(int l);
  static Potential almost_harmonic(std::shared_ptr<const TabulatedPotential> table);
  static Potential hermite_dual(std::vector<double> taylor);
  static Potential coulomb(int d);

  // "sign", "gauss:c=1", "explh:lambda=1,d=3[,diag=1]", "poly:l=3",
  // "almost:eps=0.1,lambda=1,d=3", "hermite:c=1/0/0.5", "coulomb:d=3"
  static Potential parse(const std::string& id);
  std::string id() const;

  PotentialKind kind() const { return kind_; }
  Manifold manifold() const { return manifold_; }
  // required dimension of the points, 0 when any dimension works
  int dim() const { return dim_; }
  bool translation_invariant() const { return manifold_ == Manifold::Euclidean; }
  bool finite_diagonal() const;
  // realizable by some activation under N(0, I) inputs
  bool realizable() const;
  // eigenvalue of the Laplacian for lambda-harmonic kinds (0 for Coulomb)
  std::optional<double> harmonic_eigenvalue() const;

  double c() const { return c_; }
  double lambda() const { return lambda_; }
  int degree() const { return l_; }
  const std::vector<double>& taylor() const { return taylor_; }
  const TabulatedPotential* table() const { return table_.get(); }

  // profile in r (Euclidean) or rho = theta^T w (sphere): {f, f'}
  std::array<double, 2> radial(double r) const;
  std::array<double, 2> profile(double rho) const;

  double value(const Vec& theta, const Vec& w) const;
  // no dimension or manifold checks; for inner loops over validated points
  double value_unchecked(const Vec& theta, const Vec& w) const;
  double diagonal() const;
  // Euclidean gradient in theta (for sphere kinds: f'(theta^T w) w, not projected)
  void gradient(const Vec& theta, const Vec& w, Vec& out) const;
  Vec gradient(const Vec& theta, const Vec& w) const;
  // Laplacian in theta; analytic where a closed form exists
  double laplacian(const Vec& theta, const Vec& w) const;

  void check_point(const Vec& p) const;

 private:
  PotentialKind kind_ = PotentialKind::Gaussian;
  Manifold manifold_ = Manifold::Euclidean;
  int dim_ = 0;
  double c_ = 1.0;
  double lambda_ = 1.0;
  int l_ = 1;
  bool regularized_diagonal_ = false;
  double norm_ = 1.0;
  std::vector<double> taylor_;
  std::shared_ptr<const TabulatedPotential> table_;
  LambdaHarmonicRadial radial_;
};

// Gram matrix A_ij = Phi(x_i, x_j)
Mat gram_matrix(const Potential& pot, const std::vector<Vec>& points);

// Hermite coefficient sequence (a_i) on orthonormal He_i / sqrt(i!) -> (a_i^2)
std::vector<double> dual_from_hermite(const std::vector<double>& hermite);
// (c_i) -> (sqrt c_i); NegativeCoefficient carries the index of the first offender
std::vector<double> activation_from_potential_taylor(const std::vector<double>& taylor);

// orthonormal probabilists' Hermite polynomial He_n(x) / sqrt(n!)
double hermite_orthonormal(int n, double x);

enum class ActivationKind { Sign, Gaussian, Bessel1D, Bessel3D, Hermite };

struct Activation {
  ActivationKind kind = ActivationKind::Sign;
  double c = 1.0;       // Gaussian width
  double lambda = 1.0;  // Bessel
  std::vector<double> hermite;  // orthonormal Hermite coefficients

  static Activation sign();
  static Activation gaussian(double c);
  static Activation bessel_1d();
  static Activation bessel_3d(double lambda = 1.0);
  static Activation hermite_series(std::vector<double> coeffs);
  // the built-in activation whose dual is pot, when one exists
  static Activation dual_of(const Potential& pot);

  // Gaussian-type activations carry an e^{|x|^2/4} factor and are combined in log space
  bool log_space() const;
  double eval(const Vec& x, const Vec& w) const;
  // log|sigma| and its sign; sign 0 means sigma = 0
  void log_eval(const Vec& x, const Vec& w, double& log_abs, int& sign) const;
};

struct DualEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
};

struct DualOptions {
  std::uint64_t chunk = 1 << 16;
  int workers = 0;            // 0: hardware concurrency
  bool paired_log_space = true;
};

// Monte Carlo of E[sigma(X, theta) sigma(X, w)], X ~ N(0, I_d)
DualEstimate empirical_dual(const Activation& act, const Vec& theta, const Vec& w, std::uint64_t n,
                            std::uint64_t seed, const DualOptions& opt = {});

struct RadialSamples {
  double dr = 0.0;
  std::vector<double> values;  // f(j dr), j = 0..n-1; values[0] may be infinite for d = 3
};

RadialSamples sample_radial(const std::function<double(double)>& f, double r_max, int n = 1 << 14);

struct CertificateOptions {
  double tol = 1e-6;
  int frequencies = 0;  // 0: as many as there are samples
  double nyquist_tol = 1e-3;
};

struct Certificate {
  bool realizable = false;
  double omega = 0.0;      // frequency of the minimum of the normalized transform
  double min_value = 0.0;  // min of F(omega) / max F
};

// d-dimensional radial Fourier transform by trapezoid sums (cosine transform for
// d = 1, sine transform for d = 3), evaluated on [0, omega_nyquist / 2].
Certificate realizability_certificate_radial(const RadialSamples& samples, int d,
                                             const CertificateOptions& opt = {});
// transform value at one frequency, unnormalized
double radial_fourier(const RadialSamples& samples, int d, double omega);

}  // namespace chargeflow
