#pragma once

#include <map>
#include <string>
#include <vector>

#include "chargeflow/loss.hpp"

namespace chargeflow {

struct LandscapeVerdict {
  std::string check;
  std::string digest;  // hash of the configuration
  std::map<std::string, double> measured;
  double tol = 0.0;
  bool pass = false;
  bool expected_fail = false;  // control cases that must not pass
  std::string note;
};

std::string to_json_line(const LandscapeVerdict& v);

inline constexpr double kSingularGuard = 1e-3;

// |Tr Hess_theta_i L| <= tol; non-harmonic kernels are flagged expected_fail
LandscapeVerdict earnshaw_trace_check(const Potential& pot, const TargetNetwork& target, const Hypothesis& h,
                                      int i, double tol = 1e-4, double step = 1e-4);

// Laplacian of v -> L(a, theta_S + v) for the coincident cluster S against -2 lambda (sum_S a)^2,
// with a at the stationary point of the quadratic. Kernel: explh with unit diagonal.
LandscapeVerdict eigstrict_laplacian_check(double lambda, const TargetNetwork& target,
                                           const std::vector<Vec>& theta, const std::vector<int>& cluster,
                                           double tol = 1e-3, double step = 1e-3);

// Laplacian of the Gaussian kernel exp(-c r^2 / 2) in d dimensions
double subharmonic_sign_check(double c, int d, double r);

struct CircleScan {
  std::vector<double> minima;  // angles in [0, 2 pi)
  std::vector<double> values;  // loss on the grid
  LandscapeVerdict verdict;
};

// single node on S^1 with a optimized per angle; target points are unit 2-vectors
CircleScan sign_circle_scan(const TargetNetwork& target, int n);

// w_i = e_i, Phi = (theta^T w)^l, single node at theta with optimal a
LandscapeVerdict poly_orthonormal_check(int l, const Vec& b, const Vec& theta, double tol = 1e-4);

}  // namespace chargeflow
