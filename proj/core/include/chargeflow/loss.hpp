#pragma once

#include <vector>

#include "chargeflow/potentials.hpp"

namespace chargeflow {

struct TargetNetwork {
  std::vector<Vec> w;
  Vec b;
  int k() const { return static_cast<int>(w.size()); }
};

// residual is sum a_i sigma(., theta_i) + sum b_j sigma(., w_j)
struct Hypothesis {
  std::vector<Vec> theta;
  Vec a;
  int k() const { return static_cast<int>(theta.size()); }
};

enum class Regularization { None, Charge };
// Exclude drops the constant block and the a_i^2 Phi(theta_i, theta_i) terms,
// which is what singular kernels need
enum class SelfTerms { Include, Exclude };

struct LossGradient {
  Vec da;
  std::vector<Vec> dtheta;  // projected to the tangent space for sphere kernels
};

class Objective {
 public:
  Objective(Potential pot, TargetNetwork target, Regularization reg = Regularization::None,
            SelfTerms self = SelfTerms::Include);

  const Potential& potential() const { return pot_; }
  const TargetNetwork& target() const { return target_; }
  Regularization regularization() const { return reg_; }
  SelfTerms self_terms() const { return self_; }
  int dim() const;

  // cached sum_ij b_i b_j Phi(w_i, w_j); 0 when self terms are excluded
  double constant() const;
  double loss(const Hypothesis& h) const;
  // loss minus the constant block, computed without forming the constant
  double loss_variable(const Hypothesis& h) const;
  LossGradient gradient(const Hypothesis& h) const;
  // Euclidean gradient in theta (unprojected); used for sphere Hessians
  LossGradient euclidean_gradient(const Hypothesis& h) const;

  // single-node objective in node i: every other node with a_j != 0 joins the target
  Objective restricted_to_node(const Hypothesis& h, int i) const;

  void check(const Hypothesis& h) const;

 private:
  Potential pot_;
  TargetNetwork target_;
  Regularization reg_;
  SelfTerms self_;
  double constant_ = 0.0;
  bool constant_singular_ = false;
};

struct OuterWeight {
  double a_star = 0.0;
  double loss_change = 0.0;  // L(a*, theta) - L(0, theta), <= 0
};

// best a for a single node at theta
OuterWeight optimal_outer_weight(const Objective& obj, const Vec& theta);
// stationary point of the quadratic in a (the minimizer when the Gram matrix is PD);
// Tikhonov 1e-12 when the Gram matrix is singular
Vec optimal_outer_weights(const Objective& obj, const std::vector<Vec>& theta);

// flat layout [a_1..a_k, theta_1, ..., theta_k]
Vec pack(const Hypothesis& h);
Hypothesis unpack(const Vec& x, int k, int d);
Vec pack(const LossGradient& g);

struct LossHessian {
  Mat h;      // in local coordinates
  Mat basis;  // columns map local coordinates to flat ambient ones (identity for Euclidean)
};

// central differences of the analytic gradient, symmetrized; sphere kernels use
// tangent coordinates through the normalization retraction
LossHessian loss_hessian(const Objective& obj, const Hypothesis& h, double step = 1e-4);
Mat tangent_basis(const Hypothesis& h, bool sphere);

// trace of the theta_i block of the Hessian, by central differences of the gradient
double theta_laplacian(const Objective& obj, const Hypothesis& h, int i, double step = 1e-4);

}  // namespace chargeflow
