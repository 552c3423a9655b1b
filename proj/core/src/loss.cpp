#include "chargeflow/loss.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace chargeflow {

Objective::Objective(Potential pot, TargetNetwork target, Regularization reg, SelfTerms self)
    : pot_(std::move(pot)), target_(std::move(target)), reg_(reg), self_(self) {
  if (target_.k() < 1) throw Error(ErrorCode::InvalidArgument, "target needs k >= 1");
  if (target_.b.size() != target_.k()) {
    throw Error(ErrorCode::DimensionMismatch, "target has mismatched w and b counts");
  }
  const auto d = target_.w[0].size();
  for (const auto& w : target_.w) {
    if (w.size() != d) throw Error(ErrorCode::DimensionMismatch, "target points differ in dimension");
    pot_.check_point(w);
  }
  if (!target_.b.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite target weights");
  if (self_ == SelfTerms::Include) {
    if (!pot_.finite_diagonal()) {
      constant_singular_ = true;
    } else {
      const int k = target_.k();
      double c = 0.0;
      for (int i = 0; i < k; ++i) {
        c += target_.b(i) * target_.b(i) * pot_.diagonal();
        for (int j = 0; j < i; ++j) {
          c += 2.0 * target_.b(i) * target_.b(j) * pot_.value_unchecked(target_.w[i], target_.w[j]);
        }
      }
      constant_ = c;
    }
  }
}

int Objective::dim() const { return static_cast<int>(target_.w[0].size()); }

double Objective::constant() const {
  if (constant_singular_) throw Error(ErrorCode::SingularDiagonal, "target block has an infinite diagonal");
  return constant_;
}

void Objective::check(const Hypothesis& h) const {
  if (h.k() < 1) throw Error(ErrorCode::InvalidArgument, "hypothesis needs k >= 1");
  if (h.a.size() != h.k()) throw Error(ErrorCode::DimensionMismatch, "mismatched a and theta counts");
  for (const auto& t : h.theta) {
    if (t.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "theta has the wrong dimension");
    pot_.check_point(t);
  }
}

double Objective::loss_variable(const Hypothesis& h) const {
  check(h);
  const bool self = self_ == SelfTerms::Include;
  if (self && constant_singular_) {
    throw Error(ErrorCode::SingularDiagonal, "self terms of a singular kernel");
  }
  const int k = h.k();
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    const double ai = h.a(i);
    if (self) s += ai * ai * pot_.diagonal();
    for (int j = 0; j < i; ++j) s += 2.0 * ai * h.a(j) * pot_.value_unchecked(h.theta[i], h.theta[j]);
    double cross = 0.0;
    for (int j = 0; j < target_.k(); ++j) cross += target_.b(j) * pot_.value_unchecked(h.theta[i], target_.w[j]);
    s += 2.0 * ai * cross;
    if (reg_ == Regularization::Charge) s += ai * ai;
  }
  return s;
}

double Objective::loss(const Hypothesis& h) const {
  const double v = loss_variable(h);
  return v + (self_ == SelfTerms::Include ? constant() : 0.0);
}

LossGradient Objective::euclidean_gradient(const Hypothesis& h) const {
  check(h);
  const bool self = self_ == SelfTerms::Include;
  if (self && constant_singular_) {
    throw Error(ErrorCode::SingularDiagonal, "self terms of a singular kernel");
  }
  const int k = h.k();
  const int d = dim();
  LossGradient g;
  g.da = Vec::Zero(k);
  g.dtheta.assign(k, Vec::Zero(d));
  Vec tmp(d);
  for (int i = 0; i < k; ++i) {
    double da = self ? 2.0 * h.a(i) * pot_.diagonal() : 0.0;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      da += 2.0 * h.a(j) * pot_.value_unchecked(h.theta[i], h.theta[j]);
      pot_.gradient(h.theta[i], h.theta[j], tmp);
      g.dtheta[i] += (2.0 * h.a(i) * h.a(j)) * tmp;
    }
    for (int j = 0; j < target_.k(); ++j) {
      da += 2.0 * target_.b(j) * pot_.value_unchecked(h.theta[i], target_.w[j]);
      pot_.gradient(h.theta[i], target_.w[j], tmp);
      g.dtheta[i] += (2.0 * h.a(i) * target_.b(j)) * tmp;
    }
    if (reg_ == Regularization::Charge) da += 2.0 * h.a(i);
    g.da(i) = da;
  }
  return g;
}

LossGradient Objective::gradient(const Hypothesis& h) const {
  LossGradient g = euclidean_gradient(h);
  if (pot_.manifold() == Manifold::Sphere) {
    for (int i = 0; i < h.k(); ++i) {
      const Vec& t = h.theta[i];
      g.dtheta[i] -= t.dot(g.dtheta[i]) * t;
    }
  }
  return g;
}

Objective Objective::restricted_to_node(const Hypothesis& h, int i) const {
  if (i < 0 || i >= h.k()) throw Error(ErrorCode::InvalidArgument, "node index out of range");
  TargetNetwork t = target_;
  std::vector<Vec> extra_w;
  std::vector<double> extra_b;
  for (int j = 0; j < h.k(); ++j) {
    if (j == i || h.a(j) == 0.0) continue;
    extra_w.push_back(h.theta[j]);
    extra_b.push_back(h.a(j));
  }
  const int k0 = t.k();
  t.b.conservativeResize(k0 + static_cast<Eigen::Index>(extra_b.size()));
  for (std::size_t m = 0; m < extra_b.size(); ++m) {
    t.w.push_back(extra_w[m]);
    t.b(k0 + static_cast<Eigen::Index>(m)) = extra_b[m];
  }
  return Objective(pot_, std::move(t), reg_, self_);
}

OuterWeight optimal_outer_weight(const Objective& obj, const Vec& theta) {
  obj.potential().check_point(theta);
  const auto& tg = obj.target();
  double s = 0.0;
  for (int j = 0; j < tg.k(); ++j) s += tg.b(j) * obj.potential().value_unchecked(theta, tg.w[j]);
  double q = obj.self_terms() == SelfTerms::Include ? obj.potential().diagonal() : 0.0;
  if (obj.regularization() == Regularization::Charge) q += 1.0;
  if (!(q > 0.0)) throw Error(ErrorCode::InvalidArgument, "quadratic in a is not strictly convex");
  OuterWeight out;
  out.a_star = -s / q;
  out.loss_change = -s * s / q;
  return out;
}

Vec optimal_outer_weights(const Objective& obj, const std::vector<Vec>& theta) {
  const int k = static_cast<int>(theta.size());
  const auto& pot = obj.potential();
  const auto& tg = obj.target();
  Mat g(k, k);
  Vec rhs(k);
  const bool self = obj.self_terms() == SelfTerms::Include;
  for (int i = 0; i < k; ++i) {
    pot.check_point(theta[i]);
    g(i, i) = (self ? pot.diagonal() : 0.0) + (obj.regularization() == Regularization::Charge ? 1.0 : 0.0);
    for (int j = 0; j < i; ++j) g(i, j) = g(j, i) = pot.value_unchecked(theta[i], theta[j]);
    double s = 0.0;
    for (int j = 0; j < tg.k(); ++j) s += tg.b(j) * pot.value_unchecked(theta[i], tg.w[j]);
    rhs(i) = -s;
  }
  Eigen::LDLT<Mat> ldlt(g);
  bool ok = ldlt.info() == Eigen::Success;
  if (ok) {
    const Vec dvec = ldlt.vectorD().cwiseAbs();
    ok = dvec.minCoeff() > 1e-12 * std::max(1.0, dvec.maxCoeff());
  }
  if (!ok) {
    g.diagonal().array() += 1e-12;
    ldlt.compute(g);
  }
  return ldlt.solve(rhs);
}

Vec pack(const Hypothesis& h) {
  const int k = h.k();
  const int d = k > 0 ? static_cast<int>(h.theta[0].size()) : 0;
  Vec x(k + k * d);
  x.head(k) = h.a;
  for (int i = 0; i < k; ++i) x.segment(k + i * d, d) = h.theta[i];
  return x;
}

Hypothesis unpack(const Vec& x, int k, int d) {
  if (x.size() != k + k * d) throw Error(ErrorCode::DimensionMismatch, "flat vector has the wrong size");
  Hypothesis h;
  h.a = x.head(k);
  h.theta.resize(k);
  for (int i = 0; i < k; ++i) h.theta[i] = x.segment(k + i * d, d);
  return h;
}

Vec pack(const LossGradient& g) {
  Hypothesis h;
  h.a = g.da;
  h.theta = g.dtheta;
  return pack(h);
}

namespace {

// orthonormal basis of the complement of unit vector t
Mat complement_basis(const Vec& t) {
  const Eigen::Index d = t.size();
  Eigen::HouseholderQR<Mat> qr{Mat(t)};
  Mat q = qr.householderQ() * Mat::Identity(d, d);
  return q.rightCols(d - 1);
}

}  // namespace

Mat tangent_basis(const Hypothesis& h, bool sphere) {
  const int k = h.k();
  const int d = static_cast<int>(h.theta[0].size());
  if (!sphere) return Mat::Identity(k + k * d, k + k * d);
  Mat b = Mat::Zero(k + k * d, k + k * (d - 1));
  b.topLeftCorner(k, k).setIdentity();
  for (int i = 0; i < k; ++i) {
    b.block(k + i * d, k + i * (d - 1), d, d - 1) = complement_basis(h.theta[i]);
  }
  return b;
}

LossHessian loss_hessian(const Objective& obj, const Hypothesis& h, double step) {
  obj.check(h);
  const int k = h.k();
  const int d = obj.dim();
  LossHessian out;
  if (obj.potential().manifold() == Manifold::Euclidean) {
    out.basis = Mat::Identity(k + k * d, k + k * d);
    auto grad = [&](const Vec& x) { return pack(obj.gradient(unpack(x, k, d))); };
    out.h = fd_hessian_from_gradient(grad, pack(h), step);
    return out;
  }
  // pull back through theta_i = normalize(theta_i + B_i t_i)
  out.basis = tangent_basis(h, true);
  std::vector<Mat> bases(k);
  for (int i = 0; i < k; ++i) bases[i] = out.basis.block(k + i * d, k + i * (d - 1), d, d - 1);
  auto grad = [&](const Vec& y) {
    Hypothesis p;
    p.a = h.a + y.head(k);
    p.theta.resize(k);
    std::vector<double> norms(k);
    for (int i = 0; i < k; ++i) {
      const Vec z = h.theta[i] + bases[i] * y.segment(k + i * (d - 1), d - 1);
      norms[i] = z.norm();
      p.theta[i] = z / norms[i];
    }
    const LossGradient g = obj.euclidean_gradient(p);
    Vec out_g(k + k * (d - 1));
    out_g.head(k) = g.da;
    for (int i = 0; i < k; ++i) {
      const Vec& t = p.theta[i];
      const Vec jg = (g.dtheta[i] - t.dot(g.dtheta[i]) * t) / norms[i];
      out_g.segment(k + i * (d - 1), d - 1) = bases[i].transpose() * jg;
    }
    return out_g;
  };
  out.h = fd_hessian_from_gradient(grad, Vec::Zero(k + k * (d - 1)), step);
  return out;
}

double theta_laplacian(const Objective& obj, const Hypothesis& h, int i, double step) {
  if (obj.potential().manifold() != Manifold::Euclidean) {
    throw Error(ErrorCode::InvalidArgument, "theta Laplacian is defined for Euclidean kernels");
  }
  if (i < 0 || i >= h.k()) throw Error(ErrorCode::InvalidArgument, "node index out of range");
  Hypothesis p = h;
  const int d = obj.dim();
  double tr = 0.0;
  for (int m = 0; m < d; ++m) {
    p.theta[i](m) = h.theta[i](m) + step;
    const double gp = obj.gradient(p).dtheta[i](m);
    p.theta[i](m) = h.theta[i](m) - step;
    const double gm = obj.gradient(p).dtheta[i](m);
    p.theta[i](m) = h.theta[i](m);
    tr += (gp - gm) / (2.0 * step);
  }
  return tr;
}

}  // namespace chargeflow
