#include <gtest/gtest.h>

#include "chargeflow/errors.hpp"
#include "chargeflow/loss.hpp"
#include "test_util.hpp"

using namespace chargeflow;
using testutil::error_code_of;

namespace {

struct Setup {
  Objective obj;
  Hypothesis h;
};

Setup random_setup(const Potential& pot, int d, int k, int kt, std::uint64_t seed,
                   Regularization reg = Regularization::None, SelfTerms self = SelfTerms::Include) {
  Rng rng(seed);
  const bool sphere = pot.manifold() == Manifold::Sphere;
  auto pt = [&] { return sphere ? testutil::unit_vec(rng, d) : testutil::normal_vec(rng, d); };
  TargetNetwork t;
  t.b = testutil::normal_vec(rng, kt);
  for (int j = 0; j < kt; ++j) t.w.push_back(pt());
  Hypothesis h;
  h.a = testutil::normal_vec(rng, k);
  for (int i = 0; i < k; ++i) h.theta.push_back(pt());
  return {Objective(pot, t, reg, self), h};
}

// q^T G q over the stacked points
double gram_oracle(const Objective& obj, const Hypothesis& h, bool drop_diag = false) {
  std::vector<Vec> pts = h.theta;
  for (const auto& w : obj.target().w) pts.push_back(w);
  Vec q(pts.size());
  q << h.a, obj.target().b;
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (drop_diag && i == j) continue;
      if (drop_diag && i >= static_cast<std::size_t>(h.k()) && j >= static_cast<std::size_t>(h.k())) continue;
      s += q(i) * q(j) * obj.potential().value_unchecked(pts[i], pts[j]);
    }
  }
  if (obj.regularization() == Regularization::Charge) s += h.a.squaredNorm();
  return s;
}

double loss_at(const Objective& obj, const Vec& x, int k, int d) { return obj.loss(unpack(x, k, d)); }

}  // namespace

TEST(Loss, MatchesGramQuadraticForm) {
  for (const auto& pot : {Potential::gaussian(0.8), Potential::sign(), Potential::polynomial(3),
                          Potential::exp_lambda_harmonic(1, 1)}) {
    const int d = pot.dim() > 0 ? pot.dim() : 3;
    for (std::uint64_t s = 0; s < 5; ++s) {
      for (auto reg : {Regularization::None, Regularization::Charge}) {
        auto st = random_setup(pot, d, 3, 2, s, reg);
        EXPECT_NEAR(st.obj.loss(st.h), gram_oracle(st.obj, st.h), 1e-12) << pot.id();
        EXPECT_NEAR(st.obj.loss_variable(st.h) + st.obj.constant(), st.obj.loss(st.h), 1e-12);
      }
    }
  }
}

TEST(Loss, LossIsZeroAtTheTarget) {
  auto st = random_setup(Potential::gaussian(1), 3, 2, 2, 4);
  Hypothesis h{st.obj.target().w, -st.obj.target().b};
  EXPECT_NEAR(st.obj.loss(h), 0.0, 1e-14);
  const auto g = st.obj.gradient(h);
  EXPECT_LT(pack(g).norm(), 1e-14);
}

TEST(Loss, NonNegativeForRealizableKernels) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto st = random_setup(Potential::sign(), 4, 3, 3, s);
    EXPECT_GE(st.obj.loss(st.h), -1e-12);
  }
}

TEST(Loss, ExcludedSelfTermsForSingularKernels) {
  auto st = random_setup(Potential::coulomb(3), 3, 3, 2, 8, Regularization::None, SelfTerms::Exclude);
  EXPECT_EQ(st.obj.constant(), 0.0);
  EXPECT_NEAR(st.obj.loss(st.h), gram_oracle(st.obj, st.h, true), 1e-12);
}

TEST(Loss, SingularDiagonalIsReported) {
  auto st = random_setup(Potential::coulomb(3), 3, 2, 2, 1);
  EXPECT_EQ(error_code_of([&] { st.obj.loss(st.h); }), ErrorCode::SingularDiagonal);
  EXPECT_EQ(error_code_of([&] { st.obj.constant(); }), ErrorCode::SingularDiagonal);
}

TEST(Loss, CheckRejectsBadHypotheses) {
  auto st = random_setup(Potential::sign(), 3, 2, 2, 1);
  Hypothesis bad = st.h;
  bad.theta[0] *= 2;
  EXPECT_EQ(error_code_of([&] { st.obj.loss(bad); }), ErrorCode::OffManifold);
  bad = st.h;
  bad.a = Vec::Ones(3);
  EXPECT_EQ(error_code_of([&] { st.obj.loss(bad); }), ErrorCode::DimensionMismatch);
  TargetNetwork t{{Vec::Zero(2)}, Vec::Ones(2)};
  EXPECT_EQ(error_code_of([&] { Objective(Potential::gaussian(1), t); }), ErrorCode::DimensionMismatch);
}

TEST(Loss, GradientMatchesDifferences) {
  for (const auto& pot : {Potential::gaussian(0.6), Potential::exp_lambda_harmonic(2, 3, true),
                          Potential::exp_lambda_harmonic(1, 1)}) {
    const int d = pot.dim() > 0 ? pot.dim() : 2;
    for (std::uint64_t s = 0; s < 5; ++s) {
      auto st = random_setup(pot, d, 3, 2, 10 + s, Regularization::Charge);
      const Vec fd = testutil::fd_gradient([&](const Vec& x) { return loss_at(st.obj, x, 3, d); }, pack(st.h));
      const Vec g = pack(st.obj.gradient(st.h));
      EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, fd.norm())) << pot.id();
    }
  }
}

TEST(Loss, SphereGradientIsTangentProjection) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto st = random_setup(Potential::polynomial(3), 4, 2, 3, s);
    const auto g = st.obj.gradient(st.h);
    const auto e = st.obj.euclidean_gradient(st.h);
    for (int i = 0; i < 2; ++i) {
      const Vec& t = st.h.theta[i];
      EXPECT_NEAR(t.dot(g.dtheta[i]), 0.0, 1e-13);
      EXPECT_LE((g.dtheta[i] - (e.dtheta[i] - t.dot(e.dtheta[i]) * t)).norm(), 1e-13);
      // Euclidean part matches ambient differences of the unchecked formula
      const Vec fd = testutil::fd_gradient(
          [&](const Vec& x) {
            double v = 0.0;
            for (int j = 0; j < 2; ++j) {
              const Vec& tj = j == i ? x : st.h.theta[j];
              v += 2 * st.h.a(i) * (j == i ? 0.0 : st.h.a(j) * st.obj.potential().value_unchecked(x, tj));
            }
            for (int j = 0; j < 3; ++j)
              v += 2 * st.h.a(i) * st.obj.target().b(j) * st.obj.potential().value_unchecked(x, st.obj.target().w[j]);
            return v;
          },
          t);
      EXPECT_LE((e.dtheta[i] - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
    }
    EXPECT_LE((g.da - e.da).norm(), 0.0);
  }
}

TEST(Loss, HessianMatchesValueDifferences) {
  auto st = random_setup(Potential::gaussian(1), 2, 2, 2, 3, Regularization::Charge);
  const auto hs = loss_hessian(st.obj, st.h);
  EXPECT_EQ(hs.basis.rows(), hs.basis.cols());
  const Mat fd = fd_hessian_from_values([&](const Vec& x) { return loss_at(st.obj, x, 2, 2); }, pack(st.h), 1e-4);
  EXPECT_LE((hs.h - fd).norm(), 1e-5 * std::max(1.0, fd.norm()));
  EXPECT_LE((hs.h - hs.h.transpose()).norm(), 1e-14);
}

TEST(Loss, SphereHessianUsesTangentCoordinates) {
  auto st = random_setup(Potential::polynomial(2), 3, 2, 2, 6);
  const auto hs = loss_hessian(st.obj, st.h);
  // k weights plus k (d - 1) tangent directions
  EXPECT_EQ(hs.h.rows(), 2 + 2 * 2);
  EXPECT_EQ(hs.basis.rows(), 2 + 2 * 3);
  const Mat& b = hs.basis;
  EXPECT_LE((b.transpose() * b - Mat::Identity(b.cols(), b.cols())).norm(), 1e-12);
  // second differences of the loss along the retraction
  Rng rng(2);
  for (int t = 0; t < 4; ++t) {
    const Vec u = testutil::normal_vec(rng, static_cast<int>(b.cols()));
    const double s = 1e-4;
    auto along = [&](double e) {
      Vec x = pack(st.h) + e * (b * u);
      Hypothesis h = unpack(x, 2, 3);
      for (auto& th : h.theta) th.normalize();
      return st.obj.loss(h);
    };
    const double fd = (along(s) - 2 * along(0) + along(-s)) / (s * s);
    EXPECT_NEAR(u.dot(hs.h * u), fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Loss, PackUnpackRoundTrip) {
  auto st = random_setup(Potential::gaussian(1), 4, 3, 1, 0);
  const Vec x = pack(st.h);
  EXPECT_EQ(x.size(), 3 + 12);
  const auto h = unpack(x, 3, 4);
  EXPECT_EQ(h.a, st.h.a);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(h.theta[i], st.h.theta[i]);
  EXPECT_EQ(error_code_of([&] { unpack(x, 3, 5); }), ErrorCode::DimensionMismatch);
}

TEST(Loss, RestrictedObjectiveIsTheSameLoss) {
  for (const auto& pot : {Potential::gaussian(1), Potential::sign()}) {
    auto st = random_setup(pot, 3, 3, 2, 21);
    st.h.a(2) = 0.0;
    for (int i = 0; i < 3; ++i) {
      const auto r = st.obj.restricted_to_node(st.h, i);
      const int extra = i == 2 ? 2 : 1;
      EXPECT_EQ(r.target().k(), 2 + extra);
      Hypothesis one{{st.h.theta[i]}, st.h.a.segment(i, 1)};
      EXPECT_NEAR(r.loss(one), st.obj.loss(st.h), 1e-12);
      const auto g1 = r.gradient(one), g = st.obj.gradient(st.h);
      EXPECT_NEAR(g1.da(0), g.da(i), 1e-12);
      EXPECT_LE((g1.dtheta[0] - g.dtheta[i]).norm(), 1e-12);
    }
  }
}

TEST(Loss, OptimalOuterWeight) {
  for (auto reg : {Regularization::None, Regularization::Charge}) {
    auto st = random_setup(Potential::gaussian(0.5), 3, 1, 3, 12, reg);
    const Vec& th = st.h.theta[0];
    const auto ow = optimal_outer_weight(st.obj, th);
    auto l = [&](double a) { return st.obj.loss(Hypothesis{{th}, Vec::Constant(1, a)}); };
    EXPECT_NEAR(l(ow.a_star) - l(0.0), ow.loss_change, 1e-12);
    EXPECT_LE(ow.loss_change, 0.0);
    EXPECT_LE(l(ow.a_star), l(ow.a_star + 1e-3));
    EXPECT_LE(l(ow.a_star), l(ow.a_star - 1e-3));
  }
}

TEST(Loss, OptimalOuterWeightsZeroTheWeightGradient) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto st = random_setup(Potential::sign(), 3, 3, 3, 40 + s);
    st.h.a = optimal_outer_weights(st.obj, st.h.theta);
    EXPECT_LT(st.obj.gradient(st.h).da.norm(), 1e-10);
  }
  // at the target the best weights are -b
  auto st = random_setup(Potential::gaussian(1), 2, 2, 2, 3);
  const Vec a = optimal_outer_weights(st.obj, st.obj.target().w);
  EXPECT_LE((a + st.obj.target().b).norm(), 1e-10);
}

TEST(Loss, ThetaLaplacianOfCoulombVanishes) {
  auto st = random_setup(Potential::coulomb(3), 3, 2, 3, 9, Regularization::None, SelfTerms::Exclude);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(theta_laplacian(st.obj, st.h, i, 1e-3), 0.0, 1e-4);
  auto sp = random_setup(Potential::sign(), 3, 2, 2, 9);
  EXPECT_EQ(error_code_of([&] { theta_laplacian(sp.obj, sp.h, 0); }), ErrorCode::InvalidArgument);
}

TEST(Loss, HandExpandedSingleNode) {
  Vec w = Vec::Zero(1), th(1);
  th << std::sqrt(2 * std::log(2.0));  // Phi = 0.5
  const Objective obj(Potential::gaussian(1), TargetNetwork{{w}, Vec::Ones(1)});
  EXPECT_NEAR(obj.loss(Hypothesis{{th}, Vec::Ones(1)}), 3.0, 1e-14);
  EXPECT_NEAR(obj.loss(Hypothesis{{th}, Vec::Zero(1)}), 1.0, 1e-14);
  EXPECT_NEAR(obj.loss(Hypothesis{{w}, -Vec::Ones(1)}), 0.0, 1e-14);

  const Objective reg(Potential::gaussian(1), TargetNetwork{{w}, Vec::Ones(1)}, Regularization::Charge);
  const double a = 0.7;
  EXPECT_NEAR(reg.gradient(Hypothesis{{th}, Vec::Constant(1, a)}).da(0), 4 * a + 2 * 0.5, 1e-14);
  // S = 0.6 gives a* = -0.3 and a decrease of 0.18
  const Objective reg6(Potential::gaussian(1), TargetNetwork{{w}, Vec::Constant(1, 1.2)}, Regularization::Charge);
  const auto ow = optimal_outer_weight(reg6, th);
  EXPECT_NEAR(ow.a_star, -0.3, 1e-14);
  EXPECT_NEAR(ow.loss_change, -0.18, 1e-14);
  const auto ow1 = optimal_outer_weight(obj, w);
  EXPECT_NEAR(ow1.a_star, -1.0, 1e-15);
}

TEST(Loss, WeightBlockOfTheHessianIsTwiceTheGram) {
  for (auto reg : {Regularization::None, Regularization::Charge}) {
    auto st = random_setup(Potential::gaussian(1), 3, 3, 2, 14, reg);
    const auto hs = loss_hessian(st.obj, st.h, 1e-4);
    Mat g = 2 * gram_matrix(st.obj.potential(), st.h.theta);
    if (reg == Regularization::Charge) g += 2 * Mat::Identity(3, 3);
    EXPECT_LE((hs.h.topLeftCorner(3, 3) - g).norm(), 1e-6);
  }
}
