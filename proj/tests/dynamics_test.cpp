#include <gtest/gtest.h>

#include <cmath>

#include "chargeflow/dynamics.hpp"
#include "chargeflow/errors.hpp"
#include "test_util.hpp"

using namespace chargeflow;
using testutil::error_code_of;

namespace {

ParticleSystem make_system(const Potential& pot, std::vector<Vec> pos, std::vector<double> q,
                           std::vector<bool> fixed) {
  ParticleSystem s;
  s.positions = std::move(pos);
  s.charges = Eigen::Map<Vec>(q.data(), static_cast<Eigen::Index>(q.size()));
  s.fixed = std::move(fixed);
  s.potential = pot;
  return s;
}

Vec v3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

struct RandomConfig {
  Objective obj;
  Hypothesis h;
};

RandomConfig random_config(std::uint64_t seed, int k = 3, int kt = 3, int d = 3) {
  Rng rng(seed);
  TargetNetwork t;
  t.b = testutil::normal_vec(rng, kt);
  for (int j = 0; j < kt; ++j) t.w.push_back(testutil::normal_vec(rng, d));
  Hypothesis h;
  h.a = testutil::normal_vec(rng, k);
  for (int i = 0; i < k; ++i) h.theta.push_back(testutil::normal_vec(rng, d));
  return {Objective(Potential::gaussian(1), t), h};
}

}  // namespace

TEST(Forces, OppositeChargesAttract) {
  auto s = make_system(Potential::gaussian(1), {v3(1, 0, 0), v3(0, 0, 0)}, {1, -1}, {false, true});
  const Vec f = net_force(s, 0);
  EXPECT_LT(f(0), 0.0);
  EXPECT_NEAR(f(1), 0.0, 1e-16);
  // -q_i q_j grad Phi = -(1)(-1)(-(x - w) e^{-1/2})
  EXPECT_NEAR(f(0), -std::exp(-0.5), 1e-15);
}

TEST(Forces, SingleParticleFeelsNothing) {
  auto s = make_system(Potential::gaussian(1), {v3(1, 2, 3)}, {2}, {false});
  EXPECT_EQ(net_force(s, 0).norm(), 0.0);
}

TEST(Forces, SymmetricCollinearCancel) {
  auto s = make_system(Potential::coulomb(3), {v3(-1, 0, 0), v3(0, 0, 0), v3(1, 0, 0)}, {1, 1, 1},
                       {false, false, false});
  EXPECT_EQ(net_force(s, 1).norm(), 0.0);
}

TEST(Forces, Errors) {
  auto s = make_system(Potential::gaussian(1), {v3(0, 0, 0), v3(1, 0, 0)}, {1, 1}, {false, true});
  try {
    net_force(s, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::FixedParticle);
    EXPECT_EQ(e.index(), 1);
  }
  auto c = make_system(Potential::coulomb(3), {v3(0, 0, 0), v3(0, 0, 0)}, {1, 1}, {false, true});
  EXPECT_EQ(error_code_of([&] { velocity_field(c); }), ErrorCode::CollisionSingularity);
  // Gaussian is smooth at coincidence
  auto g = make_system(Potential::gaussian(1), {v3(0, 0, 0), v3(0, 0, 0)}, {1, 1}, {false, true});
  EXPECT_EQ(velocity_field(g)[0].norm(), 0.0);
  s.charges = Vec::Ones(3);
  EXPECT_EQ(error_code_of([&] { velocity_field(s); }), ErrorCode::DimensionMismatch);
  auto ok = make_system(Potential::gaussian(1), {v3(0, 0, 0)}, {1}, {false});
  EXPECT_EQ(error_code_of([&] { step(ok, 0.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_code_of([&] { simulate(ok, SimulationOptions{1e-3, 10, 0}); }), ErrorCode::InvalidArgument);
}

TEST(Integrator, ZeroForceLeavesPositions) {
  auto s = make_system(Potential::gaussian(1), {v3(0.5, 0.25, 0)}, {1}, {false});
  const auto t = step(s, 0.1);
  EXPECT_EQ(t.positions[0], s.positions[0]);
  EXPECT_DOUBLE_EQ(t.time, 0.1);
}

TEST(Integrator, EulerIsPositionPlusVelocity) {
  auto cfg = random_config(1);
  const auto s = electron_proton_system(cfg.obj, cfg.h);
  const auto v = velocity_field(s);
  const auto t = step(s, 0.01, Scheme::Euler);
  for (int i = 0; i < s.size(); ++i) EXPECT_EQ(t.positions[i], s.positions[i] + 0.01 * v[i]);
}

TEST(Integrator, Rk4MatchesScalarOde) {
  // one electron (a) and one proton (b) on a line; r' = a b c r e^{-c r^2/2} (times scale)
  const double a = 1.0, b = -1.5, c = 0.8, scale = 2.0, r0 = 1.7;
  auto s = make_system(Potential::gaussian(c), {v3(r0, 0, 0), v3(0, 0, 0)}, {a, b}, {false, true});
  s.potential_scale = scale;
  auto rhs = [&](double r) { return scale * a * b * c * r * std::exp(-0.5 * c * r * r); };
  // oracle: fine RK4 on the scalar ODE
  double r = r0;
  const int sub = 100;
  const double dt = 0.01;
  for (int n = 0; n < 200; ++n) {
    const double prev = s.positions[0](0);
    s = step(s, dt);
    for (int m = 0; m < sub; ++m) {
      const double h = dt / sub;
      const double k1 = rhs(r), k2 = rhs(r + 0.5 * h * k1), k3 = rhs(r + 0.5 * h * k2), k4 = rhs(r + h * k3);
      r += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    EXPECT_LT(s.positions[0](0), prev);
    EXPECT_NEAR(s.positions[0](0), r, 1e-9);
  }
}

TEST(Integrator, Rk4IsFourthOrder) {
  auto cfg = random_config(3, 2, 2);
  const auto s0 = electron_proton_system(cfg.obj, cfg.h);
  auto run = [&](double dt, int n) {
    auto s = s0;
    for (int i = 0; i < n; ++i) s = step(s, dt);
    return s.positions[0];
  };
  const Vec ref = run(1e-3, 1000);
  const double e1 = (run(0.1, 10) - ref).norm();
  const double e2 = (run(0.05, 20) - ref).norm();
  EXPECT_GT(e1 / e2, 12.0);
}

TEST(Integrator, SphereStaysOnSphere) {
  Rng rng(4);
  std::vector<Vec> pos;
  for (int i = 0; i < 4; ++i) pos.push_back(testutil::unit_vec(rng, 3));
  auto s = make_system(Potential::polynomial(3), pos, {1, -0.5, 0.7, -1}, {false, false, true, true});
  for (int n = 0; n < 50; ++n) s = step(s, 0.02);
  for (const auto& p : s.positions) EXPECT_NEAR(p.norm(), 1.0, 1e-14);
}

TEST(Integrator, EnergyDoesNotIncrease) {
  auto cfg = random_config(7);
  auto s = electron_proton_system(cfg.obj, cfg.h);
  double e = system_energy(s);
  for (int n = 0; n < 200; ++n) {
    s = step(s, 0.01);
    const double e2 = system_energy(s);
    EXPECT_LE(e2, e + 1e-13);
    e = e2;
  }
}

TEST(Integrator, TranslationEquivariance) {
  // dyadic coordinates keep every difference exact
  std::vector<Vec> pos = {v3(0.5, -0.25, 1), v3(-1, 0.75, 0.125), v3(0.25, 0.5, -0.5)};
  auto s = make_system(Potential::gaussian(1), pos, {1, -2, 0.5}, {false, false, true});
  auto t = s;
  const Vec shift = v3(8, -4, 2);
  for (auto& p : t.positions) p += shift;
  const auto vs = velocity_field(s), vt = velocity_field(t);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(vs[i], vt[i]);
  const auto s1 = step(s, 0.01), t1 = step(t, 0.01);
  for (int i = 0; i < 3; ++i) EXPECT_LE((s1.positions[i] + shift - t1.positions[i]).norm(), 1e-14);
}

TEST(Equivalence, GradientFlowIsElectronProtonDynamics) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto cfg = random_config(seed);
    const auto gf = gradient_flow_field(cfg.obj, cfg.h);
    const auto ep = velocity_field(electron_proton_system(cfg.obj, cfg.h, 1.0));
    const auto full = cfg.obj.gradient(cfg.h).dtheta;
    const auto ep2 = velocity_field(electron_proton_system(cfg.obj, cfg.h, 2.0));
    for (int i = 0; i < 3; ++i) {
      EXPECT_LE((gf[i] - ep[i]).norm(), 1e-12);
      EXPECT_LE((-full[i] - ep2[i]).norm(), 1e-12);
    }
    // protons do not move
    for (int j = 3; j < 6; ++j) EXPECT_EQ(ep[j].norm(), 0.0);
  }
}

TEST(Equivalence, HandExpandedPair) {
  Vec th = v3(0.3, -0.2, 0.9), w = v3(-0.1, 0.4, 0.2);
  const double a = 0.8, b = -1.3;
  const Objective obj(Potential::gaussian(1), TargetNetwork{{w}, Vec::Constant(1, b)});
  const Hypothesis h{{th}, Vec::Constant(1, a)};
  const Vec expect = -a * b * Potential::gaussian(1).gradient(th, w);
  EXPECT_LE((gradient_flow_field(obj, h)[0] - expect).norm(), 1e-15);
}

TEST(Equivalence, MatchedMinimumIsAtRest) {
  auto cfg = random_config(2);
  Hypothesis h{cfg.obj.target().w, -cfg.obj.target().b};
  for (const auto& v : velocity_field(electron_proton_system(cfg.obj, h))) EXPECT_LE(v.norm(), 1e-15);
}

TEST(Equivalence, EnergyIsTheLoss) {
  auto cfg = random_config(5);
  EXPECT_NEAR(system_energy(electron_proton_system(cfg.obj, cfg.h)), cfg.obj.loss(cfg.h), 1e-12);
}

TEST(Simulate, RecordsEveryStride) {
  auto cfg = random_config(6);
  const auto s = electron_proton_system(cfg.obj, cfg.h);
  const auto recs = simulate(s, SimulationOptions{1e-3, 100, 10});
  ASSERT_EQ(recs.size(), 10u);
  EXPECT_NEAR(recs.front().t, 0.01, 1e-15);
  EXPECT_NEAR(recs.back().t, 0.1, 1e-14);
  for (std::size_t i = 1; i < recs.size(); ++i) EXPECT_LE(recs[i].loss, recs[i - 1].loss + 1e-13);
  int seen = 0;
  const auto none = simulate(s, SimulationOptions{1e-3, 100, 25}, [&](const TrajectoryRecord&) { ++seen; });
  EXPECT_TRUE(none.empty());
  EXPECT_EQ(seen, 4);
  const std::string line = to_json_line(recs[0]);
  EXPECT_NE(line.find("\"schema\":1"), std::string::npos);
  EXPECT_NE(line.find("\"positions\""), std::string::npos);
  EXPECT_EQ(line.find('\n'), std::string::npos);
}
