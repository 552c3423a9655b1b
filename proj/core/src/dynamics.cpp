#include "chargeflow/dynamics.hpp"

#include <cmath>

#include "json.hpp"

namespace chargeflow {

namespace {

bool smooth_at_collision(const Potential& pot) {
  switch (pot.kind()) {
    case PotentialKind::Gaussian:
    case PotentialKind::Polynomial:
    case PotentialKind::HermiteDual: return true;
    default: return false;
  }
}

void check_collisions(const ParticleSystem& sys, const std::vector<Vec>& pos) {
  if (smooth_at_collision(sys.potential)) return;
  const bool sphere = sys.potential.manifold() == Manifold::Sphere;
  for (int i = 0; i < sys.size(); ++i) {
    if (sys.fixed[i]) continue;
    for (int j = 0; j < sys.size(); ++j) {
      if (j == i) continue;
      double dist = (pos[i] - pos[j]).norm();
      if (sphere) dist = std::min(dist, (pos[i] + pos[j]).norm());
      if (dist < kCollisionDistance) {
        throw Error(ErrorCode::CollisionSingularity,
                    "particles " + std::to_string(i) + " and " + std::to_string(j) + " collide", i);
      }
    }
  }
}

std::vector<Vec> field_at(const ParticleSystem& sys, const std::vector<Vec>& pos) {
  check_collisions(sys, pos);
  const int n = sys.size();
  const auto d = pos[0].size();
  std::vector<Vec> v(n, Vec::Zero(d));
  Vec g(d);
  for (int i = 0; i < n; ++i) {
    if (sys.fixed[i]) continue;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      sys.potential.gradient(pos[i], pos[j], g);
      v[i] -= (sys.potential_scale * sys.charges(i) * sys.charges(j)) * g;
    }
    if (sys.potential.manifold() == Manifold::Sphere) v[i] -= pos[i].dot(v[i]) * pos[i];
  }
  return v;
}

void retract(const ParticleSystem& sys, std::vector<Vec>& pos) {
  if (sys.potential.manifold() != Manifold::Sphere) return;
  for (int i = 0; i < sys.size(); ++i) {
    if (!sys.fixed[i]) pos[i].normalize();
  }
}

}  // namespace

void ParticleSystem::validate() const {
  if (positions.empty()) throw Error(ErrorCode::InvalidArgument, "particle system is empty");
  if (charges.size() != size() || static_cast<int>(fixed.size()) != size()) {
    throw Error(ErrorCode::DimensionMismatch, "positions, charges and fixed flags differ in length");
  }
  for (const auto& p : positions) {
    if (p.size() != positions[0].size()) throw Error(ErrorCode::DimensionMismatch, "mixed dimensions");
    potential.check_point(p);
  }
  if (!(time >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative time");
}

Vec net_force(const ParticleSystem& sys, int i) {
  sys.validate();
  if (i < 0 || i >= sys.size()) throw Error(ErrorCode::InvalidArgument, "particle index out of range");
  if (sys.fixed[i]) throw Error(ErrorCode::FixedParticle, "particle is fixed", i);
  return field_at(sys, sys.positions)[i];
}

std::vector<Vec> velocity_field(const ParticleSystem& sys) {
  sys.validate();
  return field_at(sys, sys.positions);
}

ParticleSystem step(const ParticleSystem& sys, double dt, Scheme scheme) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  sys.validate();
  ParticleSystem out = sys;
  const int n = sys.size();
  const auto k1 = field_at(sys, sys.positions);
  if (scheme == Scheme::Euler) {
    for (int i = 0; i < n; ++i) out.positions[i] += dt * k1[i];
  } else {
    auto shifted = [&](const std::vector<Vec>& k, double s) {
      std::vector<Vec> p = sys.positions;
      for (int i = 0; i < n; ++i) p[i] += s * k[i];
      return p;
    };
    const auto k2 = field_at(sys, shifted(k1, 0.5 * dt));
    const auto k3 = field_at(sys, shifted(k2, 0.5 * dt));
    const auto k4 = field_at(sys, shifted(k3, dt));
    for (int i = 0; i < n; ++i) {
      out.positions[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  retract(out, out.positions);
  out.time = sys.time + dt;
  return out;
}

double system_energy(const ParticleSystem& sys) {
  sys.validate();
  const auto& pot = sys.potential;
  double e = 0.0;
  for (int i = 0; i < sys.size(); ++i) {
    if (pot.finite_diagonal()) e += sys.charges(i) * sys.charges(i) * pot.diagonal();
    for (int j = 0; j < i; ++j) {
      e += 2.0 * sys.charges(i) * sys.charges(j) * pot.value_unchecked(sys.positions[i], sys.positions[j]);
    }
  }
  return sys.potential_scale * e;
}

std::vector<Vec> gradient_flow_field(const Objective& obj, const Hypothesis& h) {
  auto g = obj.gradient(h).dtheta;
  for (auto& v : g) v *= -0.5;
  return g;
}

ParticleSystem electron_proton_system(const Objective& obj, const Hypothesis& h, double potential_scale) {
  obj.check(h);
  const auto& tg = obj.target();
  ParticleSystem sys{{}, Vec(h.k() + tg.k()), {}, obj.potential(), potential_scale, 0.0};
  for (int i = 0; i < h.k(); ++i) {
    sys.positions.push_back(h.theta[i]);
    sys.charges(i) = h.a(i);
    sys.fixed.push_back(false);
  }
  for (int j = 0; j < tg.k(); ++j) {
    sys.positions.push_back(tg.w[j]);
    sys.charges(h.k() + j) = tg.b(j);
    sys.fixed.push_back(true);
  }
  return sys;
}

std::vector<TrajectoryRecord> simulate(ParticleSystem sys, const SimulationOptions& opt,
                                       const std::function<void(const TrajectoryRecord&)>& sink) {
  if (opt.steps < 0 || opt.stride < 1) throw Error(ErrorCode::InvalidArgument, "bad steps or stride");
  std::vector<TrajectoryRecord> out;
  auto record = [&] {
    TrajectoryRecord r{sys.time, sys.positions, system_energy(sys)};
    if (sink) {
      sink(r);
    } else {
      out.push_back(std::move(r));
    }
  };
  for (int s = 1; s <= opt.steps; ++s) {
    sys = step(sys, opt.dt, opt.scheme);
    if (s % opt.stride == 0) record();
  }
  return out;
}

std::string to_json_line(const TrajectoryRecord& rec) {
  nlohmann::json j;
  j["schema"] = 1;
  j["t"] = rec.t;
  auto& ps = j["positions"] = nlohmann::json::array();
  for (const auto& p : rec.positions) ps.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  j["loss"] = rec.loss;
  return j.dump();
}

}  // namespace chargeflow
