#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chargeflow/loss.hpp"

namespace chargeflow {

// mobile and fixed charges moving under -dtheta_i/dt = sum_j a_i a_j grad Phi(theta_i, theta_j)
struct ParticleSystem {
  std::vector<Vec> positions;
  Vec charges;
  std::vector<bool> fixed;
  Potential potential;
  double potential_scale = 1.0;  // 2 for the gradient-flow equivalence
  double time = 0.0;

  int size() const { return static_cast<int>(positions.size()); }
  void validate() const;
};

enum class Scheme { Euler, Rk4 };

// distance below which a kinked or singular kernel counts as a collision
inline constexpr double kCollisionDistance = 1e-10;

// dtheta_i/dt for particle i
Vec net_force(const ParticleSystem& sys, int i);
// velocities for every particle, zero for fixed ones
std::vector<Vec> velocity_field(const ParticleSystem& sys);
ParticleSystem step(const ParticleSystem& sys, double dt, Scheme scheme = Scheme::Rk4);

// sum over ordered pairs q_i q_j Phi, plus finite self terms
double system_energy(const ParticleSystem& sys);

// -grad_theta (L/2) for every hypothesis node
std::vector<Vec> gradient_flow_field(const Objective& obj, const Hypothesis& h);
// electrons are the hypothesis nodes, protons the fixed target nodes
ParticleSystem electron_proton_system(const Objective& obj, const Hypothesis& h, double potential_scale = 1.0);

struct TrajectoryRecord {
  double t = 0.0;
  std::vector<Vec> positions;
  double loss = 0.0;
};

struct SimulationOptions {
  double dt = 1e-3;
  int steps = 1000;
  int stride = 1;
  Scheme scheme = Scheme::Rk4;
};

// records the state after every stride-th step
std::vector<TrajectoryRecord> simulate(ParticleSystem sys, const SimulationOptions& opt,
                                       const std::function<void(const TrajectoryRecord&)>& sink = {});

std::string to_json_line(const TrajectoryRecord& rec);

}  // namespace chargeflow
