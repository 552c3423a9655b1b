#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "chargeflow/loss.hpp"

namespace chargeflow {

// A smooth function on a point set; Hessians come back in local coordinates
// together with the basis that maps them to ambient ones.
class DescentProblem {
 public:
  virtual ~DescentProblem() = default;
  virtual double value(const Vec& x) const = 0;
  // Riemannian gradient for constrained problems
  virtual Vec gradient(const Vec& x) const = 0;
  virtual LossHessian hessian(const Vec& x, double step) const;
  virtual Vec project(const Vec& x) const { return x; }
};

class FunctionProblem : public DescentProblem {
 public:
  using Fn = std::function<double(const Vec&)>;
  using Grad = std::function<Vec(const Vec&)>;
  using Hess = std::function<Mat(const Vec&)>;
  FunctionProblem(Fn f, Grad g, Hess h = {}) : f_(std::move(f)), g_(std::move(g)), h_(std::move(h)) {}
  double value(const Vec& x) const override { return f_(x); }
  Vec gradient(const Vec& x) const override { return g_(x); }
  LossHessian hessian(const Vec& x, double step) const override;

 private:
  Fn f_;
  Grad g_;
  Hess h_;
};

// the loss over the flat layout [a; theta_1..theta_k]
class ObjectiveProblem : public DescentProblem {
 public:
  ObjectiveProblem(const Objective& obj, int k) : obj_(obj), k_(k) {}
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  LossHessian hessian(const Vec& x, double step) const override;
  Vec project(const Vec& x) const override;
  const Objective& objective() const { return obj_; }
  int k() const { return k_; }

 private:
  const Objective& obj_;
  int k_;
};

enum class Projection { None, UnitSphere };

struct DescentConfig {
  int T = 1000;
  double alpha = 1e-2;
  double eta = 1e-3;
  double gamma = 1e-3;
  Projection projection = Projection::None;
  double hessian_step = 1e-4;
  std::uint64_t seed = 0;
  int trace_stride = 1;
  void validate() const;
};

enum class Branch { Gradient, Hessian };
enum class Termination { MaxIters, EarlyStop, Error };

const char* to_string(Branch b);
const char* to_string(Termination t);

struct IterRecord {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double lambda_min = 0.0;  // NaN on gradient steps
  Branch branch = Branch::Gradient;
  double decrease = 0.0;
};

struct DescentReport {
  std::vector<IterRecord> trace;
  Termination termination = Termination::MaxIters;
  std::string error;
  int iterations = 0;
  Vec x;
  double objective = 0.0;
};

std::string to_json_line(const DescentReport& rep);

DescentReport gd(const DescentProblem& p, const Vec& x0, const DescentConfig& cfg);

struct HdStep {
  Vec x;
  double lambda_min = 0.0;
  double beta = 0.0;
  Vec direction;  // ambient unit vector
};

// x + beta v_min with beta = -alpha lambda_min sign(-grad^T v_min), sign(0) = +1
HdStep hessian_descent_step(const DescentProblem& p, const Vec& x, const DescentConfig& cfg);

// gradient steps while |grad| >= eta, HD steps otherwise; stops and returns the previous
// iterate once a step decreases the objective by less than min(alpha eta^2/2, alpha^2 gamma^3/2)
DescentReport second_gd(const DescentProblem& p, const Vec& x0, const DescentConfig& cfg);

struct StationaritySet {
  Vec x;
  double eps = 0.0;
  double grad_norm = 0.0;
  double lambda_min = 0.0;
  bool small_gradient = false;
  bool nearly_psd = false;
  bool member() const { return small_gradient && nearly_psd; }
};

StationaritySet stationarity_check(const DescentProblem& p, const Vec& x, double eps, double step = 1e-4);

struct InitPolicy {
  enum class Kind { Origin, RandomBall } kind = Kind::RandomBall;
  double radius = 1.0;
  int trials = 200;
};

struct NodeInit {
  double a = 0.0;
  Vec theta;
  double decrease = 0.0;  // L(0) - L(a, theta) > 0
};

// obj is a single-node objective (see Objective::restricted_to_node)
NodeInit initialize_node(const Objective& obj, const InitPolicy& policy, std::uint64_t seed);

struct NodeWiseResult {
  Hypothesis hypothesis;
  std::vector<NodeInit> inits;
  std::vector<DescentReport> reports;
};

NodeWiseResult node_wise_descent(const Objective& obj, int k, const InitPolicy& policy, const DescentConfig& cfg);

struct Matching {
  std::vector<int> perm;  // node i matches target perm[i]
  double max_distance = 0.0;
  double max_weight_error = 0.0;  // max |a_i + b_perm(i)|
};

// minimum total distance assignment, brute force over permutations (k <= 8)
Matching match_to_target(const Hypothesis& h, const TargetNetwork& t);

}  // namespace chargeflow
