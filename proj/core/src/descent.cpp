#include "chargeflow/descent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chargeflow/rng.hpp"
#include "json.hpp"

namespace chargeflow {

LossHessian DescentProblem::hessian(const Vec& x, double step) const {
  LossHessian out;
  out.h = fd_hessian_from_gradient([this](const Vec& y) { return gradient(y); }, x, step);
  out.basis = Mat::Identity(x.size(), x.size());
  return out;
}

LossHessian FunctionProblem::hessian(const Vec& x, double step) const {
  if (!h_) return DescentProblem::hessian(x, step);
  return {h_(x), Mat::Identity(x.size(), x.size())};
}

double ObjectiveProblem::value(const Vec& x) const { return obj_.loss(unpack(x, k_, obj_.dim())); }

Vec ObjectiveProblem::gradient(const Vec& x) const {
  return pack(obj_.gradient(unpack(x, k_, obj_.dim())));
}

LossHessian ObjectiveProblem::hessian(const Vec& x, double step) const {
  return loss_hessian(obj_, unpack(x, k_, obj_.dim()), step);
}

Vec ObjectiveProblem::project(const Vec& x) const {
  if (obj_.potential().manifold() != Manifold::Sphere) return x;
  Vec y = x;
  const int d = obj_.dim();
  for (int i = 0; i < k_; ++i) y.segment(k_ + i * d, d).normalize();
  return y;
}

void DescentConfig::validate() const {
  if (T < 1) throw Error(ErrorCode::InvalidArgument, "T must be at least 1");
  if (!(alpha > 0.0) || !(eta > 0.0) || !(gamma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha, eta and gamma must be positive");
  }
  if (!(hessian_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "hessian_step must be positive");
  if (trace_stride < 1) throw Error(ErrorCode::InvalidArgument, "trace_stride must be at least 1");
}

const char* to_string(Branch b) { return b == Branch::Gradient ? "grad" : "hessian"; }

const char* to_string(Termination t) {
  switch (t) {
    case Termination::MaxIters: return "max_iters";
    case Termination::EarlyStop: return "early_stop";
    default: return "error";
  }
}

std::string to_json_line(const DescentReport& rep) {
  nlohmann::json j;
  j["schema"] = 1;
  j["termination"] = to_string(rep.termination);
  if (!rep.error.empty()) j["error"] = rep.error;
  j["iterations"] = rep.iterations;
  j["objective"] = rep.objective;
  j["x"] = std::vector<double>(rep.x.data(), rep.x.data() + rep.x.size());
  auto& tr = j["trace"] = nlohmann::json::array();
  for (const auto& r : rep.trace) {
    nlohmann::json e;
    e["iter"] = r.iter;
    e["objective"] = r.objective;
    e["grad_norm"] = r.grad_norm;
    // json has no NaN
    if (std::isfinite(r.lambda_min)) e["lambda_min"] = r.lambda_min;
    else e["lambda_min"] = nullptr;
    e["branch"] = to_string(r.branch);
    e["decrease"] = r.decrease;
    tr.push_back(std::move(e));
  }
  return j.dump();
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec finish(const DescentProblem& p, const Vec& x, const DescentConfig& cfg) {
  Vec y = p.project(x);
  if (cfg.projection == Projection::UnitSphere) y.normalize();
  return y;
}

}  // namespace

DescentReport gd(const DescentProblem& p, const Vec& x0, const DescentConfig& cfg) {
  cfg.validate();
  DescentReport rep;
  rep.x = x0;
  try {
    double f = p.value(rep.x);
    rep.objective = f;
    for (int it = 1; it <= cfg.T; ++it) {
      const Vec g = p.gradient(rep.x);
      const Vec next = finish(p, rep.x - cfg.alpha * g, cfg);
      const double fn = p.value(next);
      if (it % cfg.trace_stride == 0 || it == cfg.T) {
        rep.trace.push_back({it, fn, g.norm(), kNaN, Branch::Gradient, f - fn});
      }
      rep.x = next;
      f = fn;
      rep.objective = f;
      rep.iterations = it;
    }
  } catch (const Error& e) {
    rep.termination = Termination::Error;
    rep.error = e.what();
  }
  return rep;
}

HdStep hessian_descent_step(const DescentProblem& p, const Vec& x, const DescentConfig& cfg) {
  const LossHessian hs = p.hessian(x, cfg.hessian_step);
  const EigenPair ep = min_eigenpair(hs.h);
  Vec v = hs.basis * ep.vector;
  v.normalize();
  const double gv = p.gradient(x).dot(v);
  const double s = -gv >= 0.0 ? 1.0 : -1.0;
  HdStep out;
  out.lambda_min = ep.value;
  out.beta = -cfg.alpha * ep.value * s;
  out.direction = v;
  out.x = finish(p, x + out.beta * v, cfg);
  return out;
}

DescentReport second_gd(const DescentProblem& p, const Vec& x0, const DescentConfig& cfg) {
  cfg.validate();
  const double need = std::min(cfg.alpha * cfg.eta * cfg.eta / 2.0,
                               cfg.alpha * cfg.alpha * cfg.gamma * cfg.gamma * cfg.gamma / 2.0);
  DescentReport rep;
  rep.x = x0;
  try {
    double f = p.value(rep.x);
    rep.objective = f;
    for (int it = 1; it <= cfg.T; ++it) {
      const Vec g = p.gradient(rep.x);
      IterRecord rec;
      rec.iter = it;
      rec.grad_norm = g.norm();
      Vec next;
      if (rec.grad_norm >= cfg.eta) {
        rec.branch = Branch::Gradient;
        rec.lambda_min = kNaN;
        next = finish(p, rep.x - cfg.alpha * g, cfg);
      } else {
        rec.branch = Branch::Hessian;
        const HdStep hd = hessian_descent_step(p, rep.x, cfg);
        rec.lambda_min = hd.lambda_min;
        next = hd.x;
      }
      const double fn = p.value(next);
      rec.objective = fn;
      rec.decrease = f - fn;
      if (!(rec.decrease >= need)) {
        // the listing returns the previous iterate
        rep.termination = Termination::EarlyStop;
        rep.trace.push_back(rec);
        break;
      }
      if (it % cfg.trace_stride == 0 || it == cfg.T) rep.trace.push_back(rec);
      rep.x = next;
      f = fn;
      rep.objective = f;
      rep.iterations = it;
    }
  } catch (const Error& e) {
    rep.termination = Termination::Error;
    rep.error = e.what();
  }
  return rep;
}

StationaritySet stationarity_check(const DescentProblem& p, const Vec& x, double eps, double step) {
  StationaritySet s;
  s.x = x;
  s.eps = eps;
  s.grad_norm = p.gradient(x).norm();
  s.lambda_min = min_eigenpair(p.hessian(x, step).h).value;
  s.small_gradient = s.grad_norm <= eps;
  s.nearly_psd = s.lambda_min >= -eps;
  return s;
}

NodeInit initialize_node(const Objective& obj, const InitPolicy& policy, std::uint64_t seed) {
  const int d = obj.dim();
  const bool sphere = obj.potential().manifold() == Manifold::Sphere;
  NodeInit best;
  best.theta = Vec::Zero(d);
  if (policy.kind == InitPolicy::Kind::Origin) {
    if (sphere) throw Error(ErrorCode::InvalidArgument, "origin initialization on a sphere kernel");
    const OuterWeight ow = optimal_outer_weight(obj, best.theta);
    best.a = ow.a_star;
    best.decrease = -ow.loss_change;
  } else {
    if (policy.trials < 1 || !(policy.radius > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "random-ball init needs trials >= 1 and radius > 0");
    }
    Rng rng(seed, 0x1417);
    Vec t(d);
    best.decrease = -std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < policy.trials; ++trial) {
      for (int m = 0; m < d; ++m) t(m) = rng.normal();
      const double n = t.norm();
      if (n == 0.0) continue;
      t /= n;
      if (!sphere) t *= policy.radius * std::pow(rng.uniform(), 1.0 / d);
      const OuterWeight ow = optimal_outer_weight(obj, t);
      if (-ow.loss_change > best.decrease) {
        best.decrease = -ow.loss_change;
        best.a = ow.a_star;
        best.theta = t;
      }
    }
  }
  if (!(best.decrease > 0.0)) {
    throw Error(ErrorCode::InitializationFailed, "no trial point decreased the loss");
  }
  return best;
}

NodeWiseResult node_wise_descent(const Objective& obj, int k, const InitPolicy& policy, const DescentConfig& cfg) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  cfg.validate();
  const int d = obj.dim();
  NodeWiseResult out;
  Hypothesis& h = out.hypothesis;
  h.a = Vec::Zero(k);
  Vec rest = Vec::Zero(d);
  if (obj.potential().manifold() == Manifold::Sphere) rest(0) = 1.0;
  h.theta.assign(k, rest);
  for (int i = 0; i < k; ++i) {
    const Objective sub = obj.restricted_to_node(h, i);
    const std::uint64_t seed = CounterRng::mix(cfg.seed) ^ CounterRng::mix(0x9e37ULL + i);
    NodeInit init = initialize_node(sub, policy, seed);
    Vec x0(1 + d);
    x0(0) = init.a;
    x0.tail(d) = init.theta;
    ObjectiveProblem prob(sub, 1);
    DescentReport rep = second_gd(prob, x0, cfg);
    h.a(i) = rep.x(0);
    h.theta[i] = rep.x.tail(d);
    out.inits.push_back(std::move(init));
    out.reports.push_back(std::move(rep));
  }
  return out;
}

Matching match_to_target(const Hypothesis& h, const TargetNetwork& t) {
  const int k = h.k();
  const int m = t.k();
  if (k > m) throw Error(ErrorCode::InvalidArgument, "more nodes than targets");
  if (m > 8) throw Error(ErrorCode::InvalidArgument, "brute-force matching supports at most 8 targets");
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  Matching best;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < k; ++i) cost += (h.theta[i] - t.w[idx[i]]).norm();
    if (cost < best_cost) {
      best_cost = cost;
      best.perm.assign(idx.begin(), idx.begin() + k);
    }
  } while (std::next_permutation(idx.begin(), idx.end()));
  for (int i = 0; i < k; ++i) {
    best.max_distance = std::max(best.max_distance, (h.theta[i] - t.w[best.perm[i]]).norm());
    best.max_weight_error = std::max(best.max_weight_error, std::abs(h.a(i) + t.b(best.perm[i])));
  }
  return best;
}

}  // namespace chargeflow
