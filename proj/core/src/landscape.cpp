#include "chargeflow/landscape.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <numbers>

#include "json.hpp"

namespace chargeflow {

namespace {

// FNV-1a over the raw bytes of every number in the configuration
class Digest {
 public:
  Digest& add(double x) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &x, sizeof(double));
    for (unsigned char c : bytes) h_ = (h_ ^ c) * 0x100000001b3ULL;
    return *this;
  }
  Digest& add(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) add(v(i));
    return *this;
  }
  Digest& add(const std::string& s) {
    for (unsigned char c : s) h_ = (h_ ^ c) * 0x100000001b3ULL;
    return *this;
  }
  std::string str() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

bool is_harmonic(const Potential& pot) {
  const auto ev = pot.harmonic_eigenvalue();
  return ev && *ev == 0.0;
}

}  // namespace

std::string to_json_line(const LandscapeVerdict& v) {
  nlohmann::json j;
  j["schema"] = 1;
  j["check"] = v.check;
  j["digest"] = v.digest;
  j["measured"] = v.measured;
  j["tol"] = v.tol;
  j["pass"] = v.pass;
  j["expected_fail"] = v.expected_fail;
  if (!v.note.empty()) j["note"] = v.note;
  return j.dump();
}

LandscapeVerdict earnshaw_trace_check(const Potential& pot, const TargetNetwork& target, const Hypothesis& h,
                                      int i, double tol, double step) {
  std::vector<Vec> pts = h.theta;
  pts.insert(pts.end(), target.w.begin(), target.w.end());
  for (std::size_t u = 0; u < pts.size(); ++u) {
    for (std::size_t v = 0; v < u; ++v) {
      if ((pts[u] - pts[v]).norm() < kSingularGuard) {
        throw Error(ErrorCode::TooCloseToSingularity, "points closer than the singular-kernel guard",
                    static_cast<long>(u));
      }
    }
  }
  const Objective obj(pot, target, Regularization::None, SelfTerms::Exclude);
  LandscapeVerdict v;
  v.check = "earnshaw";
  Digest dg;
  dg.add(pot.id()).add(static_cast<double>(i)).add(step);
  for (const auto& p : pts) dg.add(p);
  dg.add(h.a).add(target.b);
  v.digest = dg.str();
  const double tr = theta_laplacian(obj, h, i, step);
  v.measured["trace"] = tr;
  v.tol = tol;
  v.pass = std::abs(tr) <= tol;
  v.expected_fail = !is_harmonic(pot);
  if (v.expected_fail) v.note = "kernel is not harmonic; control case";
  return v;
}

LandscapeVerdict eigstrict_laplacian_check(double lambda, const TargetNetwork& target,
                                           const std::vector<Vec>& theta, const std::vector<int>& cluster,
                                           double tol, double step) {
  const int k = static_cast<int>(theta.size());
  if (cluster.empty()) throw Error(ErrorCode::InvalidArgument, "empty cluster");
  std::vector<bool> in(k, false);
  for (int c : cluster) {
    if (c < 0 || c >= k || in[c]) throw Error(ErrorCode::InvalidArgument, "bad cluster index");
    in[c] = true;
  }
  const Vec& centre = theta[cluster[0]];
  const int d = static_cast<int>(centre.size());
  for (int c : cluster) {
    if (theta[c] != centre) throw Error(ErrorCode::InvalidArgument, "cluster points must coincide");
  }
  for (int j = 0; j < k; ++j) {
    if (in[j]) continue;
    if ((theta[j] - centre).norm() < kSingularGuard) {
      throw Error(ErrorCode::DegenerateCluster, "a node outside the cluster sits on the cluster point", j);
    }
    for (int m = 0; m < j; ++m) {
      if (!in[m] && (theta[j] - theta[m]).norm() < kSingularGuard) {
        throw Error(ErrorCode::DegenerateCluster, "coincident nodes outside the cluster", j);
      }
    }
  }
  for (int j = 0; j < k; ++j) {
    for (const auto& w : target.w) {
      if ((theta[j] - w).norm() < kSingularGuard) {
        throw Error(ErrorCode::DegenerateCluster, "node sits on a target point", j);
      }
    }
  }
  const Potential pot = Potential::exp_lambda_harmonic(lambda, d, true);
  const Objective obj(pot, target, Regularization::None, SelfTerms::Include);
  Hypothesis h;
  h.theta = theta;
  h.a = optimal_outer_weights(obj, theta);
  auto shifted = [&](int m, double s) {
    Hypothesis p = h;
    for (int c : cluster) p.theta[c](m) += s;
    return obj.loss_variable(p);
  };
  const double f0 = obj.loss_variable(h);
  double lap = 0.0;
  for (int m = 0; m < d; ++m) lap += (shifted(m, step) - 2.0 * f0 + shifted(m, -step)) / (step * step);
  double sum_a = 0.0;
  for (int c : cluster) sum_a += h.a(c);
  const double expected = -2.0 * lambda * sum_a * sum_a;

  LandscapeVerdict v;
  v.check = "eigstrict";
  Digest dg;
  dg.add(lambda).add(step);
  for (const auto& t : theta) dg.add(t);
  for (const auto& w : target.w) dg.add(w);
  dg.add(target.b);
  for (int c : cluster) dg.add(static_cast<double>(c));
  v.digest = dg.str();
  v.measured["laplacian"] = lap;
  v.measured["expected"] = expected;
  v.measured["sum_a"] = sum_a;
  v.tol = tol;
  // relative, with an absolute floor for the sum_a = 0 case
  v.pass = std::abs(lap - expected) <= tol * std::abs(expected) + 1e-6;
  return v;
}

double subharmonic_sign_check(double c, int d, double r) {
  if (!(r >= 0.0)) throw Error(ErrorCode::InvalidArgument, "r must be nonnegative");
  return c * (c * r * r - d) * std::exp(-0.5 * c * r * r);
}

CircleScan sign_circle_scan(const TargetNetwork& target, int n) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "scan needs at least 3 angles");
  const Potential pot = Potential::sign();
  const Objective obj(pot, target, Regularization::None, SelfTerms::Include);
  if (obj.dim() != 2) throw Error(ErrorCode::DimensionMismatch, "circle scan needs points in R^2");
  const double two_pi = 2.0 * std::numbers::pi;
  CircleScan out;
  out.values.resize(n);
  Vec t(2);
  for (int s = 0; s < n; ++s) {
    const double phi = two_pi * s / n;
    t << std::cos(phi), std::sin(phi);
    // L(a*, phi) = C + loss_change
    out.values[s] = obj.constant() + optimal_outer_weight(obj, t).loss_change;
  }
  std::vector<double> marks;
  for (const auto& w : target.w) {
    const double a = std::atan2(w(1), w(0));
    marks.push_back(a);
    marks.push_back(a + std::numbers::pi);
  }
  auto circ = [&](double x, double y) {
    double dlt = std::fmod(std::abs(x - y), two_pi);
    return std::min(dlt, two_pi - dlt);
  };
  const double res = two_pi / n;
  bool all_near = true;
  double worst = 0.0;
  for (int s = 0; s < n; ++s) {
    const double v = out.values[s];
    if (v < out.values[(s + n - 1) % n] && v < out.values[(s + 1) % n]) {
      const double phi = two_pi * s / n;
      out.minima.push_back(phi);
      double best = std::numeric_limits<double>::infinity();
      for (double m : marks) best = std::min(best, circ(phi, m));
      worst = std::max(worst, best);
      all_near = all_near && best <= res * (1.0 + 1e-9);
    }
  }
  LandscapeVerdict& v = out.verdict;
  v.check = "sign_circle";
  Digest dg;
  dg.add(static_cast<double>(n));
  for (const auto& w : target.w) dg.add(w);
  dg.add(target.b);
  v.digest = dg.str();
  v.measured["minima"] = static_cast<double>(out.minima.size());
  v.measured["worst_offset"] = worst;
  v.tol = res;
  v.pass = all_near && !out.minima.empty();
  return out;
}

LandscapeVerdict poly_orthonormal_check(int l, const Vec& b, const Vec& theta, double tol) {
  if (l < 3) throw Error(ErrorCode::InvalidArgument, "degree must be at least 3");
  const int d = static_cast<int>(theta.size());
  if (b.size() != d) throw Error(ErrorCode::DimensionMismatch, "need one output weight per basis vector");
  const Potential pot = Potential::polynomial(l);
  pot.check_point(theta);
  TargetNetwork tg;
  for (int i = 0; i < d; ++i) tg.w.push_back(Vec::Unit(d, i));
  tg.b = b;
  const Objective obj(pot, tg, Regularization::None, SelfTerms::Include);
  Hypothesis h;
  h.theta = {theta};
  h.a = Vec::Constant(1, optimal_outer_weight(obj, theta).a_star);
  const double a = h.a(0);

  LandscapeVerdict v;
  v.check = "poly_orthonormal";
  Digest dg;
  dg.add(static_cast<double>(l)).add(b).add(theta);
  v.digest = dg.str();
  v.tol = tol;
  v.measured["a"] = a;

  const double gnorm = pack(obj.gradient(h)).norm();
  v.measured["grad_norm"] = gnorm;
  if (gnorm > tol) throw Error(ErrorCode::NotACriticalPoint, "first-order conditions fail");

  std::vector<int> nz;
  for (int i = 0; i < d; ++i) {
    if (std::abs(theta(i)) > 1e-12) nz.push_back(i);
  }
  if (nz.size() < 2) {
    v.pass = true;
    v.note = "single nonzero coordinate; no witness required";
    return v;
  }
  Vec dir = Vec::Zero(d);
  dir(nz[0]) = theta(nz[1]);
  dir(nz[1]) = -theta(nz[0]);
  dir.normalize();
  auto along = [&](double t) {
    Hypothesis p = h;
    p.theta[0] = (theta + t * dir).normalized();
    return obj.loss(p);
  };
  const double s = 1e-4;
  const double curv = (along(s) - 2.0 * along(0.0) + along(-s)) / (s * s);
  const double expected = -2.0 * (l - 2) * l * a * a;
  v.measured["curvature"] = curv;
  v.measured["expected"] = expected;
  if (a == 0.0) {
    v.pass = false;
    v.note = "a = 0: zero curvature, the measure-zero case";
    return v;
  }
  v.pass = curv < 0.0 && std::abs(curv - expected) <= tol * std::max(1.0, std::abs(expected));
  return v;
}

}  // namespace chargeflow
