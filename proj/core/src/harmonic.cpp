#include "chargeflow/harmonic.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace chargeflow {

namespace {

using Poly = std::vector<double>;

double poly_eval(const Poly& p, double r) {
  double acc = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * r + *it;
  return acc;
}

Poly poly_deriv(const Poly& p) {
  if (p.size() <= 1) return {0.0};
  Poly out(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) out[i - 1] = static_cast<double>(i) * p[i];
  return out;
}

// p_k = (m + mu r) p_{k-1} - r p'_{k-1}, where m is the current power of 1/r
Poly next_derivative_poly(const Poly& p, double m, double mu) {
  Poly out(p.size() + 1, 0.0);
  const Poly dp = poly_deriv(p);
  for (std::size_t i = 0; i < p.size(); ++i) {
    out[i] += m * p[i];
    out[i + 1] += mu * p[i];
  }
  for (std::size_t i = 0; i < dp.size(); ++i) out[i + 1] -= dp[i];
  return out;
}

constexpr int kConstructionVersion = 2;

}  // namespace

double LambdaHarmonicRadial::mu() const { return std::sqrt(lambda); }

double LambdaHarmonicRadial::value(double r) const {
  return poly_eval(p, r) * std::exp(-mu() * r) / std::pow(r, d - 2);
}

double LambdaHarmonicRadial::derivative(int n, double r) const {
  Poly q = p;
  double m = d - 2;
  for (int k = 0; k < n; ++k) {
    q = next_derivative_poly(q, m, mu());
    m += 1.0;
  }
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  return sign * poly_eval(q, r) * std::exp(-mu() * r) / std::pow(r, m);
}

std::vector<double> LambdaHarmonicRadial::ode_residual() const {
  const Poly d1 = poly_deriv(p);
  const Poly d2 = poly_deriv(d1);
  const double m = mu();
  Poly res(p.size() + 1, 0.0);
  for (std::size_t i = 0; i < d2.size(); ++i) res[i + 1] += d2[i];
  for (std::size_t i = 0; i < d1.size(); ++i) {
    res[i] -= (d - 3) * d1[i];
    res[i + 1] -= 2.0 * m * d1[i];
  }
  for (std::size_t i = 0; i < p.size(); ++i) res[i] += m * (d - 3) * p[i];
  return res;
}

LambdaHarmonicRadial lambda_harmonic_poly(int d, double lambda) {
  if (d % 2 == 0) throw Error(ErrorCode::EvenDimension, "lambda-harmonic solver needs odd d");
  if (d < 3) throw Error(ErrorCode::UnsupportedDimension, "lambda-harmonic solver needs d >= 3");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  LambdaHarmonicRadial out;
  out.d = d;
  out.lambda = lambda;
  const int k = (d - 3) / 2;
  const double mu = std::sqrt(lambda);
  out.p.assign(k + 1, 0.0);
  out.p[0] = 1.0;
  for (int i = 0; i < k; ++i) {
    const double num = mu * (2.0 * i - (d - 3));
    const double den = (i + 1.0) * (i - (d - 3.0));
    out.p[i + 1] = out.p[i] * num / den;
  }
  return out;
}

double radial_laplacian(const std::function<double(double)>& f, double r, int d, double h,
                        Stencil stencil) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  double d1, d2;
  if (stencil == Stencil::Central) {
    if (r <= 2.0 * h) throw Error(ErrorCode::TooCloseToOrigin, "stencil would reach r <= 0");
    const double fm2 = f(r - 2 * h), fm1 = f(r - h), f0 = f(r), fp1 = f(r + h), fp2 = f(r + 2 * h);
    d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h);
    d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h);
  } else {
    if (r <= 0.0) throw Error(ErrorCode::TooCloseToOrigin, "r must be positive");
    double v[6];
    for (int i = 0; i < 6; ++i) v[i] = f(r + i * h);
    d1 = (-25.0 / 12 * v[0] + 4 * v[1] - 3 * v[2] + 4.0 / 3 * v[3] - 0.25 * v[4]) / h;
    d2 = (15.0 / 4 * v[0] - 77.0 / 6 * v[1] + 107.0 / 6 * v[2] - 13 * v[3] + 61.0 / 12 * v[4] -
          5.0 / 6 * v[5]) /
         (h * h);
  }
  return d2 + (d - 1) / r * d1;
}

namespace {

// U(r) = int_{r/2}^{t/2} ((t/2)^2 - x^2)^{(d-1)/2} dx with x = (t/2) cos(phi)
double lens_integral(double t, int d, double r) {
  if (r >= t) return 0.0;
  const double half = 0.5 * t;
  const double top = std::acos(std::clamp(r / t, 0.0, 1.0));
  QuadratureOptions opt;
  opt.abs_tol = 1e-14;
  opt.rel_tol = 1e-13;
  const double s = adaptive_simpson<double>([d](double phi) { return std::pow(std::sin(phi), d); },
                                            0.0, top, opt);
  return std::pow(half, d) * s;
}

double lens_slope(double t, int d, double r) {
  if (r >= t) return 0.0;
  const double q = 0.25 * (t * t - r * r);
  return -0.5 * std::pow(q, 0.5 * (d - 1));
}

}  // namespace

std::array<double, 2> sphere_overlap_potential(double t, int d, double r) {
  if (!(t > 0.0) || r < 0.0 || d < 1) {
    throw Error(ErrorCode::InvalidArgument, "overlap needs t > 0, r >= 0, d >= 1");
  }
  if (r >= t) return {0.0, 0.0};
  const double u0 = lens_integral(t, d, 0.0);
  return {lens_integral(t, d, r) / u0, lens_slope(t, d, r) / u0};
}

std::array<double, 2> sphere_overlap_scaled(double t, int d, double r) {
  if (!(t > 0.0) || r < 0.0 || d < 1) {
    throw Error(ErrorCode::InvalidArgument, "overlap needs t > 0, r >= 0, d >= 1");
  }
  if (r >= t) return {0.0, 0.0};
  double fact = 1.0;
  for (int i = 2; i <= d - 1; ++i) fact *= i;
  const double scale = std::pow(2.0, d) / fact;
  return {scale * lens_integral(t, d, r), scale * lens_slope(t, d, r)};
}

// d = 3: the scaled lens potential is (2s^3 - 3s^2 r + r^3)/6 with r-derivative (r^2 - s^2)/2
std::array<double, 2> almost_harmonic_base(double eps, double x, double r) {
  const double lo = std::max(eps, r);
  if (x <= lo) return {0.0, 0.0};
  // antiderivatives in s of s^-2 lens3(s, r) and s^-2 lens3_dr(s, r)
  auto f0 = [r](double s) { return (s * s - 3 * r * s - r * r * r / s) / 6.0; };
  auto f1 = [r](double s) { return -0.5 * (r * r / s + s); };
  return {x * (f0(x) - f0(lo)), x * (f1(x) - f1(lo))};
}

// Cut the outer integral where the contribution Phi''''(x) Phitilde_x(r) falls
// below 1e-12 of its peak. The raw weight alone would cut too early because
// Phitilde_x grows like x^3.
double almost_harmonic_truncation(double eps, double lambda, double r) {
  const auto phi = lambda_harmonic_poly(3, lambda);
  const double lo = std::max(eps, r);
  double peak = 0.0;
  for (double x = lo * 1.01;; x *= 1.01) {
    const double c = phi.derivative(4, x) * almost_harmonic_base(eps, x, r)[0];
    peak = std::max(peak, c);
    if (x > 2 * lo && c < 1e-12 * peak) return x;
    if (x > 1e4) return x;
  }
}

std::array<double, 2> almost_harmonic_unnormalized(double eps, double lambda, double r,
                                                   double x_max, const QuadratureOptions& quad) {
  const auto phi = lambda_harmonic_poly(3, lambda);
  const double lo = std::max(eps, r);
  if (lo >= x_max) return {0.0, 0.0};
  auto outer = [&](double x) -> std::array<double, 2> {
    const double w = phi.derivative(4, x);
    const auto b = almost_harmonic_base(eps, x, r);
    return {w * b[0], w * b[1]};
  };
  // doubling panels, so a long range cannot hide the support from the first samples
  QuadratureOptions q = quad;
  q.abs_tol /= std::max(1.0, std::ceil(std::log2(x_max / lo)));
  std::array<double, 2> acc{0.0, 0.0};
  for (double a = lo; a < x_max;) {
    const double b = std::min(2.0 * a, x_max);
    const auto part = adaptive_simpson<std::array<double, 2>>(outer, a, b, q);
    acc[0] += part[0];
    acc[1] += part[1];
    a = b;
  }
  return acc;
}

void TabulatedPotential::finalize_lookup() {
  const std::size_t n = r.size();
  tail_ = lambda_harmonic_poly(d, lambda);
  if (n >= 3) {
    log_r1_ = std::log(r[1]);
    inv_log_q_ = static_cast<double>(n - 2) / std::log(r[n - 1] / r[1]);
  }
}

std::array<double, 2> TabulatedPotential::eval(double rr) const {
  const std::size_t n = r.size();
  if (rr >= r[n - 1]) return {tail_.value(rr) / z, tail_.derivative(1, rr) / z};
  std::size_t j;
  if (rr < r[1]) {
    j = 0;
  } else {
    const double pos = (std::log(rr) - log_r1_) * inv_log_q_;
    j = 1 + static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(n - 3)));
    while (j > 1 && r[j] > rr) --j;
    while (j + 2 < n && r[j + 1] <= rr) ++j;
  }
  return hermite_cubic(r[j], r[j + 1], value[j], value[j + 1], slope[j], slope[j + 1], rr);
}

std::string TabulatedPotential::to_json() const {
  nlohmann::json j;
  j["format"] = "chargeflow.tabulated_potential";
  j["version"] = kFormatVersion;
  j["construction_version"] = kConstructionVersion;
  j["d"] = d;
  j["eps"] = eps;
  j["lambda"] = lambda;
  j["z"] = z;
  j["grid"] = {{"points", grid.points}, {"inner_factor", grid.inner_factor}, {"r_max", grid.r_max}};
  j["r"] = r;
  j["value"] = value;
  j["slope"] = slope;
  return j.dump();
}

TabulatedPotential TabulatedPotential::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IoError, std::string("bad tabulated potential: ") + e.what());
  }
  if (j.value("format", "") != "chargeflow.tabulated_potential" ||
      j.value("version", -1) != kFormatVersion ||
      j.value("construction_version", -1) != kConstructionVersion) {
    throw Error(ErrorCode::IoError, "tabulated potential has an unknown format or version");
  }
  TabulatedPotential t;
  t.d = j.at("d");
  t.eps = j.at("eps");
  t.lambda = j.at("lambda");
  t.z = j.at("z");
  t.grid.points = j.at("grid").at("points");
  t.grid.inner_factor = j.at("grid").at("inner_factor");
  t.grid.r_max = j.at("grid").at("r_max");
  t.r = j.at("r").get<std::vector<double>>();
  t.value = j.at("value").get<std::vector<double>>();
  t.slope = j.at("slope").get<std::vector<double>>();
  if (t.r.size() < 3 || t.value.size() != t.r.size() || t.slope.size() != t.r.size()) {
    throw Error(ErrorCode::IoError, "tabulated potential arrays are inconsistent");
  }
  t.finalize_lookup();
  return t;
}

void TabulatedPotential::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp);
    out << to_json();
  }
  std::filesystem::rename(tmp, path);
}

TabulatedPotential TabulatedPotential::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string almost_harmonic_cache_key(int d, double eps, double lambda, const GridSpec& grid) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "almost_d%d_eps%.10g_lambda%.10g_n%d_f%.6g_rmax%.6g_v%d_%d", d,
                eps, lambda, grid.points, grid.inner_factor, grid.r_max,
                TabulatedPotential::kFormatVersion, kConstructionVersion);
  return buf;
}

TabulatedPotential build_almost_harmonic(int d, double eps, double lambda, const GridSpec& grid,
                                         const QuadratureOptions& quad) {
  if (d % 4 != 3) throw Error(ErrorCode::UnsupportedDimension, "construction needs d = 3 mod 4");
  if (d != 3) {
    throw Error(ErrorCode::UnsupportedDimension, "only the d = 3 construction is implemented");
  }
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "eps must be in (0, 1)");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  if (grid.points < 8 || !(grid.inner_factor > 0.0 && grid.inner_factor < 1.0) ||
      !(grid.r_max > eps)) {
    throw Error(ErrorCode::InvalidArgument, "bad grid spec");
  }

  TabulatedPotential t;
  t.d = d;
  t.eps = eps;
  t.lambda = lambda;
  t.grid = grid;

  // geometric knots from inner_factor*eps to ~r_max with eps landing exactly on a knot
  const double r1 = grid.inner_factor * eps;
  const int n = grid.points;
  const int m = std::max(1, static_cast<int>(std::lround((n - 1) * std::log(eps / r1) /
                                                          std::log(grid.r_max / r1))));
  const double log_q = std::log(eps / r1) / m;
  t.r.resize(n + 1);
  t.r[0] = 0.0;
  for (int j = 0; j < n; ++j) t.r[j + 1] = r1 * std::exp(log_q * j);
  t.r[m + 1] = eps;

  t.value.resize(n + 1);
  t.slope.resize(n + 1);
  const auto phi = lambda_harmonic_poly(d, lambda);
  for (int j = 0; j <= n; ++j) {
    // the tail values shrink like e^{-r}/r, so the tolerance follows them down
    QuadratureOptions q = quad;
    q.abs_tol = quad.abs_tol * std::min(1.0, phi.value(std::max(eps, t.r[j])));
    const double x_max = almost_harmonic_truncation(eps, lambda, t.r[j]);
    const auto v = almost_harmonic_unnormalized(eps, lambda, t.r[j], x_max, q);
    t.value[j] = v[0];
    t.slope[j] = v[1];
  }
  t.z = t.value[0];
  for (int j = 0; j <= n; ++j) {
    t.value[j] /= t.z;
    t.slope[j] /= t.z;
  }
  fritsch_carlson_limit(t.r, t.value, t.slope);
  t.finalize_lookup();
  return t;
}

std::shared_ptr<const TabulatedPotential> cached_almost_harmonic(int d, double eps, double lambda,
                                                                 const GridSpec& grid) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const TabulatedPotential>> memo;
  const std::string key = almost_harmonic_cache_key(d, eps, lambda, grid);
  std::lock_guard<std::mutex> lock(mu);
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  std::shared_ptr<const TabulatedPotential> result;
  const char* dir = std::getenv("CHARGEFLOW_CACHE_DIR");
  std::string path;
  if (dir != nullptr && *dir != '\0') {
    std::filesystem::create_directories(dir);
    path = (std::filesystem::path(dir) / (key + ".json")).string();
    if (std::filesystem::exists(path)) {
      try {
        auto loaded = TabulatedPotential::load(path);
        if (loaded.d == d && loaded.eps == eps && loaded.lambda == lambda && loaded.grid == grid) {
          result = std::make_shared<const TabulatedPotential>(std::move(loaded));
        }
      } catch (const Error&) {
        // stale or corrupt cache entry: rebuild below
      }
    }
  }
  if (!result) {
    auto built = build_almost_harmonic(d, eps, lambda, grid);
    if (!path.empty()) built.save(path);
    result = std::make_shared<const TabulatedPotential>(std::move(built));
  }
  memo[key] = result;
  return result;
}

}  // namespace chargeflow
