#include "chargeflow/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "chargeflow/rng.hpp"

namespace chargeflow {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::map<std::string, std::string> parse_params(const std::string& s) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string item = s.substr(pos, comma - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "expected key=value in '" + item + "'");
    }
    out[item.substr(0, eq)] = item.substr(eq + 1);
    pos = comma + 1;
  }
  return out;
}

double num(const std::map<std::string, std::string>& p, const std::string& key,
           std::optional<double> fallback = std::nullopt) {
  auto it = p.find(key);
  if (it == p.end()) {
    if (fallback) return *fallback;
    throw Error(ErrorCode::InvalidArgument, "missing parameter '" + key + "'");
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad number for '" + key + "': " + it->second);
  }
}

int whole(double v, const std::string& key) {
  if (v != std::floor(v)) throw Error(ErrorCode::InvalidArgument, key + " must be an integer");
  return static_cast<int>(v);
}

}  // namespace

Potential Potential::sign() {
  Potential p;
  p.kind_ = PotentialKind::Sign;
  p.manifold_ = Manifold::Sphere;
  return p;
}

Potential Potential::gaussian(double c) {
  if (!(c > 0.0)) throw Error(ErrorCode::InvalidArgument, "Gaussian width c must be positive");
  Potential p;
  p.kind_ = PotentialKind::Gaussian;
  p.c_ = c;
  return p;
}

Potential Potential::exp_lambda_harmonic(double lambda, int d, bool regularized_diagonal) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");
  Potential p;
  p.kind_ = PotentialKind::ExpLambdaHarmonic;
  p.lambda_ = lambda;
  p.dim_ = d;
  p.regularized_diagonal_ = regularized_diagonal;
  if (d != 1) p.radial_ = lambda_harmonic_poly(d, lambda);
  return p;
}

Potential Potential::polynomial(int l) {
  if (l < 1) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be >= 1");
  Potential p;
  p.kind_ = PotentialKind::Polynomial;
  p.manifold_ = Manifold::Sphere;
  p.l_ = l;
  return p;
}

Potential Potential::almost_harmonic(std::shared_ptr<const TabulatedPotential> table) {
  if (!table) throw Error(ErrorCode::InvalidArgument, "null table");
  Potential p;
  p.kind_ = PotentialKind::AlmostHarmonic;
  p.dim_ = table->d;
  p.lambda_ = table->lambda;
  p.table_ = std::move(table);
  return p;
}

Potential Potential::hermite_dual(std::vector<double> taylor) {
  double total = 0.0;
  for (std::size_t i = 0; i < taylor.size(); ++i) {
    if (taylor[i] < 0.0) {
      throw Error(ErrorCode::NegativeCoefficient, "Taylor coefficient is negative",
                  static_cast<long>(i));
    }
    total += taylor[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "all-zero Taylor coefficients");
  Potential p;
  p.kind_ = PotentialKind::HermiteDual;
  p.manifold_ = Manifold::Sphere;
  p.taylor_ = std::move(taylor);
  p.norm_ = 1.0 / total;
  return p;
}

Potential Potential::coulomb(int d) {
  if (d < 2) throw Error(ErrorCode::UnsupportedDimension, "Coulomb kernel needs d >= 2");
  Potential p;
  p.kind_ = PotentialKind::Coulomb;
  p.dim_ = d;
  return p;
}

Potential Potential::parse(const std::string& id) {
  const std::size_t colon = id.find(':');
  const std::string head = id.substr(0, colon);
  const auto params =
      colon == std::string::npos ? std::map<std::string, std::string>{} : parse_params(id.substr(colon + 1));
  if (head == "sign") return sign();
  if (head == "gauss") return gaussian(num(params, "c", 1.0));
  if (head == "explh") {
    return exp_lambda_harmonic(num(params, "lambda", 1.0), whole(num(params, "d", 3.0), "d"),
                               num(params, "diag", 0.0) != 0.0);
  }
  if (head == "poly") return polynomial(whole(num(params, "l"), "l"));
  if (head == "almost") {
    const int d = whole(num(params, "d", 3.0), "d");
    return almost_harmonic(cached_almost_harmonic(d, num(params, "eps", 0.1), num(params, "lambda", 1.0)));
  }
  if (head == "hermite") {
    auto it = params.find("c");
    if (it == params.end()) throw Error(ErrorCode::InvalidArgument, "hermite needs c=c0/c1/...");
    std::vector<double> coeffs;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, '/')) coeffs.push_back(num({{"c", item}}, "c"));
    return hermite_dual(coeffs);
  }
  if (head == "coulomb") return coulomb(whole(num(params, "d", 3.0), "d"));
  throw Error(ErrorCode::InvalidArgument, "unknown potential '" + id + "'");
}

std::string Potential::id() const {
  switch (kind_) {
    case PotentialKind::Sign: return "sign";
    case PotentialKind::Gaussian: return "gauss:c=" + fmt(c_);
    case PotentialKind::ExpLambdaHarmonic:
      return "explh:lambda=" + fmt(lambda_) + ",d=" + std::to_string(dim_) +
             (regularized_diagonal_ ? ",diag=1" : "");
    case PotentialKind::Polynomial: return "poly:l=" + std::to_string(l_);
    case PotentialKind::AlmostHarmonic:
      return "almost:eps=" + fmt(table_->eps) + ",lambda=" + fmt(table_->lambda) +
             ",d=" + std::to_string(table_->d);
    case PotentialKind::HermiteDual: {
      std::string s = "hermite:c=";
      for (std::size_t i = 0; i < taylor_.size(); ++i) s += (i ? "/" : "") + fmt(taylor_[i]);
      return s;
    }
    case PotentialKind::Coulomb: return "coulomb:d=" + std::to_string(dim_);
  }
  return "?";
}

bool Potential::finite_diagonal() const {
  if (kind_ == PotentialKind::Coulomb) return false;
  if (kind_ == PotentialKind::ExpLambdaHarmonic) return dim_ == 1 || regularized_diagonal_;
  return true;
}

bool Potential::realizable() const {
  switch (kind_) {
    case PotentialKind::Coulomb: return false;
    case PotentialKind::ExpLambdaHarmonic: return dim_ == 1;  // singular diagonal otherwise
    default: return true;
  }
}

std::optional<double> Potential::harmonic_eigenvalue() const {
  if (kind_ == PotentialKind::ExpLambdaHarmonic) return lambda_;
  if (kind_ == PotentialKind::Coulomb) return 0.0;
  return std::nullopt;
}

std::array<double, 2> Potential::radial(double r) const {
  switch (kind_) {
    case PotentialKind::Gaussian: {
      const double e = std::exp(-0.5 * c_ * r * r);
      return {e, -c_ * r * e};
    }
    case PotentialKind::ExpLambdaHarmonic: {
      if (r == 0.0) {
        if (finite_diagonal()) return {1.0, dim_ == 1 ? -std::sqrt(lambda_) : 0.0};
        throw Error(ErrorCode::SingularDiagonal, "raw lambda-harmonic kernel at r = 0");
      }
      if (dim_ == 1) {
        const double e = std::exp(-std::sqrt(lambda_) * r);
        return {e, -std::sqrt(lambda_) * e};
      }
      return {radial_.value(r), radial_.derivative(1, r)};
    }
    case PotentialKind::AlmostHarmonic: return table_->eval(r);
    case PotentialKind::Coulomb: {
      if (r == 0.0) throw Error(ErrorCode::SingularDiagonal, "Coulomb kernel at r = 0");
      if (dim_ == 2) return {-std::log(r), -1.0 / r};
      return {std::pow(r, 2 - dim_), (2 - dim_) * std::pow(r, 1 - dim_)};
    }
    default: throw Error(ErrorCode::InvalidArgument, "radial() on a sphere kernel");
  }
}

std::array<double, 2> Potential::profile(double rho) const {
  rho = std::clamp(rho, -1.0, 1.0);
  switch (kind_) {
    case PotentialKind::Sign: {
      const double s = 1.0 - rho * rho;
      const double d = s > 0.0 ? (2.0 / kPi) / std::sqrt(s) : std::numeric_limits<double>::infinity();
      return {1.0 - (2.0 / kPi) * std::acos(rho), d};
    }
    case PotentialKind::Polynomial:
      return {std::pow(rho, l_), l_ * std::pow(rho, l_ - 1)};
    case PotentialKind::HermiteDual: {
      double v = 0.0, dv = 0.0;
      for (std::size_t i = taylor_.size(); i-- > 0;) {
        dv = dv * rho + v;
        v = v * rho + taylor_[i];
      }
      return {norm_ * v, norm_ * dv};
    }
    default: throw Error(ErrorCode::InvalidArgument, "profile() on a Euclidean kernel");
  }
}

void Potential::check_point(const Vec& p) const {
  if (dim_ > 0 && p.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch,
                "point has dimension " + std::to_string(p.size()) + ", kernel needs " + std::to_string(dim_));
  }
  if (manifold_ == Manifold::Sphere && std::abs(p.norm() - 1.0) > 1e-12) {
    throw Error(ErrorCode::OffManifold, "sphere kernel needs unit vectors");
  }
}

double Potential::value(const Vec& theta, const Vec& w) const {
  if (theta.size() != w.size()) throw Error(ErrorCode::DimensionMismatch, "theta and w differ in size");
  check_point(theta);
  check_point(w);
  return value_unchecked(theta, w);
}

double Potential::value_unchecked(const Vec& theta, const Vec& w) const {
  if (kind_ == PotentialKind::Sign && std::abs(theta.squaredNorm() - 1.0) < 1e-12 &&
      std::abs(w.squaredNorm() - 1.0) < 1e-12) {
    // acos loses half the digits near rho = +-1; the half-angle form does not.
    // Off the sphere the ambient extension f(theta^T w) is kept.
    const double angle = 2.0 * std::atan2((theta - w).norm(), (theta + w).norm());
    return 1.0 - (2.0 / kPi) * angle;
  }
  if (manifold_ == Manifold::Sphere) return profile(theta.dot(w))[0];
  return radial((theta - w).norm())[0];
}

double Potential::diagonal() const {
  if (!finite_diagonal()) throw Error(ErrorCode::SingularDiagonal, "kernel diagonal is infinite");
  if (kind_ == PotentialKind::AlmostHarmonic) return table_->eval(0.0)[0];
  return 1.0;
}

void Potential::gradient(const Vec& theta, const Vec& w, Vec& out) const {
  if (theta.size() != w.size()) throw Error(ErrorCode::DimensionMismatch, "theta and w differ in size");
  if (manifold_ == Manifold::Sphere) {
    const double rho = theta.dot(w);
    const auto f = profile(rho);
    if (!std::isfinite(f[1])) throw Error(ErrorCode::NonDifferentiablePoint, "kernel kink at theta = +-w");
    out = f[1] * w;
    return;
  }
  out = theta - w;
  const double r = out.norm();
  if (r == 0.0) {
    if (kind_ == PotentialKind::Gaussian) {
      out.setZero();
      return;
    }
    if (!finite_diagonal()) throw Error(ErrorCode::SingularDiagonal, "gradient at a singular collision");
    throw Error(ErrorCode::NonDifferentiablePoint, "kernel has a cone tip at theta = w");
  }
  out *= radial(r)[1] / r;
}

Vec Potential::gradient(const Vec& theta, const Vec& w) const {
  Vec g;
  gradient(theta, w, g);
  return g;
}

double Potential::laplacian(const Vec& theta, const Vec& w) const {
  if (manifold_ == Manifold::Sphere) {
    // Euclidean Laplacian of f(theta^T w): f''(rho) |w|^2, by central difference on f'
    const double rho = theta.dot(w);
    const double h = 1e-5;
    return (profile(rho + h)[1] - profile(rho - h)[1]) / (2 * h) * w.squaredNorm();
  }
  const int d = static_cast<int>(theta.size());
  const double r = (theta - w).norm();
  switch (kind_) {
    case PotentialKind::Gaussian: return c_ * (c_ * r * r - d) * std::exp(-0.5 * c_ * r * r);
    case PotentialKind::ExpLambdaHarmonic: return lambda_ * radial(r)[0];
    case PotentialKind::Coulomb:
      if (r == 0.0) throw Error(ErrorCode::SingularDiagonal, "Coulomb kernel at r = 0");
      return 0.0;
    default: {
      const double h = 1e-3 * std::max(r, 1e-3);
      return radial_laplacian([this](double x) { return radial(x)[0]; }, r, d, h,
                              r > 2.5 * h ? Stencil::Central : Stencil::Forward);
    }
  }
}

Mat gram_matrix(const Potential& pot, const std::vector<Vec>& points) {
  const std::size_t n = points.size();
  Mat a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = pot.value(points[i], points[i]);
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = pot.value(points[i], points[j]);
  }
  return a;
}

std::vector<double> dual_from_hermite(const std::vector<double>& hermite) {
  std::vector<double> out(hermite.size());
  for (std::size_t i = 0; i < hermite.size(); ++i) out[i] = hermite[i] * hermite[i];
  return out;
}

std::vector<double> activation_from_potential_taylor(const std::vector<double>& taylor) {
  std::vector<double> out(taylor.size());
  for (std::size_t i = 0; i < taylor.size(); ++i) {
    if (taylor[i] < 0.0) {
      throw Error(ErrorCode::NegativeCoefficient,
                  "coefficient " + std::to_string(i) + " is negative", static_cast<long>(i));
    }
    out[i] = std::sqrt(taylor[i]);
  }
  return out;
}

double hermite_orthonormal(int n, double x) {
  // He_{k+1} = x He_k - k He_{k-1}, rescaled as we go
  if (n == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = (x * cur - std::sqrt(static_cast<double>(k)) * prev) / std::sqrt(k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

Activation Activation::sign() { return {}; }

Activation Activation::gaussian(double c) {
  Activation a;
  a.kind = ActivationKind::Gaussian;
  a.c = c;
  return a;
}

Activation Activation::bessel_1d() {
  Activation a;
  a.kind = ActivationKind::Bessel1D;
  return a;
}

Activation Activation::bessel_3d(double lambda) {
  Activation a;
  a.kind = ActivationKind::Bessel3D;
  a.lambda = lambda;
  return a;
}

Activation Activation::hermite_series(std::vector<double> coeffs) {
  Activation a;
  a.kind = ActivationKind::Hermite;
  a.hermite = std::move(coeffs);
  return a;
}

Activation Activation::dual_of(const Potential& pot) {
  switch (pot.kind()) {
    case PotentialKind::Sign: return sign();
    case PotentialKind::Gaussian: return gaussian(pot.c());
    case PotentialKind::Polynomial: {
      std::vector<double> h(pot.degree() + 1, 0.0);
      h.back() = 1.0;
      return hermite_series(h);
    }
    case PotentialKind::HermiteDual: {
      auto h = activation_from_potential_taylor(pot.taylor());
      double total = 0.0;
      for (double t : pot.taylor()) total += t;
      for (double& v : h) v /= std::sqrt(total);
      return hermite_series(h);
    }
    case PotentialKind::ExpLambdaHarmonic:
      if (pot.dim() == 1 && pot.lambda() == 1.0) return bessel_1d();
      if (pot.dim() == 3) return bessel_3d(pot.lambda());
      break;
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "no closed-form activation for " + pot.id());
}

bool Activation::log_space() const {
  return kind == ActivationKind::Gaussian || kind == ActivationKind::Bessel1D ||
         kind == ActivationKind::Bessel3D;
}

void Activation::log_eval(const Vec& x, const Vec& w, double& log_abs, int& sgn) const {
  const double d = static_cast<double>(x.size());
  switch (kind) {
    case ActivationKind::Gaussian:
      // (4c)^{d/4} e^{|x|^2/4 - c|x-w|^2}
      log_abs = 0.25 * d * std::log(4.0 * c) + 0.25 * x.squaredNorm() - c * (x - w).squaredNorm();
      sgn = 1;
      return;
    case ActivationKind::Bessel1D: {
      // (2/pi)^{3/4} e^{x^2/4} K_0(|x - w|)
      const double r = std::abs(x(0) - w(0));
      log_abs = 0.75 * std::log(2.0 / kPi) + 0.25 * x(0) * x(0) + std::log(std::cyl_bessel_k(0.0, r));
      sgn = 1;
      return;
    }
    case ActivationKind::Bessel3D: {
      // (2 pi)^{3/4} mu pi^{-3/2} e^{|x|^2/4} K_1(mu r) / r
      const double mu = std::sqrt(lambda);
      const double r = (x - w).norm();
      log_abs = 0.75 * std::log(2 * kPi) + std::log(mu) - 1.5 * std::log(kPi) + 0.25 * x.squaredNorm() +
                std::log(std::cyl_bessel_k(1.0, mu * r)) - std::log(r);
      sgn = 1;
      return;
    }
    default: {
      const double v = eval(x, w);
      sgn = (v > 0) - (v < 0);
      log_abs = sgn == 0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(v));
    }
  }
}

double Activation::eval(const Vec& x, const Vec& w) const {
  switch (kind) {
    case ActivationKind::Sign: return w.dot(x) >= 0.0 ? 1.0 : -1.0;
    case ActivationKind::Hermite: {
      const double t = w.dot(x);
      double s = 0.0;
      for (std::size_t i = 0; i < hermite.size(); ++i) {
        if (hermite[i] != 0.0) s += hermite[i] * hermite_orthonormal(static_cast<int>(i), t);
      }
      return s;
    }
    default: {
      double la;
      int sg;
      log_eval(x, w, la, sg);
      return sg * std::exp(la);
    }
  }
}

DualEstimate empirical_dual(const Activation& act, const Vec& theta, const Vec& w, std::uint64_t n,
                            std::uint64_t seed, const DualOptions& opt) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  if (theta.size() != w.size()) throw Error(ErrorCode::DimensionMismatch, "theta and w differ in size");
  const Eigen::Index d = theta.size();
  const std::uint64_t chunk = std::max<std::uint64_t>(1, opt.chunk);
  const std::uint64_t n_chunks = (n + chunk - 1) / chunk;
  const std::uint64_t pairs_per_sample = static_cast<std::uint64_t>((d + 1) / 2);
  const CounterRng gen(seed);
  const bool paired = opt.paired_log_space && act.log_space();

  std::vector<double> sums(n_chunks, 0.0), sq(n_chunks, 0.0);
  std::vector<char> bad(n_chunks, 0);

  auto run_chunk = [&](std::uint64_t c) {
    Vec x(d);
    double s = 0.0, s2 = 0.0;
    const std::uint64_t lo = c * chunk, hi = std::min(n, lo + chunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      for (std::uint64_t p = 0; p < pairs_per_sample; ++p) {
        double z0, z1;
        gen.normal_pair(i * pairs_per_sample + p, z0, z1);
        x(2 * p) = z0;
        if (static_cast<Eigen::Index>(2 * p + 1) < d) x(2 * p + 1) = z1;
      }
      double v;
      if (paired) {
        double l1, l2;
        int s1, s2i;
        act.log_eval(x, theta, l1, s1);
        act.log_eval(x, w, l2, s2i);
        v = (s1 * s2i == 0) ? 0.0 : s1 * s2i * std::exp(l1 + l2);
      } else {
        v = act.eval(x, theta) * act.eval(x, w);
      }
      if (!std::isfinite(v)) {
        bad[c] = 1;
        return;
      }
      s += v;
      s2 += v * v;
    }
    sums[c] = s;
    sq[c] = s2;
  };

  int workers = opt.workers > 0 ? opt.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n_chunks)));
  if (workers == 1) {
    for (std::uint64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::uint64_t c = t; c < n_chunks; c += workers) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }

  double s = 0.0, s2 = 0.0;
  for (std::uint64_t c = 0; c < n_chunks; ++c) {
    if (bad[c]) throw Error(ErrorCode::NonFiniteSample, "activation product overflowed");
    s += sums[c];
    s2 += sq[c];
  }
  DualEstimate out;
  out.n = n;
  out.estimate = s / static_cast<double>(n);
  const double var = n > 1 ? std::max(0.0, (s2 - s * out.estimate) / static_cast<double>(n - 1)) : 0.0;
  out.std_error = std::sqrt(var / static_cast<double>(n));
  return out;
}

RadialSamples sample_radial(const std::function<double(double)>& f, double r_max, int n) {
  if (n < 2 || !(r_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad radial grid");
  RadialSamples s;
  s.dr = r_max / (n - 1);
  s.values.resize(n);
  for (int j = 0; j < n; ++j) s.values[j] = f(j * s.dr);
  return s;
}

double radial_fourier(const RadialSamples& samples, int d, double omega) {
  if (d != 1 && d != 3) throw Error(ErrorCode::UnsupportedDimension, "radial transform only for d in {1, 3}");
  const std::size_t n = samples.values.size();
  const double dr = samples.dr;
  // cos and sin of omega*j*dr by rotation, resynchronized every 256 steps
  const double c1 = std::cos(omega * dr), s1 = std::sin(omega * dr);
  double cj = 1.0, sj = 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j % 256 == 0) {
      cj = std::cos(omega * j * dr);
      sj = std::sin(omega * j * dr);
    }
    const double wgt = (j == 0 || j + 1 == n) ? 0.5 : 1.0;
    const double r = j * dr;
    if (d == 1) {
      // F(w) = 2 int_0^inf f(r) cos(w r) dr
      acc += wgt * samples.values[j] * cj;
    } else if (j > 0) {
      // F(w) = 4 pi / w int_0^inf r f(r) sin(w r) dr, 4 pi int r^2 f dr at w = 0;
      // the r = 0 term vanishes in both
      acc += wgt * samples.values[j] * (omega == 0.0 ? r * r : r * sj / omega);
    }
    const double cn = cj * c1 - sj * s1;
    sj = sj * c1 + cj * s1;
    cj = cn;
  }
  return (d == 1 ? 2.0 : 4.0 * kPi) * dr * acc;
}

Certificate realizability_certificate_radial(const RadialSamples& samples, int d,
                                             const CertificateOptions& opt) {
  if (d != 1 && d != 3) throw Error(ErrorCode::UnsupportedDimension, "certificate needs d in {1, 3}");
  if (samples.values.size() < 16 || !(samples.dr > 0.0)) {
    throw Error(ErrorCode::GridTooCoarse, "too few radial samples");
  }
  const double nyquist = kPi / samples.dr;
  const double top = 0.5 * nyquist;
  // default spacing pi / (2 r_max), fine enough to see the first lobe of a box
  const int nf = opt.frequencies > 0 ? opt.frequencies : static_cast<int>(samples.values.size());
  std::vector<double> spec(nf + 1);
  double peak = 0.0;
  for (int i = 0; i <= nf; ++i) {
    spec[i] = radial_fourier(samples, d, top * i / nf);
    peak = std::max(peak, spec[i]);
  }
  Certificate cert;
  if (!(peak > 0.0)) {
    cert.realizable = false;
    cert.min_value = -1.0;
    return cert;
  }
  cert.min_value = 1.0;
  for (int i = 0; i <= nf; ++i) {
    const double v = spec[i] / peak;
    if (v < cert.min_value) {
      cert.min_value = v;
      cert.omega = top * i / nf;
    }
  }
  if (cert.min_value < -opt.tol) {
    cert.realizable = false;
    return cert;
  }
  // a positive verdict needs the spectrum resolved by the sample spacing
  if (std::abs(spec[nf]) / peak > opt.nyquist_tol) {
    throw Error(ErrorCode::GridTooCoarse, "spectrum has not decayed by half the Nyquist frequency");
  }
  cert.realizable = true;
  return cert;
}

}  // namespace chargeflow
