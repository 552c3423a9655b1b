#include "chargeflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "chargeflow/rng.hpp"
#include "json.hpp"

namespace chargeflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const std::string t = trim(v);
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw Error(ErrorCode::InvalidArgument, "bad value for " + key + ": '" + v + "'");
  }
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty list for " + key);
  return out;
}

// a bare integer is a seed count; a comma list ("4,7" or "7,") is explicit
std::vector<std::uint64_t> parse_seeds(const std::string& v) {
  const std::string t = trim(v);
  if (t.find(',') == std::string::npos) {
    const int n = parse_number<int>("seeds", t);
    std::vector<std::uint64_t> out(std::max(n, 0));
    for (int i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  return parse_list<std::uint64_t>("seeds", t);
}

Mat gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sd * rng.normal();
  return m;
}

LayeredNetwork random_network(int d, int depth, int width, double variance, Rng& rng) {
  if (depth < 2) throw Error(ErrorCode::InvalidArgument, "depth must be at least 2");
  if (d < 1 || width < 1) throw Error(ErrorCode::InvalidArgument, "d and width must be positive");
  if (!(variance >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative weight variance");
  const double sd = std::sqrt(variance);
  LayeredNetwork n;
  int in = d;
  for (int l = 0; l < depth; ++l) {
    const int out = l == depth - 1 ? 1 : width;
    n.layers.push_back(gaussian_matrix(out, in, sd, rng));
    in = out;
  }
  return n;
}

double mse(const Mat& a, const Mat& b) { return (a - b).squaredNorm() / static_cast<double>(a.cols()); }

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(lineno) + " has no '='");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    if (key.empty()) throw Error(ErrorCode::InvalidArgument, "config line " + std::to_string(lineno) + " has no key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

ExperimentConfig ExperimentConfig::defaults(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  if (experiment == "recovery") {
    c.d = 3;
    c.scale = 64.0;
    c.alpha = 1.5e-3;
    c.T = 1000000;
    c.seeds.clear();
    for (std::uint64_t s = 0; s < 20; ++s) c.seeds.push_back(s);
  }
  return c;
}

void ExperimentConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [raw, v] : kv) {
    std::string key = raw;
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "experiment") experiment = v;
    else if (key == "d") d = parse_number<int>(key, v);
    else if (key == "depths") depths = parse_list<int>(key, v);
    else if (key == "widths") widths = parse_list<int>(key, v);
    else if (key == "n_train") n_train = parse_number<int>(key, v);
    else if (key == "n_test") n_test = parse_number<int>(key, v);
    else if (key == "T" || key == "t" || key == "iters") T = static_cast<long>(parse_number<double>(key, v));
    else if (key == "alpha") alpha = parse_number<double>(key, v);
    else if (key == "batch") batch = parse_number<int>(key, v);
    else if (key == "activation") activation = v;
    else if (key == "scale") scale = parse_number<double>(key, v);
    else if (key == "init_scale") init_scale = parse_number<double>(key, v);
    else if (key == "seeds") seeds = parse_seeds(v);
    else if (key == "workers") workers = parse_number<int>(key, v);
    else if (key == "csv" || key == "csv_path") csv_path = v;
    else if (key == "jsonl" || key == "jsonl_path") jsonl_path = v;
    else if (key == "k") k = parse_number<int>(key, v);
    else if (key == "potential") potential = v;
    else if (key == "min_separation") min_separation = parse_number<double>(key, v);
    else if (key == "tol") tol = parse_number<double>(key, v);
    else if (key == "init_trials") init_trials = static_cast<int>(parse_number<double>(key, v));
    else if (key == "init_radius_factor") init_radius_factor = parse_number<double>(key, v);
    else if (key == "eta") eta = parse_number<double>(key, v);
    else if (key == "gamma") gamma = parse_number<double>(key, v);
    else throw Error(ErrorCode::InvalidArgument, "unknown config key '" + raw + "'");
  }
}

void ExperimentConfig::validate() const {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be positive");
  };
  positive(d > 0, "d");
  positive(n_train > 0 && n_test > 0, "sample counts");
  positive(batch > 0, "batch");
  positive(alpha > 0.0, "alpha");
  positive(k > 0, "k");
  positive(init_trials > 0, "init_trials");
  if (T < 0) throw Error(ErrorCode::InvalidArgument, "T must be nonnegative");
  if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "seeds must be non-empty");
  for (int v : depths) {
    if (v < 2) throw Error(ErrorCode::InvalidArgument, "depths must be at least 2");
  }
  for (int v : widths) positive(v > 0, "widths");
  if (activation != "tanh") throw Error(ErrorCode::InvalidArgument, "only the tanh activation is supported");
}

Mat LayeredNetwork::forward(const Mat& x) const {
  Mat h = x;
  for (const auto& w : layers) h = (w * h).array().tanh().matrix();
  return h;
}

LayeredNetwork generate_target(int d, int depth, int width, double scale, std::uint64_t seed) {
  Rng rng(seed, 1);
  return random_network(d, depth, width, scale, rng);
}

double default_theory_scale(int d) { return d * std::log(static_cast<double>(d)); }

TargetNetwork generate_theory_target(int d, int k, double scale, double min_separation, std::uint64_t seed) {
  if (d < 1 || k < 1) throw Error(ErrorCode::InvalidArgument, "d and k must be positive");
  Rng rng(seed, 7);
  const double sd = std::sqrt(scale);
  TargetNetwork t;
  long attempts = 0;
  while (t.k() < k) {
    if (++attempts > 1000000) {
      throw Error(ErrorCode::InvalidArgument, "cannot place targets with the requested separation");
    }
    Vec w(d);
    for (int m = 0; m < d; ++m) w(m) = sd * rng.normal();
    bool ok = true;
    for (const auto& u : t.w) ok = ok && (u - w).norm() >= min_separation;
    if (ok) t.w.push_back(std::move(w));
  }
  t.b.resize(k);
  for (int j = 0; j < k; ++j) t.b(j) = rng.uniform(-1.0, 1.0);
  return t;
}

ResultRow sgd_train(const ExperimentConfig& cfg, int depth, int width, std::uint64_t seed) {
  return sgd_train(cfg, generate_target(cfg.d, depth, width, cfg.scale, seed), seed);
}

ResultRow sgd_train(const ExperimentConfig& cfg, const LayeredNetwork& target, std::uint64_t seed,
                    const LayeredNetwork* init) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int depth = target.depth();
  const int d = static_cast<int>(target.layers[0].cols());
  const int width = static_cast<int>(target.layers[0].rows());
  Rng data_rng(seed, 2), init_rng(seed, 3), batch_rng(seed, 4);
  LayeredNetwork h = init ? *init : random_network(d, depth, width, cfg.init_scale, init_rng);
  if (h.depth() != depth || h.layers[0].cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "initial network does not match the target architecture");
  }
  const Mat xtr = gaussian_matrix(d, cfg.n_train, 1.0, data_rng);
  const Mat xte = gaussian_matrix(d, cfg.n_test, 1.0, data_rng);
  const Mat ytr = target.forward(xtr);
  const Mat yte = target.forward(xte);

  Mat xb(d, cfg.batch), yb(1, cfg.batch);
  std::vector<Mat> acts(depth + 1);
  for (long it = 0; it < cfg.T; ++it) {
    for (int j = 0; j < cfg.batch; ++j) {
      const auto idx = static_cast<Eigen::Index>(batch_rng.below(cfg.n_train));
      xb.col(j) = xtr.col(idx);
      yb(0, j) = ytr(0, idx);
    }
    acts[0] = xb;
    for (int l = 0; l < depth; ++l) acts[l + 1] = (h.layers[l] * acts[l]).array().tanh().matrix();
    // d(mean sq err)/d(pre-activation) of the output node
    Mat delta = ((2.0 / cfg.batch) * (acts[depth] - yb).array() * (1.0 - acts[depth].array().square())).matrix();
    for (int l = depth - 1; l >= 0; --l) {
      const Mat g = delta * acts[l].transpose();
      if (l > 0) {
        delta = ((h.layers[l].transpose() * delta).array() * (1.0 - acts[l].array().square())).matrix();
      }
      h.layers[l] -= cfg.alpha * g;
    }
    if ((it & 1023) == 1023 && !h.layers[0].allFinite()) {
      throw Error(ErrorCode::DivergedLoss, "weights became non-finite at iteration " + std::to_string(it));
    }
  }
  ResultRow r;
  r.depth = depth;
  r.width = width;
  r.seed = seed;
  r.train_err = mse(h.forward(xtr), ytr);
  r.test_err = mse(h.forward(xte), yte);
  if (!std::isfinite(r.train_err) || !std::isfinite(r.test_err)) {
    throw Error(ErrorCode::DivergedLoss, "non-finite error after training");
  }
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<ResultRow> run_table(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Cell {
    int depth, width;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (int dep : cfg.depths) {
    for (int w : cfg.widths) {
      for (auto s : cfg.seeds) cells.push_back({dep, w, s});
    }
  }
  std::vector<ResultRow> rows(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      try {
        rows[i] = sgd_train(cfg, cells[i].depth, cells[i].width, cells[i].seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers) : std::thread::hardware_concurrency();
  n = std::max(1u, std::min<unsigned>(n, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

void write_csv_header(std::ostream& os) { os << "depth,width,seed,train_err,test_err,wall_ms\n"; }

void write_csv_row(std::ostream& os, const ResultRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%d,%llu,%.9g,%.9g,%.1f\n", r.depth, r.width,
                static_cast<unsigned long long>(r.seed), r.train_err, r.test_err, r.wall_ms);
  os << buf;
}

RecoveryReport recovery_experiment(const ExperimentConfig& cfg, const Potential& pot, std::uint64_t seed) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RecoveryReport rep;
  rep.seed = seed;
  rep.target = generate_theory_target(cfg.d, cfg.k, cfg.scale, cfg.min_separation, seed);
  const Objective obj(pot, rep.target, Regularization::None, SelfTerms::Include);
  DescentConfig dc;
  dc.T = static_cast<int>(std::min<long>(cfg.T, 2000000000L));
  dc.alpha = cfg.alpha;
  dc.eta = cfg.eta;
  dc.gamma = cfg.gamma;
  dc.seed = seed;
  dc.trace_stride = std::max(1, dc.T / 100);
  double rmax = 0.0;
  for (const auto& w : rep.target.w) rmax = std::max(rmax, w.norm());
  InitPolicy pol;
  pol.kind = InitPolicy::Kind::RandomBall;
  pol.radius = cfg.init_radius_factor * std::max(rmax, 1.0);
  pol.trials = cfg.init_trials;
  rep.result = node_wise_descent(obj, cfg.k, pol, dc);
  rep.matching = match_to_target(rep.result.hypothesis, rep.target);
  rep.theta_recovered = rep.matching.max_distance < cfg.tol;
  rep.recovered = rep.theta_recovered && rep.matching.max_weight_error < cfg.tol;
  rep.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

std::string to_json_line(const RecoveryReport& r) {
  nlohmann::json j;
  j["schema"] = kSchemaVersion;
  j["seed"] = r.seed;
  j["k"] = r.target.k();
  auto& w = j["target_w"] = nlohmann::json::array();
  for (const auto& v : r.target.w) w.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  j["target_b"] = std::vector<double>(r.target.b.data(), r.target.b.data() + r.target.b.size());
  const auto& h = r.result.hypothesis;
  auto& th = j["theta"] = nlohmann::json::array();
  for (const auto& v : h.theta) th.push_back(std::vector<double>(v.data(), v.data() + v.size()));
  j["a"] = std::vector<double>(h.a.data(), h.a.data() + h.a.size());
  j["perm"] = r.matching.perm;
  j["max_distance"] = r.matching.max_distance;
  j["max_weight_error"] = r.matching.max_weight_error;
  auto& it = j["iterations"] = nlohmann::json::array();
  auto& term = j["termination"] = nlohmann::json::array();
  for (const auto& rep : r.result.reports) {
    it.push_back(rep.iterations);
    term.push_back(to_string(rep.termination));
  }
  j["theta_recovered"] = r.theta_recovered;
  j["recovered"] = r.recovered;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

namespace {

Vec normal_vec(int d, double sd, Rng& rng) {
  Vec v(d);
  for (int m = 0; m < d; ++m) v(m) = sd * rng.normal();
  return v;
}

// points with pairwise distance >= min_dist
std::vector<Vec> spread_points(int n, int d, double sd, double min_dist, Rng& rng) {
  std::vector<Vec> pts;
  while (static_cast<int>(pts.size()) < n) {
    Vec p = normal_vec(d, sd, rng);
    bool ok = true;
    for (const auto& q : pts) ok = ok && (p - q).norm() >= min_dist;
    if (ok) pts.push_back(std::move(p));
  }
  return pts;
}

Vec uniform_vec(int n, Rng& rng) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(-1.0, 1.0);
  return v;
}

void earnshaw_suite(std::vector<LandscapeVerdict>& out, int configs, std::uint64_t seed) {
  struct Case {
    Potential pot;
    int d;
    double sd;
  };
  const Case cases[] = {{Potential::coulomb(3), 3, 2.0}, {Potential::coulomb(2), 2, 2.0},
                        {Potential::gaussian(1.0), 3, 0.7}};
  std::uint64_t stream = 100;
  for (const auto& c : cases) {
    Rng rng(seed, stream++);
    for (int n = 0; n < configs; ++n) {
      const auto pts = spread_points(6, c.d, c.sd, 0.5, rng);
      TargetNetwork t{{pts.begin() + 3, pts.end()}, uniform_vec(3, rng)};
      Hypothesis h{{pts.begin(), pts.begin() + 3}, uniform_vec(3, rng)};
      out.push_back(earnshaw_trace_check(c.pot, t, h, n % 3));
    }
  }
}

void eigstrict_suite(std::vector<LandscapeVerdict>& out, int configs, std::uint64_t seed) {
  Rng rng(seed, 200);
  for (int n = 0; n < configs; ++n) {
    const double lambda = n % 2 == 0 ? 1.0 : 4.0;
    const int cluster_size = 1 + n % 3;
    // 3 targets, the cluster point, and 3 - cluster_size other nodes
    const int others = 3 - cluster_size;
    const auto pts = spread_points(4 + others, 3, 1.5, 1.0, rng);
    TargetNetwork t{{pts.begin(), pts.begin() + 3}, uniform_vec(3, rng)};
    std::vector<Vec> theta(cluster_size, pts[3]);
    std::vector<int> cluster;
    for (int i = 0; i < cluster_size; ++i) cluster.push_back(i);
    for (int i = 0; i < others; ++i) theta.push_back(pts[4 + i]);
    out.push_back(eigstrict_laplacian_check(lambda, t, theta, cluster));
  }
}

void subharmonic_suite(std::vector<LandscapeVerdict>& out) {
  for (double c : {0.5, 1.0, 2.0}) {
    for (int d : {1, 2, 3}) {
      const double r0 = std::sqrt(d / c);
      LandscapeVerdict v;
      v.check = "subharmonic";
      v.digest = "c=" + std::to_string(c) + ",d=" + std::to_string(d);
      const double at0 = subharmonic_sign_check(c, d, 0.0);
      const double below = subharmonic_sign_check(c, d, r0 * (1 - 1e-6));
      const double at = subharmonic_sign_check(c, d, r0);
      const double above = subharmonic_sign_check(c, d, r0 * (1 + 1e-6));
      v.measured["at_origin"] = at0;
      v.measured["below"] = below;
      v.measured["at_threshold"] = at;
      v.measured["above"] = above;
      v.tol = 1e-12;
      v.pass = std::abs(at0 + c * d) <= 1e-12 * c * d && below < 0.0 && above > 0.0 && std::abs(at) <= 1e-12;
      out.push_back(v);
    }
  }
}

void sign_circle_suite(std::vector<LandscapeVerdict>& out, int configs, std::uint64_t seed) {
  Rng rng(seed, 300);
  for (int n = 0; n < configs; ++n) {
    TargetNetwork t;
    for (int j = 0; j < 3; ++j) {
      const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
      Vec w(2);
      w << std::cos(phi), std::sin(phi);
      t.w.push_back(w);
    }
    t.b = uniform_vec(3, rng);
    out.push_back(sign_circle_scan(t, 3600).verdict);
  }
}

void poly_suite(std::vector<LandscapeVerdict>& out, int configs, std::uint64_t seed) {
  Rng rng(seed, 400);
  const int d = 4;
  for (int n = 0; n < configs; ++n) {
    const int l = 3 + n % 3;
    // critical point on the (e_0, e_1) circle: b_i theta_i^(l-2) equal on the support
    const double phi = rng.uniform(0.2, std::numbers::pi / 2 - 0.2) + (rng.uniform() < 0.5 ? std::numbers::pi : 0.0);
    Vec theta = Vec::Zero(d);
    theta(0) = std::cos(phi);
    theta(1) = std::sin(phi);
    const double c = rng.uniform(0.3, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    Vec b = uniform_vec(d, rng);
    b(0) = c / std::pow(theta(0), l - 2);
    b(1) = c / std::pow(theta(1), l - 2);
    out.push_back(poly_orthonormal_check(l, b, theta));
  }
}

}  // namespace

const std::vector<std::string>& verify_check_names() {
  static const std::vector<std::string> names{"earnshaw", "eigstrict", "subharmonic", "sign-circle", "poly"};
  return names;
}

std::vector<LandscapeVerdict> verify_suite(const std::string& check, int configs, std::uint64_t seed) {
  if (configs < 1) throw Error(ErrorCode::InvalidArgument, "configs must be positive");
  std::vector<LandscapeVerdict> out;
  const bool all = check == "all";
  bool known = all;
  if (all || check == "earnshaw") known = true, earnshaw_suite(out, configs, seed);
  if (all || check == "eigstrict") known = true, eigstrict_suite(out, configs, seed);
  if (all || check == "subharmonic") known = true, subharmonic_suite(out);
  if (all || check == "sign-circle") known = true, sign_circle_suite(out, configs, seed);
  if (all || check == "poly") known = true, poly_suite(out, configs, seed);
  if (!known) throw Error(ErrorCode::InvalidArgument, "unknown check '" + check + "'");
  return out;
}

}  // namespace chargeflow
