#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "chargeflow/descent.hpp"
#include "chargeflow/dynamics.hpp"
#include "chargeflow/harmonic.hpp"
#include "chargeflow/harness.hpp"
#include "chargeflow/landscape.hpp"
#include "chargeflow/rng.hpp"
#include "json.hpp"

using namespace chargeflow;

namespace {

// flags registered as strings so only the ones given override the config file
struct FlagSet {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* app, const std::string& key, const std::string& help) {
    std::string flag = "--" + key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    opts[key] = app->add_option(flag, values[key], help);
  }
  std::map<std::string, std::string> given() const {
    std::map<std::string, std::string> out;
    for (const auto& [k, o] : opts) {
      if (o->count() > 0) out[k] = values.at(k);
    }
    return out;
  }
};

// output file or stdout
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error(ErrorCode::IoError, "cannot open " + path);
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }
  bool is_stdout() const { return !file_; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

ExperimentConfig build_config(const std::string& experiment, const std::string& config_path, const FlagSet& flags) {
  ExperimentConfig cfg = ExperimentConfig::defaults(experiment);
  if (!config_path.empty()) cfg.apply(read_config_file(config_path));
  cfg.apply(flags.given());
  cfg.experiment = experiment;
  cfg.validate();
  return cfg;
}

int run_table_cmd(const ExperimentConfig& cfg) {
  const auto rows = run_table(cfg);
  Sink out(cfg.csv_path);
  write_csv_header(out.os());
  for (const auto& r : rows) write_csv_row(out.os(), r);
  if (!out.is_stdout()) {
    std::cout << "wrote " << rows.size() << " rows to " << cfg.csv_path << "\n";
  }
  return 0;
}

int run_recovery_cmd(const ExperimentConfig& cfg) {
  const Potential pot = Potential::parse(cfg.potential);
  Sink out(cfg.jsonl_path);
  int ok = 0, theta_ok = 0;
  for (auto seed : cfg.seeds) {
    const RecoveryReport r = recovery_experiment(cfg, pot, seed);
    ok += r.recovered;
    theta_ok += r.theta_recovered;
    if (!out.is_stdout()) out.os() << to_json_line(r) << "\n";
    std::cout << to_json_line(r) << "\n";
  }
  std::cerr << "recovered " << ok << "/" << cfg.seeds.size() << " (theta only " << theta_ok << "/"
            << cfg.seeds.size() << ")\n";
  return 0;
}

struct DynamicsArgs {
  std::string potential = "gauss:c=1";
  int k = 3;
  int d = 3;
  double dt = 1e-3;
  int steps = 1000;
  int stride = 1;
  std::string scheme = "rk4";
  std::uint64_t seed = 0;
  std::string out;
};

int run_dynamics_cmd(const DynamicsArgs& a) {
  const Potential pot = Potential::parse(a.potential);
  const int d = pot.dim() > 0 ? pot.dim() : a.d;
  const bool sphere = pot.manifold() == Manifold::Sphere;
  Rng rng(a.seed, 500);
  auto point = [&] {
    Vec p(d);
    for (int m = 0; m < d; ++m) p(m) = rng.normal();
    if (sphere) p.normalize();
    return p;
  };
  TargetNetwork t;
  Hypothesis h;
  h.a.resize(a.k);
  t.b.resize(a.k);
  for (int i = 0; i < a.k; ++i) {
    h.theta.push_back(point());
    h.a(i) = rng.uniform(-1.0, 1.0);
  }
  for (int j = 0; j < a.k; ++j) {
    t.w.push_back(point());
    t.b(j) = rng.uniform(-1.0, 1.0);
  }
  const SelfTerms self = pot.finite_diagonal() ? SelfTerms::Include : SelfTerms::Exclude;
  const Objective obj(pot, t, Regularization::None, self);
  SimulationOptions opt;
  opt.dt = a.dt;
  opt.steps = a.steps;
  opt.stride = a.stride;
  if (a.scheme == "euler") opt.scheme = Scheme::Euler;
  else if (a.scheme == "rk4") opt.scheme = Scheme::Rk4;
  else throw Error(ErrorCode::InvalidArgument, "scheme must be euler or rk4");
  Sink out(a.out);
  int n = 0;
  simulate(electron_proton_system(obj, h), opt, [&](const TrajectoryRecord& r) {
    out.os() << to_json_line(r) << "\n";
    ++n;
  });
  if (!out.is_stdout()) std::cout << "wrote " << n << " records to " << a.out << "\n";
  return 0;
}

int run_verify_cmd(const std::string& check, int configs, std::uint64_t seed, const std::string& path) {
  const auto verdicts = verify_suite(check, configs, seed);
  Sink out(path);
  int failed = 0, unexpected = 0;
  for (const auto& v : verdicts) {
    out.os() << to_json_line(v) << "\n";
    if (v.expected_fail) {
      unexpected += v.pass;
    } else {
      failed += !v.pass;
    }
  }
  std::cerr << verdicts.size() << " verdicts, " << failed << " failed, " << unexpected
            << " expected-fail controls passed\n";
  return failed > 0 ? 1 : 0;
}

int run_potential_info(const std::string& id) {
  const Potential pot = Potential::parse(id);
  nlohmann::json j;
  j["schema"] = kSchemaVersion;
  j["id"] = pot.id();
  j["manifold"] = pot.manifold() == Manifold::Sphere ? "sphere" : "euclidean";
  j["translation_invariant"] = pot.translation_invariant();
  j["finite_diagonal"] = pot.finite_diagonal();
  j["realizable"] = pot.realizable();
  if (auto ev = pot.harmonic_eigenvalue()) j["harmonic_eigenvalue"] = *ev;
  if (pot.kind() == PotentialKind::AlmostHarmonic) {
    j["normalization"] = pot.table()->z;
    j["eps"] = pot.table()->eps;
  }
  auto& samples = j["samples"] = nlohmann::json::array();
  if (pot.manifold() == Manifold::Sphere) {
    for (double rho : {-1.0, -0.5, 0.0, 0.5, 1.0}) samples.push_back({{"rho", rho}, {"value", pot.profile(rho)[0]}});
  } else {
    for (double r : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0}) {
      if (r == 0.0 && !pot.finite_diagonal()) continue;
      samples.push_back({{"r", r}, {"value", pot.radial(r)[0]}});
    }
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chargeflow: potentials, descent and landscape experiments for depth-2 networks"};
  app.require_subcommand(1);
  std::string config_path;

  auto* table = app.add_subcommand("table", "depth x width SGD grid, CSV output");
  table->add_option("--config", config_path, "key = value config file");
  FlagSet table_flags;
  for (const char* k : {"d", "depths", "widths", "n_train", "n_test", "T", "alpha", "batch", "activation", "scale",
                        "init_scale", "seeds", "workers", "csv"}) {
    table_flags.add(table, k, k);
  }

  auto* recovery = app.add_subcommand("recovery", "node-wise descent recovery, JSON-lines output");
  recovery->add_option("--config", config_path, "key = value config file");
  FlagSet rec_flags;
  for (const char* k : {"d", "k", "potential", "scale", "min_separation", "tol", "T", "alpha", "eta", "gamma",
                        "init_trials", "init_radius_factor", "seeds", "jsonl"}) {
    rec_flags.add(recovery, k, k);
  }

  auto* dynamics = app.add_subcommand("dynamics", "electron-proton trajectory export");
  DynamicsArgs dyn;
  dynamics->add_option("--potential", dyn.potential, "potential id");
  dynamics->add_option("--k", dyn.k, "electrons (and protons)")->check(CLI::PositiveNumber);
  dynamics->add_option("--d", dyn.d, "dimension for kernels without a fixed one")->check(CLI::PositiveNumber);
  dynamics->add_option("--dt", dyn.dt, "time step")->check(CLI::PositiveNumber);
  dynamics->add_option("--steps", dyn.steps, "steps")->check(CLI::NonNegativeNumber);
  dynamics->add_option("--stride", dyn.stride, "record every n-th step")->check(CLI::PositiveNumber);
  dynamics->add_option("--scheme", dyn.scheme, "euler or rk4")->check(CLI::IsMember({"euler", "rk4"}));
  dynamics->add_option("--seed", dyn.seed, "seed");
  dynamics->add_option("--out", dyn.out, "JSON-lines path (default stdout)");

  auto* verify = app.add_subcommand("verify", "landscape checks, JSON-lines verdicts");
  std::string check = "all";
  int configs = 50;
  std::uint64_t vseed = 0;
  std::string vout;
  std::vector<std::string> checks = verify_check_names();
  checks.push_back("all");
  verify->add_option("--check", check, "check name")->check(CLI::IsMember(checks));
  verify->add_option("--configs", configs, "configurations per check")->check(CLI::PositiveNumber);
  verify->add_option("--seed", vseed, "seed");
  verify->add_option("--out", vout, "JSON-lines path (default stdout)");

  auto* info = app.add_subcommand("potential-info", "describe a potential");
  std::string pid;
  info->add_option("id", pid, "potential id, e.g. gauss:c=1")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*table) return run_table_cmd(build_config("table", config_path, table_flags));
    if (*recovery) return run_recovery_cmd(build_config("recovery", config_path, rec_flags));
    if (*dynamics) return run_dynamics_cmd(dyn);
    if (*verify) return run_verify_cmd(check, configs, vseed, vout);
    if (*info) return run_potential_info(pid);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidArgument ? 2 : 1;
  }
  return 2;
}
