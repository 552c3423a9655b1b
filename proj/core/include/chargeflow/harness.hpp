#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "chargeflow/descent.hpp"
#include "chargeflow/landscape.hpp"
#include "chargeflow/loss.hpp"

namespace chargeflow {

inline constexpr int kSchemaVersion = 1;

// key = value lines, '#' starts a comment
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

struct ExperimentConfig {
  std::string experiment = "table";
  int d = 10;
  std::vector<int> depths{2, 3, 5};
  std::vector<int> widths{5, 10, 20, 40};
  int n_train = 10000;
  int n_test = 10000;
  long T = 200000;
  double alpha = 0.2;  // minibatch-mean gradient
  int batch = 32;
  std::string activation = "tanh";
  double scale = 1.0;       // variance of generated weights
  double init_scale = 0.04;  // variance of the hypothesis initialization
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int workers = 0;  // 0 = hardware concurrency
  std::string csv_path;
  std::string jsonl_path;

  // recovery
  int k = 2;
  std::string potential = "almost:eps=0.1,lambda=1,d=3";
  double min_separation = 10.0;
  double tol = 0.1;
  int init_trials = 1000000;
  double init_radius_factor = 3.0;
  double eta = 1e-6;
  double gamma = 1e-3;

  // table defaults, or the recovery defaults (d=3, variance 64, alpha 1.5e-3, T=1e6)
  static ExperimentConfig defaults(const std::string& experiment);

  // apply string overrides; unknown keys throw InvalidArgument
  void apply(const std::map<std::string, std::string>& kv);
  void validate() const;
};

// fully connected tanh network without biases; layers[l] maps layer l to l+1
struct LayeredNetwork {
  std::vector<Mat> layers;
  int depth() const { return static_cast<int>(layers.size()); }
  // columns of x are samples; returns a 1 x n row
  Mat forward(const Mat& x) const;
};

// depth counts weight layers: depth 2 is one hidden layer plus the output node
LayeredNetwork generate_target(int d, int depth, int width, double scale, std::uint64_t seed);

// depth-2 target for the theory-facing experiments: w_i ~ N(0, scale I) redrawn until pairwise
// separation >= min_separation, b_i uniform in [-1, 1]
TargetNetwork generate_theory_target(int d, int k, double scale, double min_separation, std::uint64_t seed);

// d ln d, the generation variance used by the convergence theorems
double default_theory_scale(int d);

struct ResultRow {
  int depth = 0;
  int width = 0;
  std::uint64_t seed = 0;
  double train_err = 0.0;
  double test_err = 0.0;
  double wall_ms = 0.0;
};

ResultRow sgd_train(const ExperimentConfig& cfg, int depth, int width, std::uint64_t seed);
// init overrides the random hypothesis initialization
ResultRow sgd_train(const ExperimentConfig& cfg, const LayeredNetwork& target, std::uint64_t seed,
                    const LayeredNetwork* init = nullptr);

// depth x width x seed grid in that order
std::vector<ResultRow> run_table(const ExperimentConfig& cfg);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const ResultRow& r);

struct RecoveryReport {
  std::uint64_t seed = 0;
  TargetNetwork target;
  NodeWiseResult result;
  Matching matching;
  bool theta_recovered = false;  // every node within tol of a distinct target
  bool recovered = false;        // theta and outer weights within tol
  double wall_ms = 0.0;
};

// landscape verdicts on generated configurations; check is one of
// earnshaw, eigstrict, subharmonic, sign-circle, poly, all
std::vector<LandscapeVerdict> verify_suite(const std::string& check, int configs, std::uint64_t seed);
const std::vector<std::string>& verify_check_names();

RecoveryReport recovery_experiment(const ExperimentConfig& cfg, const Potential& pot, std::uint64_t seed);
std::string to_json_line(const RecoveryReport& r);

}  // namespace chargeflow
