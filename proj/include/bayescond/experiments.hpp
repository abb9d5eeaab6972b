#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bayescond/parallel.hpp"
#include "bayescond/priors.hpp"

namespace bayescond {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::string experiment;  // fig1 | sample_accuracy | dc_check | train_linear | verify
  nlohmann::json params = nlohmann::json::object();
  std::string output_dir = ".";
  std::uint64_t seed = 0;
};

std::uint64_t config_hash(const ExperimentConfig& cfg);

// The discrete prior behind the score-field illustration: ten atoms drawn
// uniform on [-2, 2]^2 with a fixed internal seed of 42, plus [-5, -5] and
// [3, 3]; equal weights.
MixturePrior illustration_prior();

// Score-field heatmaps and the per-abar mean/max discrepancy table.
void run_fig1(const ExperimentConfig& cfg);

struct SampleAccuracyResult {
  double tv_bayesian = 0.0;
  double tv_post_conditioned = 0.0;
  Eigen::VectorXd hist_bayesian;
  Eigen::VectorXd hist_post_conditioned;
  Eigen::VectorXd exact;
};

SampleAccuracyResult run_sample_accuracy(const ExperimentConfig& cfg);

// Closed-form vs CG vs dense-oracle DC solves per operator variant; errors
// in dc_errors.csv, wallclock in the dc_timings.csv sidecar (timings are
// excluded from the bitwise-reproducibility contract).
void run_dc_check(const ExperimentConfig& cfg);

struct TrainLinearResult {
  std::vector<int> t_grid;
  std::vector<double> rel_frobenius_error;
  double max_rel_error = 0.0;
};

TrainLinearResult run_train_linear(const ExperimentConfig& cfg);

struct CheckResult {
  std::string name;
  bool pass = false;
  double max_error = 0.0;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// Runs the registered property checks and writes report.json.  params may
// set {"fault": "kt_sign"} to flip the sign of the measurement term in the
// whitened combination inside the optimal-combination check; the check must
// then fail (detection test).
VerifyReport run_verify(const ExperimentConfig& cfg);

// Dispatch by cfg.experiment; returns a process exit code (0 ok, 1 check
// failure, 2 config error, 3 I/O error).
int run_experiment(const ExperimentConfig& cfg);

}  // namespace bayescond
