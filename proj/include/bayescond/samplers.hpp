#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bayescond/operators.hpp"
#include "bayescond/priors.hpp"
#include "bayescond/rng.hpp"
#include "bayescond/schedule.hpp"
#include "bayescond/score_source.hpp"

namespace bayescond {

enum class SampleMode { Unconditional, PostConditioned, Bayesian };

struct LangevinCorrector {
  int n_steps = 1;
  double snr = 0.16;
};

struct SamplerConfig {
  NoiseSchedule schedule;
  SampleMode mode = SampleMode::Unconditional;
  // Bayesian mode draws E[x0; xhat] from here; when absent, exact_prior is
  // wrapped on the fly.  Unconditional / PostConditioned modes need the
  // exact prior for the unconditional score.
  std::shared_ptr<const ScoreSource> score_source;
  std::optional<MixturePrior> exact_prior;
  double sigma0 = 1.0;
  std::uint64_t seed = 0;
  bool final_step_noise = false;
  std::optional<LangevinCorrector> corrector;  // VE only
  std::vector<int> snapshot_timesteps;         // strictly decreasing
};

struct Trajectory {
  std::vector<std::pair<int, Eigen::VectorXd>> states;
  Eigen::VectorXd x0_estimate;
};

// One VP reverse step:
//   x_{t-1} = (x_t + (1 - alpha_t) score) / sqrt(alpha_t) + sqrt(1 - alpha_t) n.
// The noise term is dropped when t == 1 and final_step_noise is false.
Eigen::VectorXd ancestral_step(const Eigen::VectorXd& x_t, const Eigen::VectorXd& score,
                               int t, const NoiseSchedule& s, Rng& rng,
                               bool final_step_noise);

// Conditional score assembled from the whitened input:
//   (sqrt(abar_t) est(A_t^{-1}(sqrt(abar_t) x_t + kt^2 A^T y)) - x_t) / (1 - abar_t)
// and the VE analogue (est(xhat) - x_t) / sigma_t^2.
Eigen::VectorXd bayesian_conditional_score(const ScoreSource& est, const LiftedOperator& L,
                                           const Eigen::VectorXd& x_t,
                                           const Eigen::VectorXd& y, int t);

// Runs the full VP chain from x_T ~ N(0, I).  op/y may be null for
// Unconditional mode.
Trajectory sample(const SamplerConfig& cfg, const LinearOperator* op = nullptr,
                  const Eigen::VectorXd* y = nullptr);

// VE conditional score via the whitened combination with v_t = sigma_t/sigma0.
Eigen::VectorXd ve_conditional_score(const ScoreSource& est, const LinearOperator& op,
                                     const Eigen::VectorXd& x_t, const Eigen::VectorXd& y,
                                     double sigma0, const NoiseSchedule& s, int t);

// VE reverse-diffusion predictor from x_T ~ N(0, sigma_T^2 I):
//   x_{t-1} = x_t + (sigma_t^2 - sigma_{t-1}^2) score
//             + sqrt(sigma_t^2 - sigma_{t-1}^2) n,
// with optional Langevin corrector steps.
Trajectory ve_sample(const SamplerConfig& cfg, const LinearOperator* op = nullptr,
                     const Eigen::VectorXd* y = nullptr);

}  // namespace bayescond
