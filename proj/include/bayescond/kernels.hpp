#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bayescond/operators.hpp"
#include "bayescond/parallel.hpp"
#include "bayescond/priors.hpp"
#include "bayescond/samplers.hpp"
#include "bayescond/schedule.hpp"

namespace bayescond {

// Data-parallel hot loops.  Each kernel writes per-index slots (or combines
// fixed-size chunks in a fixed order), so the Serial and OpenMP policies
// produce bit-identical results; the serial path doubles as the reference
// implementation in tests and benchmarks.

// Norms of the three score fields over a 2D grid of x_t values (d = 2).
// Grid point (i, j) evaluates at x_t = [xs[j], ys[i]].
struct ScoreFieldResult {
  Eigen::MatrixXd uncond;
  Eigen::MatrixXd post;
  Eigen::MatrixXd bayes;
  Eigen::MatrixXd discrepancy;  // |post_score - bayes_score| per point
};

ScoreFieldResult score_field_norms(const MixturePrior& prior, const NoiseSchedule& s,
                                   const LinearOperator& op, const Eigen::VectorXd& y,
                                   double sigma0, int t, const Eigen::VectorXd& xs,
                                   const Eigen::VectorXd& ys,
                                   ExecPolicy policy = ExecPolicy::OpenMP);

// n_chains independent sampler runs; chain k runs with a seed derived from
// (cfg.seed, k).  Set ve for the VE predictor chain.
std::vector<Eigen::VectorXd> sample_ensemble(const SamplerConfig& cfg,
                                             const LinearOperator* op,
                                             const Eigen::VectorXd* y, int n_chains,
                                             bool ve = false,
                                             ExecPolicy policy = ExecPolicy::OpenMP);

// Second moment of the whitened residual xhat - A_t x0 over n_draws joint
// draws of (n_t, n0); should equal noise_var * I.  Chunked accumulation in
// fixed order keeps the result independent of thread count.
Eigen::MatrixXd whitening_residual_covariance(const LiftedOperator& L,
                                              const Eigen::VectorXd& x0, int n_draws,
                                              std::uint64_t seed,
                                              ExecPolicy policy = ExecPolicy::OpenMP);

// Histogram of nearest-atom assignments (ties to the lowest index).
Eigen::VectorXd nearest_atom_histogram(const std::vector<Eigen::VectorXd>& samples,
                                       const MixturePrior& prior);

// Half L1 distance between two discrete distributions.
double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

}  // namespace bayescond
