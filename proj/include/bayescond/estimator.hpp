#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bayescond/operators.hpp"
#include "bayescond/parallel.hpp"
#include "bayescond/priors.hpp"
#include "bayescond/rng.hpp"
#include "bayescond/schedule.hpp"
#include "bayescond/score_source.hpp"

namespace bayescond {

// Per-timestep affine estimator xhat -> W_t xhat + b_t over a fixed grid of
// timesteps.  Fits are independent per timestep; no weight sharing.
struct LinearEstimator {
  std::vector<int> t_grid;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int grid_index(int t) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& xhat, int t) const;
};

// Mean squared error of an estimator against clean targets over a batch of
// (xhat_t, x0) pairs.
double bayesian_loss(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& est,
                     const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& batch);

// Per-timestep least-squares fit on samples drawn from a single-component
// Gaussian prior: draw x0, perturb to (x_t, y), whiten-combine, regress x0
// on xhat.  Normal equations get a 1e-10 ridge.
LinearEstimator fit_linear(const MixturePrior& prior, const LinearOperator& op,
                           const NoiseSchedule& s, double sigma0,
                           const std::vector<int>& t_grid, int n_samples,
                           std::uint64_t seed,
                           ExecPolicy policy = ExecPolicy::OpenMP);

// 16 timesteps of a schedule whose abar values are log-spaced in
// [abar_lo, abar_hi]; the default fit grid.
std::vector<int> default_t_grid(const NoiseSchedule& s, int n_points = 16,
                                double abar_lo = 0.01, double abar_hi = 0.99);

// Closed-form E[x0 ; xhat] for x0 ~ N(mu, Sigma):
//   mu + Sigma A_t^T (A_t Sigma A_t^T + noise_var I)^{-1} (xhat - A_t mu).
Eigen::VectorXd analytic_gaussian_posterior_mean(const Eigen::VectorXd& mu,
                                                 const Eigen::MatrixXd& sigma,
                                                 const LiftedOperator& L,
                                                 const Eigen::VectorXd& xhat);

// The same map as an explicit affine pair (W*, b*); what fit_linear should
// converge to.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> analytic_gaussian_posterior_map(
    const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, const LiftedOperator& L);

// Unrolled denoise + data-consistency iteration.  lambda_t = lambda /
// noise_var keeps the DC term's energy constant across timesteps.
struct UnrolledConfig {
  int n_it = 4;
  double lambda = 0.01;
  std::shared_ptr<const ScoreSource> denoiser;
};

Eigen::VectorXd unrolled_apply(const UnrolledConfig& cfg, const LiftedOperator& L,
                               const Eigen::VectorXd& xhat, int t);

class LinearEstimatorSource final : public ScoreSource {
 public:
  explicit LinearEstimatorSource(LinearEstimator est) : est_(std::move(est)) {}
  Eigen::VectorXd posterior_mean(const LiftedOperator& L,
                                 const Eigen::VectorXd& xhat) const override {
    return est_.apply(xhat, L.t);
  }
  const LinearEstimator& estimator() const { return est_; }

 private:
  LinearEstimator est_;
};

class UnrolledSource final : public ScoreSource {
 public:
  explicit UnrolledSource(UnrolledConfig cfg) : cfg_(std::move(cfg)) {}
  Eigen::VectorXd posterior_mean(const LiftedOperator& L,
                                 const Eigen::VectorXd& xhat) const override {
    return unrolled_apply(cfg_, L, xhat, L.t);
  }

 private:
  UnrolledConfig cfg_;
};

}  // namespace bayescond
