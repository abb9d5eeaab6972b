#pragma once

#include <vector>

#include <Eigen/Core>

#include "bayescond/operators.hpp"
#include "bayescond/schedule.hpp"

namespace bayescond {

enum class PriorKind { Discrete, Gaussian };

// Discrete atom mixture or Gaussian mixture q(x0) with exact posterior
// algebra.  Immutable after construction.
struct MixturePrior {
  PriorKind kind = PriorKind::Discrete;
  Eigen::VectorXd weights;                // N, nonnegative, sums to 1
  std::vector<Eigen::VectorXd> means;     // N atoms / component means
  std::vector<Eigen::MatrixXd> covs;      // Gaussian only: N SPD matrices

  Eigen::Index d() const { return means.empty() ? 0 : means.front().size(); }
  int n_components() const { return static_cast<int>(means.size()); }
};

MixturePrior make_discrete_prior(Eigen::VectorXd weights,
                                 std::vector<Eigen::VectorXd> atoms);
MixturePrior make_gaussian_prior(Eigen::VectorXd weights,
                                 std::vector<Eigen::VectorXd> means,
                                 std::vector<Eigen::MatrixXd> covs);

// Score evaluation bundle.  The Tweedie identity
//   score = (sqrt(abar_t) * posterior_mean - x_t) / (1 - abar_t)     (VP)
//   score = (posterior_mean - x_t) / sigma_t^2                       (VE)
// holds exactly by construction.
struct ScoreEval {
  Eigen::VectorXd score;
  Eigen::VectorXd posterior_mean;  // E[x0 ; observations]
  double log_evidence = 0.0;       // log mixture normalizer (diagnostics)
};

ScoreEval unconditional_score(const MixturePrior& p, const NoiseSchedule& s,
                              const Eigen::VectorXd& x_t, int t);

// Exact Bayesian conditioned score for q(x_t ; y) with y = A x0 + sigma0 n.
ScoreEval bayesian_score(const MixturePrior& p, const NoiseSchedule& s,
                         const LinearOperator& op, const Eigen::VectorXd& x_t,
                         const Eigen::VectorXd& y, double sigma0, int t);

// Baseline: unconditional score plus the affine data-fidelity correction
// -(1/sigma0^2) A^T (A x_t - y); posterior_mean is back-solved via Tweedie.
ScoreEval post_conditioned_score(const MixturePrior& p, const NoiseSchedule& s,
                                 const LinearOperator& op, const Eigen::VectorXd& x_t,
                                 const Eigen::VectorXd& y, double sigma0, int t);

// E[x0 ; x_t, y] with both likelihood factors.
Eigen::VectorXd posterior_mean_joint(const MixturePrior& p, const NoiseSchedule& s,
                                     const LinearOperator& op, const Eigen::VectorXd& x_t,
                                     const Eigen::VectorXd& y, double sigma0, int t);

// E[x0 ; xhat] under the whitened likelihood N(A_t x0, noise_var I).
Eigen::VectorXd posterior_mean_whitened(const MixturePrior& p, const LiftedOperator& L,
                                        const Eigen::VectorXd& xhat, int t);

// Exact posterior atom weights for a discrete prior given y only.
Eigen::VectorXd exact_posterior(const MixturePrior& p, const LinearOperator& op,
                                const Eigen::VectorXd& y, double sigma0);

// Inverse of the Tweedie identity: recovers E[x0; .] from a score value.
Eigen::VectorXd tweedie_mean_from_score(const Eigen::VectorXd& score,
                                        const Eigen::VectorXd& x_t,
                                        const NoiseSchedule& s, int t);

}  // namespace bayescond
