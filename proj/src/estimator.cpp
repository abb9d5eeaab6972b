#include "bayescond/estimator.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bayescond/errors.hpp"

namespace bayescond {

int LinearEstimator::grid_index(int t) const {
  const auto it = std::find(t_grid.begin(), t_grid.end(), t);
  if (it == t_grid.end())
    throw IndexError("linear estimator has no fit for timestep " + std::to_string(t));
  return static_cast<int>(it - t_grid.begin());
}

Eigen::VectorXd LinearEstimator::apply(const Eigen::VectorXd& xhat, int t) const {
  const int i = grid_index(t);
  const auto& w = weights[static_cast<std::size_t>(i)];
  if (xhat.size() != w.cols()) throw ShapeError("linear estimator: input dimension mismatch");
  return w * xhat + biases[static_cast<std::size_t>(i)];
}

double bayesian_loss(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& est,
                     const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& batch) {
  if (batch.empty()) throw ParameterError("bayesian_loss: empty batch");
  double acc = 0.0;
  for (const auto& [xhat, x0] : batch) {
    const Eigen::VectorXd pred = est(xhat);
    if (pred.size() != x0.size()) throw ShapeError("bayesian_loss: prediction dimension mismatch");
    acc += (pred - x0).squaredNorm();
  }
  return acc / static_cast<double>(batch.size());
}

std::vector<int> default_t_grid(const NoiseSchedule& s, int n_points,
                                double abar_lo, double abar_hi) {
  if (s.kind != ScheduleKind::VP) throw ParameterError("default_t_grid: VP schedule required");
  std::vector<int> grid;
  grid.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    const double frac = n_points == 1 ? 0.0 : static_cast<double>(i) / (n_points - 1);
    const double target = abar_hi * std::pow(abar_lo / abar_hi, frac);
    // abar is strictly decreasing in t; pick the closest timestep.
    int best_t = 1;
    double best_err = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= s.T; ++t) {
      const double err = std::abs(s.alpha_bar(t) - target);
      if (err < best_err) {
        best_err = err;
        best_t = t;
      }
    }
    if (grid.empty() || grid.back() != best_t) grid.push_back(best_t);
  }
  return grid;
}

LinearEstimator fit_linear(const MixturePrior& prior, const LinearOperator& op,
                           const NoiseSchedule& s, double sigma0,
                           const std::vector<int>& t_grid, int n_samples,
                           std::uint64_t seed, ExecPolicy policy) {
  if (prior.kind != PriorKind::Gaussian || prior.n_components() != 1)
    throw ParameterError("fit_linear: single-component Gaussian prior required");
  const Eigen::Index d = prior.d();
  if (n_samples < d + 1)
    throw ParameterError("fit_linear: n_samples must exceed the signal dimension");
  if (op.d() != d) throw ShapeError("fit_linear: operator/prior dimension mismatch");
  for (int t : t_grid)
    if (t < 1 || t > s.T) throw IndexError("fit_linear: grid timestep out of range");

  const Eigen::VectorXd& mu = prior.means.front();
  const Eigen::LLT<Eigen::MatrixXd> chol(prior.covs.front());

  LinearEstimator est;
  est.t_grid = t_grid;
  est.weights.resize(t_grid.size());
  est.biases.resize(t_grid.size());

  parallel_for(static_cast<std::int64_t>(t_grid.size()), policy, [&](std::int64_t gi) {
    const int t = t_grid[static_cast<std::size_t>(gi)];
    Rng rng = Rng::for_stream(seed, static_cast<std::uint64_t>(t));
    const LiftedOperator lifted = lift(op, s, sigma0, t);

    // Accumulate normal equations over [xhat; 1] in one pass.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d + 1, d + 1);
    Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(d + 1, d);
    Eigen::VectorXd aug(d + 1);
    aug[d] = 1.0;
    for (int k = 0; k < n_samples; ++k) {
      const Eigen::VectorXd x0 = mu + chol.matrixL() * rng.normal_vector(d);
      const DiffusionState xt = forward_perturb(s, x0, t, rng);
      const Eigen::VectorXd y =
          op.apply(x0) + sigma0 * rng.normal_vector(op.m());
      const WhitenedState w = whiten_combine(lifted, xt.x, y);
      aug.head(d) = w.xhat;
      gram.selfadjointView<Eigen::Lower>().rankUpdate(aug);
      cross += aug * x0.transpose();
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    gram.diagonal().array() += 1e-10;

    const Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success)
      throw ParameterError("fit_linear: normal equations not factorizable");
    const Eigen::MatrixXd sol = ldlt.solve(cross);  // (d+1) x d
    if (!sol.allFinite())
      throw ParameterError("fit_linear: rank-deficient fit beyond ridge rescue");
    est.weights[static_cast<std::size_t>(gi)] = sol.topRows(d).transpose();
    est.biases[static_cast<std::size_t>(gi)] = sol.row(d).transpose();
  });
  return est;
}

Eigen::VectorXd analytic_gaussian_posterior_mean(const Eigen::VectorXd& mu,
                                                 const Eigen::MatrixXd& sigma,
                                                 const LiftedOperator& L,
                                                 const Eigen::VectorXd& xhat) {
  const auto [w, b] = analytic_gaussian_posterior_map(mu, sigma, L);
  return w * xhat + b;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> analytic_gaussian_posterior_map(
    const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma, const LiftedOperator& L) {
  const Eigen::Index d = mu.size();
  if (sigma.rows() != d || sigma.cols() != d)
    throw ShapeError("analytic_gaussian_posterior_map: covariance shape mismatch");
  const Eigen::MatrixXd at = lifted_to_dense(L);
  Eigen::MatrixXd obs_cov = at * sigma * at.transpose();
  obs_cov.diagonal().array() += L.noise_var;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(obs_cov);
  if (ldlt.info() != Eigen::Success)
    throw ParameterError("analytic_gaussian_posterior_map: factorization failure");
  // W = Sigma A_t^T (A_t Sigma A_t^T + v I)^{-1}, computed by solving from
  // the right.
  const Eigen::MatrixXd w = ldlt.solve(at * sigma.transpose()).transpose();
  const Eigen::VectorXd b = mu - w * (at * mu);
  return {w, b};
}

Eigen::VectorXd unrolled_apply(const UnrolledConfig& cfg, const LiftedOperator& L,
                               const Eigen::VectorXd& xhat, int t) {
  if (cfg.n_it < 1) throw ParameterError("unrolled_apply: n_it >= 1 required");
  if (cfg.lambda < 0.0) throw ParameterError("unrolled_apply: lambda >= 0 required");
  if (!cfg.denoiser) throw ParameterError("unrolled_apply: denoiser required");
  (void)t;
  const double lambda_t = cfg.lambda / L.noise_var;
  Eigen::VectorXd x_dc = xhat;
  for (int i = 0; i < cfg.n_it; ++i) {
    const Eigen::VectorXd x_d = cfg.denoiser->posterior_mean(L, x_dc);
    x_dc = dc_solve(L, x_d, xhat, lambda_t);
  }
  return x_dc;
}

}  // namespace bayescond
