#include "bayescond/priors.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bayescond/errors.hpp"

namespace bayescond {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw ParameterError(std::string(what) + ": non-finite input");
}

// One Gaussian observation factor: obs = map(x0) + N(0, var I).
struct Factor {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> map;  // atom path
  std::function<Eigen::MatrixXd()> dense_map;                  // component path
  Eigen::VectorXd obs;
  double var = 1.0;
};

struct MixtureEval {
  Eigen::VectorXd posterior_mean;
  double log_evidence = 0.0;
};

// Responsibilities in log space throughout; naive exponentials underflow in
// the tight-likelihood regimes this library is exercised in.
MixtureEval finish(const MixturePrior& p, Eigen::VectorXd log_resp,
                   const std::vector<Eigen::VectorXd>& comp_means) {
  const double mx = log_resp.maxCoeff();
  double z = 0.0;
  for (Eigen::Index i = 0; i < log_resp.size(); ++i)
    z += std::exp(log_resp[i] - mx);
  const double log_z = mx + std::log(z);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p.d());
  for (Eigen::Index i = 0; i < log_resp.size(); ++i)
    mean += std::exp(log_resp[i] - log_z) * comp_means[static_cast<std::size_t>(i)];
  return MixtureEval{std::move(mean), log_z};
}

MixtureEval eval_discrete(const MixturePrior& p, const std::vector<Factor>& factors) {
  const int n = p.n_components();
  Eigen::VectorXd lr(n);
  for (int i = 0; i < n; ++i) {
    double acc = std::log(p.weights[i]);
    for (const Factor& f : factors) {
      const Eigen::VectorXd mu = f.map(p.means[static_cast<std::size_t>(i)]);
      const double sq = (f.obs - mu).squaredNorm();
      acc += -0.5 * static_cast<double>(f.obs.size()) * (kLog2Pi + std::log(f.var)) -
             sq / (2.0 * f.var);
    }
    lr[i] = acc;
  }
  return finish(p, std::move(lr), p.means);
}

MixtureEval eval_gaussian(const MixturePrior& p, const std::vector<Factor>& factors) {
  Eigen::Index obs_dim = 0;
  for (const Factor& f : factors) obs_dim += f.obs.size();
  const Eigen::Index d = p.d();

  Eigen::MatrixXd b(obs_dim, d);
  Eigen::VectorXd z(obs_dim), c_diag(obs_dim);
  Eigen::Index row = 0;
  for (const Factor& f : factors) {
    const Eigen::MatrixXd bf = f.dense_map();
    b.middleRows(row, bf.rows()) = bf;
    z.segment(row, bf.rows()) = f.obs;
    c_diag.segment(row, bf.rows()).setConstant(f.var);
    row += bf.rows();
  }

  const int n = p.n_components();
  Eigen::VectorXd lr(n);
  std::vector<Eigen::VectorXd> comp_means(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd& mu = p.means[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd& sig = p.covs[static_cast<std::size_t>(i)];
    Eigen::MatrixXd s = b * sig * b.transpose();
    s.diagonal() += c_diag;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    if (ldlt.info() != Eigen::Success)
      throw ParameterError("gaussian mixture: observation covariance not factorizable");
    const Eigen::VectorXd resid = z - b * mu;
    const Eigen::VectorXd s_inv_resid = ldlt.solve(resid);
    comp_means[static_cast<std::size_t>(i)] =
        mu + sig * (b.transpose() * s_inv_resid);
    const double log_det = ldlt.vectorD().array().log().sum();
    lr[i] = std::log(p.weights[i]) -
            0.5 * (resid.dot(s_inv_resid) + log_det +
                   static_cast<double>(obs_dim) * kLog2Pi);
  }
  return finish(p, std::move(lr), comp_means);
}

MixtureEval eval_mixture(const MixturePrior& p, const std::vector<Factor>& factors) {
  return p.kind == PriorKind::Discrete ? eval_discrete(p, factors)
                                       : eval_gaussian(p, factors);
}

// (scale, variance) of the x_t perturbation channel.
std::pair<double, double> channel(const NoiseSchedule& s, int t) {
  if (t < 1) throw IndexError("score evaluation requires t >= 1");
  if (s.kind == ScheduleKind::VP) {
    const double abar = s.alpha_bar(t);
    return {std::sqrt(abar), 1.0 - abar};
  }
  const double sig = s.sigma(t);
  return {1.0, sig * sig};
}

Factor xt_factor(const NoiseSchedule& s, const Eigen::VectorXd& x_t, int t) {
  const auto [a, v] = channel(s, t);
  const Eigen::Index d = x_t.size();
  Factor f;
  f.map = [a](const Eigen::VectorXd& x0) { return (a * x0).eval(); };
  f.dense_map = [a, d]() { return (a * Eigen::MatrixXd::Identity(d, d)).eval(); };
  f.obs = x_t;
  f.var = v;
  return f;
}

Factor y_factor(const LinearOperator& op, const Eigen::VectorXd& y, double sigma0) {
  if (!(sigma0 > 0.0)) throw ParameterError("sigma0 must be positive");
  Factor f;
  f.map = [&op](const Eigen::VectorXd& x0) { return op.apply(x0); };
  f.dense_map = [&op]() { return op.to_dense(); };
  f.obs = y;
  f.var = sigma0 * sigma0;
  return f;
}

Factor whitened_factor(const LiftedOperator& L, const Eigen::VectorXd& xhat) {
  Factor f;
  f.map = [&L](const Eigen::VectorXd& x0) { return apply_At(L, x0); };
  f.dense_map = [&L]() { return lifted_to_dense(L); };
  f.obs = xhat;
  f.var = L.noise_var;
  return f;
}

ScoreEval assemble(const NoiseSchedule& s, const Eigen::VectorXd& x_t, int t,
                   MixtureEval ev) {
  const auto [a, v] = channel(s, t);
  ScoreEval out;
  out.score = (a * ev.posterior_mean - x_t) / v;
  out.posterior_mean = std::move(ev.posterior_mean);
  out.log_evidence = ev.log_evidence;
  return out;
}

}  // namespace

MixturePrior make_discrete_prior(Eigen::VectorXd weights,
                                 std::vector<Eigen::VectorXd> atoms) {
  MixturePrior p;
  p.kind = PriorKind::Discrete;
  p.weights = std::move(weights);
  p.means = std::move(atoms);
  if (p.means.empty() || p.weights.size() != p.n_components())
    throw ParameterError("discrete prior: weights and atoms must match and be nonempty");
  if ((p.weights.array() < 0.0).any())
    throw ParameterError("discrete prior: weights must be nonnegative");
  if (std::abs(p.weights.sum() - 1.0) > 1e-12)
    throw ParameterError("discrete prior: weights must sum to 1");
  for (const auto& mu : p.means)
    if (mu.size() != p.d()) throw ShapeError("discrete prior: atom dimensions differ");
  return p;
}

MixturePrior make_gaussian_prior(Eigen::VectorXd weights,
                                 std::vector<Eigen::VectorXd> means,
                                 std::vector<Eigen::MatrixXd> covs) {
  MixturePrior p;
  p.kind = PriorKind::Gaussian;
  p.weights = std::move(weights);
  p.means = std::move(means);
  p.covs = std::move(covs);
  if (p.means.empty() || p.weights.size() != p.n_components() ||
      p.covs.size() != p.means.size())
    throw ParameterError("gaussian prior: weights/means/covs must match and be nonempty");
  if ((p.weights.array() < 0.0).any())
    throw ParameterError("gaussian prior: weights must be nonnegative");
  if (std::abs(p.weights.sum() - 1.0) > 1e-12)
    throw ParameterError("gaussian prior: weights must sum to 1");
  for (std::size_t i = 0; i < p.covs.size(); ++i) {
    const auto& c = p.covs[i];
    if (c.rows() != p.d() || c.cols() != p.d())
      throw ShapeError("gaussian prior: covariance shape mismatch");
    if (!c.isApprox(c.transpose(), 1e-12))
      throw ParameterError("gaussian prior: covariance not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success)
      throw ParameterError("gaussian prior: covariance not positive definite");
  }
  return p;
}

ScoreEval unconditional_score(const MixturePrior& p, const NoiseSchedule& s,
                              const Eigen::VectorXd& x_t, int t) {
  check_finite(x_t, "unconditional_score");
  return assemble(s, x_t, t, eval_mixture(p, {xt_factor(s, x_t, t)}));
}

ScoreEval bayesian_score(const MixturePrior& p, const NoiseSchedule& s,
                         const LinearOperator& op, const Eigen::VectorXd& x_t,
                         const Eigen::VectorXd& y, double sigma0, int t) {
  check_finite(x_t, "bayesian_score");
  check_finite(y, "bayesian_score");
  return assemble(s, x_t, t,
                  eval_mixture(p, {xt_factor(s, x_t, t), y_factor(op, y, sigma0)}));
}

ScoreEval post_conditioned_score(const MixturePrior& p, const NoiseSchedule& s,
                                 const LinearOperator& op, const Eigen::VectorXd& x_t,
                                 const Eigen::VectorXd& y, double sigma0, int t) {
  if (!(sigma0 > 0.0)) throw ParameterError("sigma0 must be positive");
  ScoreEval ev = unconditional_score(p, s, x_t, t);
  ev.score -= op.apply_adjoint(op.apply(x_t) - y) / (sigma0 * sigma0);
  ev.posterior_mean = tweedie_mean_from_score(ev.score, x_t, s, t);
  return ev;
}

Eigen::VectorXd posterior_mean_joint(const MixturePrior& p, const NoiseSchedule& s,
                                     const LinearOperator& op, const Eigen::VectorXd& x_t,
                                     const Eigen::VectorXd& y, double sigma0, int t) {
  return bayesian_score(p, s, op, x_t, y, sigma0, t).posterior_mean;
}

Eigen::VectorXd posterior_mean_whitened(const MixturePrior& p, const LiftedOperator& L,
                                        const Eigen::VectorXd& xhat, int /*t*/) {
  check_finite(xhat, "posterior_mean_whitened");
  if (xhat.size() != p.d()) throw ShapeError("posterior_mean_whitened: dimension mismatch");
  return eval_mixture(p, {whitened_factor(L, xhat)}).posterior_mean;
}

Eigen::VectorXd exact_posterior(const MixturePrior& p, const LinearOperator& op,
                                const Eigen::VectorXd& y, double sigma0) {
  if (p.kind != PriorKind::Discrete)
    throw ParameterError("exact_posterior: discrete prior required");
  if (!(sigma0 > 0.0)) throw ParameterError("sigma0 must be positive");
  const int n = p.n_components();
  Eigen::VectorXd lr(n);
  for (int i = 0; i < n; ++i) {
    const double sq = (y - op.apply(p.means[static_cast<std::size_t>(i)])).squaredNorm();
    lr[i] = std::log(p.weights[i]) - sq / (2.0 * sigma0 * sigma0);
  }
  const double mx = lr.maxCoeff();
  Eigen::VectorXd w = (lr.array() - mx).exp();
  return w / w.sum();
}

Eigen::VectorXd tweedie_mean_from_score(const Eigen::VectorXd& score,
                                        const Eigen::VectorXd& x_t,
                                        const NoiseSchedule& s, int t) {
  const auto [a, v] = channel(s, t);
  return (x_t + v * score) / a;
}

}  // namespace bayescond
