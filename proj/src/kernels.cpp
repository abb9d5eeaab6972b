#include "bayescond/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "bayescond/errors.hpp"

namespace bayescond {

ScoreFieldResult score_field_norms(const MixturePrior& prior, const NoiseSchedule& s,
                                   const LinearOperator& op, const Eigen::VectorXd& y,
                                   double sigma0, int t, const Eigen::VectorXd& xs,
                                   const Eigen::VectorXd& ys, ExecPolicy policy) {
  if (prior.d() != 2) throw ShapeError("score_field_norms: d = 2 required");
  const Eigen::Index nx = xs.size(), ny = ys.size();
  ScoreFieldResult out;
  out.uncond.resize(ny, nx);
  out.post.resize(ny, nx);
  out.bayes.resize(ny, nx);
  out.discrepancy.resize(ny, nx);

  parallel_for(ny * nx, policy, [&](std::int64_t idx) {
    const Eigen::Index i = idx / nx, j = idx % nx;
    Eigen::VectorXd x_t(2);
    x_t << xs[j], ys[i];
    const ScoreEval u = unconditional_score(prior, s, x_t, t);
    const ScoreEval pc = post_conditioned_score(prior, s, op, x_t, y, sigma0, t);
    const ScoreEval b = bayesian_score(prior, s, op, x_t, y, sigma0, t);
    out.uncond(i, j) = u.score.norm();
    out.post(i, j) = pc.score.norm();
    out.bayes(i, j) = b.score.norm();
    out.discrepancy(i, j) = (pc.score - b.score).norm();
  });
  return out;
}

std::vector<Eigen::VectorXd> sample_ensemble(const SamplerConfig& cfg,
                                             const LinearOperator* op,
                                             const Eigen::VectorXd* y, int n_chains,
                                             bool ve, ExecPolicy policy) {
  std::vector<Eigen::VectorXd> results(static_cast<std::size_t>(n_chains));
  parallel_for(n_chains, policy, [&](std::int64_t k) {
    SamplerConfig chain_cfg = cfg;
    chain_cfg.seed =
        Rng::splitmix64(cfg.seed ^ Rng::splitmix64(static_cast<std::uint64_t>(k)));
    const Trajectory traj = ve ? ve_sample(chain_cfg, op, y) : sample(chain_cfg, op, y);
    results[static_cast<std::size_t>(k)] = traj.x0_estimate;
  });
  return results;
}

Eigen::MatrixXd whitening_residual_covariance(const LiftedOperator& L,
                                              const Eigen::VectorXd& x0, int n_draws,
                                              std::uint64_t seed, ExecPolicy policy) {
  const Eigen::Index d = L.base.d();
  if (x0.size() != d) throw ShapeError("whitening_residual_covariance: x0 dimension mismatch");
  if (!(L.kt > 0.0))
    throw ParameterError("whitening_residual_covariance: kt must be positive");
  const double sigma0 = std::sqrt(L.noise_var) / L.kt;
  const double sqrt_abar = std::sqrt(L.abar);
  const double sqrt_var = std::sqrt(L.noise_var);
  const Eigen::VectorXd at_x0 = apply_At(L, x0);

  constexpr int kChunk = 1024;
  const int n_chunks = (n_draws + kChunk - 1) / kChunk;
  std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(n_chunks));

  parallel_for(n_chunks, policy, [&](std::int64_t c) {
    Rng rng = Rng::for_stream(seed, static_cast<std::uint64_t>(c));
    const int lo = static_cast<int>(c) * kChunk;
    const int hi = std::min(n_draws, lo + kChunk);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
    for (int k = lo; k < hi; ++k) {
      const Eigen::VectorXd x_t =
          sqrt_abar * x0 + sqrt_var * rng.normal_vector(d);
      const Eigen::VectorXd y =
          L.base.apply(x0) + sigma0 * rng.normal_vector(L.base.m());
      const Eigen::VectorXd resid = whiten_combine(L, x_t, y).xhat - at_x0;
      acc.selfadjointView<Eigen::Lower>().rankUpdate(resid);
    }
    partial[static_cast<std::size_t>(c)] = acc;
  });

  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
  for (const auto& acc : partial) total += acc;
  total = total.selfadjointView<Eigen::Lower>();
  return total / static_cast<double>(n_draws);
}

Eigen::VectorXd nearest_atom_histogram(const std::vector<Eigen::VectorXd>& samples,
                                       const MixturePrior& prior) {
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(prior.n_components());
  for (const auto& x : samples) {
    int best = 0;
    double best_d = (x - prior.means[0]).squaredNorm();
    for (int i = 1; i < prior.n_components(); ++i) {
      const double di = (x - prior.means[static_cast<std::size_t>(i)]).squaredNorm();
      if (di < best_d) {
        best_d = di;
        best = i;
      }
    }
    hist[best] += 1.0;
  }
  if (!samples.empty()) hist /= static_cast<double>(samples.size());
  return hist;
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ShapeError("total_variation: length mismatch");
  return 0.5 * (p - q).cwiseAbs().sum();
}

}  // namespace bayescond
