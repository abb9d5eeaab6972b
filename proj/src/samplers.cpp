#include "bayescond/samplers.hpp"

#include <cmath>
#include <string>

#include "bayescond/errors.hpp"

namespace bayescond {

namespace {

void check_chain_state(const Eigen::VectorXd& x, int t) {
  if (!x.allFinite())
    throw DiagnosticError("sampler: non-finite state at timestep " + std::to_string(t), t);
}

struct ModeInputs {
  const LinearOperator* op = nullptr;
  const Eigen::VectorXd* y = nullptr;
  std::shared_ptr<const ScoreSource> source;  // Bayesian mode
};

ModeInputs resolve_inputs(const SamplerConfig& cfg, const LinearOperator* op,
                          const Eigen::VectorXd* y) {
  ModeInputs in;
  in.op = op;
  in.y = y;
  if (cfg.mode != SampleMode::Unconditional) {
    if (!op || !y)
      throw ParameterError("sampler: conditioned modes require an operator and measurements");
    if (!(cfg.sigma0 > 0.0)) throw ParameterError("sampler: sigma0 must be positive");
    if (y->size() != op->m()) throw ShapeError("sampler: measurement length mismatch");
  }
  if (cfg.mode == SampleMode::Bayesian) {
    in.source = cfg.score_source;
    if (!in.source) {
      if (!cfg.exact_prior)
        throw ParameterError("sampler: Bayesian mode needs a score source or exact prior");
      in.source = std::make_shared<ExactPriorSource>(*cfg.exact_prior);
    }
  } else if (!cfg.exact_prior) {
    throw ParameterError("sampler: Unconditional/PostConditioned modes need the exact prior");
  }
  return in;
}

Eigen::Index signal_dim(const SamplerConfig& cfg, const LinearOperator* op) {
  if (op) return op->d();
  if (cfg.exact_prior) return cfg.exact_prior->d();
  throw ParameterError("sampler: cannot infer signal dimension");
}

void maybe_snapshot(const SamplerConfig& cfg, Trajectory& out, int t,
                    const Eigen::VectorXd& x) {
  for (int want : cfg.snapshot_timesteps)
    if (want == t) {
      out.states.emplace_back(t, x);
      return;
    }
}

}  // namespace

Eigen::VectorXd ancestral_step(const Eigen::VectorXd& x_t, const Eigen::VectorXd& score,
                               int t, const NoiseSchedule& s, Rng& rng,
                               bool final_step_noise) {
  if (t < 1) throw IndexError("ancestral_step: t >= 1 required");
  const double alpha = s.alpha(t);
  Eigen::VectorXd next = (x_t + (1.0 - alpha) * score) / std::sqrt(alpha);
  if (t > 1 || final_step_noise)
    next += std::sqrt(1.0 - alpha) * rng.normal_vector(x_t.size());
  return next;
}

Eigen::VectorXd bayesian_conditional_score(const ScoreSource& est, const LiftedOperator& L,
                                           const Eigen::VectorXd& x_t,
                                           const Eigen::VectorXd& y, int /*t*/) {
  const WhitenedState w = whiten_combine(L, x_t, y);
  const Eigen::VectorXd mean = est.posterior_mean(L, w.xhat);
  if (mean.size() != x_t.size())
    throw ShapeError("bayesian_conditional_score: estimator output dimension mismatch");
  // VP lifts carry abar < 1 and noise_var = 1 - abar; VE lifts carry
  // abar = 1 and noise_var = sigma_t^2.  Both reduce to Tweedie's form.
  return (std::sqrt(L.abar) * mean - x_t) / L.noise_var;
}

Trajectory sample(const SamplerConfig& cfg, const LinearOperator* op,
                  const Eigen::VectorXd* y) {
  const NoiseSchedule& s = cfg.schedule;
  if (s.kind != ScheduleKind::VP) throw ParameterError("sample: VP schedule required");
  const ModeInputs in = resolve_inputs(cfg, op, y);
  const Eigen::Index d = signal_dim(cfg, op);

  Rng rng(cfg.seed);
  Eigen::VectorXd x = rng.normal_vector(d);

  Trajectory out;
  for (int t = s.T; t >= 1; --t) {
    maybe_snapshot(cfg, out, t, x);
    Eigen::VectorXd score;
    switch (cfg.mode) {
      case SampleMode::Unconditional:
        score = unconditional_score(*cfg.exact_prior, s, x, t).score;
        break;
      case SampleMode::PostConditioned:
        score = post_conditioned_score(*cfg.exact_prior, s, *in.op, x, *in.y,
                                       cfg.sigma0, t)
                    .score;
        break;
      case SampleMode::Bayesian: {
        const LiftedOperator lifted = lift(*in.op, s, cfg.sigma0, t);
        score = bayesian_conditional_score(*in.source, lifted, x, *in.y, t);
        break;
      }
    }
    x = ancestral_step(x, score, t, s, rng, cfg.final_step_noise);
    check_chain_state(x, t - 1);
  }
  maybe_snapshot(cfg, out, 0, x);
  out.x0_estimate = std::move(x);
  return out;
}

Eigen::VectorXd ve_conditional_score(const ScoreSource& est, const LinearOperator& op,
                                     const Eigen::VectorXd& x_t, const Eigen::VectorXd& y,
                                     double sigma0, const NoiseSchedule& s, int t) {
  if (s.kind != ScheduleKind::VE)
    throw ParameterError("ve_conditional_score: VE schedule required");
  const LiftedOperator lifted = lift(op, s, sigma0, t);
  return bayesian_conditional_score(est, lifted, x_t, y, t);
}

Trajectory ve_sample(const SamplerConfig& cfg, const LinearOperator* op,
                     const Eigen::VectorXd* y) {
  const NoiseSchedule& s = cfg.schedule;
  if (s.kind != ScheduleKind::VE) throw ParameterError("ve_sample: VE schedule required");
  const ModeInputs in = resolve_inputs(cfg, op, y);
  const Eigen::Index d = signal_dim(cfg, op);

  Rng rng(cfg.seed);
  Eigen::VectorXd x = s.sigma(s.T) * rng.normal_vector(d);

  const auto score_at = [&](const Eigen::VectorXd& state, int t) -> Eigen::VectorXd {
    switch (cfg.mode) {
      case SampleMode::Unconditional:
        return unconditional_score(*cfg.exact_prior, s, state, t).score;
      case SampleMode::PostConditioned:
        return post_conditioned_score(*cfg.exact_prior, s, *in.op, state, *in.y,
                                      cfg.sigma0, t)
            .score;
      case SampleMode::Bayesian:
        return ve_conditional_score(*in.source, *in.op, state, *in.y, cfg.sigma0, s, t);
    }
    throw ParameterError("ve_sample: unknown mode");
  };

  Trajectory out;
  for (int t = s.T; t >= 1; --t) {
    maybe_snapshot(cfg, out, t, x);
    if (cfg.corrector) {
      for (int k = 0; k < cfg.corrector->n_steps; ++k) {
        const Eigen::VectorXd g = score_at(x, t);
        const Eigen::VectorXd z = rng.normal_vector(d);
        const double gn = g.norm(), zn = z.norm();
        if (gn == 0.0) break;
        const double eps = 2.0 * std::pow(cfg.corrector->snr * zn / gn, 2);
        x += eps * g + std::sqrt(2.0 * eps) * z;
      }
    }
    const Eigen::VectorXd score = score_at(x, t);
    const double var_step = s.sigma(t) * s.sigma(t) - s.sigma(t - 1) * s.sigma(t - 1);
    x += var_step * score;
    if (t > 1 || cfg.final_step_noise)
      x += std::sqrt(var_step) * rng.normal_vector(d);
    check_chain_state(x, t - 1);
  }
  maybe_snapshot(cfg, out, 0, x);
  out.x0_estimate = std::move(x);
  return out;
}

}  // namespace bayescond
