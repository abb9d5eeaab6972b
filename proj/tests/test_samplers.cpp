#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "bayescond/errors.hpp"
#include "bayescond/estimator.hpp"
#include "bayescond/experiments.hpp"
#include "bayescond/kernels.hpp"
#include "bayescond/samplers.hpp"
#include "oracles.hpp"

using namespace bayescond;

namespace {

LinearOperator masking_row() {
  Eigen::MatrixXd a(1, 2);
  a << 1.0, 0.0;
  return LinearOperator::dense(std::move(a));
}

class ConstantSource final : public ScoreSource {
 public:
  explicit ConstantSource(Eigen::VectorXd v) : v_(std::move(v)) {}
  Eigen::VectorXd posterior_mean(const LiftedOperator&, const Eigen::VectorXd&) const override {
    return v_;
  }

 private:
  Eigen::VectorXd v_;
};

// With y = 0 this undoes the whitening exactly, so the assembled
// conditional score is identically zero.
class ScaleBackSource final : public ScoreSource {
 public:
  Eigen::VectorXd posterior_mean(const LiftedOperator& L,
                                 const Eigen::VectorXd& xhat) const override {
    return apply_At(L, xhat) / std::sqrt(L.abar);
  }
};

}  // namespace

TEST_CASE("ancestral step") {
  Rng rng(1);
  const Eigen::VectorXd x = rng.normal_vector(3);

  SUBCASE("zero score with suppressed noise rescales") {
    const NoiseSchedule s = make_vp_from_alphas({0.81});
    Rng step_rng(2);
    const Eigen::VectorXd next =
        ancestral_step(x, Eigen::VectorXd::Zero(3), 1, s, step_rng, false);
    CHECK((next - x / 0.9).norm() < 1e-15);
  }

  SUBCASE("alpha = 1 is the identity") {
    NoiseSchedule s;
    s.kind = ScheduleKind::VP;
    s.T = 1;
    s.alphas = {1.0};
    s.alpha_bars = {1.0};
    Rng step_rng(3);
    const Eigen::VectorXd next =
        ancestral_step(x, Eigen::VectorXd::Zero(3), 1, s, step_rng, true);
    CHECK((next - x).norm() == 0.0);
  }

  SUBCASE("fixed seed gives a deterministic step") {
    const NoiseSchedule s = make_vp_from_alphas({0.9, 0.9});
    Rng a(5), b(5);
    const Eigen::VectorXd score = rng.normal_vector(3);
    CHECK(ancestral_step(x, score, 2, s, a, false) ==
          ancestral_step(x, score, 2, s, b, false));
  }
}

TEST_CASE("bayesian conditional score assembly") {
  Rng rng(2);
  const MixturePrior prior = illustration_prior();
  const LinearOperator op = masking_row();
  const NoiseSchedule s = make_vp_from_alpha_bars({0.35});
  const double sigma0 = 0.4;
  Eigen::VectorXd y(1);
  y << -1.0;
  const Eigen::VectorXd x_t = rng.normal_vector(2);
  const LiftedOperator lifted = lift(op, s, sigma0, 1);

  SUBCASE("exact source reproduces the exact conditional score") {
    const ExactPriorSource src(prior);
    const Eigen::VectorXd got = bayesian_conditional_score(src, lifted, x_t, y, 1);
    const Eigen::VectorXd want = bayesian_score(prior, s, op, x_t, y, sigma0, 1).score;
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("constant source gives the single-atom pull") {
    Eigen::VectorXd mu(2);
    mu << 2.0, -1.0;
    const ConstantSource src(mu);
    const Eigen::VectorXd got = bayesian_conditional_score(src, lifted, x_t, y, 1);
    const Eigen::VectorXd want = (std::sqrt(0.35) * mu - x_t) / 0.65;
    CHECK((got - want).norm() < 1e-14);
  }

  SUBCASE("uninformative measurement reduces to the unconditional assembly") {
    const LiftedOperator weak = lift(op, s, 1e9, 1);
    const ExactPriorSource src(prior);
    const Eigen::VectorXd got = bayesian_conditional_score(src, weak, x_t, y, 1);
    const Eigen::VectorXd want = unconditional_score(prior, s, x_t, 1).score;
    CHECK((got - want).norm() < 1e-8 * (1.0 + want.norm()));
  }
}

TEST_CASE("single-atom prior sampling lands on the atom") {
  Eigen::VectorXd mu(2);
  mu << 1.0, -2.0;
  const MixturePrior prior = make_discrete_prior(Eigen::VectorXd::Ones(1), {mu});
  SamplerConfig cfg;
  cfg.schedule = make_linear_vp(50, 1e-3, 0.1);
  cfg.mode = SampleMode::Unconditional;
  cfg.exact_prior = prior;
  const double band = 3.0 * std::sqrt(1.0 - cfg.schedule.alpha_bar(1));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.seed = seed;
    const Trajectory traj = sample(cfg);
    CHECK((traj.x0_estimate - mu).norm() <= band);
  }
}

TEST_CASE("sampling is bitwise deterministic under a fixed seed") {
  SamplerConfig cfg;
  cfg.schedule = make_linear_vp(200, 1e-4, 0.02);
  cfg.mode = SampleMode::Bayesian;
  cfg.exact_prior = illustration_prior();
  cfg.sigma0 = 0.1;
  cfg.seed = 99;
  cfg.snapshot_timesteps = {150, 50};
  const LinearOperator op = masking_row();
  Eigen::VectorXd y(1);
  y << -4.0;
  const Trajectory a = sample(cfg, &op, &y);
  const Trajectory b = sample(cfg, &op, &y);
  CHECK(a.x0_estimate == b.x0_estimate);
  REQUIRE(a.states.size() == 2);
  CHECK(a.states[0].first == 150);
  CHECK(a.states[1].first == 50);
  CHECK(a.states[0].second == b.states[0].second);
}

TEST_CASE("bayesian and unconditional chains coincide when sigma0 is huge") {
  SamplerConfig cfg;
  cfg.schedule = make_linear_vp(100, 1e-4, 0.02);
  cfg.exact_prior = illustration_prior();
  cfg.sigma0 = 1e8;
  cfg.seed = 4;
  const LinearOperator op = masking_row();
  Eigen::VectorXd y(1);
  y << -4.0;

  cfg.mode = SampleMode::Bayesian;
  const Trajectory bayes = sample(cfg, &op, &y);
  cfg.mode = SampleMode::Unconditional;
  const Trajectory uncond = sample(cfg);
  CHECK((bayes.x0_estimate - uncond.x0_estimate).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("posterior-consistent sampling beats post-conditioning (reduced run)") {
  const MixturePrior prior = illustration_prior();
  const LinearOperator op = masking_row();
  Eigen::VectorXd y(1);
  y << -4.0;

  SamplerConfig cfg;
  cfg.schedule = make_linear_vp(300, 1e-4, 0.02);
  cfg.exact_prior = prior;
  cfg.sigma0 = 0.1;
  cfg.seed = 17;

  cfg.mode = SampleMode::Bayesian;
  const auto bayes = sample_ensemble(cfg, &op, &y, 300);
  cfg.mode = SampleMode::PostConditioned;
  const auto post = sample_ensemble(cfg, &op, &y, 300);

  const Eigen::VectorXd exact = exact_posterior(prior, op, y, 0.1);
  const double tv_b = total_variation(nearest_atom_histogram(bayes, prior), exact);
  const double tv_p = total_variation(nearest_atom_histogram(post, prior), exact);
  CHECK(tv_b < 0.2);
  CHECK(tv_b < tv_p);
}

TEST_CASE("conditioned modes demand measurements") {
  SamplerConfig cfg;
  cfg.schedule = make_linear_vp(10, 1e-4, 0.02);
  cfg.mode = SampleMode::Bayesian;
  cfg.exact_prior = illustration_prior();
  CHECK_THROWS_AS(sample(cfg), ParameterError);
}

TEST_CASE("ve conditional score") {
  Rng rng(6);
  const NoiseSchedule ve = make_ve_from_sigmas({0.9});

  SUBCASE("uninformative measurement gives the unconditional VE score") {
    const MixturePrior prior = illustration_prior();
    const LinearOperator op = LinearOperator::identity(2);
    const Eigen::VectorXd x_t = rng.normal_vector(2);
    const Eigen::VectorXd y = rng.normal_vector(2);
    const ExactPriorSource src(prior);
    const Eigen::VectorXd got = ve_conditional_score(src, op, x_t, y, 1e9, ve, 1);
    const Eigen::VectorXd want = unconditional_score(prior, ve, x_t, 1).score;
    CHECK((got - want).norm() < 1e-8 * (1.0 + want.norm()));
  }

  SUBCASE("identity operator matches the single-Gaussian closed form") {
    // x0 ~ N(mu, I), xhat = sqrt(1 + v^2) x0 + sigma_t n:
    // E[x0; xhat] = mu + a (a^2 + sigma_t^2)^{-1} (xhat - a mu), a = sqrt(1 + v^2).
    Eigen::VectorXd mu(2);
    mu << 0.4, -1.2;
    const MixturePrior prior = make_gaussian_prior(
        Eigen::VectorXd::Ones(1), {mu}, {Eigen::MatrixXd::Identity(2, 2)});
    const LinearOperator op = LinearOperator::identity(2);
    const double sigma0 = 0.5;
    const Eigen::VectorXd x_t = rng.normal_vector(2);
    const Eigen::VectorXd y = rng.normal_vector(2);

    const ExactPriorSource src(prior);
    const Eigen::VectorXd got = ve_conditional_score(src, op, x_t, y, sigma0, ve, 1);

    const double vt = 0.9 / sigma0;
    const double a = std::sqrt(1.0 + vt * vt);
    const Eigen::VectorXd xhat = (x_t + vt * vt * y) / a;
    const Eigen::VectorXd mean = mu + a / (a * a + 0.81) * (xhat - a * mu);
    const Eigen::VectorXd want = (mean - x_t) / 0.81;
    CHECK((got - want).norm() < 1e-10);
  }

  SUBCASE("joint and whitened posterior means agree for discrete priors") {
    const MixturePrior prior = illustration_prior();
    Eigen::MatrixXd a(1, 2);
    a << 0.7, -0.3;
    const LinearOperator op = LinearOperator::dense(a);
    const double sigma0 = 0.6;
    const Eigen::VectorXd x_t = rng.normal_vector(2);
    const Eigen::VectorXd y = rng.normal_vector(1);

    const Eigen::VectorXd joint = posterior_mean_joint(prior, ve, op, x_t, y, sigma0, 1);
    const LiftedOperator lifted = lift(op, ve, sigma0, 1);
    const Eigen::VectorXd whitened = posterior_mean_whitened(
        prior, lifted, whiten_combine(lifted, x_t, y).xhat, 1);
    CHECK((joint - whitened).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("ve predictor with a zero score accumulates exactly the injected noise") {
  const NoiseSchedule ve = make_geometric_ve(40, 0.05, 5.0);
  SamplerConfig cfg;
  cfg.schedule = ve;
  cfg.mode = SampleMode::Bayesian;
  cfg.score_source = std::make_shared<ScaleBackSource>();
  cfg.sigma0 = 1.0;
  cfg.seed = 31;
  const LinearOperator op = LinearOperator::identity(3);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
  const Trajectory traj = ve_sample(cfg, &op, &y);

  // Replay the generator: x_T then one noise draw per step except t = 1.
  Rng rng(31);
  Eigen::VectorXd x = ve.sigma(ve.T) * rng.normal_vector(3);
  for (int t = ve.T; t >= 2; --t) {
    const double var_step = ve.sigma(t) * ve.sigma(t) - ve.sigma(t - 1) * ve.sigma(t - 1);
    x += std::sqrt(var_step) * rng.normal_vector(3);
  }
  CHECK((traj.x0_estimate - x).norm() == 0.0);
}

TEST_CASE("ve denoising recovers the posterior over atoms (reduced run)") {
  const MixturePrior prior = illustration_prior();
  const LinearOperator op = LinearOperator::identity(2);
  Rng rng(8);
  Eigen::VectorXd y = prior.means[4] + 0.5 * rng.normal_vector(2);

  SamplerConfig cfg;
  cfg.schedule = make_geometric_ve(300, 0.01, 20.0);
  cfg.mode = SampleMode::Bayesian;
  cfg.exact_prior = prior;
  cfg.sigma0 = 0.5;
  cfg.seed = 9;
  const auto runs = sample_ensemble(cfg, &op, &y, 300, true);
  const Eigen::VectorXd exact = exact_posterior(prior, op, y, 0.5);
  const double tv = total_variation(nearest_atom_histogram(runs, prior), exact);
  CHECK(tv < 0.25);
}

TEST_CASE("non-finite chain states raise a diagnostic with the timestep") {
  class NanSource final : public ScoreSource {
   public:
    Eigen::VectorXd posterior_mean(const LiftedOperator&,
                                   const Eigen::VectorXd& xhat) const override {
      return Eigen::VectorXd::Constant(xhat.size(), std::nan(""));
    }
  };
  SamplerConfig cfg;
  cfg.schedule = make_linear_vp(10, 1e-4, 0.02);
  cfg.mode = SampleMode::Bayesian;
  cfg.score_source = std::make_shared<NanSource>();
  cfg.sigma0 = 0.5;
  const LinearOperator op = LinearOperator::identity(2);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  try {
    sample(cfg, &op, &y);
    FAIL("expected DiagnosticError");
  } catch (const DiagnosticError& e) {
    CHECK(e.timestep == 9);  // first corrupted state is x_{T-1}
  }
}

TEST_CASE("rescaled denoiser adapter matches the direct whitened path") {
  const MixturePrior prior = illustration_prior();
  const RescaledDenoiserSource adapted(make_exact_denoiser(prior));
  const ExactPriorSource direct(prior);
  Rng rng(23);

  SUBCASE("VE identity lift") {
    const NoiseSchedule ve = make_ve_from_sigmas({1.3});
    const LiftedOperator lifted = lift(LinearOperator::identity(2), ve, 0.5, 1);
    for (int i = 0; i < 5; ++i) {
      const Eigen::VectorXd xhat = 2.0 * rng.normal_vector(2);
      CHECK((adapted.posterior_mean(lifted, xhat) - direct.posterior_mean(lifted, xhat))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
    }
  }

  SUBCASE("VP identity lift") {
    const NoiseSchedule vp = make_vp_from_alpha_bars({0.35});
    const LiftedOperator lifted = lift(LinearOperator::identity(2), vp, 0.5, 1);
    const Eigen::VectorXd xhat = rng.normal_vector(2);
    CHECK((adapted.posterior_mean(lifted, xhat) - direct.posterior_mean(lifted, xhat))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }

  SUBCASE("non-identity operators are rejected") {
    const NoiseSchedule vp = make_vp_from_alpha_bars({0.5});
    const LiftedOperator lifted = lift(masking_row(), vp, 0.5, 1);
    CHECK_THROWS_AS(adapted.posterior_mean(lifted, Eigen::VectorXd::Zero(2)),
                    ParameterError);
  }
}

TEST_CASE("ve sampling with the Langevin corrector stays finite and deterministic") {
  const MixturePrior prior = illustration_prior();
  SamplerConfig cfg;
  cfg.schedule = make_geometric_ve(100, 0.01, 20.0);
  cfg.mode = SampleMode::Unconditional;
  cfg.exact_prior = prior;
  cfg.seed = 12;
  cfg.corrector = LangevinCorrector{1, 0.16};
  const Trajectory a = ve_sample(cfg);
  const Trajectory b = ve_sample(cfg);
  CHECK(a.x0_estimate == b.x0_estimate);
  CHECK(a.x0_estimate.allFinite());
}
