#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <utility>

#include <Eigen/Core>

#include "bayescond/errors.hpp"
#include "bayescond/operators.hpp"
#include "bayescond/priors.hpp"

namespace bayescond {

// Anything that can estimate E[x0 ; xhat] for a whitened observation
// xhat = A_t x0 + sqrt(noise_var) n.  Exact priors, trained affine
// estimators, and the unrolled denoise+DC network all satisfy this.
class ScoreSource {
 public:
  virtual ~ScoreSource() = default;
  virtual Eigen::VectorXd posterior_mean(const LiftedOperator& L,
                                         const Eigen::VectorXd& xhat) const = 0;
};

class ExactPriorSource final : public ScoreSource {
 public:
  explicit ExactPriorSource(MixturePrior prior) : prior_(std::move(prior)) {}

  Eigen::VectorXd posterior_mean(const LiftedOperator& L,
                                 const Eigen::VectorXd& xhat) const override {
    return posterior_mean_whitened(prior_, L, xhat, L.t);
  }

  const MixturePrior& prior() const { return prior_; }

 private:
  MixturePrior prior_;
};

// Adapts a plain denoiser D(x, sigma) ~ E[x0 ; x0 + sigma n] to the
// whitened interface when A_t is a scalar multiple c of the identity:
// xhat / c = x0 + (sqrt(noise_var)/c) n, so the whitened expectation is the
// denoiser evaluated at the rescaled input and noise level.
class RescaledDenoiserSource final : public ScoreSource {
 public:
  using Denoiser = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;

  explicit RescaledDenoiserSource(Denoiser d) : denoiser_(std::move(d)) {}

  Eigen::VectorXd posterior_mean(const LiftedOperator& L,
                                 const Eigen::VectorXd& xhat) const override {
    if (L.base.variant() != LinearOperator::Variant::Identity)
      throw ParameterError("RescaledDenoiserSource: identity forward operator required");
    const double c = std::sqrt(L.abar + L.kt * L.kt);
    return denoiser_(xhat / c, std::sqrt(L.noise_var) / c);
  }

 private:
  Denoiser denoiser_;
};

// The exact mixture denoiser E[x0 ; x0 + sigma n] for use with the adapter.
inline RescaledDenoiserSource::Denoiser make_exact_denoiser(MixturePrior prior) {
  return [prior = std::move(prior)](const Eigen::VectorXd& x, double sigma) {
    LiftedOperator plain{LinearOperator::identity(prior.d()), 1.0, 0.0,
                         sigma * sigma, 0};
    return posterior_mean_whitened(prior, plain, x, 0);
  };
}

}  // namespace bayescond
