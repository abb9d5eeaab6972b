#include "bayescond/schedule.hpp"

#include <cmath>
#include <utility>

#include "bayescond/errors.hpp"

namespace bayescond {

namespace {

void check_t(const NoiseSchedule& s, int t, int lo) {
  if (t < lo || t > s.T)
    throw IndexError("timestep " + std::to_string(t) + " outside [" +
                     std::to_string(lo) + ", " + std::to_string(s.T) + "]");
}

void validate_vp(const NoiseSchedule& s) {
  if (s.T < 1) throw ParameterError("schedule needs T >= 1");
  double prod = 1.0;
  double prev_bar = 1.0;
  for (int i = 0; i < s.T; ++i) {
    const double a = s.alphas[i];
    if (!(a > 0.0 && a < 1.0)) throw ParameterError("VP alpha_t must lie in (0,1)");
    prod *= a;
    const double bar = s.alpha_bars[i];
    if (std::abs(bar - prod) > 1e-12 * prod)
      throw ParameterError("alpha_bars inconsistent with running product");
    if (!(bar < prev_bar)) throw ParameterError("abar_t must be strictly decreasing");
    prev_bar = bar;
  }
}

void validate_ve(const NoiseSchedule& s) {
  if (s.T < 1) throw ParameterError("schedule needs T >= 1");
  double prev = 0.0;
  for (double sig : s.sigmas) {
    if (!(sig > prev)) throw ParameterError("VE sigma_t must be positive and strictly increasing");
    prev = sig;
  }
}

}  // namespace

double NoiseSchedule::alpha(int t) const {
  check_t(*this, t, 1);
  if (kind != ScheduleKind::VP) throw ParameterError("alpha(t) requires a VP schedule");
  return alphas[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  check_t(*this, t, 0);
  if (kind != ScheduleKind::VP) throw ParameterError("alpha_bar(t) requires a VP schedule");
  return t == 0 ? 1.0 : alpha_bars[t - 1];
}

double NoiseSchedule::sigma(int t) const {
  check_t(*this, t, 0);
  if (kind != ScheduleKind::VE) throw ParameterError("sigma(t) requires a VE schedule");
  return t == 0 ? 0.0 : sigmas[t - 1];
}

NoiseSchedule make_linear_vp(int T, double beta_min, double beta_max) {
  if (T < 1) throw ParameterError("make_linear_vp: T >= 1 required");
  if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
    throw ParameterError("make_linear_vp: need 0 < beta_min <= beta_max < 1");
  NoiseSchedule s;
  s.kind = ScheduleKind::VP;
  s.T = T;
  s.alphas.resize(T);
  s.alpha_bars.resize(T);
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
    const double beta = beta_min + (beta_max - beta_min) * frac;
    s.alphas[i] = 1.0 - beta;
    prod *= s.alphas[i];
    s.alpha_bars[i] = prod;
  }
  s.beta_range = {beta_min, beta_max};
  validate_vp(s);
  return s;
}

NoiseSchedule make_vp_from_alphas(std::vector<double> alphas) {
  NoiseSchedule s;
  s.kind = ScheduleKind::VP;
  s.T = static_cast<int>(alphas.size());
  s.alphas = std::move(alphas);
  s.alpha_bars.resize(s.T);
  double prod = 1.0;
  for (int i = 0; i < s.T; ++i) {
    prod *= s.alphas[i];
    s.alpha_bars[i] = prod;
  }
  validate_vp(s);
  return s;
}

NoiseSchedule make_vp_from_alpha_bars(const std::vector<double>& abars) {
  std::vector<double> alphas(abars.size());
  double prev = 1.0;
  for (std::size_t i = 0; i < abars.size(); ++i) {
    alphas[i] = abars[i] / prev;
    prev = abars[i];
  }
  NoiseSchedule s = make_vp_from_alphas(std::move(alphas));
  // Store the requested values verbatim; the product reconstruction above
  // can differ in the last ulp.
  for (std::size_t i = 0; i < abars.size(); ++i) s.alpha_bars[i] = abars[i];
  validate_vp(s);
  return s;
}

NoiseSchedule make_geometric_ve(int T, double sigma_min, double sigma_max) {
  if (T < 1) throw ParameterError("make_geometric_ve: T >= 1 required");
  if (!(sigma_min > 0.0 && sigma_min < sigma_max))
    throw ParameterError("make_geometric_ve: need 0 < sigma_min < sigma_max");
  NoiseSchedule s;
  s.kind = ScheduleKind::VE;
  s.T = T;
  s.sigmas.resize(T);
  for (int i = 0; i < T; ++i) {
    const double frac = T == 1 ? 1.0 : static_cast<double>(i) / (T - 1);
    s.sigmas[i] = T == 1 ? sigma_max
                         : sigma_min * std::pow(sigma_max / sigma_min, frac);
  }
  s.sigma_range = {sigma_min, sigma_max};
  validate_ve(s);
  return s;
}

NoiseSchedule make_ve_from_sigmas(std::vector<double> sigmas) {
  NoiseSchedule s;
  s.kind = ScheduleKind::VE;
  s.T = static_cast<int>(sigmas.size());
  s.sigmas = std::move(sigmas);
  validate_ve(s);
  return s;
}

DiffusionState forward_perturb(const NoiseSchedule& s, const Eigen::VectorXd& x0,
                               int t, Rng& rng) {
  check_t(s, t, 1);
  const Eigen::VectorXd n = rng.normal_vector(x0.size());
  DiffusionState out;
  out.t = t;
  if (s.kind == ScheduleKind::VP) {
    const double abar = s.alpha_bar(t);
    out.x = std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * n;
  } else {
    out.x = x0 + s.sigma(t) * n;
  }
  return out;
}

double k_t(const NoiseSchedule& s, double sigma0, int t) {
  if (!(sigma0 > 0.0)) throw ParameterError("k_t: sigma0 must be positive");
  if (s.kind != ScheduleKind::VP) throw ParameterError("k_t requires a VP schedule");
  return std::sqrt(1.0 - s.alpha_bar(t)) / sigma0;
}

double v_t(const NoiseSchedule& s, double sigma0, int t) {
  if (!(sigma0 > 0.0)) throw ParameterError("v_t: sigma0 must be positive");
  if (s.kind != ScheduleKind::VE) throw ParameterError("v_t requires a VE schedule");
  return s.sigma(t) / sigma0;
}

}  // namespace bayescond
