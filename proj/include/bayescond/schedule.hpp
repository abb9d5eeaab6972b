#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bayescond/rng.hpp"

namespace bayescond {

enum class ScheduleKind { VP, VE };

// Diffusion noise schedule.  VP stores alpha_t and the running product
// abar_t = prod_{i<=t} alpha_i; VE stores a strictly increasing sigma_t.
// Arrays are indexed by timestep t in [1, T]; abar(0) = 1 and sigma(0) = 0
// by convention (the clean state).  Immutable after construction.
struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::VP;
  int T = 0;
  std::vector<double> alphas;      // VP, size T
  std::vector<double> alpha_bars;  // VP, size T
  std::vector<double> sigmas;      // VE, size T

  // Present when built via make_linear_vp / make_geometric_ve; used for
  // compact serialization.
  std::optional<std::pair<double, double>> beta_range;
  std::optional<std::pair<double, double>> sigma_range;

  double alpha(int t) const;      // t in [1, T]
  double alpha_bar(int t) const;  // t in [0, T]
  double sigma(int t) const;      // t in [0, T]
};

// Linear-beta VP schedule: beta_t interpolates [beta_min, beta_max].
NoiseSchedule make_linear_vp(int T, double beta_min, double beta_max);

// VP schedule from explicit per-step alphas.
NoiseSchedule make_vp_from_alphas(std::vector<double> alphas);

// VP schedule with prescribed abar values (strictly decreasing, in (0,1)).
NoiseSchedule make_vp_from_alpha_bars(const std::vector<double>& abars);

// Geometric VE schedule: sigma_t interpolates [sigma_min, sigma_max] in log
// space, sigma_T = sigma_max.
NoiseSchedule make_geometric_ve(int T, double sigma_min, double sigma_max);

NoiseSchedule make_ve_from_sigmas(std::vector<double> sigmas);

struct DiffusionState {
  int t = 0;
  Eigen::VectorXd x;
};

// VP: x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) n.   VE: x_t = x0 + sigma_t n.
DiffusionState forward_perturb(const NoiseSchedule& s, const Eigen::VectorXd& x0,
                               int t, Rng& rng);

// k_t = sqrt(1 - abar_t) / sigma0 (VP).
double k_t(const NoiseSchedule& s, double sigma0, int t);

// v_t = sigma_t / sigma0 (VE).
double v_t(const NoiseSchedule& s, double sigma0, int t);

}  // namespace bayescond
