// Times the OpenMP kernels against their serial reference implementations.

#include <chrono>
#include <cstdio>
#include <functional>

#include "bayescond/estimator.hpp"
#include "bayescond/experiments.hpp"
#include "bayescond/kernels.hpp"
#include "bayescond/operators.hpp"
#include "bayescond/parallel.hpp"
#include "bayescond/samplers.hpp"
#include "bayescond/schedule.hpp"

using namespace bayescond;

namespace {

double time_s(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

void report(const char* name, double serial_s, double omp_s) {
  std::printf("%-28s serial %8.3f s   omp %8.3f s   speedup %.2fx\n", name, serial_s,
              omp_s, serial_s / omp_s);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", max_threads());

  const MixturePrior prior = illustration_prior();
  Eigen::MatrixXd a_row(1, 2);
  a_row << 1.0, 0.0;
  const LinearOperator op = LinearOperator::dense(a_row);
  Eigen::VectorXd y(1);
  y << -4.0;

  {
    const NoiseSchedule s = make_vp_from_alpha_bars({0.9, 0.5, 0.1, 0.01});
    Eigen::VectorXd grid(128);
    for (int i = 0; i < 128; ++i) grid[i] = -8.0 + 16.0 * i / 127.0;
    const auto run = [&](ExecPolicy pol) {
      for (int t = 1; t <= s.T; ++t)
        score_field_norms(prior, s, op, y, 0.1, t, grid, grid, pol);
    };
    report("score_field 128x128 x4", time_s([&] { run(ExecPolicy::Serial); }),
           time_s([&] { run(ExecPolicy::OpenMP); }));
  }

  {
    SamplerConfig cfg;
    cfg.schedule = make_linear_vp(1000, 1e-4, 0.02);
    cfg.mode = SampleMode::Bayesian;
    cfg.exact_prior = prior;
    cfg.sigma0 = 0.1;
    cfg.seed = 7;
    const auto run = [&](ExecPolicy pol) { sample_ensemble(cfg, &op, &y, 256, false, pol); };
    report("sample_ensemble 256 chains", time_s([&] { run(ExecPolicy::Serial); }),
           time_s([&] { run(ExecPolicy::OpenMP); }));
  }

  {
    const LinearOperator box = LinearOperator::box_downsample({8}, 2);
    const NoiseSchedule s = make_vp_from_alpha_bars({0.5});
    const LiftedOperator lifted = lift(box, s, 0.5, 1);
    const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(8);
    const auto run = [&](ExecPolicy pol) {
      whitening_residual_covariance(lifted, x0, 200000, 7, pol);
    };
    report("whitening_cov 2e5 draws", time_s([&] { run(ExecPolicy::Serial); }),
           time_s([&] { run(ExecPolicy::OpenMP); }));
  }

  {
    const NoiseSchedule s = make_linear_vp(1000, 1e-4, 0.02);
    const LinearOperator id4 = LinearOperator::identity(4);
    const MixturePrior gauss = make_gaussian_prior(
        Eigen::VectorXd::Ones(1), {Eigen::VectorXd::Zero(4)},
        {Eigen::MatrixXd::Identity(4, 4)});
    const std::vector<int> grid = default_t_grid(s, 8);
    const auto run = [&](ExecPolicy pol) {
      fit_linear(gauss, id4, s, 0.5, grid, 20000, 7, pol);
    };
    report("fit_linear 8 x 2e4", time_s([&] { run(ExecPolicy::Serial); }),
           time_s([&] { run(ExecPolicy::OpenMP); }));
  }
  return 0;
}
