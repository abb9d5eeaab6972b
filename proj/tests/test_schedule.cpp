#include <doctest.h>

#include <cmath>

#include "bayescond/errors.hpp"
#include "bayescond/schedule.hpp"

using namespace bayescond;

TEST_CASE("linear VP schedule matches the running product") {
  const NoiseSchedule s = make_linear_vp(1000, 1e-4, 0.02);
  double prod = 1.0;
  for (int t = 1; t <= s.T; ++t) {
    prod *= s.alpha(t);
    CHECK(std::abs(s.alpha_bar(t) - prod) <= 1e-12 * prod);
  }
  CHECK(s.alpha_bar(1000) < 1e-3);
  CHECK(s.alpha_bar(0) == 1.0);
}

TEST_CASE("constant beta products") {
  const NoiseSchedule two = make_vp_from_alphas({0.9, 0.9});
  CHECK(two.alpha_bar(2) == doctest::Approx(0.81).epsilon(1e-15));
  const NoiseSchedule one = make_vp_from_alphas({0.63});
  CHECK(one.alpha_bar(1) == one.alpha(1));
}

TEST_CASE("schedule parameter validation") {
  CHECK_THROWS_AS(make_linear_vp(0, 1e-4, 0.02), ParameterError);
  CHECK_THROWS_AS(make_linear_vp(10, 0.0, 0.02), ParameterError);
  CHECK_THROWS_AS(make_linear_vp(10, 0.03, 0.02), ParameterError);
  CHECK_THROWS_AS(make_linear_vp(10, 1e-4, 1.0), ParameterError);
  CHECK_THROWS_AS(make_vp_from_alpha_bars({0.5, 0.6}), ParameterError);
  CHECK_THROWS_AS(make_geometric_ve(10, 0.5, 0.1), ParameterError);
  CHECK_THROWS_AS(make_ve_from_sigmas({0.1, 0.1}), ParameterError);
}

TEST_CASE("forward perturbation with no noise coefficient is exact") {
  // A hypothetical abar = 1 step; constructible directly, not via makers.
  NoiseSchedule s;
  s.kind = ScheduleKind::VP;
  s.T = 1;
  s.alphas = {1.0};
  s.alpha_bars = {1.0};
  Rng rng(1);
  const Eigen::VectorXd x0 = rng.normal_vector(5);
  Rng rng2(2);
  CHECK((forward_perturb(s, x0, 1, rng2).x - x0).norm() == 0.0);
}

TEST_CASE("forward perturbation statistics") {
  const NoiseSchedule s = make_vp_from_alpha_bars({0.4});
  const int n = 100000;
  const Eigen::Index d = 4;

  SUBCASE("variance of the noise term, x0 = 0") {
    Rng rng(11);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += forward_perturb(s, zero, 1, rng).x.squaredNorm();
    const double var = acc / static_cast<double>(n) / static_cast<double>(d);
    CHECK(std::abs(var - 0.6) < 0.03 * 0.6);
  }

  SUBCASE("mean equals sqrt(abar) x0 within 4 standard errors") {
    Rng rng(12);
    Eigen::VectorXd x0(d);
    x0 << 1.0, -2.0, 0.5, 3.0;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < n; ++i) acc += forward_perturb(s, x0, 1, rng).x;
    const Eigen::VectorXd mean = acc / static_cast<double>(n);
    const double se = std::sqrt(0.6 / n);
    CHECK(((mean - std::sqrt(0.4) * x0).cwiseAbs().maxCoeff()) < 4.0 * se);
  }

  SUBCASE("VE variance equals sigma_t^2") {
    const NoiseSchedule ve = make_ve_from_sigmas({0.7});
    Rng rng(13);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += forward_perturb(ve, zero, 1, rng).x.squaredNorm();
    const double var = acc / static_cast<double>(n) / static_cast<double>(d);
    CHECK(std::abs(var - 0.49) < 0.03 * 0.49);
  }
}

TEST_CASE("forward perturbation is deterministic under a fixed seed") {
  const NoiseSchedule s = make_linear_vp(100, 1e-4, 0.02);
  Rng a(77), b(77);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Ones(3);
  CHECK(forward_perturb(s, x0, 50, a).x == forward_perturb(s, x0, 50, b).x);
  CHECK_THROWS_AS(forward_perturb(s, x0, 0, a), IndexError);
  CHECK_THROWS_AS(forward_perturb(s, x0, 101, a), IndexError);
}

TEST_CASE("k_t and v_t") {
  const NoiseSchedule s = make_vp_from_alpha_bars({0.75});
  CHECK(k_t(s, 0.5, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(k_t(s, 1e300, 1) < 1e-150);
  CHECK_THROWS_AS(k_t(s, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(k_t(s, -1.0, 1), ParameterError);

  const NoiseSchedule near_clean = make_vp_from_alpha_bars({1.0 - 1e-14});
  CHECK(k_t(near_clean, 0.5, 1) < 1e-6);

  const NoiseSchedule ve = make_ve_from_sigmas({0.7});
  CHECK(v_t(ve, 0.5, 1) == doctest::Approx(1.4).epsilon(1e-15));
  CHECK_THROWS_AS(v_t(s, 0.5, 1), ParameterError);
  CHECK_THROWS_AS(k_t(ve, 0.5, 1), ParameterError);
}
