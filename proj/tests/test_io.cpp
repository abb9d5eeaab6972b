#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "bayescond/errors.hpp"
#include "bayescond/io.hpp"
#include "bayescond/rng.hpp"
#include "bayescond/serialize.hpp"

using namespace bayescond;
namespace fs = std::filesystem;

namespace {

std::string tmp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bayescond_io_tests";
  fs::create_directories(dir);
  return (dir / name).string();
}

}  // namespace

TEST_CASE("binary array round trip") {
  Rng rng(1);

  SUBCASE("vectors") {
    for (const Eigen::Index n : {1, 5, 257}) {
      const Eigen::VectorXd v = rng.normal_vector(n);
      const std::string p = tmp_path("vec.bcnd");
      write_array(p, v);
      CHECK(read_vector(p) == v);
      CHECK_THROWS_AS(read_matrix(p), IoError);
    }
  }

  SUBCASE("matrices keep row-major layout") {
    Eigen::MatrixXd m(3, 4);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    const std::string p = tmp_path("mat.bcnd");
    write_array(p, m);
    CHECK(read_matrix(p) == m);
  }

  SUBCASE("header validation") {
    const std::string p = tmp_path("bad.bcnd");
    write_text_file(p, "NOPE0123456789ab");
    CHECK_THROWS_AS(read_vector(p), IoError);
    write_text_file(p, std::string("BCND") + std::string(12, '\0'));
    // dtype 0 is invalid
    CHECK_THROWS_AS(read_vector(p), IoError);
    const std::string q = tmp_path("trunc.bcnd");
    write_array(q, Eigen::VectorXd(Eigen::VectorXd::Ones(4)));
    const std::string raw = read_text_file(q);
    write_text_file(q, raw.substr(0, raw.size() - 3));
    CHECK_THROWS_AS(read_vector(q), IoError);
  }
}

TEST_CASE("pgm output is valid plain P2") {
  Eigen::MatrixXi g(2, 3);
  g << 0, 128, 255, 300, -5, 17;  // out-of-range values get clamped
  const std::string p = tmp_path("img.pgm");
  write_pgm(p, g, "meta line");
  std::istringstream in(read_text_file(p));
  std::string magic, comment;
  in >> magic;
  CHECK(magic == "P2");
  std::getline(in, comment);
  std::getline(in, comment);
  CHECK(comment.rfind("# ", 0) == 0);
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  CHECK(w == 3);
  CHECK(h == 2);
  CHECK(maxval == 255);
  int count = 0, px = 0;
  while (in >> px) {
    CHECK(px >= 0);
    CHECK(px <= 255);
    ++count;
  }
  CHECK(count == 6);
}

TEST_CASE("csv floats survive a parse round trip") {
  const double values[] = {3.141592653589793, 1e-300, -1.0 / 3.0, 5e17};
  for (const double v : values) {
    const std::string s = CsvWriter::num(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("fnv1a64 is stable") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("bayescond") == fnv1a64("bayescond"));
  CHECK(fnv1a64("a") != fnv1a64("b"));
}

TEST_CASE("schedule serialization round trips") {
  const NoiseSchedule lin = make_linear_vp(100, 1e-4, 0.02);
  const NoiseSchedule lin2 = schedule_from_json(schedule_to_json(lin));
  CHECK(lin2.alphas == lin.alphas);

  const NoiseSchedule expl = make_vp_from_alphas({0.9, 0.8, 0.7});
  const NoiseSchedule expl2 = schedule_from_json(schedule_to_json(expl));
  CHECK(expl2.alpha_bars == expl.alpha_bars);

  const NoiseSchedule ve = make_geometric_ve(50, 0.01, 10.0);
  const NoiseSchedule ve2 = schedule_from_json(schedule_to_json(ve));
  CHECK(ve2.sigmas == ve.sigmas);

  CHECK_THROWS_AS(schedule_from_json(nlohmann::json{{"kind", "cosine"}, {"T", 5}}),
                  ConfigError);
}

TEST_CASE("operator serialization round trips act identically") {
  Rng rng(2);
  std::vector<LinearOperator> ops;
  ops.push_back(LinearOperator::identity(6));
  Eigen::VectorXd mask(6);
  mask << 1, 0, 1, 1, 0, 1;
  ops.push_back(LinearOperator::inpaint_mask(mask));
  Eigen::VectorXd km(4);
  km << 1, 1, 0, 1;
  ops.push_back(LinearOperator::fourier_mask(km, 2, 2));
  Eigen::VectorXd sp(4);
  sp << 0.5, 1.0, 2.0, 1.0;
  ops.push_back(LinearOperator::fourier_filter(sp, 1, 4));
  ops.push_back(LinearOperator::box_downsample({2, 4}, 2));
  Eigen::MatrixXd a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  ops.push_back(LinearOperator::dense(a));

  for (const auto& op : ops) {
    const LinearOperator back = operator_from_json(operator_to_json(op));
    CHECK(back.d() == op.d());
    CHECK(back.m() == op.m());
    const Eigen::VectorXd x = rng.normal_vector(op.d());
    CHECK((back.apply(x) - op.apply(x)).norm() < 1e-15);
  }
}

TEST_CASE("operator masks can live in sidecar binary files") {
  Eigen::VectorXd mask(4);
  mask << 1, 0, 0, 1;
  const std::string dir = fs::path(tmp_path("x")).parent_path().string();
  write_array((fs::path(dir) / "mask.bcnd").string(), mask);
  nlohmann::json j{{"variant", "inpaint_mask"}, {"mask_path", "mask.bcnd"}};
  const LinearOperator op = operator_from_json(j, dir);
  CHECK(op.as_inpaint_mask().mask == mask);
}

TEST_CASE("prior serialization round trips") {
  Rng rng(3);
  Eigen::VectorXd w(2);
  w << 0.25, 0.75;
  const MixturePrior disc =
      make_discrete_prior(w, {rng.normal_vector(3), rng.normal_vector(3)});
  const MixturePrior disc2 = prior_from_json(prior_to_json(disc));
  CHECK(disc2.weights == disc.weights);
  CHECK(disc2.means[1] == disc.means[1]);

  Eigen::MatrixXd b(2, 2);
  b << 1.0, 0.2, 0.2, 1.5;
  const MixturePrior gauss = make_gaussian_prior(
      w, {rng.normal_vector(2), rng.normal_vector(2)}, {b, 2.0 * b});
  const MixturePrior gauss2 = prior_from_json(prior_to_json(gauss));
  CHECK(gauss2.covs[1] == gauss.covs[1]);
}

TEST_CASE("linear estimator save/load round trips") {
  Rng rng(4);
  LinearEstimator est;
  est.t_grid = {5, 25};
  for (int i = 0; i < 2; ++i) {
    Eigen::MatrixXd w(3, 3);
    for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.normal();
    est.weights.push_back(w);
    est.biases.push_back(rng.normal_vector(3));
  }
  const std::string dir = tmp_path("estimator_dir");
  save_linear_estimator(est, dir, 0xabcd);
  const LinearEstimator back =
      load_linear_estimator((fs::path(dir) / "manifest.json").string());
  CHECK(back.t_grid == est.t_grid);
  CHECK(back.weights[0] == est.weights[0]);
  CHECK(back.biases[1] == est.biases[1]);

  const nlohmann::json manifest = nlohmann::json::parse(
      read_text_file((fs::path(dir) / "manifest.json").string()));
  CHECK(manifest.at("prior_hash").get<std::uint64_t>() == 0xabcd);
  CHECK(manifest.at("d").get<int>() == 3);
}
