#include "bayescond/serialize.hpp"

#include <filesystem>

#include "bayescond/errors.hpp"
#include "bayescond/io.hpp"

namespace bayescond {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string resolve(const std::string& base_dir, const std::string& rel) {
  if (base_dir.empty()) return rel;
  return (fs::path(base_dir) / rel).string();
}

Eigen::VectorXd load_vector_field(const json& j, const std::string& key,
                                  const std::string& base_dir) {
  if (j.contains(key)) return vector_from_json(j.at(key));
  const std::string path_key = key + "_path";
  if (j.contains(path_key))
    return read_vector(resolve(base_dir, j.at(path_key).get<std::string>()));
  throw ConfigError("operator descriptor missing '" + key + "'");
}

}  // namespace

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& x : j) v[i++] = x.get<double>();
  return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != cols)
      throw ConfigError("ragged matrix in JSON");
    m.row(i) = vector_from_json(j.at(i)).transpose();
  }
  return m;
}

nlohmann::json schedule_to_json(const NoiseSchedule& s) {
  json j;
  if (s.kind == ScheduleKind::VP) {
    j["kind"] = "vp";
    j["T"] = s.T;
    if (s.beta_range) {
      j["beta_min"] = s.beta_range->first;
      j["beta_max"] = s.beta_range->second;
    } else {
      j["alphas"] = s.alphas;
    }
  } else {
    j["kind"] = "ve";
    j["T"] = s.T;
    if (s.sigma_range) {
      j["sigma_min"] = s.sigma_range->first;
      j["sigma_max"] = s.sigma_range->second;
    } else {
      j["sigmas"] = s.sigmas;
    }
  }
  return j;
}

NoiseSchedule schedule_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "vp") {
    if (j.contains("alphas"))
      return make_vp_from_alphas(j.at("alphas").get<std::vector<double>>());
    if (j.contains("alpha_bars"))
      return make_vp_from_alpha_bars(j.at("alpha_bars").get<std::vector<double>>());
    return make_linear_vp(j.at("T").get<int>(), j.at("beta_min").get<double>(),
                          j.at("beta_max").get<double>());
  }
  if (kind == "ve") {
    if (j.contains("sigmas"))
      return make_ve_from_sigmas(j.at("sigmas").get<std::vector<double>>());
    return make_geometric_ve(j.at("T").get<int>(), j.at("sigma_min").get<double>(),
                             j.at("sigma_max").get<double>());
  }
  throw ConfigError("unknown schedule kind '" + kind + "'");
}

nlohmann::json operator_to_json(const LinearOperator& op) {
  json j;
  switch (op.variant()) {
    case LinearOperator::Variant::Identity:
      j["variant"] = "identity";
      j["d"] = op.d();
      break;
    case LinearOperator::Variant::InpaintMask:
      j["variant"] = "inpaint_mask";
      j["mask"] = vector_to_json(op.as_inpaint_mask().mask);
      break;
    case LinearOperator::Variant::FourierMask: {
      const auto& o = op.as_fourier_mask();
      j["variant"] = "fourier_mask";
      j["dims"] = {o.rows, o.cols};
      j["mask"] = vector_to_json(o.kmask);
      break;
    }
    case LinearOperator::Variant::FourierFilter: {
      const auto& o = op.as_fourier_filter();
      j["variant"] = "fourier_filter";
      j["dims"] = {o.rows, o.cols};
      j["spectrum"] = vector_to_json(o.spectrum);
      break;
    }
    case LinearOperator::Variant::BoxDownsample: {
      const auto& o = op.as_box_downsample();
      j["variant"] = "box_downsample";
      j["dims"] = o.dims;
      j["factor"] = o.factor;
      break;
    }
    case LinearOperator::Variant::Dense:
      j["variant"] = "dense";
      j["matrix"] = matrix_to_json(op.as_dense().a);
      break;
  }
  return j;
}

LinearOperator operator_from_json(const nlohmann::json& j, const std::string& base_dir) {
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "identity")
    return LinearOperator::identity(j.at("d").get<Eigen::Index>());
  if (variant == "inpaint_mask")
    return LinearOperator::inpaint_mask(load_vector_field(j, "mask", base_dir));
  if (variant == "fourier_mask") {
    const auto dims = j.at("dims").get<std::vector<int>>();
    if (dims.size() != 2) throw ConfigError("fourier_mask: dims must be [rows, cols]");
    return LinearOperator::fourier_mask(load_vector_field(j, "mask", base_dir),
                                        dims[0], dims[1]);
  }
  if (variant == "fourier_filter") {
    const auto dims = j.at("dims").get<std::vector<int>>();
    if (dims.size() != 2) throw ConfigError("fourier_filter: dims must be [rows, cols]");
    return LinearOperator::fourier_filter(load_vector_field(j, "spectrum", base_dir),
                                          dims[0], dims[1]);
  }
  if (variant == "box_downsample")
    return LinearOperator::box_downsample(j.at("dims").get<std::vector<int>>(),
                                          j.at("factor").get<int>());
  if (variant == "dense") {
    if (j.contains("matrix")) return LinearOperator::dense(matrix_from_json(j.at("matrix")));
    if (j.contains("matrix_path"))
      return LinearOperator::dense(
          read_matrix(resolve(base_dir, j.at("matrix_path").get<std::string>())));
    throw ConfigError("dense operator needs 'matrix' or 'matrix_path'");
  }
  throw ConfigError("unknown operator variant '" + variant + "'");
}

nlohmann::json prior_to_json(const MixturePrior& p) {
  json j;
  j["kind"] = p.kind == PriorKind::Discrete ? "discrete" : "gaussian";
  j["weights"] = vector_to_json(p.weights);
  json atoms = json::array();
  for (const auto& mu : p.means) atoms.push_back(vector_to_json(mu));
  j["atoms"] = atoms;
  if (p.kind == PriorKind::Gaussian) {
    json covs = json::array();
    for (const auto& c : p.covs) covs.push_back(matrix_to_json(c));
    j["covs"] = covs;
  }
  return j;
}

MixturePrior prior_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  Eigen::VectorXd weights = vector_from_json(j.at("weights"));
  std::vector<Eigen::VectorXd> atoms;
  const auto& ja = j.contains("atoms") ? j.at("atoms") : j.at("means");
  for (const auto& a : ja) atoms.push_back(vector_from_json(a));
  if (kind == "discrete")
    return make_discrete_prior(std::move(weights), std::move(atoms));
  if (kind == "gaussian") {
    std::vector<Eigen::MatrixXd> covs;
    for (const auto& c : j.at("covs")) covs.push_back(matrix_from_json(c));
    return make_gaussian_prior(std::move(weights), std::move(atoms), std::move(covs));
  }
  throw ConfigError("unknown prior kind '" + kind + "'");
}

void save_linear_estimator(const LinearEstimator& est, const std::string& dir,
                           std::uint64_t prior_hash) {
  fs::create_directories(dir);
  json files = json::array();
  for (std::size_t i = 0; i < est.t_grid.size(); ++i) {
    const std::string w_name = "W_" + std::to_string(est.t_grid[i]) + ".bcnd";
    const std::string b_name = "b_" + std::to_string(est.t_grid[i]) + ".bcnd";
    write_array((fs::path(dir) / w_name).string(), est.weights[i]);
    write_array((fs::path(dir) / b_name).string(), est.biases[i]);
    files.push_back({{"t", est.t_grid[i]}, {"w", w_name}, {"b", b_name}});
  }
  json manifest;
  manifest["t_grid"] = est.t_grid;
  manifest["d"] = est.weights.empty() ? 0 : est.weights.front().rows();
  manifest["prior_hash"] = prior_hash;
  manifest["files"] = files;
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

LinearEstimator load_linear_estimator(const std::string& manifest_path) {
  const json manifest = json::parse(read_text_file(manifest_path));
  const std::string dir = fs::path(manifest_path).parent_path().string();
  LinearEstimator est;
  est.t_grid = manifest.at("t_grid").get<std::vector<int>>();
  for (const auto& f : manifest.at("files")) {
    est.weights.push_back(read_matrix(resolve(dir, f.at("w").get<std::string>())));
    est.biases.push_back(read_vector(resolve(dir, f.at("b").get<std::string>())));
  }
  if (est.weights.size() != est.t_grid.size())
    throw ConfigError("estimator manifest: file list does not match t_grid");
  return est;
}

}  // namespace bayescond
