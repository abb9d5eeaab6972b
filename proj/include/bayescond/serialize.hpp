#pragma once

#include <string>

#include <json.hpp>

#include "bayescond/estimator.hpp"
#include "bayescond/operators.hpp"
#include "bayescond/priors.hpp"
#include "bayescond/schedule.hpp"

namespace bayescond {

nlohmann::json schedule_to_json(const NoiseSchedule& s);
NoiseSchedule schedule_from_json(const nlohmann::json& j);

// Masks/spectra/matrices may be inline arrays or "*_path" references to
// BCND binary files, resolved relative to base_dir.
nlohmann::json operator_to_json(const LinearOperator& op);
LinearOperator operator_from_json(const nlohmann::json& j,
                                  const std::string& base_dir = "");

nlohmann::json prior_to_json(const MixturePrior& p);
MixturePrior prior_from_json(const nlohmann::json& j);

// Writes W_t/b_t arrays plus a manifest.json {t_grid, d, prior_hash, files}.
void save_linear_estimator(const LinearEstimator& est, const std::string& dir,
                           std::uint64_t prior_hash);
LinearEstimator load_linear_estimator(const std::string& manifest_path);

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace bayescond
