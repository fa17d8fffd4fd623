#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>
#include <json.hpp>

#include "bidscreen/models/examples.hpp"

namespace bidscreen {

struct LogitConfig {
  /// Stop when the max-norm of the mean log-likelihood gradient drops below this.
  double tolerance = 1e-8;
  std::size_t max_iterations = 10000;
};

LogitConfig logit_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LogitConfig& c);

/// Coefficients live in standardized feature space.
struct LogitModel {
  Standardizer standardizer;
  double intercept = 0;
  Eigen::VectorXd coefficients;
  std::size_t iterations = 0;
  double gradient_norm = 0;
  bool converged = false;
};

/// Newton-Raphson with step halving on the Bernoulli log-likelihood.
/// Non-convergence is reported through the model diagnostics, not thrown.
LogitModel fit_logit(const LabeledExamples& data, const LogitConfig& config = {});
double predict(const LogitModel& model, std::span<const double> features);

nlohmann::json to_json(const LogitModel& m);
LogitModel logit_model_from_json(const nlohmann::json& j);

double sigmoid(double z) noexcept;

nlohmann::json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace bidscreen
