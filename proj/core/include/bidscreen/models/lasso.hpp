#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bidscreen/models/examples.hpp"

namespace bidscreen {

/// How the CV curve picks the penalty: its minimum, or the largest penalty
/// within one standard error of that minimum (sparser, glmnet's lambda.1se).
enum class LassoSelection { min, one_standard_error };

std::string_view to_string(LassoSelection s) noexcept;
LassoSelection parse_lasso_selection(std::string_view text);

struct LassoConfig {
  /// Explicit penalty grid; empty means a log-spaced grid from lambda_max.
  std::vector<double> lambda_grid;
  std::size_t n_lambda = 50;
  double lambda_min_ratio = 1e-3;
  std::size_t cv_folds = 10;
  std::uint64_t seed = 1;
  double tolerance = 1e-7;  // on squared, curvature-weighted coordinate moves (glmnet's default)
  std::size_t max_iterations = 100000;
  LassoSelection selection = LassoSelection::one_standard_error;
};

LassoConfig lasso_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LassoConfig& c);

struct LassoModel {
  Standardizer standardizer;
  double intercept = 0;
  Eigen::VectorXd coefficients;  // standardized space
  double lambda = 0;
  std::vector<double> lambda_grid;
  std::vector<double> cv_loss;  // mean held-out log-loss per grid value
  std::size_t zero_coefficients = 0;
};

/// Minimizes mean negative log-likelihood + lambda * ||beta||_1 (intercept
/// unpenalized) by IRLS outer steps with cyclic coordinate descent inside.
/// With several grid values lambda is chosen on the stratified K-fold CV
/// log-loss curve according to `selection` (ties go to the larger penalty).
LassoModel fit_lasso_logit(const LabeledExamples& data, const LassoConfig& config = {});
double predict(const LassoModel& model, std::span<const double> features);

/// Smallest penalty at which every slope is exactly zero, for standardized x.
double lasso_lambda_max(const Eigen::MatrixXd& z, std::span<const int> y);

nlohmann::json to_json(const LassoModel& m);
LassoModel lasso_model_from_json(const nlohmann::json& j);

}  // namespace bidscreen
