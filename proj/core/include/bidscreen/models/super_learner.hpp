#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bidscreen/models/examples.hpp"
#include "bidscreen/models/family.hpp"

namespace bidscreen {

struct ModelArtifact;

struct BaseLearnerSpec {
  Family family = Family::random_forest;
  nlohmann::json config = nlohmann::json::object();
};

struct SuperLearnerConfig {
  std::size_t folds = 10;
  std::vector<BaseLearnerSpec> base_learners = {
      {Family::random_forest, nlohmann::json::object()},
      {Family::lasso_logit, nlohmann::json::object()},
      {Family::gradient_boosting, nlohmann::json::object()},
      {Family::neural_net, nlohmann::json::object()},
  };
  std::uint64_t seed = 1;
  unsigned threads = 0;  // passed to base learners; never serialized
};

SuperLearnerConfig super_learner_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SuperLearnerConfig& c);

struct SuperLearnerModel {
  std::vector<std::shared_ptr<const ModelArtifact>> learners;
  std::vector<std::string> names;
  std::vector<double> weights;
  /// Mean squared error of each learner's out-of-fold predictions.
  std::vector<double> stacking_loss;
  double ensemble_loss = 0;
  std::vector<std::string> failures;
};

/// Weights on the probability simplex minimizing ||Z w - y||^2 exactly, by
/// solving the equality-constrained problem on every support and keeping the
/// best feasible one. Identical columns share their group's weight equally.
std::vector<double> simplex_least_squares(const Eigen::MatrixXd& z, const Eigen::VectorXd& y);

SuperLearnerModel fit_super_learner(const LabeledExamples& data, const SuperLearnerConfig& config = {});
double predict(const SuperLearnerModel& model, std::span<const double> features);

nlohmann::json to_json(const SuperLearnerModel& m);
SuperLearnerModel super_learner_model_from_json(const nlohmann::json& j);

}  // namespace bidscreen
