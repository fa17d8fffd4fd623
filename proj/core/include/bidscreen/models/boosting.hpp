#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "bidscreen/models/examples.hpp"
#include "bidscreen/models/tree.hpp"

namespace bidscreen {

struct BoostingConfig {
  std::size_t n_rounds = 200;
  std::size_t depth = 3;
  double learning_rate = 0.1;
  std::size_t min_leaf = 5;
  std::uint64_t seed = 1;
};

BoostingConfig boosting_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BoostingConfig& c);

/// Additive log-odds model: init + sum of tree leaf values. Leaf values are
/// stored already multiplied by the learning rate.
struct BoostingModel {
  double init = 0;
  double learning_rate = 0.1;
  std::vector<Tree> trees;
  /// Training log-loss after 0, 1, ..., n_rounds trees.
  std::vector<double> training_loss;
};

/// Negative gradient of the logistic loss at `scores`: y - sigmoid(score).
std::vector<double> logistic_residuals(std::span<const int> y, std::span<const double> scores);

/// Each round fits a depth-limited least-squares tree to the residuals and
/// sets leaf values by a single Newton step (sum r / sum p(1-p)).
BoostingModel fit_gradient_boosting(const LabeledExamples& data, const BoostingConfig& config = {});
double decision_score(const BoostingModel& model, std::span<const double> features);
double predict(const BoostingModel& model, std::span<const double> features);

nlohmann::json to_json(const BoostingModel& m);
BoostingModel boosting_model_from_json(const nlohmann::json& j);

}  // namespace bidscreen
