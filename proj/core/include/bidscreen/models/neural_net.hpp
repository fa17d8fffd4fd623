#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bidscreen/models/examples.hpp"

namespace bidscreen {

struct NeuralNetConfig {
  /// 0 connects inputs straight to the sigmoid output (logistic regression).
  std::size_t hidden_units = 8;
  std::size_t epochs = 500;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
};

NeuralNetConfig neural_net_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const NeuralNetConfig& c);

/// One sigmoid hidden layer and a sigmoid output over standardized inputs.
struct NeuralNetModel {
  Standardizer standardizer;
  Eigen::MatrixXd hidden_weights;  // hidden_units x p
  Eigen::VectorXd hidden_bias;     // hidden_units
  Eigen::VectorXd output_weights;  // hidden_units, or p when there is no hidden layer
  double output_bias = 0;

  std::size_t hidden_units() const noexcept { return static_cast<std::size_t>(hidden_weights.rows()); }

  /// All weights in a fixed order: hidden weights (row-major), hidden bias,
  /// output weights, output bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);
};

/// Mini-batch gradient descent on mean log-loss; shuffling and the uniform
/// initialization are seeded.
NeuralNetModel fit_neural_net(const LabeledExamples& data, const NeuralNetConfig& config = {});
double predict(const NeuralNetModel& model, std::span<const double> features);

/// Mean log-loss and its analytic gradient (same order as parameters()) on
/// already-standardized inputs `z`.
double batch_loss(const NeuralNetModel& model, const Eigen::MatrixXd& z, std::span<const int> y);
std::vector<double> batch_gradient(const NeuralNetModel& model, const Eigen::MatrixXd& z, std::span<const int> y);

nlohmann::json to_json(const NeuralNetModel& m);
NeuralNetModel neural_net_model_from_json(const nlohmann::json& j);

}  // namespace bidscreen
