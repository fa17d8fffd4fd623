#include "bidscreen/models/logit.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/Dense>

#include "bidscreen/error.hpp"

namespace bidscreen {

double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

/// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double mean_nll(const Eigen::MatrixXd& z, std::span<const int> y, double b0, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = (z * beta).array() + b0;
  double total = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) total += softplus(eta[i]) - (y[static_cast<std::size_t>(i)] == 1 ? eta[i] : 0.0);
  return total / static_cast<double>(eta.size());
}

}  // namespace

LogitConfig logit_config_from_json(const nlohmann::json& j) {
  LogitConfig c;
  if (j.contains("tolerance")) j.at("tolerance").get_to(c.tolerance);
  if (j.contains("max_iterations")) j.at("max_iterations").get_to(c.max_iterations);
  return c;
}

nlohmann::json to_json(const LogitConfig& c) {
  return {{"tolerance", c.tolerance}, {"max_iterations", c.max_iterations}};
}

LogitModel fit_logit(const LabeledExamples& data, const LogitConfig& config) {
  require_both_classes(data, 2);
  LogitModel model;
  model.standardizer = Standardizer::fit(data.x);
  const Eigen::MatrixXd z = model.standardizer.apply(data.x);
  const Eigen::Index n = z.rows();
  const Eigen::Index p = z.cols();

  // Augmented design [1 | z] so the intercept is just coefficient 0.
  Eigen::MatrixXd a(n, p + 1);
  a.col(0).setOnes();
  a.rightCols(p) = z;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = data.y[static_cast<std::size_t>(i)] == 1 ? 1.0 : 0.0;

  auto objective = [&](const Eigen::VectorXd& t) { return mean_nll(z, data.y, t[0], t.tail(p)); };
  double current = objective(theta);

  for (model.iterations = 0; model.iterations < config.max_iterations; ++model.iterations) {
    const Eigen::VectorXd eta = a * theta;
    Eigen::VectorXd prob(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob[i] = sigmoid(eta[i]);
      w[i] = prob[i] * (1.0 - prob[i]);
    }
    const Eigen::VectorXd grad = a.transpose() * (yv - prob) / static_cast<double>(n);
    model.gradient_norm = grad.cwiseAbs().maxCoeff();
    if (model.gradient_norm < config.tolerance) {
      model.converged = true;
      break;
    }
    Eigen::MatrixXd hessian = a.transpose() * w.asDiagonal() * a / static_cast<double>(n);
    // Small ridge keeps collinear expansions solvable; it only shapes the
    // step, the stopping rule still looks at the exact gradient.
    hessian.diagonal().array() += 1e-10 * (1.0 + hessian.diagonal().maxCoeff());
    Eigen::VectorXd step = hessian.ldlt().solve(grad);
    if (!step.allFinite()) step = grad;

    double scale = 1.0;
    Eigen::VectorXd candidate = theta + step;
    double next = objective(candidate);
    const double slack = 1e-14 * std::abs(current);
    while (next > current + slack && scale > 1e-10) {
      scale *= 0.5;
      candidate = theta + scale * step;
      next = objective(candidate);
    }
    if (next > current + slack) break;  // no descent possible in floating point
    theta = candidate;
    current = next;
  }
  model.intercept = theta[0];
  model.coefficients = theta.tail(p);
  return model;
}

double predict(const LogitModel& model, std::span<const double> features) {
  const Eigen::VectorXd z = model.standardizer.apply(features);
  return sigmoid(model.intercept + z.dot(model.coefficients));
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json to_json(const Standardizer& s) {
  return {{"mean", to_json(s.mean)}, {"scale", to_json(s.scale)}};
}

Standardizer standardizer_from_json(const nlohmann::json& j) {
  return {vector_from_json(j.at("mean")), vector_from_json(j.at("scale"))};
}

nlohmann::json to_json(const LogitModel& m) {
  return {{"standardizer", to_json(m.standardizer)},
          {"intercept", m.intercept},
          {"coefficients", to_json(m.coefficients)},
          {"iterations", m.iterations},
          {"gradient_norm", m.gradient_norm},
          {"converged", m.converged}};
}

LogitModel logit_model_from_json(const nlohmann::json& j) {
  LogitModel m;
  m.standardizer = standardizer_from_json(j.at("standardizer"));
  m.intercept = j.at("intercept").get<double>();
  m.coefficients = vector_from_json(j.at("coefficients"));
  m.iterations = j.at("iterations").get<std::size_t>();
  m.gradient_norm = j.at("gradient_norm").get<double>();
  m.converged = j.at("converged").get<bool>();
  return m;
}

}  // namespace bidscreen
