#include "bidscreen/models/neural_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bidscreen/error.hpp"
#include "bidscreen/models/logit.hpp"
#include "bidscreen/rng.hpp"

namespace bidscreen {
namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Forward {
  Eigen::VectorXd hidden;  // activations, empty without a hidden layer
  double logit = 0;
};

Forward forward(const NeuralNetModel& m, const Eigen::Ref<const Eigen::VectorXd>& z) {
  Forward f;
  if (m.hidden_units() == 0) {
    f.logit = m.output_weights.dot(z) + m.output_bias;
    return f;
  }
  f.hidden = (m.hidden_weights * z + m.hidden_bias).unaryExpr([](double v) { return sigmoid(v); });
  f.logit = m.output_weights.dot(f.hidden) + m.output_bias;
  return f;
}

/// Accumulates d(mean loss)/d(theta) over rows [begin, end) of z.
void accumulate_gradient(const NeuralNetModel& m, const Eigen::MatrixXd& z, std::span<const int> y,
                         std::span<const std::size_t> rows, Eigen::MatrixXd& g_hidden_w, Eigen::VectorXd& g_hidden_b,
                         Eigen::VectorXd& g_out_w, double& g_out_b) {
  g_hidden_w.setZero(m.hidden_weights.rows(), m.hidden_weights.cols());
  g_hidden_b.setZero(m.hidden_bias.size());
  g_out_w.setZero(m.output_weights.size());
  g_out_b = 0;
  const double scale = 1.0 / static_cast<double>(rows.size());
  for (std::size_t r : rows) {
    const Eigen::VectorXd input = z.row(static_cast<Eigen::Index>(r)).transpose();
    const Forward f = forward(m, input);
    const double delta = (sigmoid(f.logit) - (y[r] == 1 ? 1.0 : 0.0)) * scale;
    g_out_b += delta;
    if (m.hidden_units() == 0) {
      g_out_w += delta * input;
      continue;
    }
    g_out_w += delta * f.hidden;
    const Eigen::VectorXd back =
        (delta * m.output_weights.array() * f.hidden.array() * (1.0 - f.hidden.array())).matrix();
    g_hidden_b += back;
    g_hidden_w += back * input.transpose();
  }
}

}  // namespace

std::vector<double> NeuralNetModel::parameters() const {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < hidden_weights.rows(); ++i)
    for (Eigen::Index j = 0; j < hidden_weights.cols(); ++j) out.push_back(hidden_weights(i, j));
  out.insert(out.end(), hidden_bias.data(), hidden_bias.data() + hidden_bias.size());
  out.insert(out.end(), output_weights.data(), output_weights.data() + output_weights.size());
  out.push_back(output_bias);
  return out;
}

void NeuralNetModel::set_parameters(std::span<const double> values) {
  const auto expected = static_cast<std::size_t>(hidden_weights.size() + hidden_bias.size() + output_weights.size() + 1);
  if (values.size() != expected) throw Error(ErrorKind::SchemaMismatch, "parameter vector has the wrong length");
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < hidden_weights.rows(); ++i)
    for (Eigen::Index j = 0; j < hidden_weights.cols(); ++j) hidden_weights(i, j) = values[k++];
  for (Eigen::Index i = 0; i < hidden_bias.size(); ++i) hidden_bias[i] = values[k++];
  for (Eigen::Index i = 0; i < output_weights.size(); ++i) output_weights[i] = values[k++];
  output_bias = values[k];
}

NeuralNetConfig neural_net_config_from_json(const nlohmann::json& j) {
  NeuralNetConfig c;
  if (j.contains("hidden_units")) j.at("hidden_units").get_to(c.hidden_units);
  if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  if (j.contains("learning_rate")) j.at("learning_rate").get_to(c.learning_rate);
  if (j.contains("batch_size")) j.at("batch_size").get_to(c.batch_size);
  if (j.contains("seed")) j.at("seed").get_to(c.seed);
  if (!(c.learning_rate > 0)) throw Error(ErrorKind::InvalidConfig, "learning_rate must be positive");
  if (c.batch_size == 0) throw Error(ErrorKind::InvalidConfig, "batch_size must be positive");
  return c;
}

nlohmann::json to_json(const NeuralNetConfig& c) {
  return {{"hidden_units", c.hidden_units}, {"epochs", c.epochs},  {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},     {"seed", c.seed}};
}

NeuralNetModel fit_neural_net(const LabeledExamples& data, const NeuralNetConfig& config) {
  require_both_classes(data, 1);
  NeuralNetModel m;
  m.standardizer = Standardizer::fit(data.x);
  const Eigen::MatrixXd z = m.standardizer.apply(data.x);
  const auto p = static_cast<Eigen::Index>(data.features());
  const auto h = static_cast<Eigen::Index>(config.hidden_units);

  Rng init = make_rng(config.seed, {0x696e6974ULL});
  auto uniform = [&](double bound) { return std::uniform_real_distribution<double>(-bound, bound)(init); };
  m.hidden_weights.resize(h, p);
  m.hidden_bias = Eigen::VectorXd::Zero(h);
  const double input_bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(p, 1)));
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m.hidden_weights(i, j) = uniform(input_bound);
  const Eigen::Index fan_in = h == 0 ? p : h;
  m.output_weights.resize(fan_in);
  const double output_bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  for (Eigen::Index i = 0; i < fan_in; ++i) m.output_weights[i] = uniform(output_bound);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd g_hw;
  Eigen::VectorXd g_hb, g_ow;
  double g_ob = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle = make_rng(config.seed, {0x65706f6368ULL, epoch});
    std::shuffle(order.begin(), order.end(), shuffle);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      accumulate_gradient(m, z, data.y, std::span<const std::size_t>(order).subspan(start, stop - start), g_hw, g_hb,
                          g_ow, g_ob);
      m.hidden_weights -= config.learning_rate * g_hw;
      m.hidden_bias -= config.learning_rate * g_hb;
      m.output_weights -= config.learning_rate * g_ow;
      m.output_bias -= config.learning_rate * g_ob;
    }
  }
  return m;
}

double predict(const NeuralNetModel& model, std::span<const double> features) {
  const Eigen::VectorXd z = model.standardizer.apply(features);
  return sigmoid(forward(model, z).logit);
}

double batch_loss(const NeuralNetModel& model, const Eigen::MatrixXd& z, std::span<const int> y) {
  double total = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double logit = forward(model, z.row(i).transpose()).logit;
    total += softplus(logit) - (y[static_cast<std::size_t>(i)] == 1 ? logit : 0.0);
  }
  return total / static_cast<double>(z.rows());
}

std::vector<double> batch_gradient(const NeuralNetModel& model, const Eigen::MatrixXd& z, std::span<const int> y) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(z.rows()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Eigen::MatrixXd g_hw;
  Eigen::VectorXd g_hb, g_ow;
  double g_ob = 0;
  accumulate_gradient(model, z, y, rows, g_hw, g_hb, g_ow, g_ob);
  NeuralNetModel g = model;
  g.hidden_weights = g_hw;
  g.hidden_bias = g_hb;
  g.output_weights = g_ow;
  g.output_bias = g_ob;
  return g.parameters();
}

nlohmann::json to_json(const NeuralNetModel& m) {
  std::vector<double> hidden;
  for (Eigen::Index i = 0; i < m.hidden_weights.rows(); ++i)
    for (Eigen::Index j = 0; j < m.hidden_weights.cols(); ++j) hidden.push_back(m.hidden_weights(i, j));
  return {{"standardizer", to_json(m.standardizer)},
          {"hidden_units", m.hidden_weights.rows()},
          {"inputs", m.standardizer.mean.size()},
          {"hidden_weights", hidden},
          {"hidden_bias", to_json(m.hidden_bias)},
          {"output_weights", to_json(m.output_weights)},
          {"output_bias", m.output_bias}};
}

NeuralNetModel neural_net_model_from_json(const nlohmann::json& j) {
  NeuralNetModel m;
  m.standardizer = standardizer_from_json(j.at("standardizer"));
  const auto h = j.at("hidden_units").get<Eigen::Index>();
  const auto p = j.at("inputs").get<Eigen::Index>();
  const auto hidden = j.at("hidden_weights").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(hidden.size()) != h * p)
    throw Error(ErrorKind::SchemaMismatch, "hidden weight count does not match shape");
  m.hidden_weights.resize(h, p);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index c = 0; c < p; ++c) m.hidden_weights(i, c) = hidden[static_cast<std::size_t>(i * p + c)];
  m.hidden_bias = vector_from_json(j.at("hidden_bias"));
  m.output_weights = vector_from_json(j.at("output_weights"));
  m.output_bias = j.at("output_bias").get<double>();
  return m;
}

}  // namespace bidscreen
