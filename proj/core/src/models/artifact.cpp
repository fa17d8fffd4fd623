#include "bidscreen/models/artifact.hpp"

#include <algorithm>

#include "bidscreen/error.hpp"

namespace bidscreen {

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::logit: return "logit";
    case Family::lasso_logit: return "lasso_logit";
    case Family::cart: return "cart";
    case Family::random_forest: return "random_forest";
    case Family::gradient_boosting: return "gradient_boosting";
    case Family::neural_net: return "neural_net";
    case Family::super_learner: return "super_learner";
  }
  return "logit";
}

Family parse_family(std::string_view text) {
  for (Family f : {Family::logit, Family::lasso_logit, Family::cart, Family::random_forest,
                   Family::gradient_boosting, Family::neural_net, Family::super_learner}) {
    if (to_string(f) == text) return f;
  }
  throw Error(ErrorKind::InvalidConfig, "unknown model family '" + std::string(text) + "'");
}

FeatureMode default_feature_mode(Family family) noexcept {
  return family == Family::cart ? FeatureMode::raw_screens : FeatureMode::expanded;
}

ModelArtifact train(Family family, const nlohmann::json& config_in, const LabeledExamples& data,
                    const TrainOptions& options) {
  const nlohmann::json config = config_in.is_null() ? nlohmann::json::object() : config_in;
  if (!config.is_object()) throw Error(ErrorKind::InvalidConfig, "model config must be a JSON object");
  ModelArtifact a;
  a.family = family;
  a.feature_mode = data.mode;
  a.feature_count = data.features();
  switch (family) {
    case Family::logit: {
      const auto c = logit_config_from_json(config);
      a.training_config = to_json(c);
      a.parameters = fit_logit(data, c);
      break;
    }
    case Family::lasso_logit: {
      const auto c = lasso_config_from_json(config);
      a.training_config = to_json(c);
      a.parameters = fit_lasso_logit(data, c);
      break;
    }
    case Family::cart: {
      const auto c = cart_config_from_json(config);
      a.training_config = to_json(c);
      a.parameters = fit_cart(data, c);
      break;
    }
    case Family::random_forest: {
      auto c = forest_config_from_json(config);
      if (!config.contains("threads")) c.threads = options.threads;
      a.training_config = to_json(c);
      a.parameters = fit_random_forest(data, c);
      break;
    }
    case Family::gradient_boosting: {
      const auto c = boosting_config_from_json(config);
      a.training_config = to_json(c);
      a.parameters = fit_gradient_boosting(data, c);
      break;
    }
    case Family::neural_net: {
      const auto c = neural_net_config_from_json(config);
      a.training_config = to_json(c);
      a.parameters = fit_neural_net(data, c);
      break;
    }
    case Family::super_learner: {
      auto c = super_learner_config_from_json(config);
      if (!config.contains("threads")) c.threads = options.threads;
      a.training_config = to_json(c);
      a.parameters = fit_super_learner(data, c);
      break;
    }
  }
  return a;
}

double predict_proba(const ModelArtifact& model, std::span<const double> features) {
  if (features.size() != model.feature_count) {
    throw Error(ErrorKind::SchemaMismatch, "model expects " + std::to_string(model.feature_count) +
                                               " features, got " + std::to_string(features.size()));
  }
  const double p = std::visit([&](const auto& m) { return predict(m, features); }, model.parameters);
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> predict_proba(const ModelArtifact& model, const Eigen::MatrixXd& x) {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  std::vector<double> row(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[static_cast<std::size_t>(j)] = x(i, j);
    out[static_cast<std::size_t>(i)] = predict_proba(model, row);
  }
  return out;
}

int classify(const ModelArtifact& model, std::span<const double> features, double threshold) {
  if (!(threshold > 0 && threshold < 1))
    throw Error(ErrorKind::InvalidThresholds, "classification threshold must lie in (0, 1)");
  return predict_proba(model, features) >= threshold ? 1 : 0;
}

nlohmann::json to_json(const ModelArtifact& model) {
  nlohmann::json params = std::visit([](const auto& m) { return to_json(m); }, model.parameters);
  return {{"schema_version", model.schema_version},
          {"family", to_string(model.family)},
          {"feature_mode", to_string(model.feature_mode)},
          {"feature_count", model.feature_count},
          {"training_config", model.training_config},
          {"parameters", std::move(params)}};
}

ModelArtifact model_from_json(const nlohmann::json& j) {
  try {
    ModelArtifact a;
    a.schema_version = j.at("schema_version").get<int>();
    if (a.schema_version != kModelSchemaVersion) {
      throw Error(ErrorKind::SchemaMismatch,
                  "unsupported model schema version " + std::to_string(a.schema_version));
    }
    a.family = parse_family(j.at("family").get<std::string>());
    a.feature_mode = parse_feature_mode(j.at("feature_mode").get<std::string>());
    a.feature_count = j.at("feature_count").get<std::size_t>();
    a.training_config = j.at("training_config");
    const auto& p = j.at("parameters");
    switch (a.family) {
      case Family::logit: a.parameters = logit_model_from_json(p); break;
      case Family::lasso_logit: a.parameters = lasso_model_from_json(p); break;
      case Family::cart: a.parameters = cart_model_from_json(p); break;
      case Family::random_forest: a.parameters = forest_model_from_json(p); break;
      case Family::gradient_boosting: a.parameters = boosting_model_from_json(p); break;
      case Family::neural_net: a.parameters = neural_net_model_from_json(p); break;
      case Family::super_learner: a.parameters = super_learner_model_from_json(p); break;
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("malformed model document: ") + e.what());
  }
}

std::string serialize(const ModelArtifact& model) { return to_json(model).dump() + "\n"; }

ModelArtifact deserialize(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("model is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace bidscreen
