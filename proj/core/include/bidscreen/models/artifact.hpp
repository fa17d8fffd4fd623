#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bidscreen/models/boosting.hpp"
#include "bidscreen/models/cart.hpp"
#include "bidscreen/models/examples.hpp"
#include "bidscreen/models/family.hpp"
#include "bidscreen/models/forest.hpp"
#include "bidscreen/models/lasso.hpp"
#include "bidscreen/models/logit.hpp"
#include "bidscreen/models/neural_net.hpp"
#include "bidscreen/models/super_learner.hpp"

namespace bidscreen {

inline constexpr int kModelSchemaVersion = 1;

/// A trained classifier of any family plus everything needed to reproduce it.
struct ModelArtifact {
  Family family = Family::logit;
  FeatureMode feature_mode = FeatureMode::expanded;
  std::size_t feature_count = 0;
  /// Normalized hyperparameters including the seed.
  nlohmann::json training_config = nlohmann::json::object();
  int schema_version = kModelSchemaVersion;
  std::variant<LogitModel, LassoModel, CartModel, ForestModel, BoostingModel, NeuralNetModel, SuperLearnerModel>
      parameters;
};

struct TrainOptions {
  unsigned threads = 0;
};

/// Feature layout each family expects when driven from tender data.
FeatureMode default_feature_mode(Family family) noexcept;

/// Parses `config` for the family (missing keys take defaults), trains, and
/// records the normalized config in the artifact.
ModelArtifact train(Family family, const nlohmann::json& config, const LabeledExamples& data,
                    const TrainOptions& options = {});

/// Probability of class 1, clipped to [0, 1]. Throws SchemaMismatch when the
/// feature count differs from the training data.
double predict_proba(const ModelArtifact& model, std::span<const double> features);
std::vector<double> predict_proba(const ModelArtifact& model, const Eigen::MatrixXd& x);

/// 1 iff predict_proba >= threshold; threshold must lie in (0, 1).
int classify(const ModelArtifact& model, std::span<const double> features, double threshold);

nlohmann::json to_json(const ModelArtifact& model);
ModelArtifact model_from_json(const nlohmann::json& j);
/// Canonical text form: re-serializing a deserialized artifact is byte-identical.
std::string serialize(const ModelArtifact& model);
ModelArtifact deserialize(std::string_view text);

}  // namespace bidscreen
