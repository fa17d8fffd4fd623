#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bidscreen/data.hpp"
#include "bidscreen/screens.hpp"

namespace bidscreen {

/// Raw screens feed the decentralized tree; every other learner sees the
/// expanded squares-and-interactions vector.
enum class FeatureMode { raw_screens, expanded };

std::string_view to_string(FeatureMode mode) noexcept;
FeatureMode parse_feature_mode(std::string_view text);
const std::vector<std::string>& feature_names(FeatureMode mode);
std::size_t feature_count(FeatureMode mode);
std::vector<double> features_for(FeatureMode mode, const ScreenVector& screens);

/// Design matrix (one row per example) with 0/1 labels, 1 = cartel.
struct LabeledExamples {
  Eigen::MatrixXd x;
  std::vector<int> y;
  std::vector<std::string> ids;
  FeatureMode mode = FeatureMode::expanded;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t features() const noexcept { return static_cast<std::size_t>(x.cols()); }
  std::array<std::size_t, 2> class_counts() const;
  LabeledExamples subset(std::span<const std::size_t> rows) const;
  std::vector<double> row(std::size_t i) const;
};

/// Labeled, usable tenders only; unknown labels and policy-dropped tenders
/// are skipped.
LabeledExamples make_examples(const Dataset& dataset, FeatureMode mode,
                              const ScreenOptions& options = {});

/// Throws SingleClassData unless each class has at least `min_per_class` rows.
void require_both_classes(const LabeledExamples& data, std::size_t min_per_class = 1);

/// Per-column affine map to mean 0, sd 1 (constant columns keep scale 1).
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd apply(std::span<const double> row) const;

  bool operator==(const Standardizer&) const = default;
};

/// Stratified fold id in [0, k) per example; deterministic in seed.
std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t k, std::uint64_t seed);

/// Clipped binary log-loss, averaged.
double log_loss(std::span<const double> p, std::span<const int> y);
inline constexpr double kProbabilityClip = 1e-6;

}  // namespace bidscreen
