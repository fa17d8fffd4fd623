#include "bidscreen/models/examples.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bidscreen/error.hpp"
#include "bidscreen/rng.hpp"

namespace bidscreen {

std::string_view to_string(FeatureMode mode) noexcept {
  return mode == FeatureMode::raw_screens ? "raw_screens" : "expanded";
}

FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "raw_screens") return FeatureMode::raw_screens;
  if (text == "expanded") return FeatureMode::expanded;
  throw Error(ErrorKind::InvalidConfig, "unknown feature mode '" + std::string(text) + "'");
}

const std::vector<std::string>& feature_names(FeatureMode mode) {
  return mode == FeatureMode::raw_screens ? raw_feature_names() : FeatureVector::names();
}

std::size_t feature_count(FeatureMode mode) {
  return mode == FeatureMode::raw_screens ? kScreenCount : kExpandedCount;
}

std::vector<double> features_for(FeatureMode mode, const ScreenVector& screens) {
  return mode == FeatureMode::raw_screens ? raw_features(screens) : expand_features(screens).values;
}

std::array<std::size_t, 2> LabeledExamples::class_counts() const {
  std::array<std::size_t, 2> counts{0, 0};
  for (int label : y) ++counts[label == 1 ? 1 : 0];
  return counts;
}

LabeledExamples LabeledExamples::subset(std::span<const std::size_t> rows) const {
  LabeledExamples out;
  out.mode = mode;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.reserve(rows.size());
  out.ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    out.y.push_back(y[rows[i]]);
    if (!ids.empty()) out.ids.push_back(ids[rows[i]]);
  }
  return out;
}

std::vector<double> LabeledExamples::row(std::size_t i) const {
  std::vector<double> r(features());
  for (std::size_t j = 0; j < r.size(); ++j)
    r[j] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return r;
}

LabeledExamples make_examples(const Dataset& dataset, FeatureMode mode, const ScreenOptions& options) {
  std::vector<std::vector<double>> rows;
  LabeledExamples out;
  out.mode = mode;
  for (const Tender& t : dataset.tenders) {
    if (t.label == Label::unknown) continue;
    const ScreenVector s = compute_screens(t, options);
    if (!s.usable) continue;
    rows.push_back(features_for(mode, s));
    out.y.push_back(t.label == Label::cartel ? 1 : 0);
    out.ids.push_back(t.tender_id);
  }
  const auto p = static_cast<Eigen::Index>(feature_count(mode));
  out.x.resize(static_cast<Eigen::Index>(rows.size()), p);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < p; ++j) out.x(static_cast<Eigen::Index>(i), j) = rows[i][j];
  return out;
}

void require_both_classes(const LabeledExamples& data, std::size_t min_per_class) {
  const auto counts = data.class_counts();
  if (counts[0] < min_per_class || counts[1] < min_per_class) {
    throw Error(ErrorKind::SingleClassData,
                "need at least " + std::to_string(min_per_class) + " examples per class, got " +
                    std::to_string(counts[0]) + " competition / " + std::to_string(counts[1]) +
                    " cartel");
  }
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  const Eigen::Index p = x.cols();
  const double n = static_cast<double>(x.rows());
  s.mean.resize(p);
  s.scale.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double m = x.col(j).sum() / n;
    double ss = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) ss += (x(i, j) - m) * (x(i, j) - m);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    s.mean[j] = m;
    s.scale[j] = sd > 0 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    z.col(j) = (x.col(j).array() - mean[j]) / scale[j];
  return z;
}

Eigen::VectorXd Standardizer::apply(std::span<const double> row) const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(row.size()));
  for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = (row[static_cast<std::size_t>(j)] - mean[j]) / scale[j];
  return z;
}

std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(ErrorKind::InvalidConfig, "fold count must be positive");
  std::vector<std::size_t> fold(y.size(), 0);
  std::size_t offset = 0;
  for (int label : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i)
      if ((y[i] == 1 ? 1 : 0) == label) members.push_back(i);
    Rng rng = make_rng(seed, {0x666f6c64ULL, static_cast<std::uint64_t>(label)});
    std::shuffle(members.begin(), members.end(), rng);
    // Continue the round-robin across classes so fold sizes stay balanced.
    for (std::size_t r = 0; r < members.size(); ++r) fold[members[r]] = (offset + r) % k;
    offset = (offset + members.size()) % k;
  }
  return fold;
}

double log_loss(std::span<const double> p, std::span<const int> y) {
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbabilityClip, 1.0 - kProbabilityClip);
    total -= y[i] == 1 ? std::log(q) : std::log(1.0 - q);
  }
  return p.empty() ? 0.0 : total / static_cast<double>(p.size());
}

}  // namespace bidscreen
