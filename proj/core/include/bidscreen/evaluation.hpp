#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bidscreen/models/artifact.hpp"

namespace bidscreen {

struct Prediction {
  double probability = 0;
  int label = 0;
};

/// Ratios with a zero denominator stay std::nullopt rather than becoming 0.
struct Metrics {
  std::optional<double> ccr;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> fpr;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  bool operator==(const Metrics&) const = default;
};

/// Names accepted by Metrics::get and used as interval keys.
inline const std::vector<std::string> kMetricNames = {"ccr", "precision", "recall", "f1", "fpr"};
std::optional<double> metric_value(const Metrics& m, std::string_view name);

Metrics compute_metrics(std::span<const Prediction> predictions, double threshold = 0.5);
std::vector<Prediction> predictions_for(const ModelArtifact& model, const LabeledExamples& data);

/// Stratified partition without replacement. The training side gets
/// round(ratio * n) rows, spread over the classes by largest remainder.
/// Throws EmptyClass if either side would miss a class.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
SplitIndices split_indices(std::span<const int> y, double ratio, std::uint64_t seed);
std::pair<LabeledExamples, LabeledExamples> split(const LabeledExamples& data, double ratio, std::uint64_t seed);

struct ModelSpec {
  Family family = Family::random_forest;
  nlohmann::json config = nlohmann::json::object();
};

struct Interval {
  double lower = 0;
  double median = 0;
  double upper = 0;
  std::size_t defined = 0;  // replicates where the metric had a denominator
};

struct IntervalReport {
  std::map<std::string, Interval> metrics;
  std::size_t replicates = 0;
  double ratio = 0.75;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  double threshold = 0.5;
};

/// Nearest-rank percentile of an ascending sample: element ceil(q * n), 1-based.
double nearest_rank(std::span<const double> sorted, double q);

/// B random train/test splits without replacement, a fresh model per split,
/// percentile intervals per metric. Replicate b uses seeds derived from
/// (seed, b), so results do not depend on execution order.
IntervalReport resample_intervals(const LabeledExamples& data, const ModelSpec& spec, std::size_t replicates = 2000,
                                  double ratio = 0.75, double alpha = 0.05, std::uint64_t seed = 1,
                                  double threshold = 0.5, const TrainOptions& options = {});

struct SweepPoint {
  double threshold = 0;
  std::optional<double> ccr;
  std::optional<double> fpr;
};

std::vector<SweepPoint> threshold_sweep(std::span<const Prediction> predictions, double from = 0.50,
                                        double to = 0.95, double step = 0.01);

enum class ImportanceMetric { ccr, f1 };

struct Importance {
  std::vector<std::string> names;
  std::vector<double> raw;         // mean metric drop per feature
  std::vector<double> normalized;  // raw / max(raw); empty when zero_everywhere
  bool zero_everywhere = false;
};

/// Mean drop in the metric when one feature column of `test` is permuted,
/// over `repeats` permutations, scaled so the top feature scores 1.
Importance permutation_importance(const ModelArtifact& model, const LabeledExamples& test,
                                  ImportanceMetric metric = ImportanceMetric::ccr, std::size_t repeats = 10,
                                  std::uint64_t seed = 1, double threshold = 0.5);

struct EvaluationReport {
  Metrics point_metrics;
  std::optional<IntervalReport> intervals;
  std::vector<SweepPoint> sweep;
  Importance importances;
  nlohmann::json config;
};

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const IntervalReport& r);
nlohmann::json to_json(const std::vector<SweepPoint>& sweep);
nlohmann::json to_json(const Importance& imp);
nlohmann::json to_json(const EvaluationReport& r);

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& sweep);
void write_importance_csv(std::ostream& out, const Importance& imp);

}  // namespace bidscreen
