#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bidscreen/data.hpp"
#include "bidscreen/evaluation.hpp"
#include "bidscreen/models/artifact.hpp"
#include "bidscreen/reporting.hpp"
#include "bidscreen/screens.hpp"

namespace bidscreen {

/// Result of screening one tender's bids.
struct TenderScreening {
  Tender tender;  // wrangled: one bid per firm, ascending
  ScreenVector screens;
  std::optional<double> probability;  // absent when no model was given
  std::optional<Light> light;
  std::vector<std::string> tree_path;  // CART models only
};

/// Collapses variants and sorts like wrangle(); fewer than three remaining
/// bids throws TooFewBids. The tender must be usable under the model's
/// screen policy, else DegenerateTender.
TenderScreening screen_tender(const Tender& tender, const ModelArtifact* model, const Thresholds& thresholds,
                              const ScreenOptions& options = {});

/// Screens every usable tender of a wrangled dataset (unusable ones are skipped).
std::vector<Verdict> screen_dataset(const Dataset& dataset, const ModelArtifact& model, const std::string& id,
                                    const Thresholds& thresholds, const ScreenOptions& options = {});

/// One CSV row per tender: tender_id, n_bids, usable, the eight screens, label.
void write_screens_csv(std::ostream& out, const Dataset& dataset, const ScreenOptions& options = {});

struct EvaluateOptions {
  double ratio = 0.75;
  std::uint64_t seed = 7;
  std::size_t replicates = 0;  // 0 skips resampled intervals
  double alpha = 0.05;
  double threshold = 0.5;
  std::size_t importance_repeats = 10;
  unsigned threads = 0;
};

/// Split, train on the training side, and evaluate on the held-out side.
EvaluationReport evaluate(const LabeledExamples& data, const ModelSpec& spec, const EvaluateOptions& options);

struct ReportOptions {
  Thresholds thresholds;
  std::size_t min_group_size = 0;
  std::size_t min_suspicious = 3;
  std::size_t max_firms = kDefaultMaxFirms;
  std::size_t top_clusters = 10;
};

/// Summary at both thresholds plus cluster, interaction and suspicioucy
/// sections at the low threshold.
struct ScreeningReport {
  std::string model_id;
  Thresholds thresholds;
  std::vector<Verdict> verdicts;
  std::vector<Summary> summaries;
  std::vector<ClusterTable> clusters;
  InteractionMatrix interactions;
  std::vector<ClusterRate> suspicioucy_with;
  std::vector<ClusterRate> suspicioucy_without;
  std::optional<std::string> suspicioucy_error;  // e.g. TooManyFirms
  std::size_t top_clusters = 10;
};

ScreeningReport build_report(std::span<const Tender> tenders, std::vector<Verdict> verdicts,
                             const std::string& model_id, const ReportOptions& options);

nlohmann::json to_json(const ScreeningReport& r);
std::string render_report(const ScreeningReport& r);

}  // namespace bidscreen
