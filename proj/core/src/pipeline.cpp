#include "bidscreen/pipeline.hpp"

#include <ostream>
#include <set>

#include <fmt/format.h>

#include "bidscreen/csv.hpp"
#include "bidscreen/error.hpp"
#include "bidscreen/rng.hpp"

namespace bidscreen {
namespace {

constexpr std::uint64_t kImportanceTag = 0x696d70ULL;

}  // namespace

TenderScreening screen_tender(const Tender& tender, const ModelArtifact* model, const Thresholds& thresholds,
                              const ScreenOptions& options) {
  thresholds.validate();
  Dataset single;
  single.tenders.push_back(tender);
  Dataset wrangled = wrangle(single);
  if (wrangled.tenders.empty()) {
    std::set<std::string> firms;
    for (const auto& b : tender.bids) firms.insert(b.firm_id);
    throw Error(ErrorKind::TooFewBids, fmt::format("tender '{}' has {} distinct bidders; at least {} are required",
                                                   tender.tender_id, firms.size(), kMinBids));
  }
  TenderScreening out;
  out.tender = std::move(wrangled.tenders.front());
  out.screens = compute_screens(out.tender, options);
  if (model == nullptr) return out;
  if (!out.screens.usable)
    throw Error(ErrorKind::DegenerateTender, "tender '" + tender.tender_id + "' has undefined screens");
  const auto features = features_for(model->feature_mode, out.screens);
  out.probability = predict_proba(*model, features);
  out.light = traffic_light(*out.probability, thresholds);
  if (const auto* cart = std::get_if<CartModel>(&model->parameters)) {
    out.tree_path = tree_path(cart->tree, feature_names(model->feature_mode), features);
  }
  return out;
}

std::vector<Verdict> screen_dataset(const Dataset& dataset, const ModelArtifact& model, const std::string& id,
                                    const Thresholds& thresholds, const ScreenOptions& options) {
  thresholds.validate();
  std::vector<Verdict> out;
  out.reserve(dataset.tenders.size());
  for (const auto& t : dataset.tenders) {
    const auto screens = compute_screens(t, options);
    if (!screens.usable) continue;
    const double p = predict_proba(model, features_for(model.feature_mode, screens));
    out.push_back(make_verdict(t.tender_id, p, thresholds, id));
  }
  return out;
}

void write_screens_csv(std::ostream& out, const Dataset& dataset, const ScreenOptions& options) {
  csv::Row header = {"tender_id", "n_bids", "usable"};
  for (auto name : kScreenNames) header.emplace_back(name);
  header.emplace_back("label");
  csv::write_row(out, header);
  for (const auto& t : dataset.tenders) {
    const auto s = compute_screens(t, options);
    csv::Row row = {t.tender_id, std::to_string(s.n_bids), s.usable ? "true" : "false"};
    for (const auto& v : s.values) row.push_back(v ? csv::format_double(*v) : std::string());
    row.emplace_back(to_string(t.label));
    csv::write_row(out, row);
  }
}

EvaluationReport evaluate(const LabeledExamples& data, const ModelSpec& spec, const EvaluateOptions& options) {
  nlohmann::json config = spec.config.is_null() ? nlohmann::json::object() : spec.config;
  if (!config.contains("seed")) config["seed"] = options.seed;
  const auto [train_set, test_set] = split(data, options.ratio, options.seed);
  TrainOptions train_options;
  train_options.threads = options.threads;
  const auto model = train(spec.family, config, train_set, train_options);
  const auto predictions = predictions_for(model, test_set);

  EvaluationReport r;
  r.point_metrics = compute_metrics(predictions, options.threshold);
  r.sweep = threshold_sweep(predictions);
  r.importances = permutation_importance(model, test_set, ImportanceMetric::ccr, options.importance_repeats,
                                         derive_seed(options.seed, {kImportanceTag}), options.threshold);
  if (options.replicates > 0) {
    r.intervals = resample_intervals(data, ModelSpec{spec.family, spec.config}, options.replicates, options.ratio,
                                     options.alpha, options.seed, options.threshold, train_options);
  }
  r.config = {{"family", to_string(spec.family)},
              {"model_config", model.training_config},
              {"feature_mode", to_string(data.mode)},
              {"ratio", options.ratio},
              {"seed", options.seed},
              {"replicates", options.replicates},
              {"alpha", options.alpha},
              {"threshold", options.threshold},
              {"importance_repeats", options.importance_repeats},
              {"train_size", train_set.size()},
              {"test_size", test_set.size()}};
  return r;
}

ScreeningReport build_report(std::span<const Tender> tenders, std::vector<Verdict> verdicts,
                             const std::string& model_id, const ReportOptions& options) {
  options.thresholds.validate();
  ScreeningReport r;
  r.model_id = model_id;
  r.thresholds = options.thresholds;
  r.top_clusters = options.top_clusters;
  r.verdicts = std::move(verdicts);
  const double t = options.thresholds.low;
  r.summaries = {summarize(r.verdicts, options.thresholds.low), summarize(r.verdicts, options.thresholds.high)};
  for (auto by : {GroupBy::region, GroupBy::procedure, GroupBy::year})
    r.clusters.push_back(cluster_breakdown(r.verdicts, tenders, by, t, options.min_group_size));
  r.interactions = interaction_matrix(tenders, r.verdicts, t, options.min_suspicious);
  try {
    r.suspicioucy_with = suspicioucy_rates(r.interactions.firms, tenders, r.verdicts, t, ClusterMode::with_diagonal,
                                           options.max_firms);
    r.suspicioucy_without = suspicioucy_rates(r.interactions.firms, tenders, r.verdicts, t,
                                              ClusterMode::without_diagonal, options.max_firms);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::TooManyFirms) throw;
    r.suspicioucy_error = e.what();
  }
  return r;
}

nlohmann::json to_json(const ScreeningReport& r) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts) verdicts.push_back(to_json(v));
  nlohmann::json summaries = nlohmann::json::array();
  for (const auto& s : r.summaries) summaries.push_back(to_json(s));
  nlohmann::json clusters = nlohmann::json::object();
  for (const auto& c : r.clusters) clusters[std::string(to_string(c.group_by))] = to_json(c);
  const auto top = [&](const std::vector<ClusterRate>& rates) {
    const auto n = std::min(rates.size(), r.top_clusters);
    return nlohmann::json{{"enumerated", rates.size()},
                          {"top", to_json(std::span<const ClusterRate>(rates.data(), n))}};
  };
  nlohmann::json suspicioucy = {{"with_diagonal", top(r.suspicioucy_with)},
                                {"without_diagonal", top(r.suspicioucy_without)}};
  if (r.suspicioucy_error) suspicioucy["error"] = *r.suspicioucy_error;
  return {{"model_id", r.model_id},
          {"thresholds", {{"low", r.thresholds.low}, {"high", r.thresholds.high}}},
          {"summary", summaries},
          {"clusters", clusters},
          {"interactions", to_json(r.interactions)},
          {"suspicioucy", suspicioucy},
          {"verdicts", verdicts}};
}

std::string render_report(const ScreeningReport& r) {
  std::string out = fmt::format("Screening report (model {})\n\n", r.model_id);
  out += "Suspicious tenders\n" + render_summary(r.summaries) + "\n";
  for (const auto& c : r.clusters) {
    out += fmt::format("Screening within clusters by {} (threshold {})\n", to_string(c.group_by), c.threshold);
    out += render_cluster_table(c) + "\n";
  }
  out += fmt::format("Firm interactions (threshold {}, at least {} suspicious tenders)\n", r.interactions.threshold,
                     r.interactions.min_suspicious);
  out += render_interaction_matrix(r.interactions) + "\n";
  if (r.suspicioucy_error) {
    out += "Suspicioucy rates skipped: " + *r.suspicioucy_error + "\n";
  } else {
    out += fmt::format("Suspicioucy rates ({} clusters per mode, top {})\n", r.suspicioucy_with.size(),
                       r.top_clusters);
    out += render_suspicioucy(r.suspicioucy_with, r.top_clusters);
    out += render_suspicioucy(r.suspicioucy_without, r.top_clusters);
  }
  return out;
}

}  // namespace bidscreen
