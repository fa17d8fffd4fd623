#include "bidscreen/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "bidscreen/csv.hpp"
#include "bidscreen/error.hpp"
#include "bidscreen/parallel.hpp"
#include "bidscreen/rng.hpp"

namespace bidscreen {
namespace {

constexpr std::uint64_t kSplitTag = 0x73706c6974ULL;
constexpr std::uint64_t kModelTag = 0x6d6f64656cULL;
constexpr std::uint64_t kPermuteTag = 0x7065726dULL;

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string optional_csv(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

}  // namespace

std::optional<double> metric_value(const Metrics& m, std::string_view name) {
  if (name == "ccr") return m.ccr;
  if (name == "precision") return m.precision;
  if (name == "recall") return m.recall;
  if (name == "f1") return m.f1;
  if (name == "fpr") return m.fpr;
  throw Error(ErrorKind::InvalidConfig, "unknown metric '" + std::string(name) + "'");
}

Metrics compute_metrics(std::span<const Prediction> predictions, double threshold) {
  if (predictions.empty()) throw Error(ErrorKind::EmptyInput, "no predictions to evaluate");
  Metrics m;
  for (const auto& p : predictions) {
    const bool flagged = p.probability >= threshold;
    if (flagged) {
      (p.label == 1 ? m.tp : m.fp) += 1;
    } else {
      (p.label == 1 ? m.fn : m.tn) += 1;
    }
  }
  m.ccr = ratio(m.tp + m.tn, predictions.size());
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.fpr = ratio(m.fp, m.fp + m.tn);
  // 2PR/(P+R) equals 2tp/(2tp+fp+fn) whenever it is defined; the count form
  // is exact. P + R = 0 (tp = 0) leaves the harmonic mean undefined.
  if (m.precision && m.recall && m.tp > 0) {
    m.f1 = static_cast<double>(2 * m.tp) / static_cast<double>(2 * m.tp + m.fp + m.fn);
  }
  return m;
}

std::vector<Prediction> predictions_for(const ModelArtifact& model, const LabeledExamples& data) {
  const auto p = predict_proba(model, data.x);
  std::vector<Prediction> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = {p[i], data.y[i]};
  return out;
}

SplitIndices split_indices(std::span<const int> y, double ratio_train, std::uint64_t seed) {
  if (!(ratio_train > 0 && ratio_train <= 1))
    throw Error(ErrorKind::InvalidConfig, "split ratio must lie in (0, 1]");
  if (y.empty()) throw Error(ErrorKind::EmptyInput, "no examples to split");

  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i] == 1 ? 1 : 0].push_back(i);

  // Largest-remainder allocation of round(ratio * n) training rows.
  const auto n = static_cast<double>(y.size());
  const auto total_train = static_cast<std::size_t>(std::floor(ratio_train * n + 0.5));
  std::array<std::size_t, 2> quota{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (int c = 0; c < 2; ++c) {
    const double exact = ratio_train * static_cast<double>(by_class[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(quota[c]);
    assigned += quota[c];
  }
  while (assigned < total_train) {
    // Ties go to the larger class, then class 0.
    int best = remainder[1] > remainder[0] ||
                       (remainder[1] == remainder[0] && by_class[1].size() > by_class[0].size())
                   ? 1
                   : 0;
    if (quota[best] >= by_class[best].size()) best = 1 - best;
    ++quota[best];
    remainder[best] = -1;
    ++assigned;
  }

  SplitIndices out;
  for (int c = 0; c < 2; ++c) {
    auto rows = by_class[c];
    Rng rng = make_rng(seed, {kSplitTag, static_cast<std::uint64_t>(c)});
    std::shuffle(rows.begin(), rows.end(), rng);
    out.train.insert(out.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    out.test.insert(out.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(quota[c]), rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());

  for (int c = 0; c < 2; ++c) {
    const auto in_train = quota[c];
    const auto in_test = by_class[c].size() - quota[c];
    if (in_train == 0 || in_test == 0) {
      throw Error(ErrorKind::EmptyClass, "class " + std::to_string(c) + " has " + std::to_string(in_train) +
                                             " training and " + std::to_string(in_test) + " test examples");
    }
  }
  return out;
}

std::pair<LabeledExamples, LabeledExamples> split(const LabeledExamples& data, double ratio_train,
                                                  std::uint64_t seed) {
  const auto s = split_indices(data.y, ratio_train, seed);
  return {data.subset(s.train), data.subset(s.test)};
}

double nearest_rank(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::EmptyInput, "percentile of an empty sample");
  const auto n = static_cast<double>(sorted.size());
  // A tiny slack keeps q*n that is an integer in exact arithmetic from
  // rounding up past it.
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

IntervalReport resample_intervals(const LabeledExamples& data, const ModelSpec& spec, std::size_t replicates,
                                  double ratio_train, double alpha, std::uint64_t seed, double threshold,
                                  const TrainOptions& options) {
  if (replicates < 2) throw Error(ErrorKind::InvalidConfig, "resampling needs at least 2 replicates");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorKind::InvalidConfig, "alpha must lie in (0, 1)");

  std::vector<Metrics> results(replicates);
  const unsigned threads = resolve_threads(options.threads);
  // Replicates run in parallel; each trains single-threaded.
  TrainOptions inner;
  inner.threads = threads > 1 ? 1 : options.threads;
  parallel_for(replicates, threads, [&](std::size_t b) {
    const auto [train_set, test_set] = split(data, ratio_train, derive_seed(seed, {kSplitTag, b}));
    nlohmann::json config = spec.config.is_null() ? nlohmann::json::object() : spec.config;
    config["seed"] = derive_seed(seed, {kModelTag, b});
    if (threads > 1) config["threads"] = 1;
    const auto model = train(spec.family, config, train_set, inner);
    results[b] = compute_metrics(predictions_for(model, test_set), threshold);
  });

  IntervalReport report;
  report.replicates = replicates;
  report.ratio = ratio_train;
  report.alpha = alpha;
  report.seed = seed;
  report.threshold = threshold;
  for (const auto& name : kMetricNames) {
    std::vector<double> values;
    for (const auto& m : results) {
      if (auto v = metric_value(m, name)) values.push_back(*v);
    }
    if (values.empty()) continue;
    std::sort(values.begin(), values.end());
    Interval iv;
    iv.lower = nearest_rank(values, alpha / 2);
    iv.median = nearest_rank(values, 0.5);
    iv.upper = nearest_rank(values, 1 - alpha / 2);
    iv.defined = values.size();
    report.metrics.emplace(name, iv);
  }
  return report;
}

std::vector<SweepPoint> threshold_sweep(std::span<const Prediction> predictions, double from, double to,
                                        double step) {
  if (predictions.empty()) throw Error(ErrorKind::EmptyInput, "no predictions to sweep");
  if (!(step > 0) || !(from > 0) || !(to < 1) || from > to)
    throw Error(ErrorKind::InvalidThresholds, "sweep grid must satisfy 0 < from <= to < 1 and step > 0");
  const auto points = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
  std::vector<SweepPoint> out;
  out.reserve(points);
  for (std::size_t k = 0; k < points; ++k) {
    // Round to 1e-9 so grid values are the decimals a reader expects.
    const double t = std::round((from + static_cast<double>(k) * step) * 1e9) / 1e9;
    const auto m = compute_metrics(predictions, t);
    out.push_back({t, m.ccr, m.fpr});
  }
  return out;
}

Importance permutation_importance(const ModelArtifact& model, const LabeledExamples& test, ImportanceMetric metric,
                                  std::size_t repeats, std::uint64_t seed, double threshold) {
  if (test.size() == 0) throw Error(ErrorKind::EmptyInput, "importance needs a non-empty test set");
  if (repeats == 0) throw Error(ErrorKind::InvalidConfig, "importance needs at least one repeat");

  const auto score = [&](const Eigen::MatrixXd& x) {
    const auto p = predict_proba(model, x);
    std::vector<Prediction> preds(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) preds[i] = {p[i], test.y[i]};
    const auto m = compute_metrics(preds, threshold);
    const auto v = metric == ImportanceMetric::ccr ? m.ccr : m.f1;
    return v.value_or(0.0);
  };

  const double base = score(test.x);
  Importance out;
  out.names = feature_names(test.mode);
  if (out.names.size() != test.features()) {
    // Hand-built designs that do not follow a tender feature layout.
    out.names.clear();
    for (std::size_t j = 0; j < test.features(); ++j) out.names.push_back("x" + std::to_string(j + 1));
  }
  out.raw.assign(test.features(), 0.0);
  const auto n = static_cast<std::size_t>(test.x.rows());
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < test.features(); ++j) {
    Eigen::MatrixXd x = test.x;
    double drop = 0;
    for (std::size_t r = 0; r < repeats; ++r) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng rng = make_rng(seed, {kPermuteTag, j, r});
      std::shuffle(perm.begin(), perm.end(), rng);
      const auto col = static_cast<Eigen::Index>(j);
      for (std::size_t i = 0; i < n; ++i)
        x(static_cast<Eigen::Index>(i), col) = test.x(static_cast<Eigen::Index>(perm[i]), col);
      drop += base - score(x);
    }
    out.raw[j] = drop / static_cast<double>(repeats);
  }
  const double top = *std::max_element(out.raw.begin(), out.raw.end());
  if (!(top > 0)) {
    out.zero_everywhere = true;
    return out;
  }
  out.normalized.resize(out.raw.size());
  for (std::size_t j = 0; j < out.raw.size(); ++j) out.normalized[j] = out.raw[j] / top;
  return out;
}

nlohmann::json to_json(const Metrics& m) {
  return {{"ccr", optional_json(m.ccr)},
          {"precision", optional_json(m.precision)},
          {"recall", optional_json(m.recall)},
          {"f1", optional_json(m.f1)},
          {"fpr", optional_json(m.fpr)},
          {"confusion", {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}}}};
}

nlohmann::json to_json(const IntervalReport& r) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [name, iv] : r.metrics) {
    metrics[name] = {{"lower", iv.lower}, {"median", iv.median}, {"upper", iv.upper}, {"defined", iv.defined}};
  }
  return {{"metrics", metrics},     {"replicates", r.replicates}, {"ratio", r.ratio},
          {"alpha", r.alpha},       {"seed", r.seed},             {"threshold", r.threshold}};
}

nlohmann::json to_json(const std::vector<SweepPoint>& sweep) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : sweep)
    out.push_back({{"threshold", p.threshold}, {"ccr", optional_json(p.ccr)}, {"fpr", optional_json(p.fpr)}});
  return out;
}

nlohmann::json to_json(const Importance& imp) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t j = 0; j < imp.names.size(); ++j) {
    features.push_back({{"feature", imp.names[j]},
                        {"raw", imp.raw[j]},
                        {"relative", imp.zero_everywhere ? nlohmann::json(nullptr) : nlohmann::json(imp.normalized[j])}});
  }
  return {{"features", features}, {"zero_everywhere", imp.zero_everywhere}};
}

nlohmann::json to_json(const EvaluationReport& r) {
  return {{"point_metrics", to_json(r.point_metrics)},
          {"intervals", r.intervals ? to_json(*r.intervals) : nlohmann::json(nullptr)},
          {"sweep", to_json(r.sweep)},
          {"importances", to_json(r.importances)},
          {"config", r.config}};
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& sweep) {
  csv::write_row(out, {"threshold", "ccr", "fpr"});
  for (const auto& p : sweep) csv::write_row(out, {csv::format_double(p.threshold), optional_csv(p.ccr), optional_csv(p.fpr)});
}

void write_importance_csv(std::ostream& out, const Importance& imp) {
  csv::write_row(out, {"feature", "raw", "relative"});
  for (std::size_t j = 0; j < imp.names.size(); ++j) {
    csv::write_row(out, {imp.names[j], csv::format_double(imp.raw[j]),
                         imp.zero_everywhere ? std::string() : csv::format_double(imp.normalized[j])});
  }
}

}  // namespace bidscreen
