// bidscreen: command-line front end for the screening engine.
//
// Exit status: 0 success, 1 domain or I/O error, 2 usage error.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "bidscreen/csv.hpp"
#include "bidscreen/data.hpp"
#include "bidscreen/error.hpp"
#include "bidscreen/evaluation.hpp"
#include "bidscreen/models/artifact.hpp"
#include "bidscreen/pipeline.hpp"
#include "bidscreen/reporting.hpp"
#include "bidscreen/screens.hpp"
#include "bidscreen/service.hpp"
#include "bidscreen/simulate.hpp"
#include "bidscreen/store.hpp"

namespace fs = std::filesystem;
using namespace bidscreen;

namespace {

struct Options {
  std::string input;
  std::string output;
  std::string model;
  std::string family = "random_forest";
  std::string config;
  std::optional<std::uint64_t> seed;
  double threshold = 0.5;
  double threshold_high = 0.7;
  std::size_t replicates = 0;
  bool json = false;
  unsigned threads = 0;

  // ingest
  std::string delimiter = ",";
  std::vector<std::string> columns;
  // screens
  std::string policy = "cap";
  bool kstest_centered = false;
  // simulate
  std::optional<std::size_t> n_tenders;
  // evaluate / importance
  double ratio = 0.75;
  double alpha = 0.05;
  std::size_t repeats = 10;
  std::string sweep_csv;
  std::string importance_csv;
  // screen
  std::string bids;
  // report
  std::size_t min_group_size = 0;
  std::size_t min_suspicious = 3;
  std::size_t top = 10;
  std::string verdicts_csv;
  // store / serve
  std::string store;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  std::string static_dir;
};

/// A JSON file path, or an inline JSON object when the text starts with '{'.
nlohmann::json read_json_file(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  if (path.front() == '{') {
    try {
      return nlohmann::json::parse(path);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::InvalidConfig, std::string("inline config: ") + e.what());
    }
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, path + ": " + e.what());
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to `path`, or to stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "short write to " + path);
}

ScreenOptions screen_options(const Options& o) {
  ScreenOptions s;
  s.policy = parse_degeneracy_policy(o.policy);
  s.kstest_centered = o.kstest_centered;
  return s;
}

CsvSchema csv_schema(const Options& o) {
  CsvSchema schema;
  if (o.delimiter.size() != 1) throw Error(ErrorKind::InvalidConfig, "--delimiter must be one character");
  schema.delimiter = o.delimiter == "\\t" ? '\t' : o.delimiter[0];
  for (const auto& c : o.columns) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidConfig, "--column expects canonical=header, got " + c);
    schema.columns[c.substr(0, eq)] = c.substr(eq + 1);
  }
  return schema;
}

Dataset load_dataset(const Options& o) {
  if (o.input.empty()) throw Error(ErrorKind::InvalidConfig, "--input is required");
  return wrangle(ingest_csv(o.input, csv_schema(o)));
}

ModelArtifact load_model(const Options& o) {
  if (o.model.empty()) throw Error(ErrorKind::InvalidConfig, "--model is required");
  return deserialize(read_text(o.model));
}

Thresholds thresholds(const Options& o) {
  Thresholds t{o.threshold, o.threshold_high};
  t.validate();
  return t;
}

nlohmann::json model_config(const Options& o) {
  auto config = read_json_file(o.config);
  if (o.seed) config["seed"] = *o.seed;
  return config;
}

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "undefined"; }

std::string metrics_table(const Metrics& m) {
  return fmt::format(
      "ccr        {}\nprecision  {}\nrecall     {}\nf1         {}\nfpr        {}\n"
      "confusion  tp={} fp={} fn={} tn={}\n",
      opt(m.ccr), opt(m.precision), opt(m.recall), opt(m.f1), opt(m.fpr), m.tp, m.fp, m.fn, m.tn);
}

std::string importance_table(const Importance& imp) {
  std::vector<std::size_t> order(imp.names.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return imp.raw[a] > imp.raw[b]; });
  std::string out;
  if (imp.zero_everywhere) out += "warning: ZeroImportanceEverywhere: no feature changes the metric; not normalized\n";
  out += fmt::format("{:<16} {:>10} {:>10}\n", "feature", "raw", "relative");
  for (auto j : order) {
    out += fmt::format("{:<16} {:>10.4f} {:>10}\n", imp.names[j], imp.raw[j],
                       imp.zero_everywhere ? "-" : fmt::format("{:.3f}", imp.normalized[j]));
  }
  return out;
}

std::string sweep_table(const std::vector<SweepPoint>& sweep) {
  std::string out = fmt::format("{:>9} {:>8} {:>8}\n", "threshold", "ccr", "fpr");
  for (const auto& p : sweep) out += fmt::format("{:>9.2f} {:>8} {:>8}\n", p.threshold, opt(p.ccr), opt(p.fpr));
  return out;
}

// ---- subcommands -----------------------------------------------------------

void run_ingest(const Options& o) {
  const auto raw = ingest_csv(o.input, csv_schema(o));
  const auto clean = wrangle(raw);
  std::ostringstream csv_text;
  write_csv(csv_text, clean);
  if (!o.output.empty()) emit(o.output, csv_text.str());
  std::size_t bids = 0;
  for (const auto& t : clean.tenders) bids += t.bids.size();
  if (o.json) {
    std::cout << nlohmann::json{{"ingested_tenders", raw.tenders.size()},
                                {"tenders", clean.tenders.size()},
                                {"bids", bids},
                                {"wrangling_log", to_json(clean.wrangling_log)}}
                     .dump()
              << '\n';
  } else {
    if (o.output.empty()) std::cout << csv_text.str();
    std::cerr << fmt::format("ingested {} tenders; kept {} ({} bids); dropped {}; collapsed {} variants\n",
                             raw.tenders.size(), clean.tenders.size(), bids, clean.wrangling_log.dropped_tenders,
                             clean.wrangling_log.collapsed_variants);
  }
}

void run_simulate(const Options& o) {
  auto config = sim_config_from_json(read_json_file(o.config));
  if (o.seed) config.seed = *o.seed;
  if (o.n_tenders) config.n_tenders = *o.n_tenders;
  config.validate();
  const auto data = generate(config);
  std::ostringstream csv_text;
  write_csv(csv_text, data);
  emit(o.output, csv_text.str());
  if (o.json) {
    std::size_t cartel = 0;
    for (const auto& t : data.tenders) cartel += t.label == Label::cartel ? 1 : 0;
    std::cout << nlohmann::json{{"tenders", data.tenders.size()}, {"cartel", cartel}, {"config", to_json(config)}}.dump()
              << '\n';
  } else if (!o.output.empty() && o.output != "-") {
    std::cerr << fmt::format("wrote {} simulated tenders to {}\n", data.tenders.size(), o.output);
  }
}

void run_screens(const Options& o) {
  const auto data = load_dataset(o);
  const auto options = screen_options(o);
  if (o.json) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& t : data.tenders) {
      auto j = to_json(compute_screens(t, options));
      j["tender_id"] = t.tender_id;
      rows.push_back(std::move(j));
    }
    const auto text = rows.dump() + "\n";
    if (!o.output.empty()) {
      emit(o.output, text);
    } else {
      std::cout << text;
    }
    return;
  }
  std::ostringstream out;
  write_screens_csv(out, data, options);
  emit(o.output, out.str());
}

void run_train(const Options& o) {
  const auto data = load_dataset(o);
  const auto family = parse_family(o.family);
  const auto examples = make_examples(data, default_feature_mode(family), screen_options(o));
  const auto model = train(family, model_config(o), examples, TrainOptions{o.threads});
  const auto text = serialize(model);
  const auto id = content_id(text);
  if (!o.output.empty()) emit(o.output, text);
  if (!o.store.empty()) RunStore(o.store).put_model(model);
  if (o.json) {
    std::cout << nlohmann::json{{"model_id", id},
                                {"family", to_string(family)},
                                {"examples", examples.size()},
                                {"training_config", model.training_config}}
                     .dump()
              << '\n';
  } else {
    if (o.output.empty() && o.store.empty()) std::cout << text;
    if (const auto* cart = std::get_if<CartModel>(&model.parameters)) {
      std::cerr << render_tree(cart->tree, feature_names(model.feature_mode));
    }
    std::cerr << fmt::format("trained {} on {} examples; model id {}\n", to_string(family), examples.size(), id);
  }
}

void run_evaluate(const Options& o) {
  const auto data = load_dataset(o);
  EvaluationReport report;
  if (!o.model.empty()) {
    // Fixed model: score it on the whole input.
    const auto model = load_model(o);
    const auto examples = make_examples(data, model.feature_mode, screen_options(o));
    const auto predictions = predictions_for(model, examples);
    report.point_metrics = compute_metrics(predictions, o.threshold);
    report.sweep = threshold_sweep(predictions);
    report.importances = permutation_importance(model, examples, ImportanceMetric::ccr, o.repeats,
                                                o.seed.value_or(7), o.threshold);
    report.config = {{"model_id", model_id(model)}, {"threshold", o.threshold}, {"examples", examples.size()}};
  } else {
    const auto family = parse_family(o.family);
    const auto examples = make_examples(data, default_feature_mode(family), screen_options(o));
    EvaluateOptions eo;
    eo.ratio = o.ratio;
    eo.seed = o.seed.value_or(7);
    eo.replicates = o.replicates;
    eo.alpha = o.alpha;
    eo.threshold = o.threshold;
    eo.importance_repeats = o.repeats;
    eo.threads = o.threads;
    report = evaluate(examples, ModelSpec{family, read_json_file(o.config)}, eo);
  }
  const auto j = to_json(report);
  if (!o.output.empty()) emit(o.output, j.dump(2) + "\n");
  if (!o.sweep_csv.empty()) {
    std::ostringstream s;
    write_sweep_csv(s, report.sweep);
    emit(o.sweep_csv, s.str());
  }
  if (!o.importance_csv.empty()) {
    std::ostringstream s;
    write_importance_csv(s, report.importances);
    emit(o.importance_csv, s.str());
  }
  if (!o.store.empty()) RunStore(o.store).put_report(j, "evaluation");
  if (o.json) {
    std::cout << j.dump() << '\n';
    return;
  }
  std::string out = "Test-set metrics at threshold " + fmt::format("{}", o.threshold) + "\n" +
                    metrics_table(report.point_metrics);
  if (report.intervals) {
    out += fmt::format("\n{:.0f}% percentile intervals over {} splits\n", 100 * (1 - report.intervals->alpha),
                       report.intervals->replicates);
    for (const auto& [name, iv] : report.intervals->metrics)
      out += fmt::format("{:<10} [{:.3f}; {:.3f}]  median {:.3f}\n", name, iv.lower, iv.upper, iv.median);
  }
  const auto at = [&](double t) {
    for (const auto& p : report.sweep)
      if (std::abs(p.threshold - t) < 1e-9) return p;
    return SweepPoint{};
  };
  out += fmt::format("\nfpr at 0.5: {}   fpr at 0.7: {}\n", opt(at(0.5).fpr), opt(at(0.7).fpr));
  std::cout << out;
}

void run_sweep(const Options& o) {
  const auto data = load_dataset(o);
  const auto model = load_model(o);
  const auto examples = make_examples(data, model.feature_mode, screen_options(o));
  const auto sweep = threshold_sweep(predictions_for(model, examples));
  if (o.json) {
    std::cout << to_json(sweep).dump() << '\n';
    if (o.output.empty()) return;
  }
  if (!o.output.empty()) {
    std::ostringstream s;
    write_sweep_csv(s, sweep);
    emit(o.output, s.str());
  } else {
    std::cout << sweep_table(sweep);
  }
}

void run_importance(const Options& o) {
  const auto data = load_dataset(o);
  const auto model = load_model(o);
  const auto examples = make_examples(data, model.feature_mode, screen_options(o));
  const auto imp =
      permutation_importance(model, examples, ImportanceMetric::ccr, o.repeats, o.seed.value_or(7), o.threshold);
  if (!o.output.empty()) {
    std::ostringstream s;
    write_importance_csv(s, imp);
    emit(o.output, s.str());
  }
  if (o.json) {
    std::cout << to_json(imp).dump() << '\n';
  } else if (o.output.empty()) {
    std::cout << importance_table(imp);
  }
  if (imp.zero_everywhere) std::cerr << "warning: ZeroImportanceEverywhere\n";
}

void run_screen(const Options& o) {
  const auto model = load_model(o);
  const auto id = model_id(model);
  const auto t = thresholds(o);
  if (!o.bids.empty()) {
    Tender tender;
    std::size_t k = 0;
    std::stringstream ss(o.bids);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto v = csv::parse_double(item);
      if (!v) throw Error(ErrorKind::UnparsableRow, "--bids: cannot parse '" + item + "'");
      if (!(*v > 0)) throw Error(ErrorKind::NonPositiveBid, "--bids: non-positive amount " + item);
      tender.bids.push_back(Bid{"", "B" + std::to_string(++k), *v, std::nullopt});
    }
    const auto r = screen_tender(tender, &model, t, screen_options(o));
    nlohmann::json j = {{"screens", to_json(r.screens)},
                        {"probability", *r.probability},
                        {"light", to_string(*r.light)},
                        {"model_id", id},
                        {"thresholds", {{"low", t.low}, {"high", t.high}}}};
    if (!r.tree_path.empty()) j["tree_path"] = r.tree_path;
    if (o.json) {
      std::cout << j.dump() << '\n';
      return;
    }
    std::string out;
    for (std::size_t s = 0; s < kScreenCount; ++s) {
      const auto& v = r.screens.values[s];
      out += fmt::format("{:<8} {}\n", kScreenNames[s], v ? fmt::format("{:.6g}", *v) : "undefined");
    }
    for (const auto& step : r.tree_path) out += "path     " + step + "\n";
    out += fmt::format("p={:.4f} light={} model={}\n", *r.probability, to_string(*r.light), id);
    std::cout << out;
    return;
  }
  const auto data = load_dataset(o);
  const auto verdicts = screen_dataset(data, model, id, t, screen_options(o));
  std::ostringstream s;
  write_verdicts_csv(s, verdicts);
  if (o.json) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& v : verdicts) list.push_back(to_json(v));
    std::cout << nlohmann::json{{"model_id", id}, {"verdicts", list}}.dump() << '\n';
    if (!o.output.empty()) emit(o.output, s.str());
    return;
  }
  emit(o.output, s.str());
}

void run_report(const Options& o) {
  const auto data = load_dataset(o);
  const auto model = load_model(o);
  const auto id = model_id(model);
  ReportOptions ro;
  ro.thresholds = thresholds(o);
  ro.min_group_size = o.min_group_size;
  ro.min_suspicious = o.min_suspicious;
  ro.top_clusters = o.top;
  auto verdicts = screen_dataset(data, model, id, ro.thresholds, screen_options(o));
  const auto report = build_report(data.tenders, std::move(verdicts), id, ro);
  const auto j = to_json(report);
  if (!o.output.empty()) emit(o.output, j.dump(2) + "\n");
  if (!o.verdicts_csv.empty()) {
    std::ostringstream s;
    write_verdicts_csv(s, report.verdicts);
    emit(o.verdicts_csv, s.str());
  }
  if (!o.store.empty()) RunStore(o.store).put_report(j, "screening");
  if (o.json) {
    std::cout << j.dump() << '\n';
  } else {
    std::cout << render_report(report);
  }
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

void run_serve(const Options& o) {
  if (o.store.empty()) throw Error(ErrorKind::InvalidConfig, "--store is required");
  ServiceConfig config;
  config.store = o.store;
  config.host = o.host;
  config.port = o.port;
  if (!o.token.empty()) config.token = o.token;
  else if (const char* env = std::getenv("BIDSCREEN_TOKEN"); env && *env) config.token = env;
  config.thresholds = thresholds(o);
  if (!o.model.empty()) config.default_model = o.model;
  config.screen_options = screen_options(o);
  config.report.min_group_size = o.min_group_size;
  config.report.min_suspicious = o.min_suspicious;
  config.report.top_clusters = o.top;
  if (!o.static_dir.empty()) config.static_dir = o.static_dir;
  Service service(config);
  const int port = service.bind();
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << fmt::format("serving store {} on http://{}:{}\n", o.store, o.host, port);
  std::cerr.flush();
  service.listen();
  g_service = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bidscreen: collusion screening for procurement auctions"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&](CLI::App* c) {
    c->add_flag("--json", o.json, "Machine-readable JSON on stdout");
  };
  const auto data_in = [&](CLI::App* c, bool required) {
    auto* in = c->add_option("--input", o.input, "Tender CSV (tender_id, firm_id, bid_value, ...)");
    if (required) in->required();
    c->add_option("--delimiter", o.delimiter, "CSV field delimiter")->capture_default_str();
    c->add_option("--column", o.columns, "Column mapping canonical=header (repeatable)");
    c->add_option("--policy", o.policy, "Zero-denominator policy: strict, cap or drop")->capture_default_str();
    c->add_flag("--kstest-centered", o.kstest_centered, "Centre bids before the KS statistic");
  };
  const auto thresholds_opts = [&](CLI::App* c) {
    c->add_option("--threshold", o.threshold, "Probability threshold for 'suspicious'")->capture_default_str();
    c->add_option("--threshold-high", o.threshold_high, "Probability threshold for 'very suspicious'")
        ->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "Ingest and wrangle a tender CSV");
  data_in(ingest, true);
  ingest->add_option("--output", o.output, "Write the wrangled CSV here");
  common(ingest);

  auto* simulate = app.add_subcommand("simulate", "Generate labeled synthetic tenders");
  simulate->add_option("--output", o.output, "CSV output (stdout if omitted)");
  simulate->add_option("--config", o.config, "JSON simulation config (file or inline object)");
  simulate->add_option("--seed", o.seed, "Master seed");
  simulate->add_option("--n-tenders", o.n_tenders, "Number of tenders");
  common(simulate);

  auto* screens = app.add_subcommand("screens", "Compute the eight bid screens per tender");
  data_in(screens, true);
  screens->add_option("--output", o.output, "Screens CSV (stdout if omitted)");
  common(screens);

  auto* train_cmd = app.add_subcommand("train", "Train a classifier on labeled tenders");
  data_in(train_cmd, true);
  train_cmd->add_option("--family", o.family, "logit, lasso_logit, cart, random_forest, gradient_boosting, "
                                               "neural_net or super_learner")
      ->capture_default_str();
  train_cmd->add_option("--config", o.config, "JSON hyperparameters (file or inline object)");
  train_cmd->add_option("--seed", o.seed, "Training seed");
  train_cmd->add_option("--output", o.output, "Model file");
  train_cmd->add_option("--store", o.store, "Also add the model to this run store");
  train_cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  common(train_cmd);

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Split, train and evaluate; or score a fixed model");
  data_in(evaluate_cmd, true);
  evaluate_cmd->add_option("--family", o.family, "Model family")->capture_default_str();
  evaluate_cmd->add_option("--model", o.model, "Score this model file instead of training");
  evaluate_cmd->add_option("--config", o.config, "JSON hyperparameters (file or inline object)");
  evaluate_cmd->add_option("--seed", o.seed, "Split and training seed (default 7)");
  evaluate_cmd->add_option("--replicates", o.replicates, "Resampled splits for intervals (0 = none)");
  evaluate_cmd->add_option("--ratio", o.ratio, "Training share")->capture_default_str();
  evaluate_cmd->add_option("--alpha", o.alpha, "Interval level is 1 - alpha")->capture_default_str();
  evaluate_cmd->add_option("--threshold", o.threshold, "Classification threshold")->capture_default_str();
  evaluate_cmd->add_option("--repeats", o.repeats, "Permutations per feature")->capture_default_str();
  evaluate_cmd->add_option("--output", o.output, "Evaluation report JSON");
  evaluate_cmd->add_option("--sweep-csv", o.sweep_csv, "Threshold sweep CSV");
  evaluate_cmd->add_option("--importance-csv", o.importance_csv, "Permutation importance CSV");
  evaluate_cmd->add_option("--store", o.store, "Also add the report to this run store");
  evaluate_cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  common(evaluate_cmd);

  auto* sweep = app.add_subcommand("sweep", "CCR and FPR over thresholds 0.50..0.95");
  data_in(sweep, true);
  sweep->add_option("--model", o.model, "Model file")->required();
  sweep->add_option("--output", o.output, "Sweep CSV");
  common(sweep);

  auto* importance = app.add_subcommand("importance", "Permutation importance on labeled tenders");
  data_in(importance, true);
  importance->add_option("--model", o.model, "Model file")->required();
  importance->add_option("--repeats", o.repeats, "Permutations per feature")->capture_default_str();
  importance->add_option("--seed", o.seed, "Permutation seed (default 7)");
  importance->add_option("--threshold", o.threshold, "Classification threshold")->capture_default_str();
  importance->add_option("--output", o.output, "Importance CSV");
  common(importance);

  auto* screen = app.add_subcommand("screen", "Traffic-light verdicts for one tender or a CSV");
  data_in(screen, false);
  screen->add_option("--model", o.model, "Model file")->required();
  screen->add_option("--bids", o.bids, "Comma-separated bid amounts of one tender");
  screen->add_option("--output", o.output, "Verdict CSV (stdout if omitted)");
  thresholds_opts(screen);
  common(screen);

  auto* report = app.add_subcommand("report", "Summary, cluster, interaction and suspicioucy tables");
  data_in(report, true);
  report->add_option("--model", o.model, "Model file")->required();
  thresholds_opts(report);
  report->add_option("--min-group-size", o.min_group_size, "Hide cluster groups smaller than this");
  report->add_option("--min-suspicious", o.min_suspicious, "Interaction-matrix eligibility")->capture_default_str();
  report->add_option("--top", o.top, "Suspicioucy clusters to list")->capture_default_str();
  report->add_option("--output", o.output, "Screening report JSON");
  report->add_option("--verdicts-csv", o.verdicts_csv, "Per-tender verdict CSV");
  report->add_option("--store", o.store, "Also add the report to this run store");
  common(report);

  auto* serve = app.add_subcommand("serve", "HTTP JSON service over a run store");
  serve->add_option("--store", o.store, "Run store directory")->required();
  serve->add_option("--host", o.host, "Bind address")->capture_default_str();
  serve->add_option("--port", o.port, "Port (0 = any free port)")->capture_default_str();
  serve->add_option("--token", o.token, "Bearer token (or BIDSCREEN_TOKEN)");
  serve->add_option("--model", o.model, "Default model id (newest stored model if omitted)");
  serve->add_option("--static", o.static_dir, "Directory served under /ui");
  serve->add_option("--policy", o.policy, "Zero-denominator policy")->capture_default_str();
  serve->add_option("--min-suspicious", o.min_suspicious, "Interaction-matrix eligibility")->capture_default_str();
  serve->add_option("--top", o.top, "Suspicioucy clusters to list")->capture_default_str();
  thresholds_opts(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*ingest) run_ingest(o);
    else if (*simulate) run_simulate(o);
    else if (*screens) run_screens(o);
    else if (*train_cmd) run_train(o);
    else if (*evaluate_cmd) run_evaluate(o);
    else if (*sweep) run_sweep(o);
    else if (*importance) run_importance(o);
    else if (*screen) run_screen(o);
    else if (*report) run_report(o);
    else if (*serve) run_serve(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
