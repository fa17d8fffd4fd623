#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bidscreen/data.hpp"
#include "bidscreen/models/artifact.hpp"
#include "bidscreen/reporting.hpp"

namespace bidscreen {

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);
/// Content-addressed id: the first 16 hex digits of the SHA-256.
std::string content_id(std::string_view bytes);
/// Id of a model artifact; equal artifacts always get equal ids.
std::string model_id(const ModelArtifact& model);

enum class FlagStatus { open, reviewed };
std::string_view to_string(FlagStatus s) noexcept;
FlagStatus parse_flag_status(std::string_view text);

struct EscalationFlag {
  std::string id;
  std::string tender_id;
  std::string manager_id;
  std::string note;
  std::string created_at;  // UTC, ISO 8601
  FlagStatus status = FlagStatus::open;

  bool operator==(const EscalationFlag&) const = default;
};

nlohmann::json to_json(const EscalationFlag& f);
EscalationFlag flag_from_json(const nlohmann::json& j);

/// A tender submitted to the service, with its latest screening result.
struct ScreenedTender {
  Tender tender;
  nlohmann::json screens = nlohmann::json::object();
  std::optional<Verdict> verdict;
  Thresholds thresholds;
  std::vector<std::string> tree_path;
};

nlohmann::json to_json(const ScreenedTender& t);
ScreenedTender screened_tender_from_json(const nlohmann::json& j);

struct IndexEntry {
  std::string id;
  std::string kind;  // "model", "report", "dataset"
  std::string label;  // family for models, report kind for reports, provenance for datasets

  bool operator==(const IndexEntry&) const = default;
};

/// Directory-backed store:
///   {root}/index.json            ids of everything below
///   {root}/models/{id}.json      serialized artifacts (never rewritten)
///   {root}/reports/{id}.json     evaluation and screening reports
///   {root}/datasets/{id}.csv     raw datasets
///   {root}/flags.jsonl           append-only flag events, latest per id wins
///   {root}/tenders.jsonl         append-only screened tenders, latest per id wins
/// All methods are thread-safe; writes are serialized.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  std::string put_model(const ModelArtifact& model);
  ModelArtifact get_model(const std::string& id) const;
  std::vector<IndexEntry> models() const;

  std::string put_report(const nlohmann::json& report, const std::string& kind);
  nlohmann::json get_report(const std::string& id) const;
  std::vector<IndexEntry> reports() const;

  std::string put_dataset(const Dataset& dataset);
  Dataset get_dataset(const std::string& id) const;
  std::vector<IndexEntry> datasets() const;

  void put_tender(const ScreenedTender& tender);
  std::optional<ScreenedTender> tender(const std::string& tender_id) const;
  /// In order of first submission.
  std::vector<ScreenedTender> tenders() const;

  /// Throws Conflict if (tender_id, manager_id) already has an open flag.
  EscalationFlag create_flag(const std::string& tender_id, const std::string& manager_id, const std::string& note);
  /// Throws NotFound for an unknown id; reopening conflicts like creation.
  EscalationFlag update_flag(const std::string& id, std::optional<FlagStatus> status,
                             std::optional<std::string> note);
  std::vector<EscalationFlag> flags() const;

 private:
  void load();
  void write_index() const;
  std::vector<IndexEntry> entries(std::string_view kind) const;
  void add_entry(IndexEntry entry);

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::vector<IndexEntry> index_;
  std::vector<ScreenedTender> tenders_;
  std::vector<EscalationFlag> flags_;
};

}  // namespace bidscreen
