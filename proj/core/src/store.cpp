#include "bidscreen/store.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "bidscreen/error.hpp"

namespace bidscreen {
namespace fs = std::filesystem;
namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write-then-rename so readers never observe a half-written file.
void write_file_atomic(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void append_line(const fs::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorKind::Io, "cannot append to " + path.string());
  out << line << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

template <typename F>
void for_each_jsonl(const fs::path& path, F&& f) {
  if (!fs::exists(path)) return;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Io, fmt::format("{} line {}: {}", path.string(), number, e.what()));
    }
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool valid_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; });
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Io, "SHA-256 digest failed");
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string content_id(std::string_view bytes) { return sha256_hex(bytes).substr(0, 16); }

std::string model_id(const ModelArtifact& model) { return content_id(serialize(model)); }

std::string_view to_string(FlagStatus s) noexcept { return s == FlagStatus::open ? "open" : "reviewed"; }

FlagStatus parse_flag_status(std::string_view text) {
  if (text == "open") return FlagStatus::open;
  if (text == "reviewed") return FlagStatus::reviewed;
  throw Error(ErrorKind::InvalidConfig, "unknown flag status '" + std::string(text) + "'");
}

nlohmann::json to_json(const EscalationFlag& f) {
  return {{"id", f.id},           {"tender_id", f.tender_id},   {"manager_id", f.manager_id},
          {"note", f.note},       {"created_at", f.created_at}, {"status", to_string(f.status)}};
}

EscalationFlag flag_from_json(const nlohmann::json& j) {
  EscalationFlag f;
  j.at("id").get_to(f.id);
  j.at("tender_id").get_to(f.tender_id);
  j.at("manager_id").get_to(f.manager_id);
  j.at("note").get_to(f.note);
  j.at("created_at").get_to(f.created_at);
  f.status = parse_flag_status(j.at("status").get<std::string>());
  return f;
}

nlohmann::json to_json(const ScreenedTender& t) {
  nlohmann::json j = {{"tender", to_json(t.tender)},
                      {"screens", t.screens},
                      {"thresholds", {{"low", t.thresholds.low}, {"high", t.thresholds.high}}},
                      {"tree_path", t.tree_path}};
  if (t.verdict) {
    j["probability"] = t.verdict->probability;
    j["light"] = to_string(t.verdict->light);
    j["model_id"] = t.verdict->model_id;
  } else {
    j["probability"] = nullptr;
    j["light"] = nullptr;
    j["model_id"] = nullptr;
  }
  return j;
}

ScreenedTender screened_tender_from_json(const nlohmann::json& j) {
  ScreenedTender t;
  t.tender = tender_from_json(j.at("tender"));
  for (auto& b : t.tender.bids) b.tender_id = t.tender.tender_id;
  t.screens = j.at("screens");
  t.thresholds.low = j.at("thresholds").at("low").get<double>();
  t.thresholds.high = j.at("thresholds").at("high").get<double>();
  j.at("tree_path").get_to(t.tree_path);
  if (!j.at("probability").is_null()) {
    t.verdict = Verdict{t.tender.tender_id, j.at("probability").get<double>(),
                        parse_light(j.at("light").get<std::string>()), j.at("model_id").get<std::string>()};
  }
  return t;
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  for (const char* sub : {"models", "reports", "datasets"}) {
    fs::create_directories(root_ / sub, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + (root_ / sub).string() + ": " + ec.message());
  }
  load();
}

void RunStore::load() {
  const fs::path index_path = root_ / "index.json";
  if (fs::exists(index_path)) {
    try {
      const auto j = nlohmann::json::parse(read_file(index_path));
      for (const auto& e : j.at("entries")) {
        IndexEntry entry{e.at("id").get<std::string>(), e.at("kind").get<std::string>(),
                         e.at("label").get<std::string>()};
        const fs::path file = entry.kind == "model"    ? root_ / "models" / (entry.id + ".json")
                              : entry.kind == "report" ? root_ / "reports" / (entry.id + ".json")
                                                       : root_ / "datasets" / (entry.id + ".csv");
        // Entries whose file vanished are dropped so the index never dangles.
        if (fs::exists(file)) index_.push_back(std::move(entry));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Io, "corrupt store index " + index_path.string() + ": " + e.what());
    }
  }
  for_each_jsonl(root_ / "tenders.jsonl", [&](const nlohmann::json& j) {
    auto t = screened_tender_from_json(j);
    const auto it = std::find_if(tenders_.begin(), tenders_.end(),
                                 [&](const ScreenedTender& s) { return s.tender.tender_id == t.tender.tender_id; });
    if (it == tenders_.end()) {
      tenders_.push_back(std::move(t));
    } else {
      *it = std::move(t);
    }
  });
  for_each_jsonl(root_ / "flags.jsonl", [&](const nlohmann::json& j) {
    auto f = flag_from_json(j);
    const auto it = std::find_if(flags_.begin(), flags_.end(), [&](const EscalationFlag& g) { return g.id == f.id; });
    if (it == flags_.end()) {
      flags_.push_back(std::move(f));
    } else {
      *it = std::move(f);
    }
  });
}

void RunStore::write_index() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : index_) entries.push_back({{"id", e.id}, {"kind", e.kind}, {"label", e.label}});
  write_file_atomic(root_ / "index.json", nlohmann::json{{"entries", entries}}.dump(2) + "\n");
}

void RunStore::add_entry(IndexEntry entry) {
  const bool known = std::any_of(index_.begin(), index_.end(),
                                 [&](const IndexEntry& e) { return e.id == entry.id && e.kind == entry.kind; });
  if (known) return;
  index_.push_back(std::move(entry));
  write_index();
}

std::vector<IndexEntry> RunStore::entries(std::string_view kind) const {
  std::shared_lock lock(mutex_);
  std::vector<IndexEntry> out;
  for (const auto& e : index_) {
    if (e.kind == kind) out.push_back(e);
  }
  return out;
}

std::string RunStore::put_model(const ModelArtifact& model) {
  const std::string text = serialize(model);
  const std::string id = content_id(text);
  std::unique_lock lock(mutex_);
  const fs::path path = root_ / "models" / (id + ".json");
  // Content addressing means an existing file already holds these bytes.
  if (!fs::exists(path)) write_file_atomic(path, text);
  add_entry({id, "model", std::string(to_string(model.family))});
  return id;
}

ModelArtifact RunStore::get_model(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const fs::path path = root_ / "models" / (id + ".json");
  if (!valid_id(id) || !fs::exists(path)) throw Error(ErrorKind::NotFound, "no model '" + id + "'");
  return deserialize(read_file(path));
}

std::vector<IndexEntry> RunStore::models() const { return entries("model"); }

std::string RunStore::put_report(const nlohmann::json& report, const std::string& kind) {
  const std::string text = report.dump(2) + "\n";
  const std::string id = content_id(text);
  std::unique_lock lock(mutex_);
  const fs::path path = root_ / "reports" / (id + ".json");
  if (!fs::exists(path)) write_file_atomic(path, text);
  add_entry({id, "report", kind});
  return id;
}

nlohmann::json RunStore::get_report(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const fs::path path = root_ / "reports" / (id + ".json");
  if (!valid_id(id) || !fs::exists(path)) throw Error(ErrorKind::NotFound, "no report '" + id + "'");
  return nlohmann::json::parse(read_file(path));
}

std::vector<IndexEntry> RunStore::reports() const { return entries("report"); }

std::string RunStore::put_dataset(const Dataset& dataset) {
  std::ostringstream ss;
  write_csv(ss, dataset);
  const std::string text = ss.str();
  const std::string id = content_id(text);
  std::unique_lock lock(mutex_);
  const fs::path path = root_ / "datasets" / (id + ".csv");
  if (!fs::exists(path)) write_file_atomic(path, text);
  add_entry({id, "dataset", dataset.provenance});
  return id;
}

Dataset RunStore::get_dataset(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const fs::path path = root_ / "datasets" / (id + ".csv");
  if (!valid_id(id) || !fs::exists(path)) throw Error(ErrorKind::NotFound, "no dataset '" + id + "'");
  return ingest_csv(path);
}

std::vector<IndexEntry> RunStore::datasets() const { return entries("dataset"); }

void RunStore::put_tender(const ScreenedTender& tender) {
  std::unique_lock lock(mutex_);
  append_line(root_ / "tenders.jsonl", to_json(tender).dump());
  const auto it = std::find_if(tenders_.begin(), tenders_.end(), [&](const ScreenedTender& s) {
    return s.tender.tender_id == tender.tender.tender_id;
  });
  if (it == tenders_.end()) {
    tenders_.push_back(tender);
  } else {
    *it = tender;
  }
}

std::optional<ScreenedTender> RunStore::tender(const std::string& tender_id) const {
  std::shared_lock lock(mutex_);
  for (const auto& t : tenders_) {
    if (t.tender.tender_id == tender_id) return t;
  }
  return std::nullopt;
}

std::vector<ScreenedTender> RunStore::tenders() const {
  std::shared_lock lock(mutex_);
  return tenders_;
}

EscalationFlag RunStore::create_flag(const std::string& tender_id, const std::string& manager_id,
                                     const std::string& note) {
  std::unique_lock lock(mutex_);
  for (const auto& f : flags_) {
    if (f.tender_id == tender_id && f.manager_id == manager_id && f.status == FlagStatus::open) {
      throw Error(ErrorKind::Conflict, "tender '" + tender_id + "' already has open flag " + f.id + " by '" +
                                           manager_id + "'");
    }
  }
  EscalationFlag f{fmt::format("flag-{:06}", flags_.size() + 1), tender_id, manager_id, note, utc_now(),
                   FlagStatus::open};
  append_line(root_ / "flags.jsonl", to_json(f).dump());
  flags_.push_back(f);
  return f;
}

EscalationFlag RunStore::update_flag(const std::string& id, std::optional<FlagStatus> status,
                                     std::optional<std::string> note) {
  std::unique_lock lock(mutex_);
  const auto it = std::find_if(flags_.begin(), flags_.end(), [&](const EscalationFlag& f) { return f.id == id; });
  if (it == flags_.end()) throw Error(ErrorKind::NotFound, "no flag '" + id + "'");
  EscalationFlag updated = *it;
  if (status) updated.status = *status;
  if (note) updated.note = *note;
  if (updated.status == FlagStatus::open && it->status != FlagStatus::open) {
    for (const auto& f : flags_) {
      if (f.id != id && f.tender_id == updated.tender_id && f.manager_id == updated.manager_id &&
          f.status == FlagStatus::open) {
        throw Error(ErrorKind::Conflict, "tender '" + updated.tender_id + "' already has open flag " + f.id);
      }
    }
  }
  append_line(root_ / "flags.jsonl", to_json(updated).dump());
  *it = updated;
  return updated;
}

std::vector<EscalationFlag> RunStore::flags() const {
  std::shared_lock lock(mutex_);
  return flags_;
}

}  // namespace bidscreen
