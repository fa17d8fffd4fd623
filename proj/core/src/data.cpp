#include "bidscreen/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <tuple>
#include <unordered_map>

#include "bidscreen/csv.hpp"
#include "bidscreen/error.hpp"

namespace bidscreen {
namespace {

std::string lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c == ' ' || c == '\t') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  return std::string(text);
}

std::string row_error(std::size_t line, const std::string& reason) {
  return "row at line " + std::to_string(line) + ": " + reason;
}

}  // namespace

std::string_view to_string(Procedure p) noexcept {
  switch (p) {
    case Procedure::open: return "open";
    case Procedure::invitation: return "invitation";
    case Procedure::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Label l) noexcept {
  switch (l) {
    case Label::cartel: return "cartel";
    case Label::competition: return "competition";
    case Label::unknown: return "unknown";
  }
  return "unknown";
}

Procedure parse_procedure(std::string_view text) noexcept {
  const std::string t = lower(text);
  if (t == "open") return Procedure::open;
  if (t == "invitation" || t == "oninvitation" || t == "invited") return Procedure::invitation;
  return Procedure::unknown;
}

Label parse_label(std::string_view text) noexcept {
  const std::string t = lower(text);
  if (t == "cartel" || t == "collusion" || t == "1") return Label::cartel;
  if (t == "competition" || t == "competitive" || t == "0") return Label::competition;
  return Label::unknown;
}

std::optional<int> Tender::year() const {
  if (date.size() < 4) return std::nullopt;
  for (int i = 0; i < 4; ++i)
    if (!std::isdigit(static_cast<unsigned char>(date[i]))) return std::nullopt;
  if (date.size() > 4 && std::isdigit(static_cast<unsigned char>(date[4]))) return std::nullopt;
  return std::stoi(date.substr(0, 4));
}

std::vector<double> Tender::amounts() const {
  std::vector<double> out;
  out.reserve(bids.size());
  for (const Bid& b : bids) out.push_back(b.amount);
  return out;
}

std::string CsvSchema::header_for(const std::string& canonical) const {
  auto it = columns.find(canonical);
  return it == columns.end() ? canonical : it->second;
}

Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return ingest_csv(in, schema, path.string());
}

Dataset ingest_csv(std::istream& in, const CsvSchema& schema, std::string provenance) {
  csv::Reader reader(in, schema.delimiter);
  auto header = reader.next();
  if (!header) throw Error(ErrorKind::MissingColumn, "empty file, expected a header row");
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0)
    header->front().erase(0, 3);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header->size(); ++i) index.emplace(trim((*header)[i]), i);

  auto column = [&](const char* canonical, bool required) -> std::optional<std::size_t> {
    const std::string name = schema.header_for(canonical);
    auto it = index.find(name);
    if (it == index.end()) {
      if (required) throw Error(ErrorKind::MissingColumn, "required column '" + name + "' not found");
      return std::nullopt;
    }
    return it->second;
  };
  const std::size_t c_tender = *column("tender_id", true);
  const std::size_t c_firm = *column("firm_id", true);
  const std::size_t c_bid = *column("bid_value", true);
  const auto c_date = column("date", false);
  const auto c_region = column("region", false);
  const auto c_procedure = column("procedure", false);
  const auto c_variant = column("variant_id", false);
  const auto c_label = column("label", false);

  Dataset dataset;
  dataset.provenance = std::move(provenance);
  std::unordered_map<std::string, std::size_t> position;
  std::set<std::tuple<std::string, std::string, std::string>> seen;

  while (auto row = reader.next()) {
    const std::size_t line = reader.line();
    if (row->size() != header->size()) {
      throw Error(ErrorKind::UnparsableRow,
                  row_error(line, "expected " + std::to_string(header->size()) + " fields, got " +
                                      std::to_string(row->size())));
    }
    auto field = [&](std::optional<std::size_t> c) { return c ? trim((*row)[*c]) : std::string(); };

    Bid bid;
    bid.tender_id = field(c_tender);
    bid.firm_id = field(c_firm);
    if (bid.tender_id.empty()) throw Error(ErrorKind::UnparsableRow, row_error(line, "empty tender_id"));
    if (bid.firm_id.empty()) throw Error(ErrorKind::UnparsableRow, row_error(line, "empty firm_id"));
    const std::string amount_text = field(c_bid);
    const auto amount = csv::parse_double(amount_text);
    if (!amount || !std::isfinite(*amount))
      throw Error(ErrorKind::UnparsableRow, row_error(line, "bid_value '" + amount_text + "' is not a number"));
    if (*amount <= 0)
      throw Error(ErrorKind::NonPositiveBid, row_error(line, "bid_value " + amount_text + " is not positive"));
    bid.amount = *amount;
    if (std::string v = field(c_variant); !v.empty()) bid.variant_id = std::move(v);

    if (!seen.emplace(bid.tender_id, bid.firm_id, bid.variant_id.value_or("")).second) {
      throw Error(ErrorKind::DuplicateBid,
                  row_error(line, "duplicate (tender, firm, variant) for tender " + bid.tender_id +
                                      ", firm " + bid.firm_id));
    }

    auto [it, inserted] = position.emplace(bid.tender_id, dataset.tenders.size());
    if (inserted) {
      Tender tender;
      tender.tender_id = bid.tender_id;
      tender.date = field(c_date);
      if (std::string r = field(c_region); !r.empty()) tender.region = std::move(r);
      tender.procedure = parse_procedure(field(c_procedure));
      tender.label = parse_label(field(c_label));
      dataset.tenders.push_back(std::move(tender));
    }
    Tender& tender = dataset.tenders[it->second];
    if (tender.label == Label::unknown) tender.label = parse_label(field(c_label));
    tender.bids.push_back(std::move(bid));
  }
  return dataset;
}

Dataset wrangle(const Dataset& dataset) {
  Dataset out;
  out.provenance = dataset.provenance;
  out.wrangling_log = dataset.wrangling_log;
  for (const Tender& tender : dataset.tenders) {
    Tender kept = tender;
    kept.bids.clear();
    std::unordered_map<std::string, std::size_t> by_firm;
    for (const Bid& bid : tender.bids) {
      auto [it, inserted] = by_firm.emplace(bid.firm_id, kept.bids.size());
      if (inserted) {
        kept.bids.push_back(bid);
      } else {
        ++out.wrangling_log.collapsed_variants;
        if (bid.amount < kept.bids[it->second].amount) kept.bids[it->second] = bid;
      }
    }
    if (kept.bids.size() < kMinBids) {
      ++out.wrangling_log.dropped_tenders;
      continue;
    }
    std::stable_sort(kept.bids.begin(), kept.bids.end(),
                     [](const Bid& a, const Bid& b) { return a.amount < b.amount; });
    out.tenders.push_back(std::move(kept));
  }
  return out;
}

void write_csv(std::ostream& out, const Dataset& dataset) {
  csv::write_row(out, {"tender_id", "firm_id", "bid_value", "date", "region", "procedure",
                       "variant_id", "label"});
  for (const Tender& t : dataset.tenders) {
    for (const Bid& b : t.bids) {
      csv::write_row(out, {t.tender_id, b.firm_id, csv::format_double(b.amount), t.date,
                           t.region.value_or(""),
                           t.procedure == Procedure::unknown ? "" : std::string(to_string(t.procedure)),
                           b.variant_id.value_or(""),
                           t.label == Label::unknown ? "" : std::string(to_string(t.label))});
    }
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  write_csv(out, dataset);
}

nlohmann::json to_json(const WranglingLog& log) {
  return {{"dropped_tenders", log.dropped_tenders}, {"collapsed_variants", log.collapsed_variants}};
}

nlohmann::json to_json(const Tender& tender) {
  nlohmann::json bids = nlohmann::json::array();
  for (const Bid& b : tender.bids) {
    nlohmann::json j = {{"firm_id", b.firm_id}, {"amount", b.amount}};
    if (b.variant_id) j["variant_id"] = *b.variant_id;
    bids.push_back(std::move(j));
  }
  return {{"tender_id", tender.tender_id},
          {"date", tender.date},
          {"region", tender.region ? nlohmann::json(*tender.region) : nlohmann::json(nullptr)},
          {"procedure", to_string(tender.procedure)},
          {"label", to_string(tender.label)},
          {"bids", std::move(bids)}};
}

Tender tender_from_json(const nlohmann::json& j) {
  const auto fail = [](const std::string& msg) { throw Error(ErrorKind::SchemaMismatch, msg); };
  if (!j.is_object()) fail("tender must be a JSON object");
  const auto text = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) fail(std::string("'") + key + "' must be a string");
    return j.at(key).get<std::string>();
  };
  Tender t;
  t.tender_id = text("tender_id").value_or("");
  t.date = text("date").value_or("");
  t.region = text("region");
  if (t.region && t.region->empty()) t.region.reset();
  t.procedure = parse_procedure(text("procedure").value_or(""));
  t.label = parse_label(text("label").value_or(""));
  if (!j.contains("bids") || !j.at("bids").is_array()) fail("'bids' must be an array");
  std::size_t k = 0;
  for (const auto& b : j.at("bids")) {
    ++k;
    Bid bid;
    bid.tender_id = t.tender_id;
    if (b.is_number()) {
      bid.firm_id = "B" + std::to_string(k);
      bid.amount = b.get<double>();
    } else if (b.is_object()) {
      if (!b.contains("amount") || !b.at("amount").is_number()) fail("bid " + std::to_string(k) + " needs a numeric 'amount'");
      bid.amount = b.at("amount").get<double>();
      if (b.contains("firm_id")) {
        if (!b.at("firm_id").is_string()) fail("bid " + std::to_string(k) + ": 'firm_id' must be a string");
        bid.firm_id = b.at("firm_id").get<std::string>();
      } else {
        bid.firm_id = "B" + std::to_string(k);
      }
      if (b.contains("variant_id") && !b.at("variant_id").is_null()) {
        if (!b.at("variant_id").is_string()) fail("bid " + std::to_string(k) + ": 'variant_id' must be a string");
        bid.variant_id = b.at("variant_id").get<std::string>();
      }
    } else {
      fail("bid " + std::to_string(k) + " must be a number or an object");
    }
    if (!(bid.amount > 0) || !std::isfinite(bid.amount))
      throw Error(ErrorKind::NonPositiveBid, "bid " + std::to_string(k) + " has non-positive amount");
    t.bids.push_back(std::move(bid));
  }
  return t;
}

}  // namespace bidscreen
