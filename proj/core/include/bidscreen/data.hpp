#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bidscreen {

enum class Procedure { open, invitation, unknown };
enum class Label { cartel, competition, unknown };

std::string_view to_string(Procedure p) noexcept;
std::string_view to_string(Label l) noexcept;
Procedure parse_procedure(std::string_view text) noexcept;
/// Accepts cartel/collusion/1 and competition/competitive/0 (case-insensitive);
/// anything else, including blank, maps to Label::unknown.
Label parse_label(std::string_view text) noexcept;

struct Bid {
  std::string tender_id;
  std::string firm_id;
  double amount = 0;
  std::optional<std::string> variant_id;

  bool operator==(const Bid&) const = default;
};

struct Tender {
  std::string tender_id;
  std::string date;  // ISO-like text as ingested; empty when unknown
  std::optional<std::string> region;
  Procedure procedure = Procedure::unknown;
  std::vector<Bid> bids;
  Label label = Label::unknown;

  /// Leading four-digit year of `date`, if present.
  std::optional<int> year() const;
  std::vector<double> amounts() const;

  bool operator==(const Tender&) const = default;
};

struct WranglingLog {
  std::size_t dropped_tenders = 0;
  std::size_t collapsed_variants = 0;

  bool operator==(const WranglingLog&) const = default;
};

struct Dataset {
  std::vector<Tender> tenders;
  std::string provenance;
  WranglingLog wrangling_log;

  bool operator==(const Dataset&) const = default;
};

/// Column mapping for CSV ingestion. `columns` maps a canonical column name
/// (tender_id, firm_id, bid_value, date, region, procedure, variant_id, label)
/// to the header used in the file; unmapped names are looked up verbatim.
struct CsvSchema {
  char delimiter = ',';
  std::map<std::string, std::string> columns;

  std::string header_for(const std::string& canonical) const;
};

Dataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
Dataset ingest_csv(std::istream& in, const CsvSchema& schema = {},
                   std::string provenance = "stream");

/// Keeps each firm's lowest variant, drops tenders with fewer than three
/// remaining bids and sorts survivors ascending (stable). Counts accumulate
/// into the returned dataset's wrangling_log.
Dataset wrangle(const Dataset& dataset);

inline constexpr std::size_t kMinBids = 3;

/// Writes the canonical CSV schema, one row per bid.
void write_csv(std::ostream& out, const Dataset& dataset);
void write_csv(const std::filesystem::path& path, const Dataset& dataset);

}  // namespace bidscreen

#include <json.hpp>

namespace bidscreen {

nlohmann::json to_json(const WranglingLog& log);
nlohmann::json to_json(const Tender& tender);

/// Inverse of to_json(Tender). `bids` may also hold bare amounts, which get
/// firm ids "B1", "B2", ... in order. Structural problems throw
/// SchemaMismatch; a non-positive amount throws NonPositiveBid.
Tender tender_from_json(const nlohmann::json& j);

}  // namespace bidscreen
