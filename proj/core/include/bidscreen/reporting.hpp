#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bidscreen/data.hpp"

namespace bidscreen {

enum class Light { green, suspicious, very_suspicious };

std::string_view to_string(Light light) noexcept;
Light parse_light(std::string_view text);

/// Two-threshold traffic light; requires 0 < low < high < 1.
struct Thresholds {
  double low = 0.5;
  double high = 0.7;

  void validate() const;  // throws InvalidThresholds
  bool operator==(const Thresholds&) const = default;
};

Light traffic_light(double probability, const Thresholds& thresholds = {});

struct Verdict {
  std::string tender_id;
  double probability = 0;
  Light light = Light::green;
  std::string model_id;

  bool operator==(const Verdict&) const = default;
};

Verdict make_verdict(std::string tender_id, double probability, const Thresholds& thresholds,
                     std::string model_id = {});

/// "102 (8.5%)": count plus share of total, rounded half-up to one decimal.
std::string format_count_share(std::size_t count, std::size_t total);
/// "22% (7/32)": integer percentage rounded half-up, then the raw fraction.
std::string format_rate_cell(std::size_t suspicious, std::size_t total);

/// Flagged means probability >= threshold.
struct Summary {
  double threshold = 0.5;
  std::size_t total = 0;
  std::size_t flagged = 0;
  std::size_t not_flagged = 0;

  std::string flagged_text() const { return format_count_share(flagged, total); }
  std::string not_flagged_text() const { return format_count_share(not_flagged, total); }
};

Summary summarize(std::span<const Verdict> verdicts, double threshold);

enum class GroupBy { region, procedure, year };
std::string_view to_string(GroupBy by) noexcept;
GroupBy parse_group_by(std::string_view text);

struct ClusterRow {
  std::string group;  // "unknown" when the metadata is missing
  std::size_t flagged = 0;
  std::size_t total = 0;
};

struct ClusterTable {
  GroupBy group_by = GroupBy::region;
  double threshold = 0.5;
  std::size_t min_group_size = 0;
  std::vector<ClusterRow> rows;  // groups with total >= min_group_size, by name
  ClusterRow overall;            // every verdict, filter ignored
};

/// Verdicts are joined to tenders by id; a verdict with no tender is NotFound.
ClusterTable cluster_breakdown(std::span<const Verdict> verdicts, std::span<const Tender> tenders, GroupBy by,
                               double threshold, std::size_t min_group_size = 0);

struct CellCount {
  std::size_t suspicious = 0;
  std::size_t total = 0;
  bool operator==(const CellCount&) const = default;
};

/// Upper-triangular co-participation counts for eligible firms. Only tenders
/// that have a verdict are counted.
struct InteractionMatrix {
  double threshold = 0.5;
  std::size_t min_suspicious = 3;
  std::vector<std::string> firms;
  std::map<std::pair<std::size_t, std::size_t>, CellCount> cells;  // key (i, j) with i <= j

  /// Symmetric lookup; nullopt when the two firms never bid together.
  std::optional<CellCount> cell(std::size_t i, std::size_t j) const;
};

InteractionMatrix interaction_matrix(std::span<const Tender> tenders, std::span<const Verdict> verdicts,
                                     double threshold, std::size_t min_suspicious = 3);

enum class ClusterMode { with_diagonal, without_diagonal };
std::string_view to_string(ClusterMode mode) noexcept;
ClusterMode parse_cluster_mode(std::string_view text);

struct ClusterRate {
  std::vector<std::string> cluster;  // in the order of the firm list passed in
  ClusterMode mode = ClusterMode::with_diagonal;
  std::size_t suspicious = 0;
  std::size_t total = 0;
  std::optional<double> rate;
  bool degenerate = false;  // empty or single-firm cluster
};

inline constexpr std::size_t kDefaultMaxFirms = 20;

/// Every subset of `firms`: with_diagonal counts tenders with at least one
/// cluster firm, without_diagonal tenders with at least two. Sorted by rate
/// descending (undefined last), then larger total, then cluster names.
std::vector<ClusterRate> suspicioucy_rates(std::span<const std::string> firms, std::span<const Tender> tenders,
                                           std::span<const Verdict> verdicts, double threshold, ClusterMode mode,
                                           std::size_t max_firms = kDefaultMaxFirms);

nlohmann::json to_json(const Verdict& v);
nlohmann::json to_json(const Summary& s);
nlohmann::json to_json(const ClusterTable& t);
nlohmann::json to_json(const InteractionMatrix& m);
nlohmann::json to_json(const ClusterRate& r);
nlohmann::json to_json(std::span<const ClusterRate> rates);

std::string render_summary(std::span<const Summary> rows);
std::string render_cluster_table(const ClusterTable& t);
std::string render_interaction_matrix(const InteractionMatrix& m);
std::string render_suspicioucy(std::span<const ClusterRate> rates, std::size_t limit);

void write_verdicts_csv(std::ostream& out, std::span<const Verdict> verdicts);
void write_cluster_csv(std::ostream& out, const ClusterTable& t);
void write_interaction_csv(std::ostream& out, const InteractionMatrix& m);
void write_suspicioucy_csv(std::ostream& out, std::span<const ClusterRate> rates);

}  // namespace bidscreen
