#pragma once

#include "umprobe/results.hpp"

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace umprobe {

enum class GroupKey { layer, modality, type_tag, length_bucket, role, metric };

std::string_view to_string(GroupKey key);
GroupKey parse_group_key(std::string_view text);
/// Comma-separated list, e.g. "layer,modality".
std::vector<GroupKey> parse_group_keys(std::string_view text);

/// One component of a group key. `order` is the primary sort key (layer index
/// with -1 for the embedding layer, bucket index for length buckets, 0
/// otherwise) and `text` breaks ties.
struct KeyPart {
  std::string text;
  long long order = 0;

  bool operator==(const KeyPart &) const = default;
  std::strong_ordering operator<=>(const KeyPart &other) const {
    if (const auto c = order <=> other.order; c != 0)
      return c;
    return text.compare(other.text) <=> 0;
  }
};

struct GroupStats {
  std::vector<KeyPart> key;
  double mean = 0.0;
  double stdev = 0.0; // sample standard deviation, 0 for a single row
  std::size_t count = 0;
};

struct ReportTable {
  std::vector<GroupKey> keys;
  std::vector<GroupStats> groups; // sorted by key
  /// Length thresholds in characters used for bucketing (empty if unused).
  std::vector<double> length_thresholds;
};

/// Label of a length bucket: short/middle/long for two thresholds, b<i>
/// otherwise; "na" for rows without a length.
std::string length_bucket_label(std::optional<std::int64_t> length_chars,
                                const std::vector<double> &thresholds);

/// Thresholds splitting [min, max] of the observed lengths into thirds.
std::vector<double> default_length_thresholds(const std::vector<ResultRow> &rows);

/// Groups rows and computes mean, stdev and count per group. Values inside a
/// group are summed in sorted order, so the result does not depend on input
/// row order. Empty `length_thresholds` means data-driven thirds.
ReportTable aggregate(const std::vector<ResultRow> &rows,
                      const std::vector<GroupKey> &keys,
                      std::vector<double> length_thresholds = {});

std::string report_csv(const ReportTable &table);

/// One SVG line chart per metric (or a single chart when metric is not a
/// group key): x is the layer, y the group mean, one polyline per remaining
/// key combination. Requires `layer` among the keys. Returns the files
/// written; an empty table writes nothing.
std::vector<std::filesystem::path>
emit_charts(const ReportTable &table, const std::filesystem::path &out_dir);

} // namespace umprobe
