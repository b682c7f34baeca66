#pragma once

#include "umprobe/entropy.hpp"
#include "umprobe/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace umprobe {

enum class Metric { entropy, cond_entropy };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

/// One computation, as stored in the results CSV.
struct ResultRow {
  std::string model_id;
  std::string prompt_id;
  Role role = Role::prompt;
  Modality modality = Modality::text;
  std::optional<int> layer;
  std::string type_tag;
  std::optional<std::int64_t> length_chars;
  Metric metric = Metric::entropy;
  double value = 0.0;
  double sigma = 0.0;
  double alpha = 0.0;
  LogBase log_base = LogBase::two;
  std::int64_t n_effective = 0;
  std::optional<std::uint64_t> seed;

  bool operator==(const ResultRow &) const = default;
};

/// Column order of the results CSV header.
inline constexpr std::string_view kResultsHeader =
    "model_id,prompt_id,role,modality,layer,type_tag,length_chars,metric,"
    "value,sigma,alpha,log_base,n_effective,seed";

/// Doubles are written in shortest round-trip form, so parsing the text back
/// reproduces every value bit for bit.
std::string results_csv(const std::vector<ResultRow> &rows);
std::vector<ResultRow> parse_results_csv(std::string_view text);

void write_results(const std::filesystem::path &path,
                   const std::vector<ResultRow> &rows);
std::vector<ResultRow> read_results(const std::filesystem::path &path);

/// Stable sort by (prompt_id, layer, metric); the embedding layer sorts first.
void sort_canonical(std::vector<ResultRow> &rows);

/// Splits one CSV line honoring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);
std::string quote_csv(std::string_view field);

} // namespace umprobe
