#include "umprobe/results.hpp"

#include "umprobe/error.hpp"
#include "umprobe/io.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <tuple>

namespace umprobe {

std::string_view to_string(Metric metric) {
  return metric == Metric::entropy ? "entropy" : "cond_entropy";
}

Metric parse_metric(std::string_view text) {
  if (text == "entropy")
    return Metric::entropy;
  if (text == "cond_entropy")
    return Metric::cond_entropy;
  fail(ErrorKind::format, "unknown metric '" + std::string(text) + "'");
}

std::string quote_csv(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos)
    return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

namespace {

template <typename T> T parse_integer(std::string_view text) {
  T value{};
  const auto [end, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size())
    fail(ErrorKind::format, "not an integer: '" + std::string(text) + "'");
  return value;
}

template <typename T> std::string optional_text(const std::optional<T> &v) {
  return v ? std::to_string(*v) : std::string();
}

} // namespace

std::string results_csv(const std::vector<ResultRow> &rows) {
  std::ostringstream out;
  out << kResultsHeader << '\n';
  for (const auto &r : rows) {
    out << quote_csv(r.model_id) << ',' << quote_csv(r.prompt_id) << ','
        << to_string(r.role) << ',' << to_string(r.modality) << ','
        << optional_text(r.layer) << ',' << quote_csv(r.type_tag) << ','
        << optional_text(r.length_chars) << ',' << to_string(r.metric) << ','
        << format_double(r.value) << ',' << format_double(r.sigma) << ','
        << format_double(r.alpha) << ',' << to_string(r.log_base) << ','
        << r.n_effective << ',' << optional_text(r.seed) << '\n';
  }
  return out.str();
}

std::vector<ResultRow> parse_results_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    if (line.empty() || line.front() == '#')
      continue;
    if (!header_seen) {
      if (line != kResultsHeader)
        fail(ErrorKind::format,
             "results CSV header does not match the expected columns");
      header_seen = true;
      continue;
    }

    const auto f = split_csv_line(line);
    if (f.size() != 14)
      fail(ErrorKind::format, "results CSV line " + std::to_string(line_no) +
                                  " has " + std::to_string(f.size()) +
                                  " fields, expected 14");
    try {
      ResultRow r;
      r.model_id = f[0];
      r.prompt_id = f[1];
      r.role = parse_role(f[2]);
      r.modality = parse_modality(f[3]);
      if (!f[4].empty())
        r.layer = parse_integer<int>(f[4]);
      r.type_tag = f[5];
      if (!f[6].empty())
        r.length_chars = parse_integer<std::int64_t>(f[6]);
      r.metric = parse_metric(f[7]);
      r.value = parse_double(f[8]);
      r.sigma = parse_double(f[9]);
      r.alpha = parse_double(f[10]);
      r.log_base = parse_log_base(f[11]);
      r.n_effective = parse_integer<std::int64_t>(f[12]);
      if (!f[13].empty())
        r.seed = parse_integer<std::uint64_t>(f[13]);
      rows.push_back(std::move(r));
    } catch (const Error &e) {
      fail(ErrorKind::format, "results CSV line " + std::to_string(line_no) +
                                  ": " + e.what());
    }
  }
  if (!header_seen)
    fail(ErrorKind::format, "results CSV is empty");
  return rows;
}

void write_results(const std::filesystem::path &path,
                   const std::vector<ResultRow> &rows) {
  atomic_write(path, results_csv(rows));
}

std::vector<ResultRow> read_results(const std::filesystem::path &path) {
  return parse_results_csv(read_file(path));
}

void sort_canonical(std::vector<ResultRow> &rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ResultRow &a, const ResultRow &b) {
                     const int la = a.layer.value_or(-1);
                     const int lb = b.layer.value_or(-1);
                     return std::tie(a.prompt_id, la, a.metric) <
                            std::tie(b.prompt_id, lb, b.metric);
                   });
}

} // namespace umprobe
