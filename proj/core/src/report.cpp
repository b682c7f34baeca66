#include "umprobe/report.hpp"

#include "umprobe/error.hpp"
#include "umprobe/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace umprobe {

std::string_view to_string(GroupKey key) {
  switch (key) {
  case GroupKey::layer:
    return "layer";
  case GroupKey::modality:
    return "modality";
  case GroupKey::type_tag:
    return "type_tag";
  case GroupKey::length_bucket:
    return "length_bucket";
  case GroupKey::role:
    return "role";
  case GroupKey::metric:
    return "metric";
  }
  return "unknown";
}

GroupKey parse_group_key(std::string_view text) {
  for (const GroupKey key :
       {GroupKey::layer, GroupKey::modality, GroupKey::type_tag,
        GroupKey::length_bucket, GroupKey::role, GroupKey::metric}) {
    if (text == to_string(key))
      return key;
  }
  fail(ErrorKind::invalid_parameter,
       "unknown group key '" + std::string(text) + "'");
}

std::vector<GroupKey> parse_group_keys(std::string_view text) {
  std::vector<GroupKey> keys;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(',', pos);
    if (end == std::string_view::npos)
      end = text.size();
    const auto key = parse_group_key(text.substr(pos, end - pos));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      keys.push_back(key);
    pos = end + 1;
  }
  return keys;
}

std::string length_bucket_label(std::optional<std::int64_t> length_chars,
                                const std::vector<double> &thresholds) {
  if (!length_chars)
    return "na";
  std::size_t bucket = 0;
  while (bucket < thresholds.size() &&
         static_cast<double>(*length_chars) >= thresholds[bucket])
    ++bucket;
  if (thresholds.size() == 2) {
    static constexpr const char *names[] = {"short", "middle", "long"};
    return names[bucket];
  }
  return "b" + std::to_string(bucket);
}

std::vector<double>
default_length_thresholds(const std::vector<ResultRow> &rows) {
  std::optional<std::int64_t> lo, hi;
  for (const auto &r : rows) {
    if (!r.length_chars)
      continue;
    lo = lo ? std::min(*lo, *r.length_chars) : *r.length_chars;
    hi = hi ? std::max(*hi, *r.length_chars) : *r.length_chars;
  }
  if (!lo)
    return {};
  const double span = static_cast<double>(*hi - *lo);
  return {static_cast<double>(*lo) + span / 3.0,
          static_cast<double>(*lo) + 2.0 * span / 3.0};
}

namespace {

KeyPart key_part(const ResultRow &row, GroupKey key,
                 const std::vector<double> &thresholds) {
  switch (key) {
  case GroupKey::layer:
    return row.layer ? KeyPart{std::to_string(*row.layer), *row.layer}
                     : KeyPart{"emb", -1};
  case GroupKey::modality:
    return {std::string(to_string(row.modality)), 0};
  case GroupKey::type_tag:
    return {row.type_tag, 0};
  case GroupKey::length_bucket: {
    std::string label = length_bucket_label(row.length_chars, thresholds);
    long long order = static_cast<long long>(thresholds.size()) + 1;
    if (row.length_chars) {
      order = 0;
      while (static_cast<std::size_t>(order) < thresholds.size() &&
             static_cast<double>(*row.length_chars) >=
                 thresholds[static_cast<std::size_t>(order)])
        ++order;
    }
    return {std::move(label), order};
  }
  case GroupKey::role:
    return {std::string(to_string(row.role)), 0};
  case GroupKey::metric:
    return {std::string(to_string(row.metric)), 0};
  }
  return {};
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string escape_xml(std::string_view text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
    case '&':
      out += "&amp;";
      break;
    case '<':
      out += "&lt;";
      break;
    case '>':
      out += "&gt;";
      break;
    case '"':
      out += "&quot;";
      break;
    default:
      out += c;
    }
  }
  return out;
}

struct Series {
  std::string label;
  std::vector<std::pair<KeyPart, double>> points; // (layer, mean)
};

std::string render_svg(const std::string &title,
                       const std::vector<Series> &series) {
  constexpr double width = 720, height = 420;
  constexpr double left = 70, right = 190, top = 40, bottom = 50;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;

  std::set<KeyPart> layer_set;
  double y_min = INFINITY, y_max = -INFINITY;
  for (const auto &s : series) {
    for (const auto &[layer, mean] : s.points) {
      layer_set.insert(layer);
      y_min = std::min(y_min, mean);
      y_max = std::max(y_max, mean);
    }
  }
  const std::vector<KeyPart> layers(layer_set.begin(), layer_set.end());
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  } else {
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;
  }

  auto x_of = [&](const KeyPart &layer) {
    const auto idx = static_cast<double>(
        std::lower_bound(layers.begin(), layers.end(), layer) - layers.begin());
    return layers.size() == 1
               ? left + plot_w / 2.0
               : left + plot_w * idx / static_cast<double>(layers.size() - 1);
  };
  auto y_of = [&](double v) {
    return top + plot_h * (1.0 - (v - y_min) / (y_max - y_min));
  };

  static constexpr const char *palette[] = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0)
      << "\" height=\"" << fixed(height, 0) << "\" viewBox=\"0 0 "
      << fixed(width, 0) << ' ' << fixed(height, 0) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(left) << "\" y=\"24\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << escape_xml(title) << "</text>\n";
  svg << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top + plot_h)
      << "\" x2=\"" << fixed(left + plot_w) << "\" y2=\"" << fixed(top + plot_h)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(top) << "\" x2=\""
      << fixed(left) << "\" y2=\"" << fixed(top + plot_h)
      << "\" stroke=\"black\"/>\n";

  for (const auto &layer : layers) {
    svg << "<text x=\"" << fixed(x_of(layer)) << "\" y=\""
        << fixed(top + plot_h + 18)
        << "\" font-family=\"sans-serif\" font-size=\"10\" "
           "text-anchor=\"middle\">"
        << escape_xml(layer.text) << "</text>\n";
  }
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = y_min + (y_max - y_min) * tick / 4.0;
    svg << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(y_of(v) + 3)
        << "\" font-family=\"sans-serif\" font-size=\"10\" "
           "text-anchor=\"end\">"
        << fixed(v, 3) << "</text>\n";
  }
  svg << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\""
      << fixed(height - 10)
      << "\" font-family=\"sans-serif\" font-size=\"12\" "
         "text-anchor=\"middle\">layer</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char *color = palette[i % std::size(palette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t p = 0; p < series[i].points.size(); ++p) {
      const auto &[layer, mean] = series[i].points[p];
      svg << (p ? " " : "") << fixed(x_of(layer)) << ',' << fixed(y_of(mean));
    }
    svg << "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(i);
    svg << "<rect x=\"" << fixed(left + plot_w + 16) << "\" y=\""
        << fixed(ly) << "\" width=\"10\" height=\"10\" fill=\"" << color
        << "\"/>\n";
    svg << "<text x=\"" << fixed(left + plot_w + 30) << "\" y=\""
        << fixed(ly + 9) << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << escape_xml(series[i].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

} // namespace

ReportTable aggregate(const std::vector<ResultRow> &rows,
                      const std::vector<GroupKey> &keys,
                      std::vector<double> length_thresholds) {
  if (rows.empty())
    fail(ErrorKind::invalid_input, "cannot aggregate an empty result set");

  ReportTable table;
  table.keys = keys;
  const bool bucketed = std::find(keys.begin(), keys.end(),
                                  GroupKey::length_bucket) != keys.end();
  if (bucketed) {
    table.length_thresholds = length_thresholds.empty()
                                  ? default_length_thresholds(rows)
                                  : std::move(length_thresholds);
    std::sort(table.length_thresholds.begin(), table.length_thresholds.end());
  }

  std::map<std::vector<KeyPart>, std::vector<double>> groups;
  for (const auto &row : rows) {
    std::vector<KeyPart> key;
    key.reserve(keys.size());
    for (const GroupKey k : keys)
      key.push_back(key_part(row, k, table.length_thresholds));
    groups[std::move(key)].push_back(row.value);
  }

  for (auto &[key, values] : groups) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (const double v : values)
      sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (const double v : values)
      ss += (v - mean) * (v - mean);
    const double stdev =
        values.size() > 1
            ? std::sqrt(ss / static_cast<double>(values.size() - 1))
            : 0.0;
    table.groups.push_back({key, mean, stdev, values.size()});
  }
  return table;
}

std::string report_csv(const ReportTable &table) {
  std::ostringstream out;
  for (const GroupKey k : table.keys)
    out << to_string(k) << ',';
  out << "mean,stdev,count\n";
  for (const auto &g : table.groups) {
    for (const auto &part : g.key)
      out << quote_csv(part.text) << ',';
    out << format_double(g.mean) << ',' << format_double(g.stdev) << ','
        << g.count << '\n';
  }
  return out.str();
}

std::vector<std::filesystem::path>
emit_charts(const ReportTable &table, const std::filesystem::path &out_dir) {
  if (table.groups.empty())
    return {};

  const auto layer_it =
      std::find(table.keys.begin(), table.keys.end(), GroupKey::layer);
  if (layer_it == table.keys.end())
    fail(ErrorKind::invalid_parameter, "charts need 'layer' among the group keys");
  const auto layer_idx =
      static_cast<std::size_t>(layer_it - table.keys.begin());
  const auto metric_it =
      std::find(table.keys.begin(), table.keys.end(), GroupKey::metric);
  const bool by_metric = metric_it != table.keys.end();
  const auto metric_idx =
      static_cast<std::size_t>(metric_it - table.keys.begin());

  // chart name -> series label -> series
  std::map<std::string, std::map<std::vector<KeyPart>, Series>> charts;
  for (const auto &g : table.groups) {
    const std::string chart =
        by_metric ? "chart_" + g.key[metric_idx].text : "chart";
    std::vector<KeyPart> series_key;
    std::string label;
    for (std::size_t i = 0; i < g.key.size(); ++i) {
      if (i == layer_idx || (by_metric && i == metric_idx))
        continue;
      series_key.push_back(g.key[i]);
      label += (label.empty() ? "" : " / ") + g.key[i].text;
    }
    auto &s = charts[chart][series_key];
    s.label = label.empty() ? "mean" : label;
    s.points.emplace_back(g.key[layer_idx], g.mean);
  }

  std::vector<std::filesystem::path> written;
  for (const auto &[name, series_map] : charts) {
    std::vector<Series> series;
    for (const auto &[key, s] : series_map) {
      Series sorted = s;
      std::sort(sorted.points.begin(), sorted.points.end());
      series.push_back(std::move(sorted));
    }
    const std::string title =
        name == "chart" ? "mean value by layer"
                        : "mean " + name.substr(6) + " by layer";
    const auto path = out_dir / (name + ".svg");
    atomic_write(path, render_svg(title, series));
    written.push_back(path);
  }
  return written;
}

} // namespace umprobe
