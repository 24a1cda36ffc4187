#include "tesbo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace tesbo {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_number(const std::string& text, const std::string& source, int line) {
  if (text.empty()) throw CsvParseError(source, line, "empty field");
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) throw CsvParseError(source, line, "not a number: '" + text + "'");
  return v;
}

struct Section {
  // (repeat, iteration) → IR
  std::map<std::pair<long, long>, double> regret;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else if (c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

}  // namespace

std::vector<RegretSeries> read_regret_series(std::istream& in, const std::string& source_name) {
  std::vector<std::string> order;
  std::map<std::string, Section> sections;
  std::string current = "unnamed";
  bool have_header = false;
  size_t fields = 0, iteration_col = 0, repeat_col = 0, regret_col = 0;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#", 0) == 0) {
      const std::string key = "# acquisition=";
      if (line.rfind(key, 0) == 0) {
        current = line.substr(key.size());
        if (current.empty()) throw CsvParseError(source_name, number, "empty acquisition name");
        have_header = false;
      }
      continue;
    }
    const std::vector<std::string> cells = split(line);
    if (!have_header) {
      if (cells.size() < 5 || cells[0] != "repeat" || cells[1] != "iteration" || cells[2] != "point_index")
        throw CsvParseError(source_name, number, "expected header starting with repeat,iteration,point_index");
      const auto regret = std::find(cells.begin(), cells.end(), "immediate_regret");
      if (regret == cells.end()) throw CsvParseError(source_name, number, "header lacks immediate_regret");
      fields = cells.size();
      repeat_col = 0;
      iteration_col = 1;
      regret_col = static_cast<size_t>(regret - cells.begin());
      have_header = true;
      if (!sections.count(current)) order.push_back(current);
      sections[current];
      continue;
    }
    if (cells.size() != fields)
      throw CsvParseError(source_name, number,
                          "expected " + std::to_string(fields) + " fields, found " + std::to_string(cells.size()));
    for (const std::string& c : cells) parse_number(c, source_name, number);
    const long repeat = std::lround(parse_number(cells[repeat_col], source_name, number));
    const long iteration = std::lround(parse_number(cells[iteration_col], source_name, number));
    if (iteration < 1) throw CsvParseError(source_name, number, "iteration must be >= 1");
    const double ir = parse_number(cells[regret_col], source_name, number);
    if (ir < 0.0) throw CsvParseError(source_name, number, "negative immediate regret");
    sections[current].regret.emplace(std::make_pair(repeat, iteration), ir);
  }

  std::vector<RegretSeries> out;
  for (const std::string& name : order) {
    const Section& s = sections[name];
    if (s.regret.empty()) continue;
    std::vector<double> sum, count;
    for (const auto& [key, ir] : s.regret) {
      const size_t t = static_cast<size_t>(key.second - 1);
      if (sum.size() <= t) {
        sum.resize(t + 1, 0.0);
        count.resize(t + 1, 0.0);
      }
      sum[t] += ir;
      count[t] += 1.0;
    }
    RegretSeries series{name, {}};
    for (size_t t = 0; t < sum.size(); ++t)
      series.log_mean_ir.push_back(count[t] > 0 ? std::log(sum[t] / count[t]) : std::nan(""));
    out.push_back(std::move(series));
  }
  return out;
}

std::string render_regret_svg(const std::vector<RegretSeries>& series) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  const double width = 720, height = 440, left = 70, right = 170, top = 30, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  size_t max_t = 1;
  double lo = INFINITY, hi = -INFINITY;
  for (const RegretSeries& s : series) {
    max_t = std::max(max_t, s.log_mean_ir.size());
    for (double v : s.log_mean_ir) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = -1.0, hi = 0.0;
  if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
  auto x_of = [&](double t) { return left + (max_t > 1 ? (t - 1) / static_cast<double>(max_t - 1) : 0.5) * pw; };
  auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = lo + (hi - lo) * k / 5.0;
    svg << "<line x1=\"" << fmt(left - 4) << "\" y1=\"" << fmt(y_of(v)) << "\" x2=\"" << fmt(left) << "\" y2=\""
        << fmt(y_of(v)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(y_of(v) + 4) << "\" text-anchor=\"end\">" << fmt(v)
        << "</text>\n";
    const double t = 1.0 + (static_cast<double>(max_t) - 1.0) * k / 5.0;
    svg << "<line x1=\"" << fmt(x_of(t)) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(x_of(t)) << "\" y2=\""
        << fmt(top + ph + 4) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(x_of(t)) << "\" y=\"" << fmt(top + ph + 18) << "\" text-anchor=\"middle\">"
        << std::lround(t) << "</text>\n";
  }
  svg << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(height - 10)
      << "\" text-anchor=\"middle\">iteration</text>\n";
  svg << "<text x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt(top + ph / 2) << ")\">log mean immediate regret</text>\n";

  for (size_t i = 0; i < series.size(); ++i) {
    const std::string color = palette[i % (sizeof palette / sizeof *palette)];
    const std::vector<double>& v = series[i].log_mean_ir;
    std::string points;
    auto flush = [&]() {
      if (!points.empty())
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << points << "\"/>\n";
      points.clear();
    };
    for (size_t t = 0; t < v.size(); ++t) {
      if (!std::isfinite(v[t])) {
        flush();
        continue;
      }
      if (!points.empty()) points += " ";
      points += fmt(x_of(static_cast<double>(t + 1))) + "," + fmt(y_of(v[t]));
    }
    flush();
    const double ly = top + 10 + 20 * static_cast<double>(i);
    svg << "<line x1=\"" << fmt(left + pw + 15) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(left + pw + 40)
        << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(left + pw + 45) << "\" y=\"" << fmt(ly + 4) << "\">" << escape(series[i].acquisition)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const std::vector<std::string>& csv_paths, const std::string& out_path) {
  std::vector<RegretSeries> all;
  for (const std::string& path : csv_paths) {
    std::ifstream in(path);
    if (!in) throw CsvParseError(path, 0, "cannot open file");
    for (RegretSeries& s : read_regret_series(in, path)) {
      auto same = std::find_if(all.begin(), all.end(), [&](const RegretSeries& o) { return o.acquisition == s.acquisition; });
      if (same != all.end()) throw CsvParseError(path, 0, "acquisition '" + s.acquisition + "' appears in several files");
      all.push_back(std::move(s));
    }
  }
  if (all.empty()) {
    throw CsvParseError(csv_paths.empty() ? std::string("<none>") : csv_paths.back(), 0, "no data rows to plot");
  }
  const std::string svg = render_regret_svg(all);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write plot '" + out_path + "'");
  out << svg;
}

}  // namespace tesbo
