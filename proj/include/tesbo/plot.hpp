#ifndef TESBO_PLOT_HPP
#define TESBO_PLOT_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace tesbo {

class CsvParseError : public std::runtime_error {
 public:
  CsvParseError(const std::string& source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct RegretSeries {
  std::string acquisition;
  std::vector<double> log_mean_ir;  // index t is iteration t + 1
};

// Reads run CSVs; each "# acquisition=<name>" line opens a section with its
// own header. Sections sharing a name are pooled. Log-mean IR is recomputed
// from the raw rows, one value per (repeat, iteration).
std::vector<RegretSeries> read_regret_series(std::istream& in, const std::string& source_name);

// Line chart of log-mean IR against iteration, one series per acquisition.
std::string render_regret_svg(const std::vector<RegretSeries>& series);

// Writes the chart for the given CSV files. Throws CsvParseError on malformed
// input or when no data rows exist; nothing is written in that case.
void emit_plot(const std::vector<std::string>& csv_paths, const std::string& out_path);

}  // namespace tesbo

#endif  // TESBO_PLOT_HPP
