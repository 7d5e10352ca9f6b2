#include "axtrade/pipeline/artifacts.hpp"

#include <fstream>
#include <sstream>

#include "axtrade/axt/labeler.hpp"
#include "axtrade/error.hpp"

namespace axtrade::pipeline {

namespace fs = std::filesystem;

fs::path RunLayout::candles_csv(std::string_view split) const {
  return preprocess() / (std::string(split) + "_candles.csv");
}
fs::path RunLayout::features_csv(std::string_view split) const {
  return preprocess() / (std::string(split) + "_features.csv");
}
fs::path RunLayout::returns_csv(std::string_view split) const {
  return preprocess() / (std::string(split) + "_returns.csv");
}
fs::path RunLayout::labels_csv(std::string_view split) const {
  return label() / (std::string(split) + "_labels.csv");
}

RunLayout layout_for(const RunConfig& config) { return RunLayout{run_directory(config)}; }

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

market::CandleSeries slice_range(const market::CandleSeries& series, const std::string& start,
                                 const std::string& end) {
  std::optional<market::Timestamp> lo, hi;
  if (!start.empty()) lo = market::parse_timestamp(start);
  if (!end.empty()) hi = market::parse_timestamp(end);
  market::CandleSeries out;
  out.source_id = series.source_id;
  for (const auto& c : series.candles) {
    if (lo && c.timestamp < *lo) continue;
    if (hi && c.timestamp > *hi) continue;
    out.candles.push_back(c);
  }
  if (out.candles.empty()) {
    fail(ErrorKind::EmptyInput, "no candles of " + series.source_id + " fall in [" + start + ", " + end + "]");
  }
  return out;
}

void write_candles_csv(std::ostream& out, const market::CandleSeries& series) {
  out << "timestamp,open,high,low,close\n";
  for (const auto& c : series.candles) {
    out << market::format_timestamp(c.timestamp) << ',' << market::format_double(c.open) << ','
        << market::format_double(c.high) << ',' << market::format_double(c.low) << ','
        << market::format_double(c.close) << '\n';
  }
}

void write_scaler_csv(const fs::path& path, const market::FeatureScaler& scaler) {
  std::ostringstream out;
  out << "feature,mean,std\n";
  for (std::size_t i = 0; i < market::kFeatureCount; ++i) {
    out << 'x' << (i + 1) << ',' << market::format_double(scaler.mean()[i]) << ','
        << market::format_double(scaler.stddev()[i]) << '\n';
  }
  write_text_file(path, out.str());
}

market::FeatureScaler read_scaler_csv(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::getline(in, line);
  std::array<double, market::kFeatureCount> mean{}, stddev{};
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= market::kFeatureCount) fail(ErrorKind::MalformedRow, "extra scaler row in " + path.string());
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      fail(ErrorKind::MalformedRow, "bad scaler row in " + path.string());
    }
    mean[row] = std::stod(line.substr(a + 1, b - a - 1));
    stddev[row] = std::stod(line.substr(b + 1));
    ++row;
  }
  if (row != market::kFeatureCount) fail(ErrorKind::MalformedRow, "scaler needs 5 rows in " + path.string());
  return market::FeatureScaler(mean, stddev);
}

SplitData load_split(const RunLayout& layout, const RunConfig& config, std::string_view split) {
  const auto path = layout.candles_csv(split);
  if (!fs::exists(path)) fail(ErrorKind::IoError, "missing preprocess output " + path.string() + "; run preprocess");
  SplitData out;
  out.candles = market::parse_candles(read_text_file(path), {}, path.string());
  std::optional<market::FeatureScaler> scaler;
  if (config.data.zscore) scaler = read_scaler_csv(layout.scaler_csv());
  out.market = env::MarketData::from_series(out.candles, config.data.window_len, scaler ? &*scaler : nullptr);
  return out;
}

std::vector<std::size_t> load_labels(const RunLayout& layout, std::string_view split, const env::MarketData& data) {
  const auto path = layout.labels_csv(split);
  if (!fs::exists(path)) fail(ErrorKind::IoError, "missing labels " + path.string() + "; run label");
  const auto rows = axt::read_labels_csv(read_text_file(path));
  if (rows.size() != data.windows.size()) {
    fail(ErrorKind::ShapeMismatch, path.string() + " has " + std::to_string(rows.size()) + " labels for " +
                                       std::to_string(data.windows.size()) + " windows");
  }
  std::vector<std::size_t> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].window_end_index != data.windows[i].end_index) {
      fail(ErrorKind::ShapeMismatch, path.string() + " does not match the windows of split " + std::string(split));
    }
    labels[i] = rows[i].label;
  }
  return labels;
}

void write_config_echo(const fs::path& directory, const RunConfig& config) {
  write_text_file(directory / "config.json", config_to_json(config));
}

}  // namespace axtrade::pipeline
