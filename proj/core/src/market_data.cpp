#include "axtrade/market_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "axtrade/error.hpp"

namespace axtrade::market {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

// Splits into lines, keeping track of 1-based line numbers; drops blank lines.
std::vector<std::pair<std::size_t, std::string_view>> lines_of(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) out.emplace_back(line_no, line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

std::string normalize_header(std::string_view name) {
  name = trim(name);
  if (name.size() >= 2 && name.front() == '<' && name.back() == '>') name = name.substr(1, name.size() - 2);
  std::string out(name);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
  throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line) + ": " + why).with_line(line);
}

void require_min_length(const CandleSeries& series, std::size_t n) {
  if (series.size() < n) {
    fail(ErrorKind::SeriesTooShort, "series '" + series.source_id + "' has " +
                                        std::to_string(series.size()) + " candles, need " +
                                        std::to_string(n));
  }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  text = trim(text);
  auto bad = [&]() -> Timestamp {
    fail(ErrorKind::MalformedRow, "unparseable timestamp '" + std::string(text) + "'");
  };
  if (text.size() < 10) return bad();
  const auto y = to_int(text.substr(0, 4));
  const auto mo = to_int(text.substr(5, 2));
  const auto d = to_int(text.substr(8, 2));
  const char s1 = text[4];
  const char s2 = text[7];
  if (!y || !mo || !d || s1 != s2 || (s1 != '-' && s1 != '.' && s1 != '/')) return bad();
  const std::chrono::year_month_day ymd{std::chrono::year{*y},
                                        std::chrono::month{static_cast<unsigned>(*mo)},
                                        std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return bad();
  int hh = 0, mm = 0, ss = 0;
  auto rest = text.substr(10);
  if (!rest.empty()) {
    if (rest.front() != 'T' && rest.front() != ' ') return bad();
    rest = trim(rest.substr(1));
    if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
    if (rest.size() != 5 && rest.size() != 8) return bad();
    const auto h = to_int(rest.substr(0, 2));
    const auto m = to_int(rest.substr(3, 2));
    if (!h || !m || rest[2] != ':') return bad();
    hh = *h;
    mm = *m;
    if (rest.size() == 8) {
      const auto s = to_int(rest.substr(6, 2));
      if (!s || rest[5] != ':') return bad();
      ss = *s;
    }
    if (hh > 23 || mm > 59 || ss > 60) return bad();
  }
  return std::chrono::sys_days{ymd} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
         std::chrono::seconds{ss};
}

std::string format_timestamp(Timestamp ts) {
  const auto days = std::chrono::floor<std::chrono::days>(ts);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{ts - days};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

CandleSeries parse_candles(std::string_view raw_text, const CsvFormat& format, std::string source_id) {
  const auto lines = lines_of(raw_text);
  if (lines.empty()) fail(ErrorKind::EmptyInput, "no header row in '" + source_id + "'");

  const auto header = split(lines.front().second, format.delimiter);
  const auto header_line = lines.front().first;
  auto column = [&](const std::string& name) -> std::size_t {
    const auto want = normalize_header(name);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (normalize_header(header[i]) == want) return i;
    }
    malformed(header_line, "missing column '" + name + "'");
  };
  const std::size_t c_ts = column(format.timestamp_column);
  const std::size_t c_open = column(format.open_column);
  const std::size_t c_high = column(format.high_column);
  const std::size_t c_low = column(format.low_column);
  const std::size_t c_close = column(format.close_column);
  const std::optional<std::size_t> c_time =
      format.time_column.empty() ? std::nullopt : std::optional<std::size_t>(column(format.time_column));
  const std::size_t needed = std::max({c_ts, c_open, c_high, c_low, c_close, c_time.value_or(0)}) + 1;

  if (lines.size() == 1) fail(ErrorKind::EmptyInput, "no data rows in '" + source_id + "'");

  CandleSeries series;
  series.source_id = std::move(source_id);
  series.candles.reserve(lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto [line_no, line] = lines[r];
    const auto cells = split(line, format.delimiter);
    if (cells.size() < needed) malformed(line_no, "expected at least " + std::to_string(needed) + " columns");

    Candle c;
    try {
      if (c_time) {
        c.timestamp = parse_timestamp(std::string(cells[c_ts]) + " " + std::string(cells[*c_time]));
      } else {
        c.timestamp = parse_timestamp(cells[c_ts]);
      }
    } catch (const Error& e) {
      malformed(line_no, e.what());
    }
    const auto o = to_double(cells[c_open]);
    const auto h = to_double(cells[c_high]);
    const auto l = to_double(cells[c_low]);
    const auto cl = to_double(cells[c_close]);
    if (!o || !h || !l || !cl) malformed(line_no, "non-numeric price");
    c.open = *o;
    c.high = *h;
    c.low = *l;
    c.close = *cl;
    if (c.low <= 0.0 || c.open <= 0.0 || c.high <= 0.0 || c.close <= 0.0) {
      malformed(line_no, "prices must be strictly positive");
    }
    if (c.low > c.high) malformed(line_no, "high < low");
    if (c.open < c.low || c.open > c.high) malformed(line_no, "open outside [low, high]");
    if (c.close < c.low || c.close > c.high) malformed(line_no, "close outside [low, high]");
    if (!series.candles.empty() && c.timestamp <= series.candles.back().timestamp) {
      throw Error(ErrorKind::NonMonotonicTimestamp,
                  "line " + std::to_string(line_no) + ": timestamp does not increase")
          .with_line(line_no);
    }
    series.candles.push_back(c);
  }
  return series;
}

CandleSeries load_candles(const std::string& path, const CsvFormat& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open candle file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_candles(ss.str(), format, path);
}

std::vector<FeatureVector> compute_features(const CandleSeries& series) {
  require_min_length(series, 2);
  std::vector<FeatureVector> out;
  out.reserve(series.size() - 1);
  for (std::size_t t = 1; t < series.size(); ++t) {
    const Candle& prev = series[t - 1];
    const Candle& cur = series[t];
    out.push_back({
        (cur.close - prev.close) / prev.close,
        (cur.high - prev.high) / prev.high,
        (cur.low - prev.low) / prev.low,
        (cur.high - prev.close) / prev.close,
        (cur.close - prev.low) / prev.close,
    });
  }
  return out;
}

ReturnSeries compute_returns(const CandleSeries& series) {
  require_min_length(series, 2);
  ReturnSeries out;
  out.z.reserve(series.size() - 1);
  for (std::size_t t = 1; t < series.size(); ++t) {
    out.z.push_back((series[t].close - series[t - 1].close) / series[t - 1].close);
  }
  return out;
}

std::vector<FeatureWindow> build_windows(std::span<const FeatureVector> features, std::size_t window_len) {
  if (window_len == 0 || features.size() < window_len) {
    fail(ErrorKind::TooFewFeatures, std::to_string(features.size()) + " feature vectors, window needs " +
                                        std::to_string(window_len));
  }
  std::vector<FeatureWindow> out;
  out.reserve(features.size() - window_len + 1);
  for (std::size_t k = 0; k + window_len <= features.size(); ++k) {
    FeatureWindow w;
    w.values.reserve(window_len * kFeatureCount);
    for (std::size_t s = k; s < k + window_len; ++s) {
      const auto a = features[s].as_array();
      w.values.insert(w.values.end(), a.begin(), a.end());
    }
    // feature i describes candle i + 1
    w.end_index = k + window_len;
    out.push_back(std::move(w));
  }
  return out;
}

FeatureScaler::FeatureScaler(std::array<double, kFeatureCount> mean, std::array<double, kFeatureCount> stddev)
    : mean_(mean), stddev_(stddev) {}

FeatureScaler FeatureScaler::fit(std::span<const FeatureVector> features) {
  if (features.empty()) fail(ErrorKind::EmptyInput, "cannot fit scaler on no features");
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> var{};
  for (const auto& f : features) {
    const auto a = f.as_array();
    for (std::size_t j = 0; j < kFeatureCount; ++j) mean[j] += a[j];
  }
  for (auto& m : mean) m /= static_cast<double>(features.size());
  for (const auto& f : features) {
    const auto a = f.as_array();
    for (std::size_t j = 0; j < kFeatureCount; ++j) var[j] += (a[j] - mean[j]) * (a[j] - mean[j]);
  }
  std::array<double, kFeatureCount> sd{};
  for (std::size_t j = 0; j < kFeatureCount; ++j) {
    sd[j] = std::sqrt(var[j] / static_cast<double>(features.size()));
    if (!(sd[j] > 0.0)) sd[j] = 1.0;
  }
  return FeatureScaler(mean, sd);
}

FeatureVector FeatureScaler::apply(const FeatureVector& f) const noexcept {
  auto a = f.as_array();
  for (std::size_t j = 0; j < kFeatureCount; ++j) a[j] = (a[j] - mean_[j]) / stddev_[j];
  return FeatureVector::from_array(a);
}

std::vector<FeatureVector> FeatureScaler::apply(std::span<const FeatureVector> features) const {
  std::vector<FeatureVector> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(apply(f));
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_features_csv(std::ostream& out, std::span<const FeatureVector> features, std::size_t first_step) {
  out << "step,x1,x2,x3,x4,x5\n";
  for (std::size_t i = 0; i < features.size(); ++i) {
    out << first_step + i;
    for (double v : features[i].as_array()) out << ',' << format_double(v);
    out << '\n';
  }
}

std::vector<FeatureVector> read_features_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) fail(ErrorKind::EmptyInput, "empty feature file");
  std::vector<FeatureVector> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split(lines[r].second, ',');
    if (cells.size() != 1 + kFeatureCount) malformed(lines[r].first, "expected step plus 5 features");
    std::array<double, kFeatureCount> a{};
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const auto v = to_double(cells[j + 1]);
      if (!v) malformed(lines[r].first, "non-numeric feature");
      a[j] = *v;
    }
    out.push_back(FeatureVector::from_array(a));
  }
  return out;
}

void write_returns_csv(std::ostream& out, const ReturnSeries& returns, std::size_t first_step) {
  out << "step,z\n";
  for (std::size_t i = 0; i < returns.z.size(); ++i) {
    out << first_step + i << ',' << format_double(returns.z[i]) << '\n';
  }
}

ReturnSeries read_returns_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty()) fail(ErrorKind::EmptyInput, "empty return file");
  ReturnSeries out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split(lines[r].second, ',');
    if (cells.size() != 2) malformed(lines[r].first, "expected step,z");
    const auto v = to_double(cells[1]);
    if (!v) malformed(lines[r].first, "non-numeric return");
    out.z.push_back(*v);
  }
  return out;
}

}  // namespace axtrade::market
