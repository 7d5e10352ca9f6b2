#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace axtrade::market {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::size_t kFeatureCount = 5;
inline constexpr std::size_t kDefaultWindowLen = 16;

struct Candle {
  Timestamp timestamp{};
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
};

// Ordered candles from one source. Timestamps strictly increase.
struct CandleSeries {
  std::vector<Candle> candles;
  std::string source_id;

  std::size_t size() const noexcept { return candles.size(); }
  const Candle& operator[](std::size_t i) const { return candles[i]; }
};

// Relative changes between candle t and t-1:
//   x1 = (c_t - c_{t-1}) / c_{t-1}
//   x2 = (h_t - h_{t-1}) / h_{t-1}
//   x3 = (l_t - l_{t-1}) / l_{t-1}
//   x4 = (h_t - c_{t-1}) / c_{t-1}
//   x5 = (c_t - l_{t-1}) / c_{t-1}
// x5 keeps c_{t-1} in the denominator as published.
struct FeatureVector {
  double x1 = 0.0;
  double x2 = 0.0;
  double x3 = 0.0;
  double x4 = 0.0;
  double x5 = 0.0;

  std::array<double, kFeatureCount> as_array() const noexcept { return {x1, x2, x3, x4, x5}; }
  static FeatureVector from_array(const std::array<double, kFeatureCount>& a) noexcept {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// window_len consecutive feature vectors flattened step-major, feature-minor,
// oldest step first. end_index is the candle index of the newest step.
struct FeatureWindow {
  std::vector<double> values;
  std::size_t end_index = 0;

  friend bool operator==(const FeatureWindow&, const FeatureWindow&) = default;
};

// z[i] is the close-to-close return of candle i+1 relative to candle i.
struct ReturnSeries {
  std::vector<double> z;
};

struct CsvFormat {
  char delimiter = ',';
  // Header names (case-insensitive, surrounding <> ignored).
  std::string timestamp_column = "timestamp";
  std::string open_column = "open";
  std::string high_column = "high";
  std::string low_column = "low";
  std::string close_column = "close";
  // Optional separate time-of-day column (MetaTrader exports DATE and TIME apart).
  std::string time_column;
};

// Accepts "YYYY-MM-DD[T ]HH:MM[:SS]" and "YYYY.MM.DD HH:MM[:SS]"; a bare date means midnight.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

CandleSeries parse_candles(std::string_view raw_text, const CsvFormat& format = {},
                           std::string source_id = {});
CandleSeries load_candles(const std::string& path, const CsvFormat& format = {});

std::vector<FeatureVector> compute_features(const CandleSeries& series);
ReturnSeries compute_returns(const CandleSeries& series);
std::vector<FeatureWindow> build_windows(std::span<const FeatureVector> features,
                                         std::size_t window_len = kDefaultWindowLen);

// Per-feature z-score with statistics from a training split. Population std;
// a feature with zero spread is only centred.
class FeatureScaler {
 public:
  FeatureScaler() = default;
  FeatureScaler(std::array<double, kFeatureCount> mean, std::array<double, kFeatureCount> stddev);

  static FeatureScaler fit(std::span<const FeatureVector> features);

  FeatureVector apply(const FeatureVector& f) const noexcept;
  std::vector<FeatureVector> apply(std::span<const FeatureVector> features) const;

  const std::array<double, kFeatureCount>& mean() const noexcept { return mean_; }
  const std::array<double, kFeatureCount>& stddev() const noexcept { return stddev_; }

 private:
  std::array<double, kFeatureCount> mean_{};
  std::array<double, kFeatureCount> stddev_{1.0, 1.0, 1.0, 1.0, 1.0};
};

// CSV dumps. Numbers are written with 17 significant digits so they read back exactly.
// first_step is the candle index of features[0] (1 for a full series).
void write_features_csv(std::ostream& out, std::span<const FeatureVector> features,
                        std::size_t first_step = 1);
std::vector<FeatureVector> read_features_csv(std::string_view text);
void write_returns_csv(std::ostream& out, const ReturnSeries& returns, std::size_t first_step = 1);
ReturnSeries read_returns_csv(std::string_view text);

std::string format_double(double v);

}  // namespace axtrade::market
