#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "axtrade/market_data.hpp"
#include "axtrade/nn/tensor.hpp"
#include "axtrade/pipeline/artifacts.hpp"

namespace axtrade::testkit {

// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("axtrade_test_" + std::to_string(rd()) + "_" + std::to_string(++counter));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline market::Timestamp base_time() {
  using namespace std::chrono;
  return sys_days{year{2015} / January / 5} + hours{0};
}

// open = previous close, wicks 0.05% beyond the body.
inline market::CandleSeries series_from_closes(const std::vector<double>& closes,
                                               market::Timestamp start = base_time()) {
  market::CandleSeries s;
  s.source_id = "synthetic";
  double prev = closes.empty() ? 1.0 : closes.front();
  for (std::size_t i = 0; i < closes.size(); ++i) {
    market::Candle c;
    c.timestamp = start + std::chrono::hours(static_cast<long>(i));
    c.open = prev;
    c.close = closes[i];
    c.high = std::max(c.open, c.close) * 1.0005;
    c.low = std::min(c.open, c.close) * 0.9995;
    s.candles.push_back(c);
    prev = closes[i];
  }
  return s;
}

inline std::vector<double> random_walk_closes(std::size_t n, std::uint64_t seed, double vol = 0.002) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> step(0.0, vol);
  std::vector<double> out(n);
  double p = 1.1;
  for (auto& c : out) {
    p *= std::exp(step(rng));
    c = p;
  }
  return out;
}

// Triangle wave around `base`: period steps per cycle, peak deviation `amplitude`.
inline std::vector<double> sawtooth_closes(std::size_t n, std::size_t period = 40, double amplitude = 0.005,
                                           double base = 1.1) {
  std::vector<double> out(n);
  const double half = static_cast<double>(period) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double phase = static_cast<double>(i % period);
    const double tri = phase < half ? -1.0 + 2.0 * phase / half : 3.0 - 2.0 * phase / half;
    out[i] = base * (1.0 + amplitude * tri);
  }
  return out;
}

inline std::string to_csv(const market::CandleSeries& s) {
  std::ostringstream out;
  pipeline::write_candles_csv(out, s);
  return out.str();
}

inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences of `loss` over every entry of `params`, compared with the
// gradients already stored in each parameter. Returns the worst relative error.
inline double max_fd_error(const nn::ParameterList& params, const std::function<double()>& loss, double h = 1e-5) {
  double worst = 0.0;
  for (auto* p : params) {
    const nn::Matrix analytic = p->grad;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double down = loss();
      w = saved;
      worst = std::max(worst, rel_error(analytic.data()[i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

}  // namespace axtrade::testkit
