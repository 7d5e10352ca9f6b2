#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "axtrade/axt/autoencoder.hpp"
#include "axtrade/axt/kmeans.hpp"
#include "axtrade/market_data.hpp"
#include "axtrade/ppo/network.hpp"
#include "axtrade/ppo/trainer.hpp"
#include "axtrade/trading_env.hpp"

using namespace axtrade;

namespace {

market::CandleSeries walk(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.002);
  market::CandleSeries s;
  double p = 1.1;
  auto t = market::parse_timestamp("2015-01-05 00:00:00");
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = p;
    p *= std::exp(g(rng));
    s.candles.push_back({t, prev, std::max(prev, p) * 1.0005, std::min(prev, p) * 0.9995, p});
    t += std::chrono::hours(1);
  }
  return s;
}

void BM_Features(benchmark::State& st) {
  const auto s = walk(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) {
    auto w = market::build_windows(market::compute_features(s));
    benchmark::DoNotOptimize(w);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_Features)->Arg(10000);

void BM_AutoencoderEpoch(benchmark::State& st) {
  const auto windows = market::build_windows(market::compute_features(walk(2017)));
  axt::AutoencoderConfig cfg;
  cfg.epochs = 1;
  cfg.patience = 0;
  for (auto _ : st) {
    auto r = axt::train_autoencoder(windows, cfg, 30);
    benchmark::DoNotOptimize(r.history);
  }
}
BENCHMARK(BM_AutoencoderEpoch)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& st) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  nn::Matrix pts(12, st.range(0));
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = g(rng);
  for (auto _ : st) {
    auto m = axt::kmeans_fit(pts, axt::KMeansConfig{}, 30);
    benchmark::DoNotOptimize(m.inertia);
  }
}
BENCHMARK(BM_KMeans)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_PolicyStep(benchmark::State& st) {
  ppo::PolicyNetwork net(ppo::NetworkShape{}, 30);
  std::vector<double> obs(80, 0.01);
  auto state = net.initial_state();
  for (auto _ : st) {
    auto r = ppo::act(net, obs, state, ppo::ActMode::Greedy);
    state = r.next_state;
    benchmark::DoNotOptimize(r.action);
  }
}
BENCHMARK(BM_PolicyStep);

void BM_PpoUpdate(benchmark::State& st) {
  const auto data = env::MarketData::from_series(walk(3000), 16);
  std::vector<std::size_t> labels(data.windows.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 12;
  ppo::PPOConfig cfg;
  ppo::PpoTrainer trainer(data, labels, env::EnvConfig{}, cfg, ppo::NetworkShape{}, 30);
  const auto buf = trainer.collect_rollout();
  for (auto _ : st) {
    auto s = trainer.update(buf);
    benchmark::DoNotOptimize(s.total_loss);
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(buf.size()));
}
BENCHMARK(BM_PpoUpdate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
