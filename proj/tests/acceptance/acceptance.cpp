// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "axtrade/axt/kmeans.hpp"
#include "axtrade/axt/labeler.hpp"
#include "axtrade/backtest.hpp"
#include "axtrade/error.hpp"
#include "axtrade/market_data.hpp"
#include "axtrade/nn/dense.hpp"
#include "axtrade/nn/lstm.hpp"
#include "axtrade/pipeline/artifacts.hpp"
#include "axtrade/pipeline/commands.hpp"
#include "axtrade/ppo/losses.hpp"
#include "axtrade/ppo/trainer.hpp"
#include "axtrade/trading_env.hpp"
#include "lloyd_oracle.hpp"
#include "support.hpp"

using namespace axtrade;
using nn::Matrix;
using nn::Vector;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------- 1: formulas on the 20-candle fixture ----------

struct RawCandle {
  double o, h, l, c;
};

// Deliberately naive reader, independent of the library parser.
std::vector<RawCandle> read_fixture() {
  std::ifstream in(std::string(AXTRADE_TEST_DATA) + "/fixture_20.csv");
  std::string line;
  std::getline(in, line);
  std::vector<RawCandle> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string ts, o, h, l, c;
    std::getline(ss, ts, ',');
    std::getline(ss, o, ',');
    std::getline(ss, h, ',');
    std::getline(ss, l, ',');
    std::getline(ss, c, ',');
    out.push_back({std::stod(o), std::stod(h), std::stod(l), std::stod(c)});
  }
  return out;
}

Outcome formulas() {
  const auto raw = read_fixture();
  std::ifstream in(std::string(AXTRADE_TEST_DATA) + "/fixture_20.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto series = market::parse_candles(ss.str());
  if (raw.size() != 20 || series.size() != 20) return {false, "fixture does not hold 20 candles"};

  const auto f = market::compute_features(series);
  const auto z = market::compute_returns(series).z;
  if (f.size() != 19 || z.size() != 19) return {false, "feature/return length"};
  double worst = 0.0;
  for (std::size_t t = 1; t < 20; ++t) {
    const auto& a = raw[t - 1];
    const auto& b = raw[t];
    const double hand[5] = {(b.c - a.c) / a.c, (b.h - a.h) / a.h, (b.l - a.l) / a.l, (b.h - a.c) / a.c,
                            (b.c - a.l) / a.c};
    const auto got = f[t - 1].as_array();
    for (int j = 0; j < 5; ++j) worst = std::max(worst, std::abs(got[static_cast<std::size_t>(j)] - hand[j]));
    worst = std::max(worst, std::abs(z[t - 1] - hand[0]));
  }
  // Window flattening: step-major, feature-minor.
  const auto w = market::build_windows(f, 16);
  if (w.size() != 4) return {false, "window count"};
  for (std::size_t k = 0; k < w.size(); ++k) {
    for (std::size_t s = 0; s < 16; ++s) {
      const auto fa = f[k + s].as_array();
      for (std::size_t j = 0; j < 5; ++j) worst = std::max(worst, std::abs(w[k].values[s * 5 + j] - fa[j]));
    }
  }
  if (worst > 1e-12) return {false, "feature/return error " + fmt("%.3g", worst)};

  // Reward stream: stepping the environment vs the replay oracle vs hand products.
  const auto data = env::MarketData::from_series(series, 4);
  env::EnvConfig cfg;
  cfg.window_len = 4;
  cfg.episode_length = 1000;
  const std::vector<env::TradeAction> actions{env::TradeAction::Buy,  env::TradeAction::Sell, env::TradeAction::Hold,
                                              env::TradeAction::Buy,  env::TradeAction::Buy,  env::TradeAction::Sell,
                                              env::TradeAction::Sell, env::TradeAction::Hold, env::TradeAction::Buy,
                                              env::TradeAction::Sell, env::TradeAction::Buy,  env::TradeAction::Hold};
  const auto replay = env::replay_actions(data, cfg, 1, actions);
  env::TradingEnv e(data, cfg);
  e.reset(1);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto end = data.windows[1 + i].end_index;  // last candle the window has seen
    const double hand =
        static_cast<double>(env::position_of(actions[i])) * (raw[end + 1].c - raw[end].c) / raw[end].c;
    const auto r = e.step(actions[i]);
    if (r.reward != replay[i].reward) return {false, "environment and replay disagree at step " + std::to_string(i)};
    if (std::abs(r.reward - hand) > 1e-12) return {false, "reward differs from hand value at step " + std::to_string(i)};
  }

  // Sharpe and PPI by hand.
  const std::vector<double> rs{0.02, 0.0, 0.01};
  const double m = 0.01, sd = std::sqrt((0.0001 + 0.0001 + 0.0) / 3.0);
  if (std::abs(backtest::sharpe_ratio(rs) - m / sd) > 1e-12) return {false, "Sharpe"};
  if (std::abs(backtest::ppi(1.67, 1.07) - (0.6 / 1.07) * 100.0) > 1e-12) return {false, "PPI"};
  if (std::abs(backtest::ppi(-0.5, -2.0) - 75.0) > 1e-12) return {false, "PPI, negative baseline"};
  return {true, "worst feature error " + fmt("%.2g", worst)};
}

// ---------- 2: PPI reference values ----------

Outcome ppi_reference() {
  const double a = backtest::ppi(14.86, -25.2), b = backtest::ppi(0.249, -2.618);
  const bool ok = std::abs(a - 158.8) <= 0.5 && std::abs(b - 109.2) <= 0.5;
  return {ok, "return " + fmt("%.2f%%", a) + ", Sharpe " + fmt("%.2f%%", b)};
}

// ---------- 3: gradients vs central differences ----------

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

struct FdCheck {
  double worst = 0.0;
  bool kink = false;  // a ReLU or clip boundary sits inside [w - h, w + h]
};

// Central differences at h = 1e-5 against the stored gradients. An entry that misses is
// re-estimated with h = 1e-6: if the two estimates disagree with each other while the
// analytic value matches the smaller step, the interval straddles a kink and the
// instance is reported as such instead of as a gradient error.
FdCheck fd_check(const nn::ParameterList& params, const std::function<double()>& loss) {
  FdCheck out;
  const auto central = [&](double& w, double h) {
    const double saved = w;
    w = saved + h;
    const double up = loss();
    w = saved - h;
    const double down = loss();
    w = saved;
    return (up - down) / (2.0 * h);
  };
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double a = p->grad.data()[i];
      const double n = central(p->value.data()[i], 1e-5);
      const double e = testkit::rel_error(a, n);
      if (e <= 1e-4) {
        out.worst = std::max(out.worst, e);
        continue;
      }
      const double fine = central(p->value.data()[i], 1e-6);
      if (testkit::rel_error(n, fine) > 1e-4 && testkit::rel_error(a, fine) <= 1e-4) {
        out.kink = true;
      } else {
        out.worst = std::max(out.worst, e);
      }
    }
  }
  return out;
}

Outcome gradients() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  std::size_t instances = 0, kinks = 0;
  std::string worst_part;
  bool short_family = false;
  // Draws instances of one family until 100 smooth ones have been checked.
  const auto family = [&](const char* part, const std::function<FdCheck()>& draw) {
    std::size_t accepted = 0;
    for (int attempt = 0; attempt < 200 && accepted < 100; ++attempt) {
      const auto r = draw();
      if (r.kink) {
        ++kinks;
        continue;
      }
      ++accepted;
      if (r.worst > worst) {
        worst = r.worst;
        worst_part = part;
      }
    }
    instances += accepted;
    short_family = short_family || accepted < 100;
  };

  for (auto act : {nn::Activation::ReLU, nn::Activation::Tanh, nn::Activation::Identity, nn::Activation::Softmax}) {
    family("dense", [&] {
      nn::Dense d("d", 3, 4, act);
      d.init_uniform(rng);
      d.bias().value = random_matrix(4, 1, rng, 0.5);
      const Matrix x = random_matrix(3, 2, rng), r = random_matrix(4, 2, rng);
      nn::zero_grads(d.parameters());
      d.forward(x);
      d.backward(r);
      return fd_check(d.parameters(), [&] { return (d.infer(x).array() * r.array()).sum(); });
    });
  }
  family("lstm", [&] {
    nn::LSTM l("l", 2, 3);
    l.init_uniform(rng);
    const Matrix x = random_matrix(2, 4, rng), r = random_matrix(3, 4, rng);
    const nn::LstmState s0{random_matrix(3, 1, rng, 0.5), random_matrix(3, 1, rng, 0.5)};
    nn::zero_grads(l.parameters());
    l.forward(x, s0);
    l.backward(r);
    return fd_check(l.parameters(), [&] { return (l.forward(x, s0).array() * r.array()).sum(); });
  });
  family("softmax-ce", [&] {
    nn::Dense d("d", 4, 5, nn::Activation::Identity);
    d.init_uniform(rng);
    const Matrix x = random_matrix(4, 1, rng);
    const auto label = static_cast<Eigen::Index>(rng() % 5);
    nn::zero_grads(d.parameters());
    Matrix g = nn::softmax(d.forward(x));
    g(label, 0) -= 1.0;
    d.backward(g);
    return fd_check(d.parameters(), [&] { return -nn::log_softmax(d.infer(x))(label, 0); });
  });
  family("value-mse", [&] {
    nn::Dense d("v", 3, 1, nn::Activation::Identity);
    d.init_uniform(rng);
    const Matrix x = random_matrix(3, 6, rng);
    const Matrix target = random_matrix(1, 6, rng);
    nn::zero_grads(d.parameters());
    const Matrix v = d.forward(x);
    d.backward(2.0 * (v - target) / 6.0);
    return fd_check(d.parameters(), [&] {
      const Matrix y = d.infer(x);
      return ppo::value_loss(std::span<const double>(y.data(), 6), std::span<const double>(target.data(), 6));
    });
  });
  std::uint64_t net_seed = 0;
  family("composite", [&] {
    ppo::PolicyNetwork net(ppo::NetworkShape{5, 3, {4, 3}, 3, 4}, net_seed++);
    ppo::RolloutBuffer buf;
    auto state = net.initial_state();
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t t = 0; t < 4; ++t) {
      ppo::RolloutStep s;
      s.observation = random_matrix(5, 1, rng);
      s.reset_before = t == 2;
      if (s.reset_before) state = net.initial_state();
      s.state_before = state;
      const auto out = net.step(s.observation, state);
      s.action = rng() % 3;
      // Perturbed old log-probs push some ratios outside the clip range.
      s.log_prob = out.policy_log_probs(static_cast<Eigen::Index>(s.action)) + 0.25 * g(rng);
      s.label = rng() % 4;
      state = out.next_state;
      buf.steps.push_back(s);
    }
    std::vector<double> adv(4), ret(4);
    for (auto& a : adv) a = g(rng);
    for (auto& r : ret) r = g(rng);
    const ppo::Minibatch mb{&buf, adv, ret, 0, 4};
    const ppo::LossWeights w{0.2, 0.5, 0.5, 0.01};
    auto params = net.parameters();
    nn::zero_grads(params);
    ppo::composite_loss(net, mb, w, true);
    return fd_check(params, [&] { return ppo::composite_loss(net, mb, w, false).total; });
  });
  return {worst <= 1e-4 && !short_family,
          std::to_string(instances) + " instances, worst relative error " + fmt("%.2g", worst) + " (" + worst_part +
              "), " + std::to_string(kinks) + " kink-straddling draws replaced"};
}

// ---------- 4: ratio identity ----------

ppo::PPOConfig small_ppo() {
  ppo::PPOConfig c;
  c.rollout_length = 256;
  c.minibatch_size = 32;
  c.total_timesteps = 256;
  return c;
}

Outcome ratio_identity() {
  const auto data =
      env::MarketData::from_series(testkit::series_from_closes(testkit::random_walk_closes(1500, 4)), 16);
  std::vector<std::size_t> labels(data.windows.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 12;
  env::EnvConfig ec;
  ppo::PpoTrainer trainer(data, labels, ec, small_ppo(), ppo::NetworkShape{}, 30);
  const auto buf = trainer.collect_rollout();
  auto est = ppo::compute_gae(buf, 0.99, 0.95);
  ppo::normalize_advantages(est.advantages);
  double worst = 0.0;
  std::size_t mismatched = 0;
  for (std::size_t b = 0; b < buf.size(); b += 32) {
    const auto lb = ppo::composite_loss(trainer.network(), ppo::Minibatch{&buf, est.advantages, est.returns, b, b + 32},
                                        trainer.config().loss_weights(), false);
    for (std::size_t i = 0; i < 32; ++i) {
      worst = std::max(worst, std::abs(lb.ratios[i] - 1.0));
      if (lb.objectives[i] != est.advantages[b + i]) ++mismatched;
    }
  }
  return {worst <= 1e-10 && mismatched == 0, std::to_string(buf.size()) + " steps, max |r-1| " +
                                                 fmt("%.2g", worst) + ", objective mismatches " +
                                                 std::to_string(mismatched)};
}

// ---------- 5: K-Means vs reference Lloyd ----------

testkit::Points to_points(const Matrix& m) {
  testkit::Points p(static_cast<std::size_t>(m.cols()), std::vector<double>(static_cast<std::size_t>(m.rows())));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) p[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = m(i, j);
  }
  return p;
}

Outcome kmeans_oracle() {
  std::mt19937_64 rng(55);
  double worst = 0.0;
  std::size_t label_mismatch = 0, non_monotone = 0;
  for (int ds = 0; ds < 50; ++ds) {
    const std::size_t k = 2 + rng() % 11;
    const std::size_t n = k + rng() % (201 - k);
    // Blobs plus noise so clusters are neither trivial nor degenerate.
    Matrix centres = random_matrix(12, static_cast<Eigen::Index>(k), rng, 3.0);
    Matrix pts(12, static_cast<Eigen::Index>(n));
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      pts.col(static_cast<Eigen::Index>(i)) =
          centres.col(static_cast<Eigen::Index>(rng() % k)) + random_matrix(12, 1, rng);
    }
    const Matrix init = axt::kmeans_plus_plus(pts, k, rng);
    const axt::KMeansConfig cfg{k, 300, 1e-8};
    const auto m = axt::kmeans_fit_from(pts, init, cfg);
    const auto ref = testkit::oracle_lloyd(to_points(pts), to_points(init), 300, 1e-8);
    const auto got = to_points(m.centroids);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t d = 0; d < 12; ++d) worst = std::max(worst, std::abs(got[j][d] - ref.centroids[j][d]));
    }
    if (m.assignments != ref.labels) ++label_mismatch;
    for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
      if (m.inertia_history[i] > m.inertia_history[i - 1] * (1.0 + 1e-12)) ++non_monotone;
    }
  }
  return {worst <= 1e-9 && label_mismatch == 0 && non_monotone == 0,
          "50 datasets, max centroid diff " + fmt("%.2g", worst) + ", label mismatches " +
              std::to_string(label_mismatch) + ", inertia increases " + std::to_string(non_monotone)};
}

// ---------- 6: labeler determinism and range ----------

pipeline::RunConfig write_run(const fs::path& root, const std::vector<double>& closes, std::size_t train_candles) {
  const auto series = testkit::series_from_closes(closes);
  const auto csv = root / "prices.csv";
  pipeline::write_text_file(csv, testkit::to_csv(series));
  pipeline::RunConfig c;
  c.data.train_csv = csv.string();
  c.data.train_end = market::format_timestamp(series.candles[train_candles - 1].timestamp);
  c.data.test_start = market::format_timestamp(series.candles[train_candles].timestamp);
  c.data.zscore = true;
  c.output_dir = (root / "out").string();
  return c;
}

Outcome labeler() {
  testkit::TempDir dir;
  // 5,000 training windows: 5,015 feature rows, so 5,016 candles.
  auto cfg = write_run(dir.path(), testkit::random_walk_closes(5016 + 600, 6), 5016);
  pipeline::cmd_preprocess(cfg);
  const auto layout = pipeline::layout_for(cfg);
  pipeline::cmd_label(cfg);
  const auto first_train = pipeline::read_text_file(layout.labels_csv(pipeline::kTrainSplit));
  const auto first_test = pipeline::read_text_file(layout.labels_csv(pipeline::kTestSplit));
  pipeline::cmd_label(cfg);
  const bool same = first_train == pipeline::read_text_file(layout.labels_csv(pipeline::kTrainSplit)) &&
                    first_test == pipeline::read_text_file(layout.labels_csv(pipeline::kTestSplit));
  const auto rows = axt::read_labels_csv(first_train);
  std::vector<std::size_t> counts(12, 0);
  bool in_range = true;
  for (const auto& r : rows) {
    if (r.label >= 12) {
      in_range = false;
    } else {
      ++counts[r.label];
    }
  }
  for (const auto& r : axt::read_labels_csv(first_test)) in_range = in_range && r.label < 12;
  const auto smallest = *std::min_element(counts.begin(), counts.end());
  return {same && in_range && rows.size() == 5000 && smallest > 0,
          std::to_string(rows.size()) + " windows, byte-identical " + (same ? "yes" : "no") +
              ", smallest cluster " + std::to_string(smallest)};
}

// ---------- 7: conservation ----------

Outcome conservation() {
  const auto data =
      env::MarketData::from_series(testkit::series_from_closes(testkit::random_walk_closes(3000, 7)), 16);
  env::EnvConfig cfg;
  const auto run = [&](env::TradeAction a) {
    return backtest::run_policy(data, cfg, [a](const market::FeatureWindow&, bool) { return a; }).total_return;
  };
  const double buy = run(env::TradeAction::Buy), sell = run(env::TradeAction::Sell),
               hold = run(env::TradeAction::Hold);
  double sum_z = 0.0;
  for (std::size_t i = 0; i < data.action_steps(cfg.reward_timing); ++i) sum_z += data.reward_return(i, cfg.reward_timing);
  const bool ok = buy + sell == 0.0 && hold == 0.0 && buy == sum_z;
  return {ok, "buy " + fmt("%.6g", buy) + ", sell " + fmt("%.6g", sell) + ", hold " + fmt("%.3g", hold) +
                  ", sum z " + fmt("%.6g", sum_z)};
}

// ---------- 8: sawtooth end to end ----------

Outcome sawtooth() {
  testkit::TempDir dir;
  auto cfg = write_run(dir.path(), testkit::sawtooth_closes(3000), 2400);
  cfg.ppo.total_timesteps = 20000;
  cfg.ppo.rollout_length = 600;
  cfg.env.episode_length = 600;
  cfg.axt.autoencoder.epochs = 30;
  // The default rate barely moves the policy in 33 updates.
  cfg.ppo.learning_rate = 3e-4;
  pipeline::cmd_preprocess(cfg);
  pipeline::cmd_label(cfg);
  pipeline::cmd_train_all(cfg);
  const auto agg = pipeline::cmd_backtest(cfg);

  const auto test = pipeline::load_split(pipeline::layout_for(cfg), cfg, pipeline::kTestSplit);
  env::EnvConfig ec = cfg.env;
  ec.window_len = cfg.data.window_len;
  std::vector<double> random_returns;
  for (auto seed : cfg.seeds) random_returns.push_back(backtest::run_random_policy(test.market, ec, seed).total_return);
  const double rmean = backtest::mean(random_returns), rstd = backtest::population_std(random_returns);
  std::size_t positive = 0;
  std::string per_seed;
  for (const auto& r : agg.per_seed) {
    positive += r.total_return > 0.0 ? 1 : 0;
    per_seed += (per_seed.empty() ? "" : " ") + fmt("%.3f%%", r.total_return * 100.0);
  }
  const bool ok = positive >= 3 && agg.mean_total_return - rmean >= 2.0 * rstd;
  return {ok, "seed returns [" + per_seed + "], positive " + std::to_string(positive) + "/4, mean " +
                  fmt("%.3f%%", agg.mean_total_return * 100.0) + " vs random " + fmt("%.3f%%", rmean * 100.0) +
                  " +- " + fmt("%.3f%%", rstd * 100.0)};
}

// ---------- 9: aux ablation ----------

Outcome ablation() {
  const auto data =
      env::MarketData::from_series(testkit::series_from_closes(testkit::random_walk_closes(1500, 9)), 16);
  std::vector<std::size_t> labels(data.windows.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = (i / 5) % 12;
  auto cfg = small_ppo();
  cfg.aux_loss_weight = 0.0;
  cfg.total_timesteps = 3 * cfg.rollout_length;
  env::EnvConfig ec;
  ppo::PpoTrainer a(data, labels, ec, cfg, ppo::NetworkShape{}, 50);
  ppo::PpoTrainer b(data, labels, ec, cfg, ppo::NetworkShape{}, 50);
  // Scramble b's auxiliary head: with the weight at 0 it must not influence anything else.
  std::mt19937_64 rng(1);
  for (auto* p : b.network().aux_head_parameters()) p->value = random_matrix(p->value.rows(), p->value.cols(), rng);

  std::vector<Matrix> aux_before;
  for (auto* p : a.network().aux_head_parameters()) aux_before.push_back(p->value);
  const auto rows = a.train();
  b.train();
  bool aux_frozen = true;
  const auto aux_after = a.network().aux_head_parameters();
  for (std::size_t i = 0; i < aux_before.size(); ++i) aux_frozen = aux_frozen && aux_after[i]->value == aux_before[i];
  bool aux_zero = !rows.empty();
  for (const auto& r : rows) aux_zero = aux_zero && r.aux_loss == 0.0;

  std::set<const nn::Parameter*> aux_a(aux_after.begin(), aux_after.end());
  const auto pa = a.network().parameters(), pb = b.network().parameters();
  bool same_trunk = pa.size() == pb.size();
  for (std::size_t i = 0; same_trunk && i < pa.size(); ++i) {
    if (aux_a.count(pa[i])) continue;
    same_trunk = pa[i]->value == pb[i]->value;
  }
  return {aux_frozen && aux_zero && same_trunk,
          std::to_string(rows.size()) + " updates; aux head unchanged " + (aux_frozen ? "yes" : "no") +
              ", aux_loss column zero " + (aux_zero ? "yes" : "no") + ", policy independent of aux head " +
              (same_trunk ? "yes" : "no")};
}

// ---------- 10: multi-seed aggregation ----------

double timed_backtest_seconds = 0.0;

Outcome multi_seed() {
  testkit::TempDir dir;
  auto cfg = write_run(dir.path(), testkit::random_walk_closes(1400, 10), 1000);
  cfg.axt.autoencoder.epochs = 3;
  cfg.network.lstm_hidden = 16;
  cfg.network.fc = {16};
  cfg.ppo.rollout_length = 300;
  cfg.ppo.total_timesteps = 300;
  pipeline::cmd_preprocess(cfg);
  pipeline::cmd_label(cfg);
  pipeline::cmd_train_all(cfg);

  const auto t0 = std::chrono::steady_clock::now();
  const auto agg = pipeline::cmd_backtest(cfg);
  timed_backtest_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (agg.per_seed.size() != 4) return {false, "aggregate over " + std::to_string(agg.per_seed.size()) + " reports"};
  const auto layout = pipeline::layout_for(cfg);
  double tr = 0.0, sh = 0.0;
  bool all_sharpe = true;
  for (auto seed : cfg.seeds) {
    const auto s = backtest::read_summary(layout.backtest() / std::to_string(seed) / "summary.txt");
    const auto key = "seed." + std::to_string(seed);
    tr += s.number(key, "total_return_pct") / 100.0;
    if (const auto v = s.get(key, "sharpe"); v && *v != "nan") {
      sh += std::stod(*v);
    } else {
      all_sharpe = false;
    }
  }
  double err = std::abs(agg.mean_total_return - tr / 4.0);
  if (all_sharpe) {
    if (!agg.mean_sharpe) return {false, "aggregate lacks a Sharpe mean"};
    err = std::max(err, std::abs(*agg.mean_sharpe - sh / 4.0));
  } else if (agg.mean_sharpe) {
    return {false, "aggregate Sharpe present although a seed has none"};
  }
  return {err <= 1e-12 && timed_backtest_seconds < 10.0,
          "4 seeds, mean error " + fmt("%.2g", err) + ", backtest " + fmt("%.2f s", timed_backtest_seconds)};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "formula exactness", 1.0, formulas},
      {2, "PPI reference values", 1.0, ppi_reference},
      {3, "gradient fidelity", 60.0, gradients},
      {4, "PPO ratio identity", 10.0, ratio_identity},
      {5, "K-Means oracle", 30.0, kmeans_oracle},
      {6, "labeler determinism and range", 300.0, labeler},
      {7, "environment conservation", 1.0, conservation},
      {8, "sawtooth end-to-end", 900.0, sawtooth},
      {9, "auxiliary ablation", 60.0, ablation},
      // Runtime for 10 is checked inside, on the backtest alone; setup trains 4 tiny policies.
      {10, "multi-seed protocol", 1e9, multi_seed},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f s", c.limit_seconds) + " limit";
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << " ["
              << fmt("%.2f s", secs) << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
