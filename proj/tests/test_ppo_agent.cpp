#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "axtrade/error.hpp"
#include "axtrade/nn/tensor.hpp"
#include "axtrade/ppo/losses.hpp"
#include "axtrade/ppo/network.hpp"
#include "axtrade/ppo/rollout.hpp"
#include "axtrade/ppo/trainer.hpp"
#include "axtrade/trading_env.hpp"
#include "support.hpp"

using namespace axtrade;
using namespace axtrade::ppo;
using nn::Matrix;
using nn::Vector;

namespace {

NetworkShape toy_shape() { return NetworkShape{5, 3, {4, 3}, 3, 4}; }

nn::Parameter* find_param(PolicyNetwork& net, const std::string& name) {
  for (auto* p : net.parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

// Random buffer of `n` steps whose recorded log-probs are the network's own, perturbed
// by `jitter` so that some ratios leave the clip range.
RolloutBuffer toy_buffer(PolicyNetwork& net, std::size_t n, std::mt19937_64& rng, double jitter) {
  std::normal_distribution<double> g(0.0, 1.0);
  RolloutBuffer b;
  auto state = net.initial_state();
  for (std::size_t t = 0; t < n; ++t) {
    RolloutStep s;
    s.observation = Vector(static_cast<Eigen::Index>(net.shape().input));
    for (auto& v : s.observation) v = g(rng);
    s.reset_before = t == 2;
    if (s.reset_before) state = net.initial_state();
    s.state_before = state;
    const auto out = net.step(s.observation, state);
    s.action = rng() % 3;
    s.log_prob = out.policy_log_probs(static_cast<Eigen::Index>(s.action)) + jitter * g(rng);
    s.value = out.value;
    s.reward = 0.1 * g(rng);
    s.label = rng() % net.shape().aux_classes;
    state = out.next_state;
    b.steps.push_back(s);
  }
  return b;
}

struct Targets {
  std::vector<double> adv, ret;
};

Targets random_targets(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Targets t;
  for (std::size_t i = 0; i < n; ++i) {
    t.adv.push_back(g(rng));
    t.ret.push_back(g(rng));
  }
  return t;
}

env::MarketData toy_market(std::size_t candles, std::uint64_t seed) {
  return env::MarketData::from_series(testkit::series_from_closes(testkit::random_walk_closes(candles, seed)), 16);
}

std::vector<std::size_t> toy_labels(std::size_t n) {
  std::vector<std::size_t> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = (i / 7) % 12;
  return l;
}

PPOConfig small_ppo() {
  PPOConfig c;
  c.rollout_length = 64;
  c.minibatch_size = 16;
  c.total_timesteps = 128;
  c.learning_rate = 1e-3;
  return c;
}

NetworkShape small_net() { return NetworkShape{80, 8, {8, 8}, 3, 12}; }

env::EnvConfig small_env() {
  env::EnvConfig e;
  e.episode_length = 50;
  return e;
}

}  // namespace

TEST(Act, EqualLogitsAreUniform) {
  PolicyNetwork net(toy_shape(), 1);
  find_param(net, "policy_head.weight")->value.setZero();
  find_param(net, "policy_head.bias")->value.setZero();
  const std::vector<double> obs{0.1, -0.2, 0.3, 0.0, 1.0};
  const auto r = act(net, obs, net.initial_state(), ActMode::Greedy);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(r.policy_probs(i), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(r.action, 0u);  // lowest index on a tie
  EXPECT_NEAR(r.aux_probs.sum(), 1.0, 1e-12);
}

TEST(Act, GreedyArgmax) {
  Vector p(3);
  p << 0.2, 0.5, 0.3;
  EXPECT_EQ(argmax_lowest(p), 1u);
}

TEST(Act, SamplingFrequencies) {
  Vector p(3);
  p << 0.2, 0.5, 0.3;
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < 30000; ++i) counts[sample_categorical(p, u(rng))] += 1.0;
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(counts[i] / 30000.0, p(static_cast<Eigen::Index>(i)), 0.02);
}

TEST(Act, SampleModeUsesSeededStreamAndReportsLogProb) {
  PolicyNetwork net(toy_shape(), 2);
  const std::vector<double> obs{0.5, 0.1, -0.3, 0.2, 0.0};
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 20; ++i) {
    const auto x = act(net, obs, net.initial_state(), ActMode::Sample, &a);
    const auto y = act(net, obs, net.initial_state(), ActMode::Sample, &b);
    EXPECT_EQ(x.action, y.action);
    EXPECT_DOUBLE_EQ(x.log_prob, std::log(x.policy_probs(static_cast<Eigen::Index>(x.action))));
    EXPECT_LE(x.log_prob, 0.0);
  }
  try {
    act(net, std::vector<double>{1.0}, net.initial_state(), ActMode::Greedy);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(Network, StepMatchesSequenceBitwise) {
  PolicyNetwork net(NetworkShape{}, 30);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix obs(80, 10);
  for (Eigen::Index i = 0; i < obs.size(); ++i) obs.data()[i] = g(rng);
  std::vector<std::uint8_t> resets(10, 0);
  resets[4] = 1;
  const auto seq = net.forward(obs, net.initial_state(), resets);
  auto state = net.initial_state();
  for (Eigen::Index t = 0; t < 10; ++t) {
    if (resets[static_cast<std::size_t>(t)]) state = net.initial_state();
    const auto out = net.step(obs.col(t), state);
    const Vector lp = nn::log_softmax(Matrix(seq.policy_logits.col(t))).col(0);
    EXPECT_TRUE(out.policy_log_probs == lp);
    EXPECT_EQ(out.value, seq.values(t));
    state = out.next_state;
  }
}

TEST(Network, CheckpointRoundTrip) {
  PolicyNetwork net(NetworkShape{}, 50);
  const auto ckpt = net.to_checkpoint(nullptr, {{"seed", "50"}});
  auto back = PolicyNetwork::from_checkpoint(nn::decode_checkpoint(nn::encode_checkpoint(ckpt)));
  std::vector<double> obs(80, 0.01);
  EXPECT_TRUE(act(net, obs, net.initial_state(), ActMode::Greedy).policy_probs ==
              act(back, obs, back.initial_state(), ActMode::Greedy).policy_probs);
}

TEST(Gae, ZeroCase) {
  const std::vector<double> r(5, 0.0), v(5, 0.0);
  const std::vector<std::uint8_t> d(5, 0);
  const auto e = compute_gae(r, v, d, 0.0, 0.99, 0.95);
  for (double a : e.advantages) EXPECT_EQ(a, 0.0);
}

TEST(Gae, OneStepIdentity) {
  const std::vector<double> r{1.0}, v{0.0};
  const std::vector<std::uint8_t> d{0};
  EXPECT_EQ(compute_gae(r, v, d, 0.0, 1.0, 1.0).advantages[0], 1.0);
}

TEST(Gae, MatchesDirectSummation) {
  const std::vector<double> r{0.5, -0.2, 0.1, 0.7, -0.4};
  const std::vector<double> v{0.1, 0.3, -0.2, 0.05, 0.2};
  const std::vector<std::uint8_t> d{0, 1, 0, 0, 0};
  const double boot = 0.15, gamma = 0.9, lambda = 0.8;
  const auto e = compute_gae(r, v, d, boot, gamma, lambda);
  for (std::size_t t = 0; t < 5; ++t) {
    double a = 0.0, w = 1.0;
    for (std::size_t l = t; l < 5; ++l) {
      const double next_v = l + 1 < 5 ? v[l + 1] : boot;
      const double delta = r[l] + gamma * next_v * (d[l] ? 0.0 : 1.0) - v[l];
      a += w * delta;
      if (d[l]) break;
      w *= gamma * lambda;
    }
    EXPECT_NEAR(e.advantages[t], a, 1e-15);
    EXPECT_NEAR(e.returns[t], a + v[t], 1e-15);
  }
}

TEST(Gae, EmptyBuffer) {
  RolloutBuffer b;
  try {
    compute_gae(b, 0.99, 0.95);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyBuffer);
  }
}

TEST(Gae, NormalizationMoments) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(3.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(2 + rng() % 600);
    for (auto& x : a) x = g(rng);
    normalize_advantages(a);
    const double m = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    double v = 0.0;
    for (double x : a) v += (x - m) * (x - m);
    EXPECT_LE(std::abs(m), 1e-10);
    EXPECT_NEAR(std::sqrt(v / static_cast<double>(a.size())), 1.0, 1e-6);
  }
}

TEST(Losses, ClipExamples) {
  EXPECT_NEAR(ppo_clip_objective(std::log(1.3), 0.0, 1.0, 0.2), 1.2, 1e-12);
  EXPECT_NEAR(ppo_clip_objective(std::log(0.5), 0.0, -1.0, 0.2), -0.8, 1e-12);
  EXPECT_EQ(ppo_clip_objective(0.7, -0.1, 0.0, 0.2), 0.0);
  EXPECT_EQ(ppo_clip_objective(-0.3, -0.3, 2.5, 0.2), 2.5);
}

TEST(Losses, AuxiliaryExamples) {
  Vector p = Vector::Zero(12);
  p(4) = 1.0;
  EXPECT_EQ(auxiliary_loss(p, 4), 0.0);
  EXPECT_NEAR(auxiliary_loss(Vector::Constant(12, 1.0 / 12.0), 3), std::log(12.0), 1e-12);
  Vector h = Vector::Constant(12, 0.5 / 11.0);
  h(0) = 0.5;
  EXPECT_NEAR(auxiliary_loss(h, 0), std::log(2.0), 1e-12);
  try {
    auxiliary_loss(p, 12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LabelOutOfRange);
  }
}

TEST(Losses, ValueExamples) {
  EXPECT_EQ(value_loss(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
  EXPECT_EQ(value_loss(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 1.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> a(100), b(100);
  for (auto& x : a) x = g(rng);
  for (auto& x : b) x = g(rng);
  double s = 0.0;
  for (std::size_t i = 0; i < 100; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_NEAR(value_loss(a, b), s / 100.0, 1e-12);
  EXPECT_THROW(value_loss(a, std::vector<double>(3)), Error);
}

TEST(Losses, EntropyBounds) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    Matrix l3(3, 1), l12(12, 1);
    for (Eigen::Index k = 0; k < 3; ++k) l3(k, 0) = g(rng);
    for (Eigen::Index k = 0; k < 12; ++k) l12(k, 0) = g(rng);
    const double h3 = entropy(nn::softmax(l3).col(0));
    const double h12 = entropy(nn::softmax(l12).col(0));
    EXPECT_GE(h3, 0.0);
    EXPECT_LE(h3, std::log(3.0) + 1e-12);
    EXPECT_GE(h12, 0.0);
    EXPECT_LE(h12, std::log(12.0) + 1e-12);
  }
}

TEST(Losses, CompositeEqualsHandSum) {
  std::mt19937_64 rng(7);
  PolicyNetwork net(toy_shape(), 3);
  const auto buf = toy_buffer(net, 6, rng, 0.3);
  const auto tg = random_targets(6, rng);
  const LossWeights w{0.2, 0.5, 0.5, 0.01};
  const auto lb = composite_loss(net, Minibatch{&buf, tg.adv, tg.ret, 0, 6}, w, false);

  double obj = 0.0, vl = 0.0, ce = 0.0, h = 0.0;
  auto state = buf.steps[0].state_before;
  for (std::size_t t = 0; t < 6; ++t) {
    const auto& s = buf.steps[t];
    if (t > 0 && s.reset_before) state = net.initial_state();
    const auto out = net.step(s.observation, state);
    state = out.next_state;
    const double r = std::exp(out.policy_log_probs(static_cast<Eigen::Index>(s.action)) - s.log_prob);
    obj += std::min(r * tg.adv[t], std::clamp(r, 0.8, 1.2) * tg.adv[t]);
    vl += (out.value - tg.ret[t]) * (out.value - tg.ret[t]);
    ce += -out.aux_log_probs(static_cast<Eigen::Index>(s.label));
    const Vector p = out.policy_log_probs.array().exp();
    for (Eigen::Index k = 0; k < 3; ++k) h -= p(k) * out.policy_log_probs(k);
  }
  const double expected = -obj / 6 + 0.5 * vl / 6 + 0.5 * ce / 6 - 0.01 * h / 6;
  EXPECT_NEAR(lb.total, expected, 1e-12);
  EXPECT_NEAR(lb.value_loss, vl / 6, 1e-12);
  EXPECT_NEAR(lb.aux_loss, ce / 6, 1e-12);
}

TEST(Losses, CompositeGradientMatchesCentralDifferences) {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    PolicyNetwork net(toy_shape(), static_cast<std::uint64_t>(draw));
    const auto buf = toy_buffer(net, 4, rng, 0.25);
    const auto tg = random_targets(4, rng);
    const LossWeights w{0.2, 0.5, 0.5, 0.01};
    const Minibatch mb{&buf, tg.adv, tg.ret, 0, 4};
    auto params = net.parameters();
    nn::zero_grads(params);
    composite_loss(net, mb, w, true);
    worst = std::max(worst, testkit::max_fd_error(params, [&] { return composite_loss(net, mb, w, false).total; }));
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Losses, ZeroAuxWeightLeavesAuxGradientZero) {
  std::mt19937_64 rng(9);
  PolicyNetwork net(toy_shape(), 4);
  const auto buf = toy_buffer(net, 5, rng, 0.1);
  const auto tg = random_targets(5, rng);
  auto params = net.parameters();
  nn::zero_grads(params);
  const auto lb = composite_loss(net, Minibatch{&buf, tg.adv, tg.ret, 0, 5}, LossWeights{0.2, 0.5, 0.0, 0.01}, true);
  EXPECT_EQ(lb.aux_loss, 0.0);
  for (auto* p : net.aux_head_parameters()) EXPECT_TRUE((p->grad.array() == 0.0).all());
}

TEST(Trainer, OneUpdateWhenTimestepsEqualRollout) {
  const auto data = toy_market(400, 1);
  auto cfg = small_ppo();
  cfg.total_timesteps = cfg.rollout_length;
  PpoTrainer t(data, toy_labels(data.windows.size()), small_env(), cfg, small_net(), 30);
  EXPECT_EQ(t.train().size(), 1u);
  EXPECT_EQ(t.timesteps(), 64u);
}

TEST(Trainer, LogsAreDeterministic) {
  const auto data = toy_market(400, 2);
  const auto run = [&] {
    PpoTrainer t(data, toy_labels(data.windows.size()), small_env(), small_ppo(), small_net(), 50);
    return t.train();
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].policy_loss, b[i].policy_loss);
    EXPECT_EQ(a[i].value_loss, b[i].value_loss);
    EXPECT_EQ(a[i].aux_loss, b[i].aux_loss);
    EXPECT_EQ(a[i].mean_reward, b[i].mean_reward);
  }
}

TEST(Trainer, UpdateIsBitIdenticalAcrossReruns) {
  const auto data = toy_market(400, 3);
  PpoTrainer a(data, toy_labels(data.windows.size()), small_env(), small_ppo(), small_net(), 70);
  PpoTrainer b(data, toy_labels(data.windows.size()), small_env(), small_ppo(), small_net(), 70);
  const auto buf = a.collect_rollout();
  b.collect_rollout();
  a.update(buf);
  b.update(buf);
  const auto pa = a.network().parameters(), pb = b.network().parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_TRUE(pa[i]->value == pb[i]->value);
}

TEST(Trainer, RolloutRespectsEpisodesAndRatioIdentity) {
  const auto data = toy_market(400, 4);
  PpoTrainer t(data, toy_labels(data.windows.size()), small_env(), small_ppo(), small_net(), 99);
  const auto buf = t.collect_rollout();
  ASSERT_EQ(buf.size(), 64u);
  std::size_t since_reset = 0;
  for (const auto& s : buf.steps) {
    EXPECT_LE(s.log_prob, 0.0);
    EXPECT_TRUE(std::isfinite(s.log_prob));
    since_reset = s.reset_before ? 1 : since_reset + 1;
    EXPECT_LE(since_reset, 50u);
  }
  auto est = compute_gae(buf, 0.99, 0.95);
  normalize_advantages(est.advantages);
  for (std::size_t b = 0; b < buf.size(); b += 16) {
    const auto lb = composite_loss(t.network(), Minibatch{&buf, est.advantages, est.returns, b, b + 16},
                                   small_ppo().loss_weights(), false);
    for (std::size_t i = 0; i < 16; ++i) {
      EXPECT_EQ(lb.ratios[i], 1.0);
      EXPECT_EQ(lb.objectives[i], est.advantages[b + i]);
    }
  }
}

TEST(Trainer, ZeroAuxWeightFreezesAuxHead) {
  const auto data = toy_market(400, 5);
  auto cfg = small_ppo();
  cfg.aux_loss_weight = 0.0;
  PpoTrainer t(data, toy_labels(data.windows.size()), small_env(), cfg, small_net(), 30);
  std::vector<Matrix> before;
  for (auto* p : t.network().aux_head_parameters()) before.push_back(p->value);
  const auto rows = t.train();
  const auto after = t.network().aux_head_parameters();
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_TRUE(after[i]->value == before[i]);
  for (const auto& r : rows) EXPECT_EQ(r.aux_loss, 0.0);
}

TEST(Trainer, ConfigValidation) {
  PPOConfig c;
  c.clip_epsilon = 1.0;
  EXPECT_THROW(validate(c), Error);
  c = PPOConfig{};
  c.gamma = 0.0;
  EXPECT_THROW(validate(c), Error);
  c = PPOConfig{};
  c.gae_lambda = 1.5;
  EXPECT_THROW(validate(c), Error);
  c = PPOConfig{};
  c.entropy_coefficient = -0.1;
  EXPECT_THROW(validate(c), Error);
  EXPECT_EQ(PPOConfig{}.update_count(), 1'000'000u / 600u);
}

TEST(Trainer, LabelsMustCoverWindows) {
  const auto data = toy_market(200, 6);
  EXPECT_THROW(PpoTrainer(data, toy_labels(3), small_env(), small_ppo(), small_net(), 1), Error);
}
