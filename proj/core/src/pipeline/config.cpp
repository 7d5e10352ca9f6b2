#include "axtrade/pipeline/config.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "axtrade/error.hpp"
#include "axtrade/hash.hpp"

namespace axtrade::pipeline {
namespace {

using nlohmann::json;

std::string timing_name(env::RewardTiming t) {
  return t == env::RewardTiming::NextReturn ? "next_return" : "same_step_return";
}

env::RewardTiming timing_from(const std::string& s) {
  if (s == "next_return") return env::RewardTiming::NextReturn;
  if (s == "same_step_return") return env::RewardTiming::SameStepReturn;
  fail(ErrorKind::ConfigError, "unknown env.reward_timing '" + s + "'");
}

std::string objective_name(TuneObjective o) {
  return o == TuneObjective::AeReconstructionMse ? "ae_reconstruction_mse" : "kmeans_silhouette";
}

TuneObjective objective_from(const std::string& s) {
  if (s == "ae_reconstruction_mse") return TuneObjective::AeReconstructionMse;
  if (s == "kmeans_silhouette") return TuneObjective::KMeansSilhouette;
  fail(ErrorKind::ConfigError, "unknown tune.objective '" + s + "'");
}

std::string delimiter_text(char c) { return c == '\t' ? "\\t" : std::string(1, c); }

char delimiter_from(const std::string& s) {
  if (s == "\\t" || s == "\t") return '\t';
  if (s.size() != 1) fail(ErrorKind::ConfigError, "data.csv.delimiter must be one character");
  return s[0];
}

json to_json(const RunConfig& c) {
  const auto& d = c.data;
  const auto& ae = c.axt.autoencoder;
  const auto& p = c.ppo;
  const auto& t = c.tune;
  return json{
      {"data",
       {{"train_csv", d.train_csv},
        {"test_csv", d.test_csv},
        {"train_start", d.train_start},
        {"train_end", d.train_end},
        {"test_start", d.test_start},
        {"test_end", d.test_end},
        {"csv",
         {{"delimiter", delimiter_text(d.csv.delimiter)},
          {"timestamp_column", d.csv.timestamp_column},
          {"time_column", d.csv.time_column},
          {"open_column", d.csv.open_column},
          {"high_column", d.csv.high_column},
          {"low_column", d.csv.low_column},
          {"close_column", d.csv.close_column}}},
        {"window_len", d.window_len},
        {"zscore", d.zscore}}},
      {"axt",
       {{"seed", c.axt.seed},
        {"autoencoder",
         {{"hidden", ae.hidden},
          {"latent_dim", ae.latent_dim},
          {"batch_size", ae.batch_size},
          {"learning_rate", ae.learning_rate},
          {"epochs", ae.epochs},
          {"patience", ae.patience},
          {"holdout_fraction", ae.holdout_fraction}}},
        {"kmeans",
         {{"k", c.axt.kmeans.k}, {"max_iters", c.axt.kmeans.max_iters}, {"tolerance", c.axt.kmeans.tolerance}}}}},
      {"env",
       {{"episode_length", c.env.episode_length},
        {"spread_cost", c.env.spread_cost},
        {"reward_timing", timing_name(c.env.reward_timing)}}},
      {"ppo",
       {{"clip_epsilon", p.clip_epsilon},
        {"gamma", p.gamma},
        {"gae_lambda", p.gae_lambda},
        {"aux_loss_weight", p.aux_loss_weight},
        {"value_loss_weight", p.value_loss_weight},
        {"entropy_coefficient", p.entropy_coefficient},
        {"epochs_per_update", p.epochs_per_update},
        {"minibatch_size", p.minibatch_size},
        {"rollout_length", p.rollout_length},
        {"total_timesteps", p.total_timesteps},
        {"learning_rate", p.learning_rate},
        {"max_grad_norm", p.max_grad_norm},
        {"checkpoint_every", p.checkpoint_every}}},
      {"network", {{"lstm_hidden", c.network.lstm_hidden}, {"fc", c.network.fc}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
      {"tune",
       {{"trials", t.trials},
        {"seed", t.seed},
        {"batch_sizes", t.batch_sizes},
        {"learning_rate", {t.learning_rate.first, t.learning_rate.second}},
        {"latent_dim", {t.latent_dim.first, t.latent_dim.second}},
        {"k", {t.k.first, t.k.second}},
        {"objective", objective_name(t.objective)},
        {"epochs", t.epochs},
        {"max_points", t.max_points}}},
  };
}

RunConfig from_full_json(const json& j) {
  RunConfig c;
  const auto& d = j.at("data");
  c.data.train_csv = d.at("train_csv").get<std::string>();
  c.data.test_csv = d.at("test_csv").get<std::string>();
  c.data.train_start = d.at("train_start").get<std::string>();
  c.data.train_end = d.at("train_end").get<std::string>();
  c.data.test_start = d.at("test_start").get<std::string>();
  c.data.test_end = d.at("test_end").get<std::string>();
  const auto& csv = d.at("csv");
  c.data.csv.delimiter = delimiter_from(csv.at("delimiter").get<std::string>());
  c.data.csv.timestamp_column = csv.at("timestamp_column").get<std::string>();
  c.data.csv.time_column = csv.at("time_column").get<std::string>();
  c.data.csv.open_column = csv.at("open_column").get<std::string>();
  c.data.csv.high_column = csv.at("high_column").get<std::string>();
  c.data.csv.low_column = csv.at("low_column").get<std::string>();
  c.data.csv.close_column = csv.at("close_column").get<std::string>();
  c.data.window_len = d.at("window_len").get<std::size_t>();
  c.data.zscore = d.at("zscore").get<bool>();

  const auto& a = j.at("axt");
  c.axt.seed = a.at("seed").get<std::uint64_t>();
  const auto& ae = a.at("autoencoder");
  c.axt.autoencoder.hidden = ae.at("hidden").get<std::vector<std::size_t>>();
  c.axt.autoencoder.latent_dim = ae.at("latent_dim").get<std::size_t>();
  c.axt.autoencoder.batch_size = ae.at("batch_size").get<std::size_t>();
  c.axt.autoencoder.learning_rate = ae.at("learning_rate").get<double>();
  c.axt.autoencoder.epochs = ae.at("epochs").get<std::size_t>();
  c.axt.autoencoder.patience = ae.at("patience").get<std::size_t>();
  c.axt.autoencoder.holdout_fraction = ae.at("holdout_fraction").get<double>();
  c.axt.autoencoder.input_dim = c.data.window_len * market::kFeatureCount;
  const auto& km = a.at("kmeans");
  c.axt.kmeans.k = km.at("k").get<std::size_t>();
  c.axt.kmeans.max_iters = km.at("max_iters").get<std::size_t>();
  c.axt.kmeans.tolerance = km.at("tolerance").get<double>();

  const auto& e = j.at("env");
  c.env.episode_length = e.at("episode_length").get<std::size_t>();
  c.env.spread_cost = e.at("spread_cost").get<double>();
  c.env.reward_timing = timing_from(e.at("reward_timing").get<std::string>());
  c.env.window_len = c.data.window_len;

  const auto& p = j.at("ppo");
  c.ppo.clip_epsilon = p.at("clip_epsilon").get<double>();
  c.ppo.gamma = p.at("gamma").get<double>();
  c.ppo.gae_lambda = p.at("gae_lambda").get<double>();
  c.ppo.aux_loss_weight = p.at("aux_loss_weight").get<double>();
  c.ppo.value_loss_weight = p.at("value_loss_weight").get<double>();
  c.ppo.entropy_coefficient = p.at("entropy_coefficient").get<double>();
  c.ppo.epochs_per_update = p.at("epochs_per_update").get<std::size_t>();
  c.ppo.minibatch_size = p.at("minibatch_size").get<std::size_t>();
  c.ppo.rollout_length = p.at("rollout_length").get<std::size_t>();
  c.ppo.total_timesteps = p.at("total_timesteps").get<std::size_t>();
  c.ppo.learning_rate = p.at("learning_rate").get<double>();
  c.ppo.max_grad_norm = p.at("max_grad_norm").get<double>();
  c.ppo.checkpoint_every = p.at("checkpoint_every").get<std::size_t>();

  c.network.lstm_hidden = j.at("network").at("lstm_hidden").get<std::size_t>();
  c.network.fc = j.at("network").at("fc").get<std::vector<std::size_t>>();
  c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.output_dir = j.at("output_dir").get<std::string>();

  const auto& t = j.at("tune");
  c.tune.trials = t.at("trials").get<std::size_t>();
  c.tune.seed = t.at("seed").get<std::uint64_t>();
  c.tune.batch_sizes = t.at("batch_sizes").get<std::vector<std::size_t>>();
  const auto lr = t.at("learning_rate").get<std::vector<double>>();
  const auto ld = t.at("latent_dim").get<std::vector<std::size_t>>();
  const auto kk = t.at("k").get<std::vector<std::size_t>>();
  if (lr.size() != 2 || ld.size() != 2 || kk.size() != 2) fail(ErrorKind::ConfigError, "tune ranges are [low, high]");
  c.tune.learning_rate = {lr[0], lr[1]};
  c.tune.latent_dim = {ld[0], ld[1]};
  c.tune.k = {kk[0], kk[1]};
  c.tune.objective = objective_from(t.at("objective").get<std::string>());
  c.tune.epochs = t.at("epochs").get<std::size_t>();
  c.tune.max_points = t.at("max_points").get<std::size_t>();
  return c;
}

void check_known_keys(const json& user, const json& reference, const std::string& path) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const auto full = path.empty() ? it.key() : path + "." + it.key();
    if (!reference.contains(it.key())) fail(ErrorKind::ConfigError, "unknown config key '" + full + "'");
    if (it.value().is_object() && reference.at(it.key()).is_object()) {
      check_known_keys(it.value(), reference.at(it.key()), full);
    }
  }
}

RunConfig parse_checked(const json& merged) {
  try {
    auto c = from_full_json(merged);
    validate(c);
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, e.what());
  }
}

}  // namespace

ppo::NetworkShape RunConfig::network_shape() const {
  ppo::NetworkShape s;
  s.input = data.window_len * market::kFeatureCount;
  s.lstm_hidden = network.lstm_hidden;
  s.fc = network.fc;
  s.actions = env::kActionCount;
  s.aux_classes = axt.kmeans.k;
  return s;
}

void validate(const RunConfig& c) {
  if (c.data.window_len == 0) fail(ErrorKind::ConfigError, "data.window_len must be positive");
  if (c.seeds.empty()) fail(ErrorKind::ConfigError, "seeds must not be empty");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
    fail(ErrorKind::ConfigError, "seeds must be unique");
  }
  if (c.axt.kmeans.k == 0) fail(ErrorKind::ConfigError, "axt.kmeans.k must be positive");
  if (c.axt.autoencoder.latent_dim == 0) fail(ErrorKind::ConfigError, "axt.autoencoder.latent_dim must be positive");
  if (c.network.fc.empty() || c.network.lstm_hidden == 0) fail(ErrorKind::ConfigError, "network sizes");
  env::validate(c.env);
  ppo::validate(c.ppo);
  const auto parse_opt = [](const std::string& s) {
    return s.empty() ? std::optional<market::Timestamp>() : std::optional(market::parse_timestamp(s));
  };
  try {
    const auto train_end = parse_opt(c.data.train_end);
    const auto test_start = parse_opt(c.data.test_start);
    parse_opt(c.data.train_start);
    parse_opt(c.data.test_end);
    if (train_end && test_start && !(*train_end < *test_start)) {
      fail(ErrorKind::ConfigError, "training range must end before the test range starts");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    fail(ErrorKind::ConfigError, std::string("data range: ") + e.what());
  }
  const auto& t = c.tune;
  if (t.trials < 1) fail(ErrorKind::ConfigError, "tune.trials must be >= 1");
  if (t.batch_sizes.empty()) fail(ErrorKind::ConfigError, "tune.batch_sizes must not be empty");
  if (!(t.learning_rate.first > 0.0 && t.learning_rate.first < t.learning_rate.second)) {
    fail(ErrorKind::ConfigError, "tune.learning_rate must be 0 < low < high");
  }
  if (t.latent_dim.first < 1 || t.latent_dim.first > t.latent_dim.second || t.k.first < 1 || t.k.first > t.k.second) {
    fail(ErrorKind::ConfigError, "tune integer ranges must be 1 <= low <= high");
  }
}

RunConfig config_from_json(const std::string& text) {
  json user;
  try {
    user = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) fail(ErrorKind::ConfigError, "config must be a JSON object");
  json merged = to_json(RunConfig{});
  check_known_keys(user, merged, "");
  merged.merge_patch(user);
  return parse_checked(merged);
}

std::string config_to_json(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorKind::ConfigError, "override must be key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  json j = to_json(config);
  json* node = &j;
  std::stringstream ss(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i])) fail(ErrorKind::ConfigError, "unknown config key '" + key + "'");
    node = &(*node)[parts[i]];
  }
  if (node->is_string() && !value.is_string()) value = raw;
  *node = value;
  config = parse_checked(j);
}

std::string config_hash(const RunConfig& config) {
  json j = to_json(config);
  // Seeds only pick subdirectories, so `--seed N` stays inside the same run.
  j.erase("output_dir");
  j.erase("seeds");
  return hash_hex(j.dump());
}

std::filesystem::path output_root(const RunConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("AXTRADE_OUT"); env && *env) return env;
  return "out";
}

std::filesystem::path run_directory(const RunConfig& config) { return output_root(config) / config_hash(config); }

}  // namespace axtrade::pipeline
