#include "axtrade/pipeline/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "axtrade/axt/labeler.hpp"
#include "axtrade/error.hpp"
#include "axtrade/hash.hpp"
#include "axtrade/nn/checkpoint.hpp"
#include "axtrade/ppo/trainer.hpp"

namespace axtrade::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::mutex log_mutex;

template <typename... Args>
void say(const CommandOptions& options, const Args&... args) {
  if (!options.log) return;
  std::lock_guard lock(log_mutex);
  ((*options.log) << ... << args) << '\n';
}

env::EnvConfig effective_env(const RunConfig& config) {
  auto e = config.env;
  e.window_len = config.data.window_len;
  return e;
}

axt::AxtConfig effective_axt(const RunConfig& config) {
  axt::AxtConfig c{config.axt.autoencoder, config.axt.kmeans};
  c.autoencoder.input_dim = config.data.window_len * market::kFeatureCount;
  return c;
}

std::string write_hashed(const fs::path& path, const std::string& text, Manifest& manifest) {
  write_text_file(path, text);
  const auto h = hash_hex(text);
  manifest.file_hashes[path.filename().string()] = h;
  return h;
}

json split_json(const SplitManifest& s) {
  return json{{"source", s.source},         {"source_hash", s.source_hash},
              {"input_rows", s.input_rows}, {"feature_rows", s.feature_rows},
              {"window_count", s.window_count}, {"first_timestamp", s.first_timestamp},
              {"last_timestamp", s.last_timestamp}};
}

SplitManifest split_from(const json& j) {
  SplitManifest s;
  s.source = j.at("source").get<std::string>();
  s.source_hash = j.at("source_hash").get<std::string>();
  s.input_rows = j.at("input_rows").get<std::size_t>();
  s.feature_rows = j.at("feature_rows").get<std::size_t>();
  s.window_count = j.at("window_count").get<std::size_t>();
  s.first_timestamp = j.at("first_timestamp").get<std::string>();
  s.last_timestamp = j.at("last_timestamp").get<std::string>();
  return s;
}

template <typename Fn>
void for_each_seed(const std::vector<std::uint64_t>& seeds, bool parallel, Fn&& fn) {
  if (!parallel || seeds.size() < 2) {
    for (auto s : seeds) fn(s);
    return;
  }
  std::vector<std::exception_ptr> errors(seeds.size());
  std::vector<std::thread> threads;
  threads.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    threads.emplace_back([&, i] {
      try {
        fn(seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const char* objective_label(TuneObjective o) {
  return o == TuneObjective::AeReconstructionMse ? "ae_reconstruction_mse" : "kmeans_silhouette";
}

}  // namespace

std::string manifest_to_json(const Manifest& manifest) {
  json j{{"train", split_json(manifest.train)}, {"test", split_json(manifest.test)}, {"files", manifest.file_hashes}};
  return j.dump(2) + "\n";
}

Manifest manifest_from_json(const std::string& text) {
  try {
    const auto j = json::parse(text);
    Manifest m;
    m.train = split_from(j.at("train"));
    m.test = split_from(j.at("test"));
    m.file_hashes = j.at("files").get<std::map<std::string, std::string>>();
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::MalformedRow, std::string("bad manifest: ") + e.what());
  }
}

Manifest cmd_preprocess(const RunConfig& config, const CommandOptions& options) {
  validate(config);
  const auto& d = config.data;
  if (d.train_csv.empty()) fail(ErrorKind::ConfigError, "data.train_csv is required");
  const std::string test_src = d.test_csv.empty() ? d.train_csv : d.test_csv;
  const bool same_file = test_src == d.train_csv;
  if (same_file && d.train_end.empty() && d.test_start.empty()) {
    fail(ErrorKind::ConfigError, "one input file needs data.train_end or data.test_start to split it");
  }

  const auto train_raw = market::load_candles(d.train_csv, d.csv);
  const auto test_raw = same_file ? train_raw : market::load_candles(test_src, d.csv);
  const auto train = slice_range(train_raw, d.train_start, d.train_end);
  const auto test = slice_range(test_raw, d.test_start, d.test_end);
  if (!(train.candles.back().timestamp < test.candles.front().timestamp)) {
    fail(ErrorKind::ConfigError, "training candles must end before the first test candle");
  }

  const auto layout = layout_for(config);
  Manifest manifest;
  const auto train_features = market::compute_features(train);
  std::optional<market::FeatureScaler> scaler;
  if (d.zscore) {
    scaler = market::FeatureScaler::fit(train_features);
    write_scaler_csv(layout.scaler_csv(), *scaler);
    manifest.file_hashes["scaler.csv"] = hash_file(layout.scaler_csv());
  }

  const auto emit = [&](std::string_view split, const market::CandleSeries& series, const std::string& source,
                        SplitManifest& out) {
    const auto features = market::compute_features(series);
    const auto returns = market::compute_returns(series);
    const auto windows = market::build_windows(features, d.window_len);
    std::ostringstream c, f, r;
    write_candles_csv(c, series);
    market::write_features_csv(f, features);
    market::write_returns_csv(r, returns);
    write_hashed(layout.candles_csv(split), c.str(), manifest);
    write_hashed(layout.features_csv(split), f.str(), manifest);
    write_hashed(layout.returns_csv(split), r.str(), manifest);
    out.source = source;
    out.source_hash = hash_file(source);
    out.input_rows = series.size();
    out.feature_rows = features.size();
    out.window_count = windows.size();
    out.first_timestamp = market::format_timestamp(series.candles.front().timestamp);
    out.last_timestamp = market::format_timestamp(series.candles.back().timestamp);
  };
  emit(kTrainSplit, train, d.train_csv, manifest.train);
  emit(kTestSplit, test, test_src, manifest.test);

  write_text_file(layout.manifest(), manifest_to_json(manifest));
  write_config_echo(layout.preprocess(), config);
  say(options, "preprocess: ", manifest.train.input_rows, " training and ", manifest.test.input_rows,
      " test candles -> ", layout.preprocess().string());
  return manifest;
}

axt::AutoencoderHistory cmd_label(const RunConfig& config, const CommandOptions& options) {
  validate(config);
  const auto layout = layout_for(config);
  const auto train = load_split(layout, config, kTrainSplit);
  const auto test = load_split(layout, config, kTestSplit);

  say(options, "label: training autoencoder on ", train.market.windows.size(), " windows");
  auto model = axt::fit_axt(train.market.windows, effective_axt(config), config.axt.seed);

  nn::write_checkpoint(layout.ae_checkpoint(), model.autoencoder.to_checkpoint(config.axt.seed));
  axt::write_kmeans(layout.kmeans_model(), model.kmeans);
  for (const auto* split : {&train, &test}) {
    const auto name = split == &train ? kTrainSplit : kTestSplit;
    const auto labels = axt::label_windows(model.autoencoder, model.kmeans, split->market.windows);
    std::ostringstream out;
    axt::write_labels_csv(out, split->market.windows, labels);
    write_text_file(layout.labels_csv(name), out.str());
  }

  std::ostringstream hist;
  hist << "epoch,train_mse,validation_mse\n";
  const auto& h = model.history;
  for (std::size_t e = 0; e < h.train_mse.size(); ++e) {
    hist << e << ',' << market::format_double(h.train_mse[e]) << ','
         << (e < h.validation_mse.size() ? market::format_double(h.validation_mse[e]) : "") << '\n';
  }
  write_text_file(layout.label() / "ae_history.csv", hist.str());
  write_config_echo(layout.label(), config);
  say(options, "label: ", h.train_mse.size(), " epochs, best ", h.best_epoch, ", k-means inertia ",
      market::format_double(model.kmeans.inertia));
  return model.history;
}

std::vector<ppo::TrainingLogRow> cmd_train(const RunConfig& config, std::uint64_t seed, const CommandOptions& options) {
  validate(config);
  const auto layout = layout_for(config);
  const auto dir = layout.train(seed);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!options.force) {
      throw Error(ErrorKind::AlreadyExists, dir.string() + " already holds a run; pass --force to replace it")
          .with_seed(seed);
    }
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
  write_config_echo(dir, config);

  try {
    const auto train = load_split(layout, config, kTrainSplit);
    const auto labels = load_labels(layout, kTrainSplit, train.market);
    ppo::PpoTrainer trainer(train.market, labels, effective_env(config), config.ppo, config.network_shape(), seed);

    const auto hash = config_hash(config);
    const auto metadata = [&](const ppo::PpoTrainer& t) {
      return std::map<std::string, std::string>{
          {"seed", std::to_string(seed)}, {"config_hash", hash}, {"timesteps", std::to_string(t.timesteps())}};
    };

    std::ofstream log(dir / "training_log.csv");
    if (!log) fail(ErrorKind::IoError, "cannot write " + (dir / "training_log.csv").string());
    log << ppo::kTrainingLogHeader << '\n';
    say(options, "train[", seed, "]: ", config.ppo.update_count(), " updates");
    auto rows = trainer.train(
        [&](const ppo::TrainingLogRow& row) {
          ppo::write_log_row(log, row);
          log.flush();
        },
        [&](std::size_t update, ppo::PpoTrainer& t) {
          char name[32];
          std::snprintf(name, sizeof name, "policy_u%04zu.ckpt", update);
          nn::write_checkpoint(dir / name, t.network().to_checkpoint(&t.optimizer(), metadata(t)));
        });
    nn::write_checkpoint(dir / "policy.ckpt", trainer.network().to_checkpoint(&trainer.optimizer(), metadata(trainer)));
    if (!rows.empty()) {
      say(options, "train[", seed, "]: done, last mean reward ", market::format_double(rows.back().mean_reward));
    }
    return rows;
  } catch (Error& e) {
    if (!e.seed()) e.with_seed(seed);
    throw;
  }
}

void cmd_train_all(const RunConfig& config, const CommandOptions& options) {
  validate(config);
  for_each_seed(config.seeds, options.parallel_seeds, [&](std::uint64_t seed) { cmd_train(config, seed, options); });
}

backtest::SeedAggregate cmd_backtest(const RunConfig& config, const CommandOptions& options) {
  validate(config);
  const auto layout = layout_for(config);
  for (auto seed : config.seeds) {
    if (!fs::exists(layout.policy_checkpoint(seed))) {
      throw Error(ErrorKind::MissingCheckpoint,
                  "no checkpoint for seed " + std::to_string(seed) + " at " + layout.policy_checkpoint(seed).string())
          .with_seed(seed);
    }
  }
  std::optional<backtest::BaselineMetrics> baseline;
  if (options.baseline) baseline = backtest::read_baseline(*options.baseline);

  const auto train = load_split(layout, config, kTrainSplit);
  const auto test = load_split(layout, config, kTestSplit);
  const auto train_end = train.candles.candles.back().timestamp;
  const auto env_cfg = effective_env(config);

  std::vector<backtest::BacktestReport> reports(config.seeds.size());
  std::vector<std::uint64_t> order(config.seeds.begin(), config.seeds.end());
  for_each_seed(order, options.parallel_seeds, [&](std::uint64_t seed) {
    const auto idx = static_cast<std::size_t>(std::find(order.begin(), order.end(), seed) - order.begin());
    const auto path = layout.policy_checkpoint(seed);
    try {
      const auto net = ppo::PolicyNetwork::from_checkpoint(nn::read_checkpoint(path));
      auto report = backtest::run_backtest(net, test.market, env_cfg, train_end);
      report.seed = seed;
      report.checkpoint_hash = hash_file(path);
      backtest::emit_report(backtest::aggregate_seeds({report}), layout.backtest() / std::to_string(seed));
      say(options, "backtest[", seed, "]: total return ", market::format_double(report.total_return * 100.0), "%");
      reports[idx] = std::move(report);
    } catch (Error& e) {
      if (!e.seed()) e.with_seed(seed);
      throw;
    }
  });

  auto aggregate = backtest::aggregate_seeds(std::move(reports));
  backtest::emit_report(aggregate, layout.backtest(), baseline);
  write_config_echo(layout.backtest(), config);
  say(options, "backtest: mean total return ", market::format_double(aggregate.mean_total_return * 100.0), "% over ",
      aggregate.per_seed.size(), " seeds");
  return aggregate;
}

std::vector<env::TradeAction> parse_actions(std::string_view text) {
  std::vector<env::TradeAction> out;
  std::size_t line = 1;
  std::string token;
  const auto flush = [&] {
    if (token.empty()) return;
    const auto t = lower(token);
    if (t == "-1" || t == "sell") {
      out.push_back(env::TradeAction::Sell);
    } else if (t == "0" || t == "hold") {
      out.push_back(env::TradeAction::Hold);
    } else if (t == "1" || t == "+1" || t == "buy") {
      out.push_back(env::TradeAction::Buy);
    } else {
      throw Error(ErrorKind::MalformedRow, "unknown action '" + token + "'").with_line(line);
    }
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
      if (c == '\n') ++line;
    } else {
      token.push_back(c);
    }
  }
  flush();
  if (out.empty()) fail(ErrorKind::EmptyInput, "no actions given");
  return out;
}

std::vector<env::ReplayRow> cmd_simulate(const SimulateRequest& request, std::ostream& out) {
  env::validate(request.env);
  const auto series = market::load_candles(request.data.string(), request.csv);
  const auto data = env::MarketData::from_series(series, request.env.window_len);
  const auto actions = parse_actions(read_text_file(request.actions));
  auto rows = env::replay_actions(data, request.env, request.start, actions);
  out << "step,window_end_index,action,z,reward,cumulative\n";
  double cumulative = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    cumulative += r.reward;
    out << i << ',' << r.candle_index << ',' << env::position_of(r.action) << ','
        << market::format_double(r.step_return) << ',' << market::format_double(r.reward) << ','
        << market::format_double(cumulative) << '\n';
  }
  return rows;
}

TuneOutcome cmd_tune(const RunConfig& config, const CommandOptions& options) {
  validate(config);
  const auto layout = layout_for(config);
  const auto train = load_split(layout, config, kTrainSplit);
  AxtSettings base = config.axt;
  base.autoencoder.input_dim = config.data.window_len * market::kFeatureCount;
  say(options, "tune: ", config.tune.trials, " trials on ", train.market.windows.size(), " windows");
  auto outcome = run_tuning(train.market.windows, base, config.tune, layout.tune());

  std::ostringstream trials;
  write_trials_csv(trials, outcome.trials);
  write_text_file(layout.tune() / "trials.csv", trials.str());
  const auto& best = outcome.trials[outcome.best];
  const json j{{"trial", best.index},
               {"seed", best.seed},
               {"objective", objective_label(config.tune.objective)},
               {"objective_value", best.objective},
               {"batch_size", best.params.batch_size},
               {"learning_rate", best.params.learning_rate},
               {"latent_dim", best.params.latent_dim},
               {"k", best.params.k}};
  write_text_file(layout.tune() / "best_params.json", j.dump(2) + "\n");
  write_config_echo(layout.tune(), config);
  say(options, "tune: best trial ", best.index, " objective ", market::format_double(best.objective));
  return outcome;
}

void cmd_report(const fs::path& directory, std::ostream& out) {
  fs::path dir = directory;
  if (!fs::exists(dir / "summary.txt") && fs::exists(dir / "backtest" / "summary.txt")) dir = dir / "backtest";
  const auto summary = backtest::read_summary(dir / "summary.txt");
  const auto value = [&](const std::string& section, const std::string& key) {
    return summary.get(section, key).value_or("-");
  };
  out << std::left << std::setw(10) << "seed" << std::setw(26) << "total_return_pct" << std::setw(26) << "sharpe"
      << "steps\n";
  for (const auto& [name, keys] : summary.sections) {
    if (name.rfind("seed.", 0) != 0) continue;
    out << std::setw(10) << value(name, "seed") << std::setw(26) << value(name, "total_return_pct") << std::setw(26)
        << value(name, "sharpe") << value(name, "steps") << '\n';
  }
  out << std::setw(10) << "mean" << std::setw(26) << value("mean", "mean_total_return_pct") << std::setw(26)
      << value("mean", "mean_sharpe") << '\n';
  if (fs::exists(dir / "ppi_table.txt")) out << '\n' << read_text_file(dir / "ppi_table.txt");
}

}  // namespace axtrade::pipeline
