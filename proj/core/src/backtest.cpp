#include "axtrade/backtest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "axtrade/error.hpp"
#include "axtrade/market_data.hpp"

namespace axtrade::backtest {

using market::format_double;

BacktestReport run_policy(const env::MarketData& data, const env::EnvConfig& config, const PolicyFn& policy,
                          std::optional<market::Timestamp> train_end) {
  if (train_end && !data.timestamps.empty() && data.timestamps.front() <= *train_end) {
    fail(ErrorKind::OutOfData, "backtest data starts at " + market::format_timestamp(data.timestamps.front()) +
                                   ", inside the training range ending " + market::format_timestamp(*train_end));
  }
  env::TradingEnv env(data, config);
  if (env.action_steps() == 0) fail(ErrorKind::OutOfData, "backtest data has no actionable step");

  BacktestReport report;
  report.first_candle = data.windows.front().end_index;
  std::size_t start = 0;
  while (start < env.action_steps()) {
    env.reset(start);
    bool first = true;
    while (true) {
      const std::size_t index = env.state().cursor;
      const auto action = policy(data.windows[index], first);
      first = false;
      const auto r = env.step(action);
      report.per_step_rewards.push_back(r.reward);
      report.last_candle = data.windows[index].end_index;
      if (r.done) break;
    }
    start = env.state().cursor;
  }

  report.equity_curve.reserve(report.per_step_rewards.size());
  double acc = 0.0;
  for (double r : report.per_step_rewards) {
    acc += r;
    report.equity_curve.push_back(acc);
  }
  report.total_return = env::episode_return(report.per_step_rewards);
  if (report.per_step_rewards.size() >= 2 && population_std(report.per_step_rewards) > 0.0) {
    report.sharpe_ratio = sharpe_ratio(report.per_step_rewards);
  }
  return report;
}

BacktestReport run_backtest(const ppo::PolicyNetwork& net, const env::MarketData& data, const env::EnvConfig& config,
                            std::optional<market::Timestamp> train_end) {
  nn::LstmState state = net.initial_state();
  const PolicyFn greedy = [&](const market::FeatureWindow& w, bool episode_start) {
    if (episode_start) state = net.initial_state();
    auto out = ppo::act(net, w.values, state, ppo::ActMode::Greedy);
    state = std::move(out.next_state);
    return env::action_from_index(out.action);
  };
  return run_policy(data, config, greedy, train_end);
}

BacktestReport run_random_policy(const env::MarketData& data, const env::EnvConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, env::kActionCount - 1);
  auto report = run_policy(data, config, [&](const market::FeatureWindow&, bool) {
    return env::action_from_index(pick(rng));
  });
  report.seed = seed;
  return report;
}

double mean(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::TooFewSamples, "mean of no values");
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size()));
}

double sharpe_ratio(std::span<const double> rewards) {
  if (rewards.size() < 2) fail(ErrorKind::TooFewSamples, "Sharpe ratio needs at least 2 rewards");
  const double sd = population_std(rewards);
  if (!(sd > 0.0)) fail(ErrorKind::DegenerateReturns, "rewards are constant");
  return mean(rewards) / sd;
}

double ppi(double value_new, double value_original) {
  if (value_original == 0.0) fail(ErrorKind::ZeroBaseline, "PPI baseline value is zero");
  return (value_new - value_original) / std::abs(value_original) * 100.0;
}

SeedAggregate aggregate_seeds(std::vector<BacktestReport> reports) {
  if (reports.empty()) fail(ErrorKind::EmptyInput, "no backtest reports to aggregate");
  SeedAggregate agg;
  double tr = 0.0, sh = 0.0;
  bool all_sharpe = true;
  for (const auto& r : reports) {
    tr += r.total_return;
    if (r.sharpe_ratio) {
      sh += *r.sharpe_ratio;
    } else {
      all_sharpe = false;
    }
  }
  const double n = static_cast<double>(reports.size());
  agg.mean_total_return = tr / n;
  if (all_sharpe) agg.mean_sharpe = sh / n;
  agg.per_seed = std::move(reports);
  return agg;
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_double(*v) : "nan"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::string pct(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f%%", v);
  return buf;
}

std::string plain(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

ReportPaths emit_report(const SeedAggregate& aggregate, const std::filesystem::path& directory,
                        const std::optional<BaselineMetrics>& baseline) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) fail(ErrorKind::IoError, "cannot create " + directory.string() + ": " + ec.message());

  ReportPaths paths{directory / "equity.csv", directory / "summary.txt", std::nullopt};

  std::ostringstream eq;
  eq << "step,seed,cumulative_return\n";
  for (const auto& r : aggregate.per_seed) {
    for (std::size_t i = 0; i < r.equity_curve.size(); ++i) {
      eq << i << ',' << r.seed << ',' << format_double(r.equity_curve[i]) << '\n';
    }
  }
  write_text(paths.equity_csv, eq.str());

  std::ostringstream sm;
  sm << "# backtest summary; total returns in percent\n";
  for (const auto& r : aggregate.per_seed) {
    sm << "[seed." << r.seed << "]\n";
    sm << "seed=" << r.seed << '\n';
    sm << "total_return_pct=" << format_double(r.total_return * 100.0) << '\n';
    sm << "sharpe=" << opt_number(r.sharpe_ratio) << '\n';
    sm << "steps=" << r.per_step_rewards.size() << '\n';
    sm << "data_range=" << r.first_candle << '-' << r.last_candle << '\n';
    sm << "checkpoint_hash=" << r.checkpoint_hash << '\n';
  }
  const double mean_tr_pct = aggregate.mean_total_return * 100.0;
  sm << "[mean]\n";
  sm << "seed_count=" << aggregate.per_seed.size() << '\n';
  sm << "mean_total_return_pct=" << format_double(mean_tr_pct) << '\n';
  sm << "mean_sharpe=" << opt_number(aggregate.mean_sharpe) << '\n';
  if (baseline) {
    sm << "[ppi]\n";
    sm << "baseline_total_return_pct=" << format_double(baseline->total_return_pct) << '\n';
    sm << "new_total_return_pct=" << format_double(mean_tr_pct) << '\n';
    sm << "ppi_total_return_pct=" << format_double(ppi(mean_tr_pct, baseline->total_return_pct)) << '\n';
    sm << "baseline_sharpe=" << format_double(baseline->sharpe) << '\n';
    sm << "new_sharpe=" << opt_number(aggregate.mean_sharpe) << '\n';
    sm << "ppi_sharpe="
       << (aggregate.mean_sharpe ? format_double(ppi(*aggregate.mean_sharpe, baseline->sharpe)) : "nan") << '\n';
    if (aggregate.mean_sharpe) {
      paths.ppi_table = directory / "ppi_table.txt";
      write_text(*paths.ppi_table, format_ppi_table(*baseline, {mean_tr_pct, *aggregate.mean_sharpe}));
    }
  }
  write_text(paths.summary, sm.str());
  return paths;
}

std::optional<std::string> Summary::get(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  if (s == sections.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

double Summary::number(const std::string& section, const std::string& key) const {
  const auto v = get(section, key);
  if (!v) fail(ErrorKind::MalformedRow, "summary lacks " + section + "." + key);
  try {
    return std::stod(*v);
  } catch (const std::exception&) {
    fail(ErrorKind::MalformedRow, "summary value " + section + "." + key + " is not numeric");
  }
}

Summary parse_summary(std::string_view text) {
  Summary s;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      s.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::MalformedRow, "summary line " + std::to_string(line_no)).with_line(line_no);
    }
    s.sections[section][trim(std::string_view(line).substr(0, eq))] = trim(std::string_view(line).substr(eq + 1));
  }
  return s;
}

Summary read_summary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_summary(ss.str());
}

BaselineMetrics read_baseline(const std::filesystem::path& path) {
  const auto s = read_summary(path);
  if (s.get("mean", "mean_total_return_pct")) {
    return {s.number("mean", "mean_total_return_pct"), s.number("mean", "mean_sharpe")};
  }
  return {s.number("", "total_return_pct"), s.number("", "sharpe")};
}

std::string format_ppi_table(const BaselineMetrics& baseline, const BaselineMetrics& current) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-16s %12s %12s %12s\n", "Metric", "Baseline", "New", "PPI%");
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-16s %12s %12s %12s\n", "Overall Return", pct(baseline.total_return_pct).c_str(),
                pct(current.total_return_pct).c_str(),
                pct(ppi(current.total_return_pct, baseline.total_return_pct)).c_str());
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-16s %12s %12s %12s\n", "Sharpe Ratio", plain(baseline.sharpe).c_str(),
                plain(current.sharpe).c_str(), pct(ppi(current.sharpe, baseline.sharpe)).c_str());
  out += buf;
  return out;
}

}  // namespace axtrade::backtest
