#include "axtrade/pipeline/tuner.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "axtrade/error.hpp"
#include "axtrade/nn/checkpoint.hpp"

namespace axtrade::pipeline {

TrialParams sample_trial(const TuneSpec& spec, std::mt19937_64& rng) {
  TrialParams p;
  std::uniform_int_distribution<std::size_t> pick(0, spec.batch_sizes.size() - 1);
  p.batch_size = spec.batch_sizes[pick(rng)];
  std::uniform_real_distribution<double> log_lr(std::log(spec.learning_rate.first), std::log(spec.learning_rate.second));
  p.learning_rate = std::exp(log_lr(rng));
  p.latent_dim = std::uniform_int_distribution<std::size_t>(spec.latent_dim.first, spec.latent_dim.second)(rng);
  p.k = std::uniform_int_distribution<std::size_t>(spec.k.first, spec.k.second)(rng);
  return p;
}

bool objective_better(TuneObjective objective, double a, double b) {
  return objective == TuneObjective::AeReconstructionMse ? a < b : a > b;
}

double evaluate_objective(const TuneSpec& spec, const axt::Autoencoder& ae, const axt::KMeansModel& km,
                          std::span<const market::FeatureWindow> windows) {
  if (windows.empty()) fail(ErrorKind::EmptyInput, "no windows to evaluate");
  if (spec.objective == TuneObjective::AeReconstructionMse) {
    auto n_val = static_cast<std::size_t>(
        std::floor(ae.config().holdout_fraction * static_cast<double>(windows.size())));
    if (n_val == 0) n_val = windows.size();
    return ae.reconstruction_mse(axt::windows_to_matrix(windows.subspan(windows.size() - n_val)));
  }
  const std::size_t n = windows.size();
  const std::size_t m = std::max<std::size_t>(1, std::min(n, spec.max_points));
  std::vector<market::FeatureWindow> sample;
  sample.reserve(m);
  for (std::size_t i = 0; i < m; ++i) sample.push_back(windows[i * n / m]);
  const nn::Matrix encoded = ae.encode_batch(axt::windows_to_matrix(sample));
  std::vector<std::size_t> labels(m);
  for (std::size_t i = 0; i < m; ++i) {
    labels[i] = axt::nearest_centroid(km.centroids, encoded.col(static_cast<Eigen::Index>(i)));
  }
  return axt::silhouette_score(encoded, labels, static_cast<std::size_t>(km.centroids.cols()));
}

std::filesystem::path trial_directory(const std::filesystem::path& root, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "trial_%03zu", index);
  return root / name;
}

TuneOutcome run_tuning(std::span<const market::FeatureWindow> windows, const AxtSettings& base,
                       const TuneSpec& spec, const std::filesystem::path& trial_root) {
  if (spec.trials < 1) fail(ErrorKind::ConfigError, "tune.trials must be >= 1");
  std::mt19937_64 rng(spec.seed);
  TuneOutcome out;
  for (std::size_t t = 0; t < spec.trials; ++t) {
    TrialResult r;
    r.index = t;
    r.params = sample_trial(spec, rng);
    r.seed = rng();

    axt::AutoencoderConfig ae_cfg = base.autoencoder;
    ae_cfg.batch_size = r.params.batch_size;
    ae_cfg.learning_rate = r.params.learning_rate;
    ae_cfg.latent_dim = r.params.latent_dim;
    ae_cfg.epochs = spec.epochs;
    auto trained = axt::train_autoencoder(windows, ae_cfg, r.seed);

    axt::KMeansConfig km_cfg = base.kmeans;
    km_cfg.k = r.params.k;
    const auto km = axt::kmeans_fit(trained.model.encode_batch(axt::windows_to_matrix(windows)), km_cfg, r.seed);
    r.objective = evaluate_objective(spec, trained.model, km, windows);

    if (!trial_root.empty()) {
      const auto dir = trial_directory(trial_root, t);
      std::filesystem::create_directories(dir);
      nn::write_checkpoint(dir / "ae.ckpt", trained.model.to_checkpoint(r.seed));
      axt::write_kmeans(dir / "kmeans.bin", km);
    }
    if (t == 0 || objective_better(spec.objective, r.objective, out.trials[out.best].objective)) out.best = t;
    out.trials.push_back(r);
  }
  return out;
}

void write_trials_csv(std::ostream& out, std::span<const TrialResult> trials) {
  out << kTrialsHeader << '\n';
  for (const auto& t : trials) {
    out << t.index << ',' << t.seed << ',' << t.params.batch_size << ',' << market::format_double(t.params.learning_rate)
        << ',' << t.params.latent_dim << ',' << t.params.k << ',' << market::format_double(t.objective) << '\n';
  }
}

}  // namespace axtrade::pipeline
