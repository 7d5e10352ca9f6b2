#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "axtrade/axt/autoencoder.hpp"
#include "axtrade/axt/kmeans.hpp"
#include "axtrade/market_data.hpp"
#include "axtrade/pipeline/config.hpp"

namespace axtrade::pipeline {

struct TrialParams {
  std::size_t batch_size = 32;
  double learning_rate = 0.0;
  std::size_t latent_dim = 12;
  std::size_t k = 12;
};

struct TrialResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  TrialParams params;
  double objective = 0.0;
};

// Batch size uniform over the list, learning rate log-uniform, latent and k uniform integers.
TrialParams sample_trial(const TuneSpec& spec, std::mt19937_64& rng);

// True when objective `a` beats `b` (MSE is minimized, silhouette maximized).
bool objective_better(TuneObjective objective, double a, double b);

// Reconstruction MSE on the chronological holdout tail (all windows when there is none),
// or the silhouette of an evenly strided subsample of at most spec.max_points encodings.
double evaluate_objective(const TuneSpec& spec, const axt::Autoencoder& ae, const axt::KMeansModel& km,
                          std::span<const market::FeatureWindow> windows);

struct TuneOutcome {
  std::vector<TrialResult> trials;
  std::size_t best = 0;  // index into trials
};

// Trains one short-budget autoencoder and K-Means per trial. When trial_root is
// non-empty each trial's models go to trial_root/trial_NNN/.
TuneOutcome run_tuning(std::span<const market::FeatureWindow> windows, const AxtSettings& base,
                       const TuneSpec& spec, const std::filesystem::path& trial_root = {});

inline constexpr const char* kTrialsHeader = "trial,seed,batch_size,learning_rate,latent_dim,k,objective";
void write_trials_csv(std::ostream& out, std::span<const TrialResult> trials);
std::filesystem::path trial_directory(const std::filesystem::path& root, std::size_t index);

}  // namespace axtrade::pipeline
