#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "axtrade/market_data.hpp"
#include "axtrade/nn/adam.hpp"
#include "axtrade/nn/checkpoint.hpp"
#include "axtrade/nn/dense.hpp"

namespace axtrade::axt {

using nn::Matrix;
using nn::Vector;

// The 12-value encoder output of one window.
using GoldenFeatures = Vector;

struct AutoencoderConfig {
  std::size_t input_dim = 80;
  std::vector<std::size_t> hidden = {128, 64, 32};
  std::size_t latent_dim = 12;
  std::size_t batch_size = 32;
  double learning_rate = 0.0000879678;
  std::size_t epochs = 100;
  // Early stop after this many epochs without validation improvement; 0 disables.
  std::size_t patience = 10;
  // Chronologically last fraction of the training windows held out for validation.
  double holdout_fraction = 0.1;
};

// Encoder input -> hidden... -> latent (identity); decoder mirrors it back to input
// (identity output). Hidden layers use ReLU.
class Autoencoder {
 public:
  Autoencoder(const AutoencoderConfig& config, std::uint64_t seed);

  GoldenFeatures encode(const market::FeatureWindow& window) const;
  // (input_dim x n) -> (latent_dim x n)
  Matrix encode_batch(const Matrix& inputs) const;
  Matrix reconstruct_batch(const Matrix& inputs) const;
  double reconstruction_mse(const Matrix& inputs) const;

  // One minibatch of MSE training. Returns the minibatch loss before the update.
  double train_batch(const Matrix& inputs, nn::Adam& optimizer);

  nn::ParameterList parameters();
  std::vector<nn::Dense>& encoder() noexcept { return encoder_; }
  std::vector<nn::Dense>& decoder() noexcept { return decoder_; }
  const AutoencoderConfig& config() const noexcept { return config_; }

  nn::Checkpoint to_checkpoint(std::uint64_t seed) const;
  static Autoencoder from_checkpoint(const nn::Checkpoint& ckpt);

 private:
  AutoencoderConfig config_;
  std::vector<nn::Dense> encoder_;
  std::vector<nn::Dense> decoder_;
};

struct AutoencoderHistory {
  std::vector<double> train_mse;       // mean over samples, one entry per epoch
  std::vector<double> validation_mse;  // empty when there is no holdout
  std::size_t best_epoch = 0;          // 0-based epoch whose parameters were kept
  bool stopped_early = false;
};

struct TrainedAutoencoder {
  Autoencoder model;
  AutoencoderHistory history;
};

// Errors: TooFewSamples (< 2 batches), DivergedLoss.
TrainedAutoencoder train_autoencoder(std::span<const market::FeatureWindow> windows,
                                     const AutoencoderConfig& config, std::uint64_t seed);

Matrix windows_to_matrix(std::span<const market::FeatureWindow> windows);

}  // namespace axtrade::axt
