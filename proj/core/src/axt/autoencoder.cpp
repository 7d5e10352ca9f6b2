#include "axtrade/axt/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "axtrade/error.hpp"
#include "axtrade/market_data.hpp"

namespace axtrade::axt {
namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<std::size_t> split_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  return out;
}

const std::string& meta(const nn::Checkpoint& ckpt, const std::string& key) {
  const auto it = ckpt.metadata.find(key);
  if (it == ckpt.metadata.end()) fail(ErrorKind::IoError, "autoencoder checkpoint lacks '" + key + "'");
  return it->second;
}

}  // namespace

Autoencoder::Autoencoder(const AutoencoderConfig& config, std::uint64_t seed) : config_(config) {
  std::vector<std::size_t> sizes;
  sizes.push_back(config.input_dim);
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(config.latent_dim);

  const auto idx = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const bool last = l + 2 == sizes.size();
    encoder_.emplace_back("encoder." + std::to_string(l), idx(sizes[l]), idx(sizes[l + 1]),
                          last ? nn::Activation::Identity : nn::Activation::ReLU);
  }
  for (std::size_t l = sizes.size() - 1; l > 0; --l) {
    const bool last = l == 1;
    decoder_.emplace_back("decoder." + std::to_string(sizes.size() - 1 - l), idx(sizes[l]), idx(sizes[l - 1]),
                          last ? nn::Activation::Identity : nn::Activation::ReLU);
  }
  std::mt19937_64 rng(seed);
  for (auto& layer : encoder_) layer.init_uniform(rng);
  for (auto& layer : decoder_) layer.init_uniform(rng);
}

GoldenFeatures Autoencoder::encode(const market::FeatureWindow& window) const {
  if (window.values.size() != config_.input_dim) {
    fail(ErrorKind::ShapeMismatch, "window has " + std::to_string(window.values.size()) + " values, encoder expects " +
                                       std::to_string(config_.input_dim));
  }
  const Matrix x = Eigen::Map<const Vector>(window.values.data(), static_cast<Eigen::Index>(window.values.size()));
  return encode_batch(x).col(0);
}

Matrix Autoencoder::encode_batch(const Matrix& inputs) const {
  Matrix h = inputs;
  for (const auto& layer : encoder_) h = layer.infer(h);
  return h;
}

Matrix Autoencoder::reconstruct_batch(const Matrix& inputs) const {
  Matrix h = encode_batch(inputs);
  for (const auto& layer : decoder_) h = layer.infer(h);
  return h;
}

double Autoencoder::reconstruction_mse(const Matrix& inputs) const {
  if (inputs.size() == 0) return 0.0;
  return (reconstruct_batch(inputs) - inputs).squaredNorm() / static_cast<double>(inputs.size());
}

double Autoencoder::train_batch(const Matrix& inputs, nn::Adam& optimizer) {
  auto params = parameters();
  nn::zero_grads(params);
  Matrix h = inputs;
  for (auto& layer : encoder_) h = layer.forward(h);
  for (auto& layer : decoder_) h = layer.forward(h);
  const Matrix diff = h - inputs;
  const double n = static_cast<double>(inputs.size());
  const double loss = diff.squaredNorm() / n;
  if (!std::isfinite(loss)) fail(ErrorKind::DivergedLoss, "autoencoder reconstruction loss is not finite");
  Matrix g = (2.0 / n) * diff;
  for (auto it = decoder_.rbegin(); it != decoder_.rend(); ++it) g = it->backward(g);
  for (auto it = encoder_.rbegin(); it != encoder_.rend(); ++it) g = it->backward(g);
  optimizer.step(params);
  return loss;
}

nn::ParameterList Autoencoder::parameters() {
  nn::ParameterList out;
  for (auto& layer : encoder_)
    for (auto* p : layer.parameters()) out.push_back(p);
  for (auto& layer : decoder_)
    for (auto* p : layer.parameters()) out.push_back(p);
  return out;
}

nn::Checkpoint Autoencoder::to_checkpoint(std::uint64_t seed) const {
  std::map<std::string, std::string> md{
      {"kind", "autoencoder"},
      {"input_dim", std::to_string(config_.input_dim)},
      {"hidden", join(config_.hidden)},
      {"latent_dim", std::to_string(config_.latent_dim)},
      {"batch_size", std::to_string(config_.batch_size)},
      {"learning_rate", market::format_double(config_.learning_rate)},
      {"epochs", std::to_string(config_.epochs)},
      {"patience", std::to_string(config_.patience)},
      {"holdout_fraction", market::format_double(config_.holdout_fraction)},
      {"seed", std::to_string(seed)},
  };
  nn::Checkpoint ckpt;
  ckpt.metadata = std::move(md);
  for (const auto* layers : {&encoder_, &decoder_}) {
    for (const auto& layer : *layers) {
      ckpt.blocks.push_back({layer.weight().name, layer.weight().value});
      ckpt.blocks.push_back({layer.bias().name, layer.bias().value});
    }
  }
  return ckpt;
}

Autoencoder Autoencoder::from_checkpoint(const nn::Checkpoint& ckpt) {
  if (meta(ckpt, "kind") != "autoencoder") fail(ErrorKind::IoError, "checkpoint is not an autoencoder");
  AutoencoderConfig cfg;
  cfg.input_dim = std::stoul(meta(ckpt, "input_dim"));
  cfg.hidden = split_sizes(meta(ckpt, "hidden"));
  cfg.latent_dim = std::stoul(meta(ckpt, "latent_dim"));
  cfg.batch_size = std::stoul(meta(ckpt, "batch_size"));
  cfg.learning_rate = std::stod(meta(ckpt, "learning_rate"));
  cfg.epochs = std::stoul(meta(ckpt, "epochs"));
  cfg.patience = std::stoul(meta(ckpt, "patience"));
  cfg.holdout_fraction = std::stod(meta(ckpt, "holdout_fraction"));
  Autoencoder ae(cfg, 0);
  nn::restore_parameters(ckpt, ae.parameters());
  return ae;
}

Matrix windows_to_matrix(std::span<const market::FeatureWindow> windows) {
  if (windows.empty()) return Matrix(0, 0);
  const auto d = static_cast<Eigen::Index>(windows.front().values.size());
  Matrix m(d, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t j = 0; j < windows.size(); ++j) {
    if (static_cast<Eigen::Index>(windows[j].values.size()) != d) {
      fail(ErrorKind::ShapeMismatch, "windows differ in length");
    }
    m.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Vector>(windows[j].values.data(), d);
  }
  return m;
}

TrainedAutoencoder train_autoencoder(std::span<const market::FeatureWindow> windows, const AutoencoderConfig& config,
                                     std::uint64_t seed) {
  if (config.batch_size == 0) fail(ErrorKind::ConfigError, "autoencoder batch size must be positive");
  if (windows.size() < 2 * config.batch_size) {
    fail(ErrorKind::TooFewSamples, std::to_string(windows.size()) + " windows, need at least " +
                                       std::to_string(2 * config.batch_size));
  }
  for (const auto& w : windows) {
    if (w.values.size() != config.input_dim) fail(ErrorKind::ShapeMismatch, "window length differs from input_dim");
  }

  std::size_t n_val = 0;
  if (config.patience > 0 && config.holdout_fraction > 0.0) {
    n_val = static_cast<std::size_t>(std::floor(config.holdout_fraction * static_cast<double>(windows.size())));
    if (windows.size() - n_val < config.batch_size) n_val = 0;
  }
  const std::size_t n_train = windows.size() - n_val;
  const Matrix train = windows_to_matrix(windows.subspan(0, n_train));
  const Matrix validation = n_val ? windows_to_matrix(windows.subspan(n_train)) : Matrix(0, 0);

  TrainedAutoencoder result{Autoencoder(config, seed), {}};
  Autoencoder& ae = result.model;
  nn::Adam optimizer(nn::AdamConfig{config.learning_rate});
  std::mt19937_64 shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<Eigen::Index> order(n_train);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto params = ae.parameters();
  std::vector<nn::Matrix> best;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum = 0.0;
    Matrix batch;
    for (std::size_t start = 0; start < n_train; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, n_train - start);
      batch.resize(train.rows(), static_cast<Eigen::Index>(len));
      for (std::size_t j = 0; j < len; ++j) batch.col(static_cast<Eigen::Index>(j)) = train.col(order[start + j]);
      sum += ae.train_batch(batch, optimizer) * static_cast<double>(len);
    }
    result.history.train_mse.push_back(sum / static_cast<double>(n_train));

    if (n_val) {
      const double val = ae.reconstruction_mse(validation);
      if (!std::isfinite(val)) fail(ErrorKind::DivergedLoss, "validation loss is not finite");
      result.history.validation_mse.push_back(val);
      if (val < best_val) {
        best_val = val;
        since_best = 0;
        result.history.best_epoch = epoch;
        best.clear();
        for (const auto* p : params) best.push_back(p->value);
      } else if (++since_best >= config.patience) {
        result.history.stopped_early = true;
        break;
      }
    } else {
      result.history.best_epoch = epoch;
    }
  }
  if (n_val && !best.empty()) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
  }
  return result;
}

}  // namespace axtrade::axt
