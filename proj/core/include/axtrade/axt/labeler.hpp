#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "axtrade/axt/autoencoder.hpp"
#include "axtrade/axt/kmeans.hpp"
#include "axtrade/market_data.hpp"

namespace axtrade::axt {

struct LabeledWindow {
  market::FeatureWindow window;
  std::size_t label = 0;
};

// Encode each window, then assign it to its nearest centroid.
std::vector<LabeledWindow> label_dataset(const Autoencoder& ae, const KMeansModel& km,
                                         std::span<const market::FeatureWindow> windows);
std::vector<std::size_t> label_windows(const Autoencoder& ae, const KMeansModel& km,
                                       std::span<const market::FeatureWindow> windows);

struct AxtConfig {
  AutoencoderConfig autoencoder;
  KMeansConfig kmeans;
};

struct AxtModel {
  Autoencoder autoencoder;
  KMeansModel kmeans;
  AutoencoderHistory history;
};

// Trains the autoencoder on the training windows and clusters their encodings.
AxtModel fit_axt(std::span<const market::FeatureWindow> train_windows, const AxtConfig& config, std::uint64_t seed);

// `window_end_index,label`
void write_labels_csv(std::ostream& out, std::span<const market::FeatureWindow> windows,
                      std::span<const std::size_t> labels);

struct LabelRow {
  std::size_t window_end_index = 0;
  std::size_t label = 0;
};
std::vector<LabelRow> read_labels_csv(std::string_view text);

}  // namespace axtrade::axt
