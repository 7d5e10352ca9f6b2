#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "axtrade/nn/tensor.hpp"

namespace axtrade::axt {

struct KMeansConfig {
  std::size_t k = 12;
  std::size_t max_iters = 300;
  double tolerance = 1e-8;  // on the largest centroid shift
};

struct KMeansModel {
  nn::Matrix centroids;  // (dim x k)
  double inertia = 0.0;  // sum of squared distances at convergence
  std::uint64_t seed = 0;

  // Diagnostics from fitting; not persisted.
  std::vector<double> inertia_history;  // one entry per assignment pass
  std::vector<std::size_t> assignments;
  std::size_t iterations = 0;

  std::size_t k() const noexcept { return static_cast<std::size_t>(centroids.cols()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(centroids.rows()); }
};

// k-means++ seeding over the columns of `points`.
nn::Matrix kmeans_plus_plus(const nn::Matrix& points, std::size_t k, std::mt19937_64& rng);

// Lloyd iterations from the given initial centroids. Empty clusters are repaired by
// moving their centroid onto the point farthest from its own centroid.
// Errors: TooFewPoints, DegenerateData (fewer than k distinct points), NonFiniteValue.
KMeansModel kmeans_fit_from(const nn::Matrix& points, nn::Matrix initial_centroids, const KMeansConfig& config);

// k-means++ seeded from `seed`, then kmeans_fit_from.
KMeansModel kmeans_fit(const nn::Matrix& points, const KMeansConfig& config, std::uint64_t seed);

// Index of the nearest centroid by squared Euclidean distance, lowest index on ties.
std::size_t kmeans_assign(const KMeansModel& model, const nn::Vector& point);
std::size_t nearest_centroid(const nn::Matrix& centroids, const nn::Vector& point);

double inertia_of(const nn::Matrix& points, const nn::Matrix& centroids, std::span<const std::size_t> labels);

// Mean silhouette coefficient over all points (0 for singleton clusters).
double silhouette_score(const nn::Matrix& points, std::span<const std::size_t> labels, std::size_t k);

std::size_t count_distinct_columns(const nn::Matrix& points);

// File layout: magic "AXTKMNS\0", u32 version, u64 k, u64 dim, u64 seed, f64 inertia,
// then k centroids of dim f64 each; all little-endian.
void write_kmeans(const std::filesystem::path& path, const KMeansModel& model);
KMeansModel read_kmeans(const std::filesystem::path& path);
std::string encode_kmeans(const KMeansModel& model);
KMeansModel decode_kmeans(const std::string& bytes);

}  // namespace axtrade::axt
