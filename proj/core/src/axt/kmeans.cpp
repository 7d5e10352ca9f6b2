#include "axtrade/axt/kmeans.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "axtrade/error.hpp"

namespace axtrade::axt {
namespace {

using nn::Matrix;
using nn::Vector;

constexpr char kKMeansMagic[8] = {'A', 'X', 'T', 'K', 'M', 'N', 'S', '\0'};
constexpr std::uint32_t kKMeansVersion = 1;

// Plain dimension-order accumulation.
double sq_dist(const Matrix& a, Eigen::Index ia, const Matrix& b, Eigen::Index ib) {
  double s = 0.0;
  for (Eigen::Index d = 0; d < a.rows(); ++d) {
    const double diff = a(d, ia) - b(d, ib);
    s += diff * diff;
  }
  return s;
}

std::size_t nearest(const Matrix& centroids, const Matrix& points, Eigen::Index col) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centroids.cols(); ++j) {
    const double d = sq_dist(points, col, centroids, j);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

std::vector<std::size_t> assign_all(const Matrix& points, const Matrix& centroids) {
  std::vector<std::size_t> labels(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.cols(); ++i) labels[static_cast<std::size_t>(i)] = nearest(centroids, points, i);
  return labels;
}

std::vector<std::size_t> cluster_sizes(std::span<const std::size_t> labels, std::size_t k) {
  std::vector<std::size_t> sizes(k, 0);
  for (auto l : labels) ++sizes[l];
  return sizes;
}

bool equals_any_centroid(const Matrix& points, Eigen::Index i, const Matrix& centroids) {
  for (Eigen::Index j = 0; j < centroids.cols(); ++j) {
    if (points.col(i) == centroids.col(j)) return true;
  }
  return false;
}

// Means of the current assignment; empty clusters take the point farthest from its
// own (updated) centroid, never reusing a point or duplicating a centroid.
Matrix update_centroids(const Matrix& points, const Matrix& old_centroids, std::span<const std::size_t> labels) {
  const Eigen::Index k = old_centroids.cols();
  Matrix sums = Matrix::Zero(points.rows(), k);
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const auto l = labels[static_cast<std::size_t>(i)];
    sums.col(static_cast<Eigen::Index>(l)) += points.col(i);
    ++counts[l];
  }
  Matrix next = old_centroids;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) {
      next.col(j) = sums.col(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
    }
  }
  std::vector<char> taken(static_cast<std::size_t>(points.cols()), 0);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (counts[static_cast<std::size_t>(j)] > 0) continue;
    Eigen::Index best = -1;
    double best_d = -1.0;
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      const double d = sq_dist(points, i, next, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]));
      if (d > best_d && !equals_any_centroid(points, i, next)) {
        best_d = d;
        best = i;
      }
    }
    if (best < 0) fail(ErrorKind::DegenerateData, "no point available to repair an empty cluster");
    taken[static_cast<std::size_t>(best)] = 1;
    next.col(j) = points.col(best);
  }
  return next;
}

double max_shift(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) m = std::max(m, std::sqrt(sq_dist(a, j, b, j)));
  return m;
}

bool has_empty(std::span<const std::size_t> labels, std::size_t k) {
  const auto sizes = cluster_sizes(labels, k);
  return std::find(sizes.begin(), sizes.end(), 0) != sizes.end();
}

void validate_points(const Matrix& points, std::size_t k) {
  if (k == 0) fail(ErrorKind::ConfigError, "k must be positive");
  if (static_cast<std::size_t>(points.cols()) < k) {
    fail(ErrorKind::TooFewPoints, std::to_string(points.cols()) + " points for k=" + std::to_string(k));
  }
  nn::require_finite(points, "k-means input");
  if (count_distinct_columns(points) < k) {
    fail(ErrorKind::DegenerateData, "fewer than k=" + std::to_string(k) + " distinct points");
  }
}

}  // namespace

std::size_t count_distinct_columns(const Matrix& points) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(points.cols()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  const auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index d = 0; d < points.rows(); ++d) {
      if (points(d, a) != points(d, b)) return points(d, a) < points(d, b);
    }
    return false;
  };
  std::sort(idx.begin(), idx.end(), less);
  std::size_t distinct = idx.empty() ? 0 : 1;
  for (std::size_t i = 1; i < idx.size(); ++i) {
    if (points.col(idx[i]) != points.col(idx[i - 1])) ++distinct;
  }
  return distinct;
}

Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
  validate_points(points, k);
  const Eigen::Index n = points.cols();
  Matrix centroids(points.rows(), static_cast<Eigen::Index>(k));
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.col(0) = points.col(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index c = 1; c < static_cast<Eigen::Index>(k); ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, sq_dist(points, i, centroids, c - 1));
      total += d;
    }
    const double target = unit(rng) * total;
    double acc = 0.0;
    Eigen::Index pick = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = d2[static_cast<std::size_t>(i)];
      if (d <= 0.0) continue;
      acc += d;
      pick = i;
      if (acc > target) break;
    }
    if (pick < 0) fail(ErrorKind::DegenerateData, "k-means++ ran out of distinct points");
    centroids.col(c) = points.col(pick);
  }
  return centroids;
}

KMeansModel kmeans_fit_from(const Matrix& points, Matrix initial_centroids, const KMeansConfig& config) {
  validate_points(points, config.k);
  if (initial_centroids.rows() != points.rows() ||
      initial_centroids.cols() != static_cast<Eigen::Index>(config.k)) {
    fail(ErrorKind::ShapeMismatch, "initial centroids must be (dim x k)");
  }
  KMeansModel model;
  model.centroids = std::move(initial_centroids);
  auto labels = assign_all(points, model.centroids);
  model.inertia_history.push_back(inertia_of(points, model.centroids, labels));

  auto lloyd_step = [&]() {
    Matrix next = update_centroids(points, model.centroids, labels);
    nn::require_finite(next, "k-means centroids");
    const double shift = max_shift(next, model.centroids);
    model.centroids = std::move(next);
    auto next_labels = assign_all(points, model.centroids);
    const bool changed = next_labels != labels;
    labels = std::move(next_labels);
    model.inertia_history.push_back(inertia_of(points, model.centroids, labels));
    ++model.iterations;
    return std::pair{changed, shift};
  };

  while (model.iterations < config.max_iters) {
    const auto [changed, shift] = lloyd_step();
    if (!has_empty(labels, config.k) && (!changed || shift < config.tolerance)) break;
  }
  for (std::size_t guard = 0; guard < config.k && has_empty(labels, config.k); ++guard) lloyd_step();

  model.inertia = model.inertia_history.back();
  model.assignments = std::move(labels);
  return model;
}

KMeansModel kmeans_fit(const Matrix& points, const KMeansConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto init = kmeans_plus_plus(points, config.k, rng);
  auto model = kmeans_fit_from(points, std::move(init), config);
  model.seed = seed;
  return model;
}

std::size_t nearest_centroid(const Matrix& centroids, const Vector& point) {
  if (point.size() != centroids.rows()) {
    fail(ErrorKind::ShapeMismatch, "point dimension " + std::to_string(point.size()) + " vs centroid dimension " +
                                       std::to_string(centroids.rows()));
  }
  const Matrix p = point;
  return nearest(centroids, p, 0);
}

std::size_t kmeans_assign(const KMeansModel& model, const Vector& point) {
  return nearest_centroid(model.centroids, point);
}

double inertia_of(const Matrix& points, const Matrix& centroids, std::span<const std::size_t> labels) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    s += sq_dist(points, i, centroids, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]));
  }
  return s;
}

double silhouette_score(const Matrix& points, std::span<const std::size_t> labels, std::size_t k) {
  const Eigen::Index n = points.cols();
  if (n == 0) return 0.0;
  const auto sizes = cluster_sizes(labels, k);
  double total = 0.0;
  std::vector<double> sum_to(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::fill(sum_to.begin(), sum_to.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      sum_to[labels[static_cast<std::size_t>(j)]] += std::sqrt(sq_dist(points, i, points, j));
    }
    const auto own = labels[static_cast<std::size_t>(i)];
    if (sizes[own] <= 1) continue;
    const double a = sum_to[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, sum_to[c] / static_cast<double>(sizes[c]));
    }
    if (!std::isfinite(b)) continue;
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

namespace {

template <typename T>
void put_le(std::string& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  out.append(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) fail(ErrorKind::IoError, "k-means file truncated");
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

std::string encode_kmeans(const KMeansModel& model) {
  std::string out(kKMeansMagic, sizeof(kKMeansMagic));
  put_le<std::uint32_t>(out, kKMeansVersion);
  put_le<std::uint64_t>(out, model.k());
  put_le<std::uint64_t>(out, model.dim());
  put_le<std::uint64_t>(out, model.seed);
  put_le<double>(out, model.inertia);
  for (Eigen::Index j = 0; j < model.centroids.cols(); ++j)
    for (Eigen::Index d = 0; d < model.centroids.rows(); ++d) put_le<double>(out, model.centroids(d, j));
  return out;
}

KMeansModel decode_kmeans(const std::string& bytes) {
  if (bytes.size() < sizeof(kKMeansMagic) || std::memcmp(bytes.data(), kKMeansMagic, sizeof(kKMeansMagic)) != 0) {
    fail(ErrorKind::IoError, "not a k-means model file");
  }
  std::size_t pos = sizeof(kKMeansMagic);
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kKMeansVersion) fail(ErrorKind::IoError, "unsupported k-means file version");
  const auto k = get_le<std::uint64_t>(bytes, pos);
  const auto dim = get_le<std::uint64_t>(bytes, pos);
  KMeansModel model;
  model.seed = get_le<std::uint64_t>(bytes, pos);
  model.inertia = get_le<double>(bytes, pos);
  if (k * dim * sizeof(double) != bytes.size() - pos) fail(ErrorKind::IoError, "k-means file size mismatch");
  model.centroids.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(k));
  for (Eigen::Index j = 0; j < model.centroids.cols(); ++j)
    for (Eigen::Index d = 0; d < model.centroids.rows(); ++d) model.centroids(d, j) = get_le<double>(bytes, pos);
  return model;
}

void write_kmeans(const std::filesystem::path& path, const KMeansModel& model) {
  const auto bytes = encode_kmeans(model);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::IoError, "failed writing " + path.string());
}

KMeansModel read_kmeans(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_kmeans(ss.str());
}

}  // namespace axtrade::axt
