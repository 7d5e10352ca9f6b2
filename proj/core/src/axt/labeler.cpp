#include "axtrade/axt/labeler.hpp"

#include <charconv>
#include <ostream>

#include "axtrade/error.hpp"

namespace axtrade::axt {

std::vector<std::size_t> label_windows(const Autoencoder& ae, const KMeansModel& km,
                                       std::span<const market::FeatureWindow> windows) {
  std::vector<std::size_t> labels;
  if (windows.empty()) return labels;
  if (windows.front().values.size() != ae.config().input_dim) {
    fail(ErrorKind::ShapeMismatch, "window length differs from autoencoder input");
  }
  const Matrix golden = ae.encode_batch(windows_to_matrix(windows));
  labels.reserve(windows.size());
  for (Eigen::Index j = 0; j < golden.cols(); ++j) labels.push_back(kmeans_assign(km, golden.col(j)));
  return labels;
}

std::vector<LabeledWindow> label_dataset(const Autoencoder& ae, const KMeansModel& km,
                                         std::span<const market::FeatureWindow> windows) {
  const auto labels = label_windows(ae, km, windows);
  std::vector<LabeledWindow> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) out.push_back({windows[i], labels[i]});
  return out;
}

AxtModel fit_axt(std::span<const market::FeatureWindow> train_windows, const AxtConfig& config, std::uint64_t seed) {
  auto trained = train_autoencoder(train_windows, config.autoencoder, seed);
  const Matrix golden = trained.model.encode_batch(windows_to_matrix(train_windows));
  auto km = kmeans_fit(golden, config.kmeans, seed);
  return {std::move(trained.model), std::move(km), std::move(trained.history)};
}

void write_labels_csv(std::ostream& out, std::span<const market::FeatureWindow> windows,
                      std::span<const std::size_t> labels) {
  if (windows.size() != labels.size()) fail(ErrorKind::ShapeMismatch, "one label per window required");
  out << "window_end_index,label\n";
  for (std::size_t i = 0; i < windows.size(); ++i) out << windows[i].end_index << ',' << labels[i] << '\n';
}

std::vector<LabelRow> read_labels_csv(std::string_view text) {
  std::vector<LabelRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 || line.empty()) continue;
    const auto comma = line.find(',');
    LabelRow row;
    const auto a = line.substr(0, comma);
    const auto b = comma == std::string_view::npos ? std::string_view{} : line.substr(comma + 1);
    const auto r1 = std::from_chars(a.data(), a.data() + a.size(), row.window_end_index);
    const auto r2 = std::from_chars(b.data(), b.data() + b.size(), row.label);
    if (comma == std::string_view::npos || r1.ec != std::errc() || r2.ec != std::errc() ||
        r2.ptr != b.data() + b.size()) {
      throw Error(ErrorKind::MalformedRow, "label file line " + std::to_string(line_no)).with_line(line_no);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace axtrade::axt
