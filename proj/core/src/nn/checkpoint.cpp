#include "axtrade/nn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "axtrade/error.hpp"

namespace axtrade::nn {
namespace {

class Writer {
 public:
  void bytes(const void* data, std::size_t n) { out_.append(static_cast<const char*>(data), n); }

  template <typename T>
  void le(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    bytes(buf, sizeof(T));
  }

  void str(const std::string& s) {
    le<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  // Two dimensions, then row-major values.
  void block(const Checkpoint::Block& b) {
    str(b.name);
    le<std::uint32_t>(2);
    le<std::uint64_t>(static_cast<std::uint64_t>(b.value.rows()));
    le<std::uint64_t>(static_cast<std::uint64_t>(b.value.cols()));
    for (Eigen::Index i = 0; i < b.value.rows(); ++i)
      for (Eigen::Index j = 0; j < b.value.cols(); ++j) le<double>(b.value(i, j));
  }

  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  void bytes(void* dst, std::size_t n) {
    if (pos_ + n > data_.size()) fail(ErrorKind::IoError, "checkpoint truncated");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  template <typename T>
  T le() {
    unsigned char buf[sizeof(T)];
    bytes(buf, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  std::string str() {
    const auto n = le<std::uint32_t>();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

  Checkpoint::Block block() {
    Checkpoint::Block b;
    b.name = str();
    const auto ndims = le<std::uint32_t>();
    if (ndims != 2) fail(ErrorKind::IoError, "checkpoint block '" + b.name + "' is not 2-dimensional");
    const auto rows = le<std::uint64_t>();
    const auto cols = le<std::uint64_t>();
    if (rows * cols * sizeof(double) > data_.size() - pos_) fail(ErrorKind::IoError, "checkpoint truncated");
    b.value.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < b.value.rows(); ++i)
      for (Eigen::Index j = 0; j < b.value.cols(); ++j) b.value(i, j) = le<double>();
    return b;
  }

  bool at_end() const noexcept { return pos_ == data_.size(); }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

const Checkpoint::Block* Checkpoint::find(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return &b;
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.le<std::uint32_t>(kCheckpointVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [k, v] : ckpt.metadata) {
    w.str(k);
    w.str(v);
  }
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ckpt.blocks.size()));
  for (const auto& b : ckpt.blocks) w.block(b);
  w.le<std::uint8_t>(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    w.le<std::uint64_t>(o.step_count);
    w.le<double>(o.config.learning_rate);
    w.le<double>(o.config.beta1);
    w.le<double>(o.config.beta2);
    w.le<double>(o.config.epsilon);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(o.first_moments.size()));
    for (std::size_t k = 0; k < o.first_moments.size(); ++k) {
      w.block(o.first_moments[k]);
      w.block(o.second_moments[k]);
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[sizeof(kCheckpointMagic)];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) fail(ErrorKind::IoError, "not a checkpoint file");
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorKind::IoError, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_meta = r.le<std::uint32_t>();
  for (std::uint32_t k = 0; k < n_meta; ++k) {
    auto key = r.str();
    ckpt.metadata[key] = r.str();
  }
  const auto n_blocks = r.le<std::uint32_t>();
  for (std::uint32_t k = 0; k < n_blocks; ++k) ckpt.blocks.push_back(r.block());
  if (r.le<std::uint8_t>() != 0) {
    Checkpoint::OptimizerState o;
    o.step_count = r.le<std::uint64_t>();
    o.config.learning_rate = r.le<double>();
    o.config.beta1 = r.le<double>();
    o.config.beta2 = r.le<double>();
    o.config.epsilon = r.le<double>();
    const auto n = r.le<std::uint32_t>();
    for (std::uint32_t k = 0; k < n; ++k) {
      o.first_moments.push_back(r.block());
      o.second_moments.push_back(r.block());
    }
    ckpt.optimizer = std::move(o);
  }
  if (!r.at_end()) fail(ErrorKind::IoError, "trailing bytes after checkpoint");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::IoError, "failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

Checkpoint capture(const ParameterList& params, const Adam* optimizer, std::map<std::string, std::string> metadata) {
  Checkpoint ckpt;
  ckpt.metadata = std::move(metadata);
  for (const auto* p : params) ckpt.blocks.push_back({p->name, p->value});
  if (optimizer && !optimizer->first_moments().empty()) {
    Checkpoint::OptimizerState o;
    o.step_count = optimizer->step_count();
    o.config = optimizer->config();
    for (std::size_t k = 0; k < params.size(); ++k) {
      o.first_moments.push_back({params[k]->name, optimizer->first_moments()[k]});
      o.second_moments.push_back({params[k]->name, optimizer->second_moments()[k]});
    }
    ckpt.optimizer = std::move(o);
  }
  return ckpt;
}

void restore_parameters(const Checkpoint& ckpt, const ParameterList& params) {
  for (auto* p : params) {
    const auto* b = ckpt.find(p->name);
    if (!b) fail(ErrorKind::ShapeMismatch, "checkpoint lacks parameter '" + p->name + "'");
    if (b->value.rows() != p->value.rows() || b->value.cols() != p->value.cols()) {
      fail(ErrorKind::ShapeMismatch, "checkpoint shape differs for '" + p->name + "'");
    }
    p->value = b->value;
  }
}

void restore_optimizer(const Checkpoint& ckpt, const ParameterList& params, Adam& optimizer) {
  if (!ckpt.optimizer) return;
  const auto& o = *ckpt.optimizer;
  if (o.first_moments.size() != params.size()) fail(ErrorKind::ShapeMismatch, "optimizer state size");
  std::vector<Matrix> m, v;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (o.first_moments[k].name != params[k]->name) {
      fail(ErrorKind::ShapeMismatch, "optimizer state order differs at '" + params[k]->name + "'");
    }
    m.push_back(o.first_moments[k].value);
    v.push_back(o.second_moments[k].value);
  }
  optimizer = Adam(o.config);
  optimizer.restore(o.step_count, std::move(m), std::move(v));
}

}  // namespace axtrade::nn
