#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "axtrade/nn/adam.hpp"
#include "axtrade/nn/tensor.hpp"

namespace axtrade::nn {

inline constexpr char kCheckpointMagic[8] = {'A', 'X', 'T', 'C', 'K', 'P', 'T', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// In-memory image of a checkpoint file. See docs/checkpoint_format.md for the byte layout.
struct Checkpoint {
  struct Block {
    std::string name;
    Matrix value;
  };
  struct OptimizerState {
    std::uint64_t step_count = 0;
    AdamConfig config;
    std::vector<Block> first_moments;
    std::vector<Block> second_moments;
  };

  std::map<std::string, std::string> metadata;
  std::vector<Block> blocks;
  std::optional<OptimizerState> optimizer;

  const Block* find(const std::string& name) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint capture(const ParameterList& params, const Adam* optimizer = nullptr,
                   std::map<std::string, std::string> metadata = {});

// Copies values into params by name. Missing names or differing shapes are ShapeMismatch.
void restore_parameters(const Checkpoint& ckpt, const ParameterList& params);
void restore_optimizer(const Checkpoint& ckpt, const ParameterList& params, Adam& optimizer);

}  // namespace axtrade::nn
