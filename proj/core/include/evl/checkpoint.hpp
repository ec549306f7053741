#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "evl/nn.hpp"

// Binary model checkpoints:
//   "EVLM" | u32 version | u32 kind | u32 vocab | u32 dim | u32 layers |
//   u32 heads | u32 context | u32 ffn_mult | u32 causal | u64 steps |
//   u64 parameter count | parameter count x f32
// All integers and floats little-endian.
namespace evl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind : std::uint32_t { language_model = 1, encoder_classifier = 2 };

struct Checkpoint {
  ModelKind kind = ModelKind::language_model;
  nn::Architecture arch;
  std::uint64_t steps = 0;
  std::vector<double> parameters;
};

void write_checkpoint(const std::filesystem::path& path, ModelKind kind, const nn::Architecture& arch,
                      std::uint64_t steps, std::span<const double> parameters);
Checkpoint read_checkpoint(const std::filesystem::path& path);

class LmPolicy;
void save_lm(const std::filesystem::path& path, const LmPolicy& policy);
LmPolicy load_lm(const std::filesystem::path& path);

}  // namespace evl
