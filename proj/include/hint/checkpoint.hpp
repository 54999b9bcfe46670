#pragma once

#include <string>
#include <utility>

#include "hint/model.hpp"

namespace hint {

/// JSON round-trip for the model configuration (used in checkpoints and
/// artifact config echoes).
std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

/// Checkpoint file layout (little-endian throughout):
///   magic "HINTCKPT" | u32 version | u64 config_len | config JSON |
///   u64 meta_len | meta JSON | u64 tensor_count |
///   per tensor: u64 name_len | name | u64 rows | u64 cols | rows*cols f64
/// Tensor values are raw IEEE-754 doubles, so save followed by load restores
/// every parameter bit for bit.
struct CheckpointMeta {
  std::string json = "{}";  // free-form training metadata
};

void save_checkpoint(const std::string& path, const ModelConfig& config,
                     HintParams& params, const CheckpointMeta& meta = {});

struct LoadedCheckpoint {
  ModelConfig config;
  HintParams params;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace hint
