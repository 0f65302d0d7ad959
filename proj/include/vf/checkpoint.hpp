#pragma once

#include <cstdint>
#include <string>

#include <vf/gnn.hpp>

namespace vf {

/// Everything evaluate/predict need to rebuild graphs the way training did.
struct CheckpointMeta {
  int slice_depth = 1;
  bool use_unchanged = true;
  std::int64_t cut_timestamp = 0;  // 0 when the checkpoint was not split-trained
};

/// Binary container, little-endian, format version 1: magic, JSON header
/// (config, meta, tensor directory), then raw row-major f64 tensor data.
/// Writing the same model twice produces identical bytes.
void save_checkpoint(const std::string& path, const Model& model,
                     const CheckpointMeta& meta);

struct Checkpoint {
  Model model;
  CheckpointMeta meta;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace vf
