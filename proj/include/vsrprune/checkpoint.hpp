#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>

#include "vsrprune/network.hpp"
#include "vsrprune/regularizer.hpp"

namespace vsrprune {

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  NetworkSpec spec;
  Weights weights;
  std::optional<ScalingState> scaling;
};

/// Writes a checkpoint directory:
///   manifest.txt  one line per tensor: name dtype shape offset length
///   weights.bin   little-endian float32 payload in manifest order
///   network.json  the NetworkSpec
///   scaling.json  schedule state and unimportant sets (only with scaling)
/// Tensor names are "<layer>.weight", "<layer>.bias" and "gamma/<site>",
/// sorted, so re-serialization yields an identical manifest.
void save_checkpoint(const std::filesystem::path& dir, const NetworkSpec& spec,
                     const Weights& weights,
                     const ScalingState* scaling = nullptr);

/// Throws LoadError naming the offending tensor on a missing entry, a
/// manifest/spec shape mismatch or a truncated blob.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace vsrprune
