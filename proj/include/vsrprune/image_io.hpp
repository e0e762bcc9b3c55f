#pragma once

#include <filesystem>
#include <vector>

#include "vsrprune/model.hpp"

namespace vsrprune {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit RGB PNG ↔ 1×3×H×W tensor in [0, 1]. Writing clamps and rounds.
void write_png(const std::filesystem::path& path, const Tensor& image);
Tensor read_png(const std::filesystem::path& path);

/// Frames as 00000000.png, 00000001.png, ... plus motion.txt with one "dy dx"
/// line per step.
void save_frames(const std::filesystem::path& dir, const std::vector<Tensor>& frames,
                 const std::vector<Offset>& motion);

struct FrameDir {
  std::vector<Tensor> frames;
  std::vector<Offset> motion;  // zero shifts when motion.txt is absent
};
FrameDir load_frames(const std::filesystem::path& dir);

/// A sequence directory holds lr/ and, optionally, hr/ frame directories.
void save_sequence(const std::filesystem::path& dir, const Sequence& seq);
Sequence load_sequence(const std::filesystem::path& dir);

}  // namespace vsrprune
