#pragma once

#include <cstdint>
#include <vector>

#include "vsrprune/model.hpp"

namespace vsrprune {

enum class DegradationKind { BI, BD };

struct DegradationSpec {
  DegradationKind kind = DegradationKind::BD;
  double sigma = 1.6;   // BD Gaussian
  int support = 13;     // BD taps per axis
  int factor = 4;
  double cubic_a = -0.5;  // BI kernel coefficient
  bool antialias = true;  // BI kernel widened by the factor
};

const char* to_string(DegradationKind kind);
DegradationKind parse_degradation(const std::string& text);

/// Normalized 1-D Gaussian taps.
std::vector<double> gaussian_taps(double sigma, int support);
/// Keys cubic kernel.
double cubic_kernel(double x, double a);

/// HR (N,C,H,W) → LR (N,C,H/f,W/f). BD: separable Gaussian with reflect
/// padding (d c b | a b c d), then every f-th pixel from index 0. BI: cubic
/// resampling, antialiased, with half-pixel centres and symmetric borders.
Tensor degrade(const Tensor& hr, const DegradationSpec& spec);

struct SynthConfig {
  int frames = 6;
  int hr_height = 64;
  int hr_width = 64;
  int motion_range = 1;  // per-step |dy|, |dx| bound, in LR pixels
  int shapes = 6;
  DegradationSpec degradation;
};

/// Band-limited noise plus flat shapes, translated by a random integer motion
/// per step (4× the LR motion at HR). Returns HR targets, degraded LR frames
/// and the LR motion. Deterministic per seed.
Sequence synth_sequence(std::uint64_t seed, const SynthConfig& config);

/// 10·log10(peak²/MSE) over every element, capped at 100 dB.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);
/// Mean SSIM over valid 11×11 Gaussian windows (σ = 1.5), per channel.
double ssim(const Tensor& a, const Tensor& b, double peak = 1.0);

}  // namespace vsrprune
