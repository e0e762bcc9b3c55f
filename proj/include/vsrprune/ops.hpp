#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "vsrprune/tape.hpp"

namespace vsrprune {

/// Integer spatial displacement (rows, cols) of one batch item.
struct Offset {
  int dy = 0;
  int dx = 0;
  bool operator==(const Offset&) const = default;
};

/// Multiply-accumulates executed by conv2d on the calling thread since the
/// last reset. Lets tests compare the cost model against real execution.
std::uint64_t executed_macs();
void reset_executed_macs();

// Differentiable primitives. Every op checks extents and throws ShapeError on
// any mismatch; nothing broadcasts.

/// 2-D cross-correlation. Dot products accumulate in double.
Var conv2d(Var input, Var weight, std::optional<Var> bias, int stride,
           int padding);

/// Periodic shuffle: out[c, y, x] = in[c·r² + (y mod r)·r + (x mod r), y/r, x/r].
Var pixel_shuffle(Var input, int r);
/// Inverse of pixel_shuffle.
Var pixel_unshuffle(Var input, int r);

/// out[c] = gamma[c / group] · in[c]. group = 4 expresses a shuffle-group
/// scaling factor that covers four consecutive filters.
Var channel_scale(Var input, Var gamma, int group = 1);

Var add(Var a, Var b);
Var scale(Var a, double factor);
Var leaky_relu(Var input, float negative_slope);
Var concat_channels(std::span<const Var> inputs);
Var concat_channels(Var a, Var b);

/// Bilinear upsampling by an integer factor, half-pixel centres, edge clamp.
Var bilinear_upsample(Var input, int factor);

/// out[:, i] = in[:, index[i]].
Var gather_channels(Var input, std::span<const int> index);
/// out = base; out[:, index[i]] += src[:, i]. Indices must be distinct.
Var scatter_add_channels(Var base, Var src, std::span<const int> index);

/// out[n, c, y, x] = in[n, c, y - dy_n, x - dx_n], zero outside.
Var shift(Var input, std::span<const Offset> per_item);

/// Mean over batch items (frames) of sqrt(Σ(pred − target)² + eps²).
Var charbonnier(Var pred, Var target, double eps);
/// Mean absolute error over all elements.
Var mean_abs_error(Var a, Var b);
/// Mean squared error over all elements.
Var mean_squared_error(Var a, Var b);
/// alpha · Σ_{i ∈ index} v[i]², with v read as a flat vector.
Var l2_penalty(Var v, std::span<const int> index, double alpha);
Var sum(Var input);
Var sum_scalars(std::span<const Var> scalars);

/// Forward-only helpers for code paths that never need gradients.
Tensor conv2d(const Tensor& input, const Kernel& kernel, int stride,
              int padding);
Tensor pixel_shuffle(const Tensor& input, int r);
Tensor bilinear_upsample(const Tensor& input, int factor);
Tensor gather_channels(const Tensor& input, std::span<const int> index);

}  // namespace vsrprune
