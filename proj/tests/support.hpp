#pragma once
// Independent reference implementations and fixtures shared by the tests.
// Nothing here calls into the library's numeric kernels.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "vsrprune/model.hpp"
#include "vsrprune/rewrite.hpp"
#include "vsrprune/network.hpp"
#include "vsrprune/scoring.hpp"

namespace vsrprune::testing {

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(s);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

inline Kernel random_kernel(int out, int in, int k, bool bias, std::mt19937_64& rng) {
  Kernel kr;
  kr.weight = random_tensor(Shape{out, in, k, k}, rng);
  if (bias) kr.bias = random_tensor(Shape{1, out, 1, 1}, rng);
  return kr;
}

/// Six nested loops, zero padding, double accumulation.
inline Tensor conv_oracle(const Tensor& x, const Kernel& k, int stride, int pad) {
  const Shape in = x.shape();
  const Shape ks = k.weight.shape();
  const int oh = (in.h + 2 * pad - ks.h) / stride + 1;
  const int ow = (in.w + 2 * pad - ks.w) / stride + 1;
  Tensor out(Shape{in.n, ks.n, oh, ow});
  for (int n = 0; n < in.n; ++n)
    for (int o = 0; o < ks.n; ++o)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double acc = k.bias ? (*k.bias)[o] : 0.0;
          for (int c = 0; c < in.c; ++c)
            for (int dy = 0; dy < ks.h; ++dy)
              for (int dx = 0; dx < ks.w; ++dx) {
                const int iy = y * stride - pad + dy;
                const int ix = xx * stride - pad + dx;
                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                acc += static_cast<double>(x.at(n, c, iy, ix)) * k.weight.at(o, c, dy, dx);
              }
          out.at(n, o, y, xx) = static_cast<float>(acc);
        }
  return out;
}

/// out[c, y, x] = in[c·r² + (y mod r)·r + (x mod r), y / r, x / r].
inline Tensor shuffle_oracle(const Tensor& x, int r) {
  const Shape s = x.shape();
  Tensor out(Shape{s.n, s.c / (r * r), s.h * r, s.w * r});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c / (r * r); ++c)
      for (int y = 0; y < s.h * r; ++y)
        for (int xx = 0; xx < s.w * r; ++xx)
          out.at(n, c, y, xx) = x.at(n, c * r * r + (y % r) * r + (xx % r), y / r, xx / r);
  return out;
}

/// Mean over batch items of sqrt(Σ d² + eps²).
inline double charbonnier_oracle(const Tensor& a, const Tensor& b, double eps) {
  const Shape s = a.shape();
  const std::size_t per = s.numel() / static_cast<std::size_t>(s.n);
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    double sq = 0.0;
    for (std::size_t i = 0; i < per; ++i) {
      const double d = static_cast<double>(a[n * per + i]) - b[n * per + i];
      sq += d * d;
    }
    total += std::sqrt(sq + eps * eps);
  }
  return total / s.n;
}

inline double psnr_oracle(const Tensor& a, const Tensor& b, double peak) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(peak * peak / mse));
}

/// Straight loop over every valid 11×11 window, Gaussian σ = 1.5.
inline double ssim_oracle(const Tensor& a, const Tensor& b, double peak) {
  double g[11][11];
  double gs = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0 * 1.5 * 1.5));
      gs += g[i][j];
    }
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const Shape s = a.shape();
  double total = 0.0;
  long count = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y + 11 <= s.h; ++y)
        for (int x = 0; x + 11 <= s.w; ++x) {
          double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
          for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
              const double w = g[i][j] / gs;
              const double va = a.at(n, c, y + i, x + j);
              const double vb = b.at(n, c, y + i, x + j);
              ma += w * va;
              mb += w * vb;
              saa += w * va * va;
              sbb += w * vb * vb;
              sab += w * va * vb;
            }
          const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
          total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (va + vb + c2));
          ++count;
        }
  return total / static_cast<double>(count);
}

/// Small bidirectional network used wherever a whole model is exercised.
inline ReferenceConfig tiny_config(std::uint64_t seed = 0) {
  ReferenceConfig c;
  c.name = "tiny";
  c.trunk_width = 8;
  c.blocks_per_direction = 2;
  c.head_width = 8;
  c.hr_width = 8;
  c.seed = seed;
  return c;
}

inline Sequence random_sequence(int frames, int h, int w, std::mt19937_64& rng,
                                bool with_hr = true, int motion = 1) {
  Sequence s;
  std::uniform_int_distribution<int> m(-motion, motion);
  for (int t = 0; t < frames; ++t) {
    s.frames.push_back(random_tensor(Shape{1, 3, h, w}, rng, 0.0f, 1.0f));
    if (with_hr) s.hr.push_back(random_tensor(Shape{1, 3, 4 * h, 4 * w}, rng, 0.0f, 1.0f));
    if (t > 0) s.motion.push_back(Offset{m(rng), m(rng)});
  }
  return s;
}

/// Every γ drawn from [0.5, 1.5] so folding is actually exercised.
inline ScalingState random_scaling(const NetworkSpec& spec, std::mt19937_64& rng) {
  ScalingState st = inject_scaling(spec);
  std::uniform_real_distribution<float> u(0.5f, 1.5f);
  for (auto& [id, g] : st.gammas)
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = u(rng);
  return st;
}

/// Random scores for a spec so plans do not depend on the weights.
inline PruningPlan random_plan(const NetworkSpec& spec, const Weights& w, double p,
                               std::uint64_t seed) {
  return select(score_units(spec, w), p, SelectionPolicy{Criterion::Rand, Scope::Global}, seed);
}

}  // namespace vsrprune::testing
