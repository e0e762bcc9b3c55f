#include "vsrprune/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace vsrprune {

namespace {

// d c b | a b c d | c b a
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// c b a | a b c d | d c b
int symmetric(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

void check_divisible(const Tensor& t, int f) {
  const Shape s = t.shape();
  if (f <= 0 || s.h % f != 0 || s.w % f != 0) {
    throw ShapeError("degrade: extents " + s.str() + " not divisible by " +
                     std::to_string(f));
  }
}

struct Taps {
  int first = 0;
  std::vector<double> w;
};

// One row of a 1-D resampling matrix from n inputs onto n/f outputs.
std::vector<Taps> cubic_taps(int n, int f, double a, bool antialias) {
  const double scale = 1.0 / f;
  const double width = antialias ? static_cast<double>(f) : 1.0;
  const double half = 2.0 * width;
  std::vector<Taps> out(static_cast<std::size_t>(n / f));
  for (int i = 0; i < n / f; ++i) {
    const double u = (i + 0.5) / scale - 0.5;
    const int first = static_cast<int>(std::floor(u - half));
    const int last = static_cast<int>(std::ceil(u + half));
    Taps t;
    t.first = first;
    double total = 0.0;
    for (int j = first; j <= last; ++j) {
      const double v = cubic_kernel((u - j) / width, a);
      t.w.push_back(v);
      total += v;
    }
    for (double& v : t.w) v /= total;
    out[i] = std::move(t);
  }
  return out;
}

}  // namespace

const char* to_string(DegradationKind kind) {
  return kind == DegradationKind::BI ? "BI" : "BD";
}

DegradationKind parse_degradation(const std::string& text) {
  if (text == "BI" || text == "bi") return DegradationKind::BI;
  if (text == "BD" || text == "bd") return DegradationKind::BD;
  throw ConfigError("unknown degradation '" + text + "' (expected BI or BD)");
}

std::vector<double> gaussian_taps(double sigma, int support) {
  if (sigma <= 0.0) throw ConfigError("gaussian sigma must be positive");
  if (support <= 0 || support % 2 == 0) {
    throw ConfigError("gaussian support must be a positive odd number");
  }
  std::vector<double> taps(static_cast<std::size_t>(support));
  const int r = support / 2;
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += taps[i + r];
  }
  for (double& t : taps) t /= total;
  return taps;
}

double cubic_kernel(double x, double a) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

Tensor degrade(const Tensor& hr, const DegradationSpec& spec) {
  const int f = spec.factor;
  check_divisible(hr, f);
  const Shape s = hr.shape();
  const int ho = s.h / f;
  const int wo = s.w / f;
  Tensor lr(Shape{s.n, s.c, ho, wo});

  if (spec.kind == DegradationKind::BD) {
    const std::vector<double> taps = gaussian_taps(spec.sigma, spec.support);
    const int r = spec.support / 2;
    std::vector<double> rows(static_cast<std::size_t>(ho) * s.w);
    for (int n = 0; n < s.n; ++n) {
      for (int c = 0; c < s.c; ++c) {
        const float* src = hr.plane(n, c);
        // Vertical pass only on the rows that survive subsampling.
        for (int oy = 0; oy < ho; ++oy) {
          for (int x = 0; x < s.w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
              acc += taps[k + r] * src[reflect(oy * f + k, s.h) * s.w + x];
            }
            rows[static_cast<std::size_t>(oy) * s.w + x] = acc;
          }
        }
        float* dst = lr.plane(n, c);
        for (int oy = 0; oy < ho; ++oy) {
          for (int ox = 0; ox < wo; ++ox) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
              acc += taps[k + r] *
                     rows[static_cast<std::size_t>(oy) * s.w + reflect(ox * f + k, s.w)];
            }
            dst[oy * wo + ox] = static_cast<float>(acc);
          }
        }
      }
    }
    return lr;
  }

  const auto ty = cubic_taps(s.h, f, spec.cubic_a, spec.antialias);
  const auto tx = cubic_taps(s.w, f, spec.cubic_a, spec.antialias);
  std::vector<double> rows(static_cast<std::size_t>(ho) * s.w);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = hr.plane(n, c);
      for (int oy = 0; oy < ho; ++oy) {
        for (int x = 0; x < s.w; ++x) {
          double acc = 0.0;
          for (std::size_t k = 0; k < ty[oy].w.size(); ++k) {
            const int y = symmetric(ty[oy].first + static_cast<int>(k), s.h);
            acc += ty[oy].w[k] * src[y * s.w + x];
          }
          rows[static_cast<std::size_t>(oy) * s.w + x] = acc;
        }
      }
      float* dst = lr.plane(n, c);
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          double acc = 0.0;
          for (std::size_t k = 0; k < tx[ox].w.size(); ++k) {
            const int x = symmetric(tx[ox].first + static_cast<int>(k), s.w);
            acc += tx[ox].w[k] * rows[static_cast<std::size_t>(oy) * s.w + x];
          }
          dst[oy * wo + ox] = static_cast<float>(acc);
        }
      }
    }
  }
  return lr;
}

Sequence synth_sequence(std::uint64_t seed, const SynthConfig& cfg) {
  const int f = cfg.degradation.factor;
  if (cfg.hr_height % f != 0 || cfg.hr_width % f != 0) {
    throw ShapeError("synth_sequence: HR size " + std::to_string(cfg.hr_height) +
                     "x" + std::to_string(cfg.hr_width) + " not divisible by " +
                     std::to_string(f));
  }
  if (cfg.frames < 1) throw ConfigError("synth_sequence: frames must be >= 1");
  if (cfg.motion_range < 0) throw ConfigError("synth_sequence: negative motion range");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> step(-cfg.motion_range, cfg.motion_range);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  Sequence seq;
  // Crop origin of each frame on the canvas, in HR pixels.
  std::vector<std::pair<int, int>> origin{{0, 0}};
  for (int t = 1; t < cfg.frames; ++t) {
    Offset m{step(rng), step(rng)};
    seq.motion.push_back(m);
    origin.emplace_back(origin.back().first - f * m.dy, origin.back().second - f * m.dx);
  }
  int min_y = 0, min_x = 0, max_y = 0, max_x = 0;
  for (auto [y, x] : origin) {
    min_y = std::min(min_y, y);
    min_x = std::min(min_x, x);
    max_y = std::max(max_y, y);
    max_x = std::max(max_x, x);
  }
  const int ch = cfg.hr_height + max_y - min_y;
  const int cw = cfg.hr_width + max_x - min_x;

  // Canvas: a few low-frequency sinusoids per channel, then flat shapes.
  std::vector<float> canvas(static_cast<std::size_t>(3) * ch * cw);
  for (int c = 0; c < 3; ++c) {
    struct Wave { double fy, fx, phase, amp; };
    std::vector<Wave> waves;
    for (int k = 0; k < 6; ++k) {
      const double freq = 0.01 + 0.07 * uni(rng);  // cycles per HR pixel
      const double angle = 2.0 * std::numbers::pi * uni(rng);
      waves.push_back({freq * std::sin(angle), freq * std::cos(angle),
                       2.0 * std::numbers::pi * uni(rng), 0.05 + 0.1 * uni(rng)});
    }
    const double base = 0.3 + 0.4 * uni(rng);
    for (int y = 0; y < ch; ++y) {
      for (int x = 0; x < cw; ++x) {
        double v = base;
        for (const Wave& w : waves) {
          v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fy * y + w.fx * x) + w.phase);
        }
        canvas[(static_cast<std::size_t>(c) * ch + y) * cw + x] = static_cast<float>(v);
      }
    }
  }
  for (int s = 0; s < cfg.shapes; ++s) {
    const bool disc = uni(rng) < 0.5;
    const double cy = uni(rng) * ch;
    const double cx = uni(rng) * cw;
    const double ry = 3.0 + uni(rng) * 0.25 * cfg.hr_height;
    const double rx = 3.0 + uni(rng) * 0.25 * cfg.hr_width;
    const float colour[3] = {static_cast<float>(uni(rng)), static_cast<float>(uni(rng)),
                             static_cast<float>(uni(rng))};
    for (int y = 0; y < ch; ++y) {
      for (int x = 0; x < cw; ++x) {
        const double dy = (y - cy) / ry;
        const double dx = (x - cx) / rx;
        const bool inside = disc ? dy * dy + dx * dx <= 1.0
                                 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
        if (!inside) continue;
        for (int c = 0; c < 3; ++c) {
          canvas[(static_cast<std::size_t>(c) * ch + y) * cw + x] = colour[c];
        }
      }
    }
  }
  for (float& v : canvas) v = std::clamp(v, 0.0f, 1.0f);

  for (int t = 0; t < cfg.frames; ++t) {
    const int oy = origin[t].first - min_y;
    const int ox = origin[t].second - min_x;
    Tensor hr(Shape{1, 3, cfg.hr_height, cfg.hr_width});
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < cfg.hr_height; ++y) {
        const float* src = canvas.data() + (static_cast<std::size_t>(c) * ch + oy + y) * cw + ox;
        std::copy_n(src, cfg.hr_width, hr.plane(0, c) + static_cast<std::size_t>(y) * cfg.hr_width);
      }
    }
    seq.frames.push_back(degrade(hr, cfg.degradation));
    seq.hr.push_back(std::move(hr));
  }
  return seq;
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("psnr: " + a.shape().str() + " vs " + b.shape().str());
  }
  if (peak <= 0.0) throw ConfigError("psnr: peak must be positive");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const Tensor& a, const Tensor& b, double peak) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError("ssim: " + a.shape().str() + " vs " + b.shape().str());
  }
  constexpr int kWin = 11;
  const Shape s = a.shape();
  if (s.h < kWin || s.w < kWin) {
    throw ShapeError("ssim: image " + s.str() + " smaller than the 11x11 window");
  }
  const std::vector<double> g = gaussian_taps(1.5, kWin);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const int ho = s.h - kWin + 1;
  const int wo = s.w - kWin + 1;

  // Separable filtering of x, y, x², y², xy; horizontal pass first.
  auto filter = [&](const std::vector<double>& in) {
    std::vector<double> tmp(static_cast<std::size_t>(s.h) * wo);
    for (int y = 0; y < s.h; ++y) {
      for (int x = 0; x < wo; ++x) {
        double acc = 0.0;
        for (int k = 0; k < kWin; ++k) acc += g[k] * in[static_cast<std::size_t>(y) * s.w + x + k];
        tmp[static_cast<std::size_t>(y) * wo + x] = acc;
      }
    }
    std::vector<double> out(static_cast<std::size_t>(ho) * wo);
    for (int y = 0; y < ho; ++y) {
      for (int x = 0; x < wo; ++x) {
        double acc = 0.0;
        for (int k = 0; k < kWin; ++k) acc += g[k] * tmp[static_cast<std::size_t>(y + k) * wo + x];
        out[static_cast<std::size_t>(y) * wo + x] = acc;
      }
    }
    return out;
  };

  double total = 0.0;
  std::size_t count = 0;
  const std::size_t plane = s.plane();
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
      const float* pa = a.plane(n, c);
      const float* pb = b.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        x[i] = pa[i];
        y[i] = pb[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
      }
      const auto mx = filter(x), my = filter(y), sxx = filter(xx), syy = filter(yy),
                 sxy = filter(xy);
      for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace vsrprune
