#include "vsrprune/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace vsrprune {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

thread_local std::uint64_t g_executed_macs = 0;

struct ConvGeometry {
  int n, ci, h, w, co, kh, kw, stride, pad, ho, wo;
  int rows() const { return ci * kh * kw; }
  int cols() const { return ho * wo; }
};

ConvGeometry conv_geometry(const Shape& x, const Shape& k, int stride,
                           int pad) {
  if (stride <= 0) throw ConfigError("conv2d: stride must be positive");
  if (pad < 0) throw ConfigError("conv2d: padding must be non-negative");
  if (x.c != k.c) {
    throw ShapeError("conv2d: input has " + std::to_string(x.c) +
                     " channels but kernel expects " + std::to_string(k.c) +
                     " (input " + x.str() + ", kernel " + k.str() + ")");
  }
  ConvGeometry g{x.n, x.c, x.h, x.w, k.n, k.h, k.w, stride, pad, 0, 0};
  const int num_h = x.h + 2 * pad - k.h;
  const int num_w = x.w + 2 * pad - k.w;
  if (num_h < 0 || num_w < 0) {
    throw ConfigError("conv2d: non-positive output extent for input " +
                      x.str() + " and kernel " + k.str());
  }
  g.ho = num_h / stride + 1;
  g.wo = num_w / stride + 1;
  return g;
}

// Unfolds batch item n of x into a (ci·kh·kw) × (ho·wo) matrix.
void im2col(const Tensor& x, int n, const ConvGeometry& g, RowMatrix& col) {
  col.resize(g.rows(), g.cols());
  for (int c = 0; c < g.ci; ++c) {
    const float* src = x.plane(n, c);
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        double* dst = col.row((c * g.kh + ky) * g.kw + kx).data();
        // Output columns whose input column lies inside the image.
        int lo = 0;
        while (lo < g.wo && lo * g.stride - g.pad + kx < 0) ++lo;
        int hi = g.wo;
        while (hi > lo && (hi - 1) * g.stride - g.pad + kx >= g.w) --hi;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          double* row = dst + static_cast<std::size_t>(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(row, row + g.wo, 0.0);
            continue;
          }
          const float* line = src + static_cast<std::size_t>(iy) * g.w - g.pad + kx;
          std::fill(row, row + lo, 0.0);
          if (g.stride == 1) {
            for (int ox = lo; ox < hi; ++ox) row[ox] = line[ox];
          } else {
            for (int ox = lo; ox < hi; ++ox) row[ox] = line[ox * g.stride];
          }
          std::fill(row + hi, row + g.wo, 0.0);
        }
      }
    }
  }
}

void col2im_add(const RowMatrix& col, const ConvGeometry& g, int n,
                float* grad_x) {
  std::vector<double> acc(static_cast<std::size_t>(g.h) * g.w);
  for (int c = 0; c < g.ci; ++c) {
    float* dst = grad_x + (static_cast<std::size_t>(n) * g.ci + c) * g.h * g.w;
    // Sum every tap into a double plane before touching the float buffer.
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const double* src = col.row((c * g.kh + ky) * g.kw + kx).data();
        int lo = 0;
        while (lo < g.wo && lo * g.stride - g.pad + kx < 0) ++lo;
        int hi = g.wo;
        while (hi > lo && (hi - 1) * g.stride - g.pad + kx >= g.w) --hi;
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          double* line = acc.data() + static_cast<std::size_t>(iy) * g.w - g.pad + kx;
          const double* row = src + static_cast<std::size_t>(oy) * g.wo;
          for (int ox = lo; ox < hi; ++ox) line[ox * g.stride] += row[ox];
        }
      }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
      dst[i] += static_cast<float>(acc[i]);
    }
  }
}

RowMatrix kernel_matrix(const Tensor& weight) {
  const Shape& k = weight.shape();
  RowMatrix m(k.n, k.c * k.h * k.w);
  for (std::size_t i = 0; i < weight.size(); ++i) m.data()[i] = weight[i];
  return m;
}

Tensor conv_forward(const Tensor& x, const Tensor& weight, const Tensor* bias,
                    const ConvGeometry& g) {
  if (bias != nullptr && static_cast<int>(bias->size()) != g.co) {
    throw ShapeError("conv2d: bias length " + std::to_string(bias->size()) +
                     " does not match " + std::to_string(g.co) +
                     " output channels");
  }
  Tensor out(Shape{g.n, g.co, g.ho, g.wo});
  const RowMatrix wm = kernel_matrix(weight);
  RowMatrix col;
  RowMatrix res;
  for (int n = 0; n < g.n; ++n) {
    im2col(x, n, g, col);
    res.noalias() = wm * col;
    for (int o = 0; o < g.co; ++o) {
      const double b = bias != nullptr ? (*bias)[o] : 0.0;
      float* dst = out.plane(n, o);
      const double* src = res.row(o).data();
      for (int p = 0; p < g.cols(); ++p) dst[p] = static_cast<float>(src[p] + b);
    }
  }
  g_executed_macs += static_cast<std::uint64_t>(g.n) * g.co * g.rows() *
                     g.cols();
  return out;
}

void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (!(a == b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.str() + " vs " +
                     b.str());
  }
}

std::vector<int> checked_index(const char* op, std::span<const int> index,
                               int channels, bool distinct) {
  std::vector<int> idx(index.begin(), index.end());
  std::vector<char> seen(static_cast<std::size_t>(std::max(channels, 0)), 0);
  for (int i : idx) {
    if (i < 0 || i >= channels) {
      throw ShapeError(std::string(op) + ": channel index " +
                       std::to_string(i) + " outside [0, " +
                       std::to_string(channels) + ")");
    }
    if (distinct && seen[i]++) {
      throw ShapeError(std::string(op) + ": duplicate channel index " +
                       std::to_string(i));
    }
  }
  return idx;
}

struct BilinearTap {
  int i0, i1;
  double w0, w1;
};

std::vector<BilinearTap> bilinear_taps(int in, int factor) {
  std::vector<BilinearTap> taps(static_cast<std::size_t>(in) * factor);
  for (int o = 0; o < in * factor; ++o) {
    double src = (o + 0.5) / factor - 0.5;
    if (src < 0.0) src = 0.0;
    int i0 = static_cast<int>(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const int i1 = std::min(i0 + 1, in - 1);
    const double l = src - i0;
    taps[o] = BilinearTap{i0, i1, 1.0 - l, l};
  }
  return taps;
}

Tensor bilinear_forward(const Tensor& x, int factor) {
  const Shape s = x.shape();
  const auto ty = bilinear_taps(s.h, factor);
  const auto tx = bilinear_taps(s.w, factor);
  Tensor out(Shape{s.n, s.c, s.h * factor, s.w * factor});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float* src = x.plane(n, c);
      float* dst = out.plane(n, c);
      for (int y = 0; y < s.h * factor; ++y) {
        const BilinearTap& a = ty[y];
        for (int xx = 0; xx < s.w * factor; ++xx) {
          const BilinearTap& b = tx[xx];
          const double v =
              a.w0 * (b.w0 * src[a.i0 * s.w + b.i0] +
                      b.w1 * src[a.i0 * s.w + b.i1]) +
              a.w1 * (b.w0 * src[a.i1 * s.w + b.i0] +
                      b.w1 * src[a.i1 * s.w + b.i1]);
          dst[static_cast<std::size_t>(y) * s.w * factor + xx] =
              static_cast<float>(v);
        }
      }
    }
  }
  return out;
}

Tensor shuffle_forward(const Tensor& x, int r) {
  const Shape s = x.shape();
  if (r <= 0) throw ConfigError("pixel_shuffle: upscale factor must be positive");
  if (s.c % (r * r) != 0) {
    throw ShapeError("pixel_shuffle: " + std::to_string(s.c) +
                     " channels not divisible by r^2 = " +
                     std::to_string(r * r));
  }
  const int oc = s.c / (r * r);
  Tensor out(Shape{s.n, oc, s.h * r, s.w * r});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < oc; ++c) {
      for (int y = 0; y < s.h * r; ++y) {
        for (int xx = 0; xx < s.w * r; ++xx) {
          out.at(n, c, y, xx) =
              x.at(n, c * r * r + (y % r) * r + (xx % r), y / r, xx / r);
        }
      }
    }
  }
  return out;
}

Tensor unshuffle_forward(const Tensor& x, int r) {
  const Shape s = x.shape();
  if (r <= 0 || s.h % r != 0 || s.w % r != 0) {
    throw ShapeError("pixel_unshuffle: spatial extents of " + s.str() +
                     " not divisible by " + std::to_string(r));
  }
  Tensor out(Shape{s.n, s.c * r * r, s.h / r, s.w / r});
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      for (int y = 0; y < s.h; ++y) {
        for (int xx = 0; xx < s.w; ++xx) {
          out.at(n, c * r * r + (y % r) * r + (xx % r), y / r, xx / r) =
              x.at(n, c, y, xx);
        }
      }
    }
  }
  return out;
}

Tensor gather_forward(const Tensor& x, const std::vector<int>& idx) {
  const Shape s = x.shape();
  Tensor out(Shape{s.n, static_cast<int>(idx.size()), s.h, s.w});
  for (int n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy_n(x.plane(n, idx[i]), s.plane(),
                  out.plane(n, static_cast<int>(i)));
    }
  }
  return out;
}

}  // namespace

std::uint64_t executed_macs() { return g_executed_macs; }
void reset_executed_macs() { g_executed_macs = 0; }

Var conv2d(Var input, Var weight, std::optional<Var> bias, int stride,
           int padding) {
  const ConvGeometry g =
      conv_geometry(input.shape(), weight.shape(), stride, padding);
  Tensor out = conv_forward(input.value(), weight.value(),
                            bias ? &bias->value() : nullptr, g);
  std::vector<Var> parents{input, weight};
  if (bias) parents.push_back(*bias);
  const int xi = input.id();
  const int wi = weight.id();
  const int bi = bias ? bias->id() : -1;
  return input.tape()->record(
      std::move(out), parents, [g, xi, wi, bi](Tape& tape, const Tensor& gout) {
        const Tensor& x = tape.value(xi);
        const RowMatrix wm = kernel_matrix(tape.value(wi));
        float* gx = tape.grad_buffer(xi);
        float* gw = tape.grad_buffer(wi);
        float* gb = bi >= 0 ? tape.grad_buffer(bi) : nullptr;
        RowMatrix gw_acc;
        if (gw != nullptr) gw_acc = RowMatrix::Zero(g.co, g.rows());
        std::vector<double> gb_acc(static_cast<std::size_t>(g.co), 0.0);
        RowMatrix col;
        RowMatrix gcol;
        RowMatrix go(g.co, g.cols());
        for (int n = 0; n < g.n; ++n) {
          for (int o = 0; o < g.co; ++o) {
            const float* src = gout.plane(n, o);
            double* dst = go.row(o).data();
            double s = 0.0;
            for (int p = 0; p < g.cols(); ++p) {
              dst[p] = src[p];
              s += src[p];
            }
            gb_acc[o] += s;
          }
          if (gw != nullptr) {
            im2col(x, n, g, col);
            gw_acc.noalias() += go * col.transpose();
          }
          if (gx != nullptr) {
            gcol.noalias() = wm.transpose() * go;
            col2im_add(gcol, g, n, gx);
          }
        }
        if (gw != nullptr) {
          for (Eigen::Index i = 0; i < gw_acc.size(); ++i) {
            gw[i] += static_cast<float>(gw_acc.data()[i]);
          }
        }
        if (gb != nullptr) {
          for (int o = 0; o < g.co; ++o) gb[o] += static_cast<float>(gb_acc[o]);
        }
      });
}

Tensor conv2d(const Tensor& input, const Kernel& kernel, int stride,
              int padding) {
  const ConvGeometry g =
      conv_geometry(input.shape(), kernel.weight.shape(), stride, padding);
  return conv_forward(input, kernel.weight,
                      kernel.bias ? &*kernel.bias : nullptr, g);
}

Var pixel_shuffle(Var input, int r) {
  const int xi = input.id();
  return input.tape()->record(
      shuffle_forward(input.value(), r), {input},
      [xi, r](Tape& tape, const Tensor& gout) {
        tape.accumulate(xi, unshuffle_forward(gout, r));
      });
}

Var pixel_unshuffle(Var input, int r) {
  const int xi = input.id();
  return input.tape()->record(
      unshuffle_forward(input.value(), r), {input},
      [xi, r](Tape& tape, const Tensor& gout) {
        tape.accumulate(xi, shuffle_forward(gout, r));
      });
}

Tensor pixel_shuffle(const Tensor& input, int r) {
  return shuffle_forward(input, r);
}

Var channel_scale(Var input, Var gamma, int group) {
  const Shape s = input.shape();
  if (group <= 0) throw ConfigError("channel_scale: group must be positive");
  if (static_cast<long>(gamma.value().size()) * group != s.c) {
    throw ShapeError("channel_scale: " + std::to_string(gamma.value().size()) +
                     " factors (group " + std::to_string(group) +
                     ") for " + std::to_string(s.c) + " channels");
  }
  const Tensor& x = input.value();
  const Tensor& gm = gamma.value();
  Tensor out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const float f = gm[c / group];
      const float* src = x.plane(n, c);
      float* dst = out.plane(n, c);
      for (std::size_t p = 0; p < s.plane(); ++p) dst[p] = f * src[p];
    }
  }
  const int xi = input.id();
  const int gi = gamma.id();
  return input.tape()->record(
      std::move(out), {input, gamma},
      [xi, gi, group](Tape& tape, const Tensor& gout) {
        const Tensor& x = tape.value(xi);
        const Tensor& gm = tape.value(gi);
        const Shape s = x.shape();
        float* gx = tape.grad_buffer(xi);
        float* gg = tape.grad_buffer(gi);
        std::vector<double> acc(gm.size(), 0.0);
        for (int n = 0; n < s.n; ++n) {
          for (int c = 0; c < s.c; ++c) {
            const std::size_t base = x.offset(n, c, 0, 0);
            const float f = gm[c / group];
            double a = 0.0;
            for (std::size_t p = 0; p < s.plane(); ++p) {
              if (gx != nullptr) gx[base + p] += f * gout[base + p];
              a += static_cast<double>(gout[base + p]) * x[base + p];
            }
            acc[c / group] += a;
          }
        }
        if (gg != nullptr) {
          for (std::size_t i = 0; i < acc.size(); ++i) {
            gg[i] += static_cast<float>(acc[i]);
          }
        }
      });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.shape(), b.shape());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.value()[i] + b.value()[i];
  }
  const int ai = a.id();
  const int bi = b.id();
  return a.tape()->record(std::move(out), {a, b},
                          [ai, bi](Tape& tape, const Tensor& gout) {
                            tape.accumulate(ai, gout);
                            tape.accumulate(bi, gout);
                          });
}

Var scale(Var a, double factor) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(a.value()[i] * factor);
  }
  const int ai = a.id();
  return a.tape()->record(std::move(out), {a},
                          [ai, factor](Tape& tape, const Tensor& gout) {
                            float* g = tape.grad_buffer(ai);
                            for (std::size_t i = 0; i < gout.size(); ++i) {
                              g[i] += static_cast<float>(gout[i] * factor);
                            }
                          });
}

Var leaky_relu(Var input, float negative_slope) {
  const Tensor& x = input.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] >= 0.0f ? x[i] : negative_slope * x[i];
  }
  const int xi = input.id();
  return input.tape()->record(
      std::move(out), {input},
      [xi, negative_slope](Tape& tape, const Tensor& gout) {
        const Tensor& x = tape.value(xi);
        float* g = tape.grad_buffer(xi);
        for (std::size_t i = 0; i < x.size(); ++i) {
          g[i] += x[i] >= 0.0f ? gout[i] : negative_slope * gout[i];
        }
      });
}

Var concat_channels(std::span<const Var> inputs) {
  if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
  const Shape first = inputs[0].shape();
  int channels = 0;
  for (const Var& v : inputs) {
    const Shape s = v.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat_channels: " + s.str() + " vs " + first.str());
    }
    channels += s.c;
  }
  Tensor out(Shape{first.n, channels, first.h, first.w});
  std::vector<int> ids;
  std::vector<int> widths;
  for (int n = 0; n < first.n; ++n) {
    int offset = 0;
    for (const Var& v : inputs) {
      const Shape s = v.shape();
      std::copy_n(v.value().plane(n, 0), static_cast<std::size_t>(s.c) * s.plane(),
                  out.plane(n, offset));
      offset += s.c;
    }
  }
  for (const Var& v : inputs) {
    ids.push_back(v.id());
    widths.push_back(v.shape().c);
  }
  std::vector<Var> parents(inputs.begin(), inputs.end());
  return inputs[0].tape()->record(
      std::move(out), parents, [ids, widths](Tape& tape, const Tensor& gout) {
        const Shape s = gout.shape();
        int offset = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
          float* g = tape.grad_buffer(ids[k]);
          if (g != nullptr) {
            const std::size_t len = static_cast<std::size_t>(widths[k]) * s.plane();
            for (int n = 0; n < s.n; ++n) {
              const float* src = gout.plane(n, offset);
              float* dst = g + n * len;
              for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
            }
          }
          offset += widths[k];
        }
      });
}

Var concat_channels(Var a, Var b) {
  const Var both[2] = {a, b};
  return concat_channels(std::span<const Var>(both, 2));
}

Var bilinear_upsample(Var input, int factor) {
  if (factor <= 0) throw ConfigError("bilinear_upsample: factor must be positive");
  const int xi = input.id();
  return input.tape()->record(
      bilinear_forward(input.value(), factor), {input},
      [xi, factor](Tape& tape, const Tensor& gout) {
        const Shape s = tape.value(xi).shape();
        float* g = tape.grad_buffer(xi);
        const auto ty = bilinear_taps(s.h, factor);
        const auto tx = bilinear_taps(s.w, factor);
        std::vector<double> acc(s.plane());
        for (int n = 0; n < s.n; ++n) {
          for (int c = 0; c < s.c; ++c) {
            std::fill(acc.begin(), acc.end(), 0.0);
            const float* src = gout.plane(n, c);
            for (int y = 0; y < s.h * factor; ++y) {
              const BilinearTap& a = ty[y];
              for (int x = 0; x < s.w * factor; ++x) {
                const BilinearTap& b = tx[x];
                const double v = src[static_cast<std::size_t>(y) * s.w * factor + x];
                acc[a.i0 * s.w + b.i0] += a.w0 * b.w0 * v;
                acc[a.i0 * s.w + b.i1] += a.w0 * b.w1 * v;
                acc[a.i1 * s.w + b.i0] += a.w1 * b.w0 * v;
                acc[a.i1 * s.w + b.i1] += a.w1 * b.w1 * v;
              }
            }
            float* dst = g + (static_cast<std::size_t>(n) * s.c + c) * s.plane();
            for (std::size_t i = 0; i < acc.size(); ++i) {
              dst[i] += static_cast<float>(acc[i]);
            }
          }
        }
      });
}

Tensor bilinear_upsample(const Tensor& input, int factor) {
  return bilinear_forward(input, factor);
}

Var gather_channels(Var input, std::span<const int> index) {
  std::vector<int> idx =
      checked_index("gather_channels", index, input.shape().c, false);
  const int xi = input.id();
  Tensor out = gather_forward(input.value(), idx);
  return input.tape()->record(
      std::move(out), {input},
      [xi, idx = std::move(idx)](Tape& tape, const Tensor& gout) {
        float* g = tape.grad_buffer(xi);
        const Shape s = tape.value(xi).shape();
        for (int n = 0; n < s.n; ++n) {
          for (std::size_t i = 0; i < idx.size(); ++i) {
            const float* src = gout.plane(n, static_cast<int>(i));
            float* dst = g + (static_cast<std::size_t>(n) * s.c + idx[i]) * s.plane();
            for (std::size_t p = 0; p < s.plane(); ++p) dst[p] += src[p];
          }
        }
      });
}

Tensor gather_channels(const Tensor& input, std::span<const int> index) {
  return gather_forward(
      input, checked_index("gather_channels", index, input.shape().c, false));
}

Var scatter_add_channels(Var base, Var src, std::span<const int> index) {
  const Shape bs = base.shape();
  const Shape ss = src.shape();
  if (ss.n != bs.n || ss.h != bs.h || ss.w != bs.w ||
      ss.c != static_cast<int>(index.size())) {
    throw ShapeError("scatter_add_channels: source " + ss.str() + " with " +
                     std::to_string(index.size()) + " indices into " + bs.str());
  }
  std::vector<int> idx = checked_index("scatter_add_channels", index, bs.c, true);
  Tensor out = base.value();
  for (int n = 0; n < bs.n; ++n) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const float* s = src.value().plane(n, static_cast<int>(i));
      float* d = out.plane(n, idx[i]);
      for (std::size_t p = 0; p < bs.plane(); ++p) d[p] += s[p];
    }
  }
  const int bi = base.id();
  const int si = src.id();
  return base.tape()->record(
      std::move(out), {base, src},
      [bi, si, idx = std::move(idx)](Tape& tape, const Tensor& gout) {
        tape.accumulate(bi, gout);
        float* g = tape.grad_buffer(si);
        if (g == nullptr) return;
        const Shape s = gout.shape();
        for (int n = 0; n < s.n; ++n) {
          for (std::size_t i = 0; i < idx.size(); ++i) {
            const float* from = gout.plane(n, idx[i]);
            float* to = g + (static_cast<std::size_t>(n) * idx.size() + i) * s.plane();
            for (std::size_t p = 0; p < s.plane(); ++p) to[p] += from[p];
          }
        }
      });
}

Var shift(Var input, std::span<const Offset> per_item) {
  const Shape s = input.shape();
  if (static_cast<int>(per_item.size()) != s.n) {
    throw ShapeError("shift: " + std::to_string(per_item.size()) +
                     " offsets for batch of " + std::to_string(s.n));
  }
  std::vector<Offset> offsets(per_item.begin(), per_item.end());
  auto apply = [s](const Tensor& from, Tensor& to,
                   const std::vector<Offset>& off, bool forward) {
    for (int n = 0; n < s.n; ++n) {
      const int dy = forward ? off[n].dy : -off[n].dy;
      const int dx = forward ? off[n].dx : -off[n].dx;
      for (int c = 0; c < s.c; ++c) {
        const float* src = from.plane(n, c);
        float* dst = to.plane(n, c);
        for (int y = 0; y < s.h; ++y) {
          const int sy = y - dy;
          if (sy < 0 || sy >= s.h) continue;
          for (int x = 0; x < s.w; ++x) {
            const int sx = x - dx;
            if (sx < 0 || sx >= s.w) continue;
            dst[y * s.w + x] += src[sy * s.w + sx];
          }
        }
      }
    }
  };
  Tensor out(s);
  apply(input.value(), out, offsets, true);
  const int xi = input.id();
  return input.tape()->record(
      std::move(out), {input},
      [xi, offsets = std::move(offsets), apply](Tape& tape, const Tensor& gout) {
        Tensor g(gout.shape());
        apply(gout, g, offsets, false);
        tape.accumulate(xi, g);
      });
}

Var charbonnier(Var pred, Var target, double eps) {
  require_same_shape("charbonnier", pred.shape(), target.shape());
  if (!(eps > 0.0)) throw ConfigError("charbonnier: eps must be positive");
  const Shape s = pred.shape();
  const std::size_t frame = static_cast<std::size_t>(s.c) * s.plane();
  std::vector<double> norms(static_cast<std::size_t>(s.n));
  double total = 0.0;
  for (int n = 0; n < s.n; ++n) {
    double sq = 0.0;
    const float* p = pred.value().data() + n * frame;
    const float* t = target.value().data() + n * frame;
    for (std::size_t i = 0; i < frame; ++i) {
      const double d = static_cast<double>(p[i]) - t[i];
      sq += d * d;
    }
    norms[n] = std::sqrt(sq + eps * eps);
    total += norms[n];
  }
  const int pi = pred.id();
  const int ti = target.id();
  return pred.tape()->record(
      Tensor::scalar(static_cast<float>(total / s.n)), {pred, target},
      [pi, ti, norms, frame](Tape& tape, const Tensor& gout) {
        const Tensor& p = tape.value(pi);
        const Tensor& t = tape.value(ti);
        float* gp = tape.grad_buffer(pi);
        float* gt = tape.grad_buffer(ti);
        const double upstream = gout[0];
        const int frames = static_cast<int>(norms.size());
        for (int n = 0; n < frames; ++n) {
          const double k = upstream / (norms[n] * frames);
          for (std::size_t i = n * frame; i < (n + 1) * frame; ++i) {
            const double d = (static_cast<double>(p[i]) - t[i]) * k;
            if (gp != nullptr) gp[i] += static_cast<float>(d);
            if (gt != nullptr) gt[i] -= static_cast<float>(d);
          }
        }
      });
}

Var mean_abs_error(Var a, Var b) {
  require_same_shape("mean_abs_error", a.shape(), b.shape());
  const std::size_t count = a.value().size();
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    total += std::abs(static_cast<double>(a.value()[i]) - b.value()[i]);
  }
  const int ai = a.id();
  const int bi = b.id();
  return a.tape()->record(
      Tensor::scalar(static_cast<float>(total / count)), {a, b},
      [ai, bi, count](Tape& tape, const Tensor& gout) {
        const Tensor& x = tape.value(ai);
        const Tensor& y = tape.value(bi);
        float* ga = tape.grad_buffer(ai);
        float* gb = tape.grad_buffer(bi);
        const double k = gout[0] / static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i) {
          const double d = x[i] - y[i];
          const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
          if (ga != nullptr) ga[i] += static_cast<float>(sgn * k);
          if (gb != nullptr) gb[i] -= static_cast<float>(sgn * k);
        }
      });
}

Var mean_squared_error(Var a, Var b) {
  require_same_shape("mean_squared_error", a.shape(), b.shape());
  const std::size_t count = a.value().size();
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(a.value()[i]) - b.value()[i];
    total += d * d;
  }
  const int ai = a.id();
  const int bi = b.id();
  return a.tape()->record(
      Tensor::scalar(static_cast<float>(total / count)), {a, b},
      [ai, bi, count](Tape& tape, const Tensor& gout) {
        const Tensor& x = tape.value(ai);
        const Tensor& y = tape.value(bi);
        float* ga = tape.grad_buffer(ai);
        float* gb = tape.grad_buffer(bi);
        const double k = 2.0 * gout[0] / static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i) {
          const double d = (static_cast<double>(x[i]) - y[i]) * k;
          if (ga != nullptr) ga[i] += static_cast<float>(d);
          if (gb != nullptr) gb[i] -= static_cast<float>(d);
        }
      });
}

Var l2_penalty(Var v, std::span<const int> index, double alpha) {
  std::vector<int> idx = checked_index(
      "l2_penalty", index, static_cast<int>(v.value().size()), true);
  double total = 0.0;
  for (int i : idx) {
    const double g = v.value()[i];
    total += g * g;
  }
  const int vi = v.id();
  return v.tape()->record(
      Tensor::scalar(static_cast<float>(alpha * total)), {v},
      [vi, alpha, idx = std::move(idx)](Tape& tape, const Tensor& gout) {
        const Tensor& x = tape.value(vi);
        float* g = tape.grad_buffer(vi);
        for (int i : idx) {
          g[i] += static_cast<float>(2.0 * alpha * x[i] * gout[0]);
        }
      });
}

Var sum(Var input) {
  double total = 0.0;
  for (float v : input.value().values()) total += v;
  const int xi = input.id();
  return input.tape()->record(
      Tensor::scalar(static_cast<float>(total)), {input},
      [xi](Tape& tape, const Tensor& gout) {
        float* g = tape.grad_buffer(xi);
        const std::size_t n = tape.value(xi).size();
        for (std::size_t i = 0; i < n; ++i) g[i] += gout[0];
      });
}

Var sum_scalars(std::span<const Var> scalars) {
  if (scalars.empty()) throw ShapeError("sum_scalars: no inputs");
  double total = 0.0;
  std::vector<int> ids;
  for (const Var& s : scalars) {
    if (s.value().size() != 1) {
      throw ShapeError("sum_scalars: operand " + s.shape().str() +
                       " is not a scalar");
    }
    total += s.value()[0];
    ids.push_back(s.id());
  }
  std::vector<Var> parents(scalars.begin(), scalars.end());
  return scalars[0].tape()->record(
      Tensor::scalar(static_cast<float>(total)), parents,
      [ids](Tape& tape, const Tensor& gout) {
        for (int id : ids) {
          float* g = tape.grad_buffer(id);
          if (g != nullptr) g[0] += gout[0];
        }
      });
}

}  // namespace vsrprune
