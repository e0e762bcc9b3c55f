#include "vsrprune/model.hpp"

#include <cmath>
#include <numeric>

namespace vsrprune {

namespace {

bool is_identity(const std::vector<int>& index, int width) {
  if (static_cast<int>(index.size()) != width) return false;
  for (int i = 0; i < width; ++i) {
    if (index[i] != i) return false;
  }
  return true;
}

const Var* find_gamma(const std::map<std::string, Var>* gammas,
                      const std::string& site) {
  if (gammas == nullptr) return nullptr;
  auto it = gammas->find(site);
  return it == gammas->end() ? nullptr : &it->second;
}

Var conv(const LayerSpec& l, const BoundWeights& w, Var x) {
  auto wit = w.weight.find(l.id);
  if (wit == w.weight.end()) throw ShapeError(l.id + ": weights not bound");
  std::optional<Var> b;
  if (auto bit = w.bias.find(l.id); bit != w.bias.end()) b = bit->second;
  try {
    return conv2d(x, wit->second, b, l.stride, l.padding);
  } catch (const ShapeError& e) {
    throw ShapeError(l.id + ": " + e.what());
  }
}

// Conv followed by its output-side scaling factor, if any.
Var scaled_conv(const LayerSpec& l, const BoundWeights& w,
                const std::map<std::string, Var>* gammas, Var x) {
  Var y = conv(l, w, x);
  if (const Var* g = find_gamma(gammas, site_id(l.id, UnitKind::OutputFilter))) {
    y = channel_scale(y, *g);
  }
  if (const Var* g = find_gamma(gammas, site_id(l.id, UnitKind::ShuffleGroup))) {
    y = channel_scale(y, *g, 4);
  }
  return y;
}

std::vector<Offset> negate(std::span<const Offset> in) {
  std::vector<Offset> out(in.begin(), in.end());
  for (auto& o : out) {
    o.dy = -o.dy;
    o.dx = -o.dx;
  }
  return out;
}

}  // namespace

Batch make_batch(const std::vector<Sequence>& clips) {
  if (clips.empty()) throw ShapeError("make_batch: no clips");
  const int t_len = clips[0].length();
  const Shape fs = clips[0].frames.at(0).shape();
  const bool with_hr = !clips[0].hr.empty();
  Batch b;
  const int n = static_cast<int>(clips.size());
  for (const auto& c : clips) {
    if (c.length() != t_len || (!c.hr.empty()) != with_hr) {
      throw ShapeError("make_batch: clips differ in length or HR presence");
    }
    if (static_cast<int>(c.motion.size()) != std::max(t_len - 1, 0)) {
      throw ShapeError("make_batch: motion list must have T-1 entries");
    }
  }
  auto stack = [&](auto member) {
    std::vector<Tensor> out;
    for (int t = 0; t < t_len; ++t) {
      const Shape s = (clips[0].*member)[t].shape();
      Tensor st(Shape{n, s.c, s.h, s.w});
      for (int i = 0; i < n; ++i) {
        const Tensor& src = (clips[i].*member)[t];
        if (!(src.shape() == s)) throw ShapeError("make_batch: frame shape mismatch");
        std::copy_n(src.data(), src.size(), st.data() + i * src.size());
      }
      out.push_back(std::move(st));
    }
    return out;
  };
  if (fs.n != 1) throw ShapeError("make_batch: clip frames must have batch 1");
  b.frames = stack(&Sequence::frames);
  if (with_hr) b.hr = stack(&Sequence::hr);
  for (int t = 0; t + 1 < t_len; ++t) {
    std::vector<Offset> step;
    for (const auto& c : clips) step.push_back(c.motion[t]);
    b.motion.push_back(std::move(step));
  }
  return b;
}

BoundWeights bind_weights(Tape& tape, const Weights& weights, bool trainable) {
  BoundWeights b;
  for (const auto& [id, k] : weights) {
    b.weight.emplace(id, trainable ? tape.parameter(k.weight) : tape.constant(k.weight));
    if (k.bias) {
      b.bias.emplace(id, trainable ? tape.parameter(*k.bias) : tape.constant(*k.bias));
    }
  }
  return b;
}

std::map<std::string, Var> bind_gammas(Tape& tape, const ScalingState& state,
                                       bool trainable) {
  std::map<std::string, Var> out;
  for (const auto& [site, g] : state.gammas) {
    out.emplace(site, trainable ? tape.parameter(g) : tape.constant(g));
  }
  return out;
}

Var run_cell(const NetworkSpec& spec, const RecurrentCellSpec& cell,
             const BoundWeights& w, const std::map<std::string, Var>* gammas,
             Var frame, Var prev_state, std::span<const Offset> align) {
  const float slope = spec.activation_slope;
  const int width = cell.trunk_width;
  if (prev_state.shape().c != width) {
    throw ShapeError(cell.entry_conv.id + ": hidden state has " +
                     std::to_string(prev_state.shape().c) +
                     " channels, trunk width is " + std::to_string(width));
  }
  Var aligned = align.empty() ? prev_state : shift(prev_state, align);
  Var x = concat_channels(frame, aligned);

  Var e = leaky_relu(scaled_conv(cell.entry_conv, w, gammas, x), slope);
  Var trunk = e;
  if (!is_identity(cell.entry_index, width)) {
    const Shape s = e.shape();
    Var zeros = frame.tape()->constant(Tensor::zeros(Shape{s.n, width, s.h, s.w}));
    trunk = scatter_add_channels(zeros, e, cell.entry_index);
  }

  for (const ResidualBlockSpec& b : cell.blocks) {
    Var in = is_identity(b.read_index, width) ? trunk
                                              : gather_channels(trunk, b.read_index);
    if (const Var* g = find_gamma(gammas, b.read_gamma_site)) {
      in = channel_scale(in, *g);
    }
    Var mid = conv(b.first_conv, w, in);
    if (const Var* g = find_gamma(gammas, b.mid_gamma_site)) {
      mid = channel_scale(mid, *g);
    }
    mid = leaky_relu(mid, slope);
    Var out = conv(b.second_conv, w, mid);
    if (const Var* g = find_gamma(gammas, b.write_gamma_site)) {
      out = channel_scale(out, *g);
    }
    trunk = is_identity(b.write_index, width)
                ? add(trunk, out)
                : scatter_add_channels(trunk, out, b.write_index);
  }
  return trunk;
}

Var run_upsampler(const NetworkSpec& spec, const BoundWeights& w,
                  const std::map<std::string, Var>* gammas, Var features,
                  Var frame) {
  Var x = features;
  for (const LayerSpec& l : spec.upsampler) {
    switch (l.kind) {
      case LayerKind::FusionConv1x1:
      case LayerKind::Conv:
      case LayerKind::UpsampleConv:
        x = scaled_conv(l, w, gammas, x);
        break;
      case LayerKind::PixelShuffle:
        x = pixel_shuffle(x, l.factor);
        break;
      case LayerKind::Activation:
        x = leaky_relu(x, spec.activation_slope);
        break;
      case LayerKind::BilinearSkip:
        x = add(x, bilinear_upsample(frame, l.factor));
        break;
      case LayerKind::Concat:
      case LayerKind::ScatterResidual:
        throw ConfigError(l.id + ": unsupported upsampler layer");
    }
  }
  return x;
}

ModelOutputs run_model(const NetworkSpec& spec, const BoundWeights& w,
                       const std::map<std::string, Var>* gammas,
                       const Batch& batch, Tape& tape) {
  const int t_len = batch.length();
  if (t_len == 0) throw ShapeError("run_model: empty batch");
  if (static_cast<int>(batch.motion.size()) != t_len - 1) {
    throw ShapeError("run_model: motion list must have T-1 entries");
  }
  const Shape fs = batch.frames[0].shape();
  if (fs.c != spec.image_channels()) {
    throw ShapeError("run_model: frames have " + std::to_string(fs.c) +
                     " channels, network expects " +
                     std::to_string(spec.image_channels()));
  }
  std::vector<Var> frames;
  for (const Tensor& f : batch.frames) {
    if (!(f.shape() == fs)) throw ShapeError("run_model: frame extents differ");
    frames.push_back(tape.constant(f));
  }
  const Shape hs{fs.n, spec.trunk_width(), fs.h, fs.w};

  ModelOutputs out;
  if (spec.backward_cell) {
    out.backward_states.resize(t_len);
    Var h = tape.constant(Tensor::zeros(hs));
    for (int t = t_len - 1; t >= 0; --t) {
      std::vector<Offset> align;
      if (t + 1 < t_len) align = negate(batch.motion[t]);
      h = run_cell(spec, *spec.backward_cell, w, gammas, frames[t], h, align);
      out.backward_states[t] = h;
    }
  }
  Var h = tape.constant(Tensor::zeros(hs));
  for (int t = 0; t < t_len; ++t) {
    std::span<const Offset> align;
    if (t > 0) align = batch.motion[t - 1];
    h = run_cell(spec, spec.forward_cell, w, gammas, frames[t], h, align);
    out.forward_states.push_back(h);
    Var features = spec.backward_cell
                       ? concat_channels(h, out.backward_states[t])
                       : h;
    out.sr.push_back(run_upsampler(spec, w, gammas, features, frames[t]));
  }
  return out;
}

Evaluation evaluate(const NetworkSpec& spec, const Weights& weights,
                    const ScalingState* scaling, const Batch& batch) {
  Tape tape;
  const BoundWeights w = bind_weights(tape, weights, false);
  std::map<std::string, Var> g;
  if (scaling) g = bind_gammas(tape, *scaling, false);
  const ModelOutputs o = run_model(spec, w, scaling ? &g : nullptr, batch, tape);
  Evaluation e;
  for (const Var& v : o.sr) e.sr.push_back(v.value());
  for (const Var& v : o.forward_states) e.forward_states.push_back(v.value());
  for (const Var& v : o.backward_states) e.backward_states.push_back(v.value());
  return e;
}

HiddenErrorProfile hidden_error_profile(const Evaluation& reference,
                                        const Evaluation& candidate) {
  auto profile = [](const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    if (a.size() != b.size()) throw ShapeError("hidden traces differ in length");
    std::vector<double> e;
    for (std::size_t t = 0; t < a.size(); ++t) {
      if (!(a[t].shape() == b[t].shape())) {
        throw ShapeError("hidden state widths differ: " + a[t].shape().str() +
                         " vs " + b[t].shape().str());
      }
      double s = 0.0;
      for (std::size_t i = 0; i < a[t].size(); ++i) {
        s += std::abs(static_cast<double>(a[t][i]) - b[t][i]);
      }
      e.push_back(s / static_cast<double>(a[t].size()));
    }
    return e;
  };
  HiddenErrorProfile p;
  p.forward = profile(reference.forward_states, candidate.forward_states);
  p.backward = profile(reference.backward_states, candidate.backward_states);
  return p;
}

}  // namespace vsrprune
