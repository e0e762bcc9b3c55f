#pragma once

#include <map>
#include <string>
#include <vector>

#include "vsrprune/network.hpp"
#include "vsrprune/ops.hpp"
#include "vsrprune/regularizer.hpp"

namespace vsrprune {

/// One clip: T low-resolution frames (1×3×h×w), optional HR targets and the
/// integer motion between consecutive frames, at LR scale:
/// frame[t+1](y, x) = frame[t](y − dy, x − dx).
struct Sequence {
  std::vector<Tensor> frames;
  std::vector<Tensor> hr;
  std::vector<Offset> motion;  // T − 1 entries

  int length() const { return static_cast<int>(frames.size()); }
};

/// Clips stacked along the batch axis. All clips share T and frame extents.
struct Batch {
  std::vector<Tensor> frames;               // T × (N,3,h,w)
  std::vector<Tensor> hr;                   // T × (N,3,4h,4w), may be empty
  std::vector<std::vector<Offset>> motion;  // (T−1) × N

  int length() const { return static_cast<int>(frames.size()); }
  int batch_size() const { return frames.empty() ? 0 : frames[0].shape().n; }
};

Batch make_batch(const std::vector<Sequence>& clips);

struct BoundWeights {
  std::map<std::string, Var> weight;
  std::map<std::string, Var> bias;
};

/// Records every kernel on the tape (as parameters when trainable).
BoundWeights bind_weights(Tape& tape, const Weights& weights, bool trainable);
std::map<std::string, Var> bind_gammas(Tape& tape, const ScalingState& state,
                                       bool trainable);

struct ModelOutputs {
  std::vector<Var> sr;               // per frame, (N,3,4h,4w)
  std::vector<Var> forward_states;   // H_F,t for t = 0..T−1
  std::vector<Var> backward_states;  // H_B,t for t = 0..T−1; empty if uni
};

/// One recurrent step: aligns prev_state by the oracle shift, concatenates the
/// frame, runs the entry conv and the residual chain. gammas may be null.
Var run_cell(const NetworkSpec& spec, const RecurrentCellSpec& cell,
             const BoundWeights& w, const std::map<std::string, Var>* gammas,
             Var frame, Var prev_state, std::span<const Offset> align);

/// Fusion → upsampler → + bilinear x4 of the frame.
Var run_upsampler(const NetworkSpec& spec, const BoundWeights& w,
                  const std::map<std::string, Var>* gammas, Var features,
                  Var frame);

/// Backward propagation over reversed time, forward propagation, per-frame
/// fusion and upsampling. Initial hidden states are zero.
ModelOutputs run_model(const NetworkSpec& spec, const BoundWeights& w,
                       const std::map<std::string, Var>* gammas,
                       const Batch& batch, Tape& tape);

/// Gradient-free evaluation.
struct Evaluation {
  std::vector<Tensor> sr;
  std::vector<Tensor> forward_states;
  std::vector<Tensor> backward_states;
};
Evaluation evaluate(const NetworkSpec& spec, const Weights& weights,
                    const ScalingState* scaling, const Batch& batch);

struct HiddenErrorProfile {
  std::vector<double> forward;   // e_t = mean |H_F,t − H'_F,t|
  std::vector<double> backward;  // same for H_B,t, empty if unidirectional
};

/// Throws ShapeError when the two models' hidden widths differ.
HiddenErrorProfile hidden_error_profile(const Evaluation& reference,
                                        const Evaluation& candidate);

}  // namespace vsrprune
