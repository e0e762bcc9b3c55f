#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vsrprune/checkpoint.hpp"
#include "vsrprune/data.hpp"
#include "vsrprune/rewrite.hpp"

namespace vsrprune {

enum class Stage { Pretrain, Sparsify, Finetune };
const char* to_string(Stage s);
Stage parse_stage(const std::string& text);

enum class TemporalNorm { MAE, MSE };

struct DataConfig {
  DegradationKind degradation = DegradationKind::BD;
  int lr_height = 32;
  int lr_width = 32;
  int frames = 6;
  int batch = 2;
  int motion_range = 1;
  int train_clips = 32;
  int val_clips = 4;
  int val_frames = 6;
};

struct OptimConfig {
  double lr = 2e-4;
  double lr_floor = 1e-7;
  /// Step size of the scaling-factor group.
  double gamma_lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.99;
};

struct LossConfig {
  double charbonnier_eps = 1e-6;
  bool temporal = true;
  TemporalNorm temporal_norm = TemporalNorm::MAE;
};

struct Budgets {
  long pretrain = 2000;
  /// Negative: run until the schedule reports Done.
  long sparsify = -1;
  long finetune = 5000;
};

struct PruneConfig {
  double ratio = 0.5;
  SelectionPolicy policy;
  bool normalize_groups = false;
  PruneScope scope;
};

/// Everything a config file can set. Every command echoes the resolved
/// profile into its output directory.
struct Profile {
  std::string name = "toy";
  std::uint64_t seed = 0;
  ReferenceConfig network;
  DataConfig data;
  OptimConfig optim;
  SirSchedule schedule{1e-3, 0.1, 5, 100};
  Budgets budgets;
  PruneConfig prune;
  LossConfig loss;
  long val_every = 250;
  int cost_height = 180;
  int cost_width = 320;
};

/// Unknown keys and wrongly typed values raise ConfigError naming the key.
Profile profile_from_json(const std::string& text);
Profile load_profile(const std::filesystem::path& path);
std::string to_json(const Profile& profile);

/// Network of the profile with its prune scope applied.
NetworkSpec profile_network(const Profile& profile);

struct StageConfig {
  Stage stage = Stage::Pretrain;
  std::uint64_t seed = 0;
  /// Negative for sparsify: until the schedule is done.
  long iterations = 0;
  double lr = 2e-4;
  double lr_floor = 1e-7;
  double gamma_lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.99;
  /// Cosine horizon; 0 means the stage length.
  long horizon = 0;
  bool use_rec = true;
  bool use_sir = false;
  bool use_tf = false;
  TemporalNorm temporal_norm = TemporalNorm::MAE;
  double charbonnier_eps = 1e-6;
  long val_every = 250;
  SirSchedule schedule;
};

StageConfig stage_config(const Profile& profile, Stage stage);

struct Dataset {
  std::vector<Sequence> train;
  std::vector<Sequence> val;
  int batch = 2;
};

/// Synthetic clips; training and validation seeds never overlap.
Dataset make_dataset(const DataConfig& config, std::uint64_t seed);

/// Σ over directions of the norm between final states: forward at the last
/// frame, backward at the first. Teacher tensors carry no gradient.
Var temporal_finetune_loss(Var forward_final, Var backward_final,
                           const Tensor& teacher_forward,
                           const Tensor& teacher_backward, TemporalNorm norm);
/// Unidirectional form: forward term only.
Var temporal_finetune_loss(Var forward_final, const Tensor& teacher_forward,
                           TemporalNorm norm);

/// Mean over frames of the per-frame Charbonnier term.
Var reconstruction_loss(std::span<const Var> sr, std::span<const Tensor> hr,
                        double eps);

/// L_rec + L_tf with unit weights; tf may be absent.
Var total_finetune_loss(std::span<const Var> sr, std::span<const Tensor> hr,
                        double eps, std::optional<Var> tf);

struct LogRow {
  long iter = 0;
  double loss_rec = 0.0;
  double loss_sir = 0.0;
  double loss_tf = 0.0;
  double alpha = 0.0;
  std::optional<double> val_psnr;
};

void write_log_header(std::ostream& os);
void write_log_row(std::ostream& os, const LogRow& row);

/// Final forward/backward hidden states of a frozen model per training clip.
struct TeacherTargets {
  std::vector<Tensor> forward_final;
  std::vector<Tensor> backward_final;
};
TeacherTargets teacher_targets(const NetworkSpec& spec, const Weights& weights,
                               const ScalingState* scaling,
                               const std::vector<Sequence>& clips);

struct StageInput {
  NetworkSpec spec;
  Weights weights;
  std::optional<ScalingState> scaling;
  /// Finetune: compiled once before training. Empty plan keeps the network.
  std::optional<PruningPlan> plan;
  /// Finetune with L_tf: the frozen teacher.
  const Checkpoint* teacher = nullptr;
};

struct StageResult {
  NetworkSpec spec;
  Weights weights;
  std::optional<ScalingState> scaling;
  std::optional<RewriteResult> rewrite;
  std::vector<LogRow> log;
  double final_val_psnr = 0.0;
  std::vector<GammaRecord> gamma_log;
};

/// Runs one stage. Validation runs every val_every iterations and after the
/// last one. A non-finite loss aborts with EvalError naming the iteration.
/// csv, when given, receives the metric log as it is produced.
StageResult run_stage(const StageConfig& config, StageInput input,
                      const Dataset& data, std::ostream* csv = nullptr);

/// Mean per-frame PSNR of the model over the clips.
double validation_psnr(const NetworkSpec& spec, const Weights& weights,
                       const ScalingState* scaling,
                       const std::vector<Sequence>& clips);

/// Scores and selects under the profile's policy and ratio.
PruningPlan make_plan(const NetworkSpec& spec, const Weights& weights,
                      double ratio, SelectionPolicy policy, std::uint64_t seed,
                      bool normalize_groups = false);

/// Scaling state with the plan's units marked unimportant.
ScalingState prepare_scaling(const NetworkSpec& spec, const PruningPlan& plan,
                             const SirSchedule& schedule);

/// Plan whose unimportant set is the scaling state's regularized entries.
PruningPlan plan_from_scaling(const NetworkSpec& spec, const ScalingState& scaling);

/// L1-norm baseline: per block, the first conv's output filters with the
/// smallest L1 norms are removed at local ratio p (and the matching inputs of
/// the second conv). Nothing else is touched.
PruningPlan baseline_l1norm_plan(const NetworkSpec& spec, const Weights& weights,
                                 double p);
RewriteResult baseline_l1norm(const NetworkSpec& spec, const Weights& weights,
                              double p);

/// Narrow network: every width scaled by factor. Throws ConfigError when a
/// scaled width is not a positive integer.
ReferenceConfig baseline_lite(const ReferenceConfig& config, double factor);

}  // namespace vsrprune
