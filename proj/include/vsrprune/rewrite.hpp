#pragma once

#include <string>
#include <vector>

#include "vsrprune/cost.hpp"
#include "vsrprune/regularizer.hpp"
#include "vsrprune/scoring.hpp"

namespace vsrprune {

class RewriteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scaling vectors seen by one residual block; all-ones when absent.
struct BlockGammas {
  std::vector<float> read;
  std::vector<float> mid;
  std::vector<float> write;
};

struct PrunedBlock {
  ResidualBlockSpec spec;
  Kernel first;
  Kernel second;
};

/// Keeps first-conv inputs `read`, first-conv filters `mid` and second-conv
/// filters `write` (local indices, sorted). Folds γ_read·γ_mid into the first
/// conv and γ_write into the second; maps read/write onto trunk channels so
/// the trunk keeps its full width.
PrunedBlock apply_rsc_rewrite(const ResidualBlockSpec& block,
                              const Kernel& first, const Kernel& second,
                              const BlockGammas& gammas,
                              const std::vector<int>& read,
                              const std::vector<int>& mid,
                              const std::vector<int>& write);

struct PrunedShuffle {
  LayerSpec upsample;
  Kernel upsample_kernel;
  LayerSpec consumer;
  Kernel consumer_kernel;
};

/// Keeps filters 4g..4g+3 for every g in `groups` with γ[g] folded into all
/// four, and shrinks the consumer conv's input channels to `groups`.
PrunedShuffle apply_shuffle_rewrite(const LayerSpec& upsample,
                                    const Kernel& upsample_kernel,
                                    const std::vector<float>& group_gamma,
                                    const std::vector<int>& groups,
                                    const LayerSpec& consumer,
                                    const Kernel& consumer_kernel);

struct FoldRecord {
  std::string site;
  std::string layer;
  int kept = 0;
  int units = 0;
  bool gamma_folded = false;
};

struct RewriteResult {
  NetworkSpec spec;
  Weights weights;
  std::vector<FoldRecord> folds;
  CostReport before;
  CostReport after;
};

/// Applies the RSC rewrite to every residual block, the shuffle rewrite to the
/// upsample convs, filter pruning to the entry and HR convs, and folds every
/// surviving scaling factor. The fusion conv is left alone. The result carries
/// no scaling factors. cost_h/cost_w set the LR resolution of the reports.
RewriteResult compile(const NetworkSpec& spec, const Weights& weights,
                      const ScalingState* scaling, const PruningPlan& plan,
                      int cost_h = 32, int cost_w = 32);

void write_fold_report(std::ostream& os, const RewriteResult& result);

}  // namespace vsrprune
