#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "vsrprune/pipeline.hpp"

namespace vsrprune {

/// Worker count from VSRPRUNE_THREADS, else the hardware concurrency.
int worker_threads();

/// Runs every task on a pool of `threads` workers; results keep task order.
template <class R>
std::vector<R> run_pool(const std::vector<std::function<R()>>& tasks, int threads) {
  std::vector<std::optional<R>> slots(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        slots[i] = tasks[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

/// Pretrained teacher and data shared by every experiment cell of one seed.
struct SeedContext {
  Profile profile;  // seed field set to this seed
  NetworkSpec spec;
  Dataset data;
  Checkpoint teacher;
  double teacher_psnr = 0.0;
};

/// Pretrains (or loads from cache_dir when a matching checkpoint exists).
SeedContext prepare_seed(const Profile& profile, std::uint64_t seed,
                         const std::optional<std::filesystem::path>& cache_dir);

struct SslVariant {
  double ratio = 0.5;
  SelectionPolicy policy;
  bool rsc = true;      // false: only first-conv filters of each block
  bool shuffle = true;  // false: upsampler pruned per layer at the same ratio
  bool temporal = true;
  bool sparsify = true;
};

struct CellResult {
  std::string scheme;
  std::string policy;
  double ratio = 0.0;
  std::uint64_t seed = 0;
  double psnr = 0.0;
  double final_state_error = 0.0;  // e_T against the teacher
  std::size_t params = 0;
  std::uint64_t macs = 0;
  double macs_fraction = 1.0;
  double params_fraction = 1.0;
  PruningPlan plan;
  NetworkSpec pruned;
};

/// Plan for a variant: global selection over the variant's units, with the
/// upsampler handled per layer when shuffle grouping is off.
PruningPlan variant_plan(const NetworkSpec& spec, const Weights& weights,
                         const SslVariant& v, std::uint64_t seed);
NetworkSpec variant_spec(const NetworkSpec& spec, const SslVariant& v);

/// Plan → SIR → compile → finetune.
CellResult run_ssl_cell(const SeedContext& ctx, const SslVariant& v);
/// L1-norm baseline at local ratio p; finetuned for the SSL stage budget.
CellResult run_l1_cell(const SeedContext& ctx, double p);
/// Narrow network trained from scratch for the whole SSL budget.
CellResult run_lite_cell(const SeedContext& ctx, double factor);

/// Ratio whose compiled cost is closest to target (fraction of the unpruned
/// MACs, or params when by_params), found by bisection.
double ratio_for_target(const std::function<double(double)>& fraction_at,
                        double target, double max_ratio = 0.95);

double macs_fraction_of(const NetworkSpec& spec, const Weights& weights,
                        const PruningPlan& plan, int h, int w);
double params_fraction_of(const NetworkSpec& spec, const Weights& weights,
                          const PruningPlan& plan);

/// Mean of e_F at the last frame and e_B at the first over the clips.
double final_state_error(const Checkpoint& teacher, const NetworkSpec& spec,
                         const Weights& weights, const std::vector<Sequence>& clips);

double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
MeanStd mean_std(const std::vector<double>& v);

/// Per-layer pruned fraction of output units (filters or groups) of a plan.
void write_layer_ratios(std::ostream& os, const NetworkSpec& spec, const PruningPlan& plan);

// ---------------------------------------------------------------------------
// Studies. Each returns its rows; the CLI writes them as CSV.

struct CriteriaRow {
  std::string policy;
  double ratio = 0.0;
  std::vector<double> psnr;  // one per seed
};
std::vector<CriteriaRow> criteria_study(const std::vector<SeedContext>& seeds,
                                        const std::vector<double>& ratios,
                                        const std::vector<SelectionPolicy>& policies,
                                        int threads);

struct AblationRow {
  std::string name;  // "rsc+shuffle+tf", ...
  SslVariant variant;
  std::vector<double> psnr;
  std::vector<double> final_state_error;
  std::vector<double> params_fraction;
};
/// RSC runs at the given ratio; skip-last-conv variants get the ratio that
/// matches the RSC model size of the same seed.
std::vector<AblationRow> ablation_study(const std::vector<SeedContext>& seeds,
                                        double ratio,
                                        const std::vector<SslVariant>& variants,
                                        int threads);
std::vector<SslVariant> all_ablation_variants();
std::string variant_name(const SslVariant& v);

struct SweepRow {
  std::string scheme;  // ssl, l1norm, lite
  double target = 0.0;  // MACs fraction
  std::vector<double> psnr;
  std::vector<double> macs_fraction;
  std::vector<double> params;
};
std::vector<SweepRow> sweep_study(const std::vector<SeedContext>& seeds,
                                  const std::vector<double>& targets,
                                  const std::vector<std::string>& schemes, int threads);

struct AccumulationResult {
  std::uint64_t seed = 0;
  std::vector<double> forward;  // e_t
  std::vector<double> backward;
  double rho = 0.0;  // Spearman of (t, forward e_t)
};
/// Pruned, not finetuned: p = ratio, min-global, evaluated on clips of
/// `frames` length.
AccumulationResult error_accumulation(const SeedContext& ctx, double ratio, int frames);

}  // namespace vsrprune
