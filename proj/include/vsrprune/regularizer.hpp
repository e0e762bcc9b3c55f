#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "vsrprune/ops.hpp"
#include "vsrprune/scoring.hpp"

namespace vsrprune {

/// Ramp of the penalty weight: +delta every t1 iterations until tau, then a
/// t2-iteration hold.
struct SirSchedule {
  double delta = 1e-4;
  double tau = 0.1;
  long t1 = 5;
  long t2 = 3375;

  /// Number of increments needed to reach tau (the last one clamps).
  long increments_to_cap() const;
  /// Iteration at which alpha first equals tau.
  long cap_iteration() const { return increments_to_cap() * t1; }
  long done_iteration() const { return cap_iteration() + t2; }
};

enum class SchedulePhase { Ramping, Holding, Done };
const char* to_string(SchedulePhase phase);

struct ScalingState {
  /// Site id → 1×n×1×1 scaling vector.
  std::map<std::string, Tensor> gammas;
  /// Site id → indices of unimportant entries (the regularized set).
  std::map<std::string, std::vector<int>> unimportant;
  double alpha = 0.0;
  SirSchedule schedule;
  long iteration = 0;
  long increments = 0;
  SchedulePhase phase = SchedulePhase::Ramping;

  std::size_t gamma_count() const;
};

/// One all-ones scaling vector per prunable site of the spec.
ScalingState inject_scaling(const NetworkSpec& spec);

/// Marks the plan's unimportant units as the regularized set.
void mark_unimportant(ScalingState& state, const PruningPlan& plan);

/// Returns a copy with every unimportant entry forced to exactly 0.
ScalingState with_unimportant_zeroed(const ScalingState& state);

/// alpha · Σ over unimportant entries of γ².
double sir_penalty(const ScalingState& state);
/// Same penalty recorded on a tape against the bound gamma Vars.
Var sir_penalty(const ScalingState& state,
                const std::map<std::string, Var>& gamma_vars);

/// Advances one iteration: alpha += delta on every t1-th iteration until tau,
/// then holds for t2 iterations before reporting Done.
void step_schedule(ScalingState& state);

struct GammaRecord {
  long iteration = 0;
  double alpha = 0.0;
  double mean_gamma_pruned = 0.0;
  double mean_gamma_kept = 0.0;
};

/// Mean |γ| over unimportant and kept entries.
GammaRecord gamma_trajectory_record(const ScalingState& state);
void write_gamma_csv_header(std::ostream& os);
void write_gamma_csv_row(std::ostream& os, const GammaRecord& r);

}  // namespace vsrprune
