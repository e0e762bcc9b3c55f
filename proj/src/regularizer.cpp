#include "vsrprune/regularizer.hpp"

#include <cmath>
#include <iomanip>
#include <set>

namespace vsrprune {

long SirSchedule::increments_to_cap() const {
  if (!(delta > 0.0) || !(tau > 0.0)) {
    throw ConfigError("sparsity schedule needs delta > 0 and tau > 0");
  }
  // tau / delta is 1000.0000000000001 for the stock values; shave the
  // representation error before rounding up.
  const double ratio = tau / delta;
  const long n = static_cast<long>(std::ceil(ratio * (1.0 - 1e-12)));
  return std::max(n, 1L);
}

const char* to_string(SchedulePhase phase) {
  switch (phase) {
    case SchedulePhase::Ramping: return "ramping";
    case SchedulePhase::Holding: return "holding";
    case SchedulePhase::Done: return "done";
  }
  return "?";
}

std::size_t ScalingState::gamma_count() const {
  std::size_t n = 0;
  for (const auto& [id, g] : gammas) n += g.size();
  return n;
}

ScalingState inject_scaling(const NetworkSpec& spec) {
  require_valid(spec);
  ScalingState state;
  for (const SiteRef& site : prunable_sites(spec)) {
    auto [it, inserted] = state.gammas.emplace(
        site.id(), Tensor(Shape{1, site.units, 1, 1}, 1.0f));
    if (!inserted) {
      throw ConfigError("scaling-factor site collision at " + site.id());
    }
  }
  return state;
}

void mark_unimportant(ScalingState& state, const PruningPlan& plan) {
  state.unimportant.clear();
  for (const auto& [id, sp] : plan.sites) {
    auto it = state.gammas.find(id);
    if (it == state.gammas.end()) {
      throw ConfigError("plan site " + id + " has no scaling factor");
    }
    if (static_cast<int>(it->second.size()) != sp.units) {
      throw ShapeError("plan site " + id + " has " + std::to_string(sp.units) +
                       " units, scaling vector has " +
                       std::to_string(it->second.size()));
    }
    if (!sp.pruned.empty()) state.unimportant[id] = sp.pruned;
  }
}

ScalingState with_unimportant_zeroed(const ScalingState& state) {
  ScalingState out = state;
  for (const auto& [id, idx] : state.unimportant) {
    Tensor& g = out.gammas.at(id);
    for (int i : idx) g[static_cast<std::size_t>(i)] = 0.0f;
  }
  return out;
}

double sir_penalty(const ScalingState& state) {
  double total = 0.0;
  for (const auto& [id, idx] : state.unimportant) {
    const Tensor& g = state.gammas.at(id);
    for (int i : idx) {
      const double v = g[static_cast<std::size_t>(i)];
      total += v * v;
    }
  }
  return state.alpha * total;
}

Var sir_penalty(const ScalingState& state,
                const std::map<std::string, Var>& gamma_vars) {
  std::vector<Var> terms;
  for (const auto& [id, idx] : state.unimportant) {
    auto it = gamma_vars.find(id);
    if (it == gamma_vars.end()) {
      throw ConfigError("no bound scaling vector for site " + id);
    }
    terms.push_back(l2_penalty(it->second, idx, state.alpha));
  }
  if (terms.empty()) {
    if (gamma_vars.empty()) throw ConfigError("sir_penalty: no scaling vectors");
    return scale(sum(gamma_vars.begin()->second), 0.0);
  }
  return sum_scalars(terms);
}

void step_schedule(ScalingState& state) {
  SirSchedule& s = state.schedule;
  if (s.t1 <= 0 || s.t2 < 0) throw ConfigError("schedule needs t1 > 0, t2 >= 0");
  const long cap = s.increments_to_cap();
  ++state.iteration;
  if (state.phase == SchedulePhase::Ramping && state.iteration % s.t1 == 0) {
    ++state.increments;
    if (state.increments >= cap) {
      state.alpha = s.tau;
      state.phase = SchedulePhase::Holding;
    } else {
      state.alpha = std::min(s.tau, state.increments * s.delta);
    }
  }
  if (state.phase == SchedulePhase::Holding &&
      state.iteration >= cap * s.t1 + s.t2) {
    state.phase = SchedulePhase::Done;
  }
}

GammaRecord gamma_trajectory_record(const ScalingState& state) {
  GammaRecord r;
  r.iteration = state.iteration;
  r.alpha = state.alpha;
  double pruned = 0.0;
  double kept = 0.0;
  std::size_t np = 0;
  std::size_t nk = 0;
  for (const auto& [id, g] : state.gammas) {
    std::set<int> bad;
    if (auto it = state.unimportant.find(id); it != state.unimportant.end()) {
      bad.insert(it->second.begin(), it->second.end());
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (bad.count(static_cast<int>(i))) {
        pruned += std::abs(g[i]);
        ++np;
      } else {
        kept += std::abs(g[i]);
        ++nk;
      }
    }
  }
  r.mean_gamma_pruned = np ? pruned / np : 0.0;
  r.mean_gamma_kept = nk ? kept / nk : 0.0;
  return r;
}

void write_gamma_csv_header(std::ostream& os) {
  os << "iter,alpha,mean_gamma_pruned,mean_gamma_kept\n";
}

void write_gamma_csv_row(std::ostream& os, const GammaRecord& r) {
  os << r.iteration << ',' << std::setprecision(9) << r.alpha << ','
     << r.mean_gamma_pruned << ',' << r.mean_gamma_kept << '\n';
}

}  // namespace vsrprune
