#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vsrprune/network.hpp"

namespace vsrprune {

struct PrunableUnit {
  std::string layer_id;
  UnitKind kind = UnitKind::OutputFilter;
  int index = 0;
  std::size_t element_count = 0;  // weights covered by the unit

  std::string site() const { return site_id(layer_id, kind); }
  /// Identity order used for tie-breaking: (layer id, kind, index).
  bool operator<(const PrunableUnit& o) const {
    if (layer_id != o.layer_id) return layer_id < o.layer_id;
    if (kind != o.kind) return kind < o.kind;
    return index < o.index;
  }
  bool same_unit(const PrunableUnit& o) const {
    return layer_id == o.layer_id && kind == o.kind && index == o.index;
  }
};

struct Score {
  PrunableUnit unit;
  double value = 0.0;
};

/// Σ|W[k, ...]|, bias excluded.
double score_output_filter(const Kernel& kernel, int k);
/// Σ|W[:, k, ...]|.
double score_input_channel(const Kernel& kernel, int k);
/// Σ|W[4k : 4k+4, ...]|; the kernel must have a multiple of 4 filters.
double score_shuffle_group(const Kernel& kernel, int k);

/// Scores every unit of every prunable site in the spec. Group scores are raw
/// sums unless normalize_groups divides them by 4.
std::vector<Score> score_units(const NetworkSpec& spec, const Weights& weights,
                               bool normalize_groups = false);

enum class Criterion { Min, Max, Rand };
enum class Scope { Global, Local };

struct SelectionPolicy {
  Criterion criterion = Criterion::Min;
  Scope scope = Scope::Global;

  std::string name() const;  // "min-global", "rand-local", ...
  static SelectionPolicy parse(const std::string& text);
  bool operator==(const SelectionPolicy&) const = default;
};

/// Kept and pruned unit indices of one site, both sorted ascending.
struct SitePlan {
  std::string layer_id;
  UnitKind kind = UnitKind::OutputFilter;
  int units = 0;
  std::vector<int> kept;
  std::vector<int> pruned;
};

struct PruningPlan {
  double ratio = 0.0;
  SelectionPolicy policy;
  std::uint64_t seed = 0;
  /// The unimportant set S in selection order.
  std::vector<PrunableUnit> unimportant;
  /// Keyed by site id.
  std::map<std::string, SitePlan> sites;

  bool empty() const { return unimportant.empty(); }
  /// Kept indices of a site; every index when the site is not in the plan.
  std::vector<int> kept(const std::string& site, int units) const;
  std::size_t total_units() const;
};

/// Chooses floor(N·p) unimportant units (per site under Local scope). Each
/// site keeps at least one unit: a candidate that would empty its site is
/// skipped and the next candidate in order takes its place. Ties break on
/// unit identity. Rand draws a uniform order from seed.
PruningPlan select(const std::vector<Score>& scores, double p,
                   SelectionPolicy policy, std::uint64_t seed = 0);

/// Plan that prunes nothing but lists every prunable site of the spec.
PruningPlan empty_plan(const NetworkSpec& spec);

std::string to_json(const PruningPlan& plan);
PruningPlan plan_from_json(const std::string& text);

}  // namespace vsrprune
