#include "vsrprune/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>
#include <set>

namespace vsrprune {

using nlohmann::json;

namespace {

void check_index(const char* what, int k, int limit) {
  if (k < 0 || k >= limit) {
    throw ShapeError(std::string(what) + ": index " + std::to_string(k) +
                     " outside [0, " + std::to_string(limit) + ")");
  }
}

UnitKind unit_kind_from(const std::string& s) {
  if (s == "out") return UnitKind::OutputFilter;
  if (s == "in") return UnitKind::InputChannel;
  if (s == "group") return UnitKind::ShuffleGroup;
  throw ConfigError("unknown unit kind '" + s + "'");
}

}  // namespace

double score_output_filter(const Kernel& kernel, int k) {
  const Shape s = kernel.weight.shape();
  check_index("score_output_filter", k, s.n);
  const std::size_t len = static_cast<std::size_t>(s.c) * s.h * s.w;
  const float* w = kernel.weight.data() + k * len;
  double total = 0.0;
  for (std::size_t i = 0; i < len; ++i) total += std::abs(w[i]);
  return total;
}

double score_input_channel(const Kernel& kernel, int k) {
  const Shape s = kernel.weight.shape();
  check_index("score_input_channel", k, s.c);
  double total = 0.0;
  for (int o = 0; o < s.n; ++o) {
    const float* w = kernel.weight.data() + kernel.weight.offset(o, k, 0, 0);
    for (std::size_t i = 0; i < s.plane(); ++i) total += std::abs(w[i]);
  }
  return total;
}

double score_shuffle_group(const Kernel& kernel, int k) {
  const Shape s = kernel.weight.shape();
  if (s.n % 4 != 0) {
    throw ShapeError("score_shuffle_group: " + std::to_string(s.n) +
                     " filters are not divisible into groups of 4");
  }
  check_index("score_shuffle_group", k, s.n / 4);
  double total = 0.0;
  for (int f = 4 * k; f < 4 * k + 4; ++f) total += score_output_filter(kernel, f);
  return total;
}

std::vector<Score> score_units(const NetworkSpec& spec, const Weights& weights,
                               bool normalize_groups) {
  std::vector<Score> scores;
  for (const SiteRef& site : prunable_sites(spec)) {
    const auto it = weights.find(site.layer_id);
    if (it == weights.end()) throw ShapeError(site.layer_id + ": missing weights");
    const Kernel& k = it->second;
    const Shape s = k.weight.shape();
    for (int i = 0; i < site.units; ++i) {
      Score sc;
      sc.unit.layer_id = site.layer_id;
      sc.unit.kind = site.kind;
      sc.unit.index = i;
      switch (site.kind) {
        case UnitKind::OutputFilter:
          sc.value = score_output_filter(k, i);
          sc.unit.element_count = static_cast<std::size_t>(s.c) * s.plane();
          break;
        case UnitKind::InputChannel:
          sc.value = score_input_channel(k, i);
          sc.unit.element_count = static_cast<std::size_t>(s.n) * s.plane();
          break;
        case UnitKind::ShuffleGroup:
          sc.value = score_shuffle_group(k, i);
          if (normalize_groups) sc.value /= 4.0;
          sc.unit.element_count = 4 * static_cast<std::size_t>(s.c) * s.plane();
          break;
      }
      scores.push_back(std::move(sc));
    }
  }
  return scores;
}

std::string SelectionPolicy::name() const {
  const char* c = criterion == Criterion::Min   ? "min"
                  : criterion == Criterion::Max ? "max"
                                                : "rand";
  return std::string(c) + (scope == Scope::Global ? "-global" : "-local");
}

SelectionPolicy SelectionPolicy::parse(const std::string& text) {
  SelectionPolicy p;
  std::string crit = text;
  std::string scope = "global";
  if (auto dash = text.find('-'); dash != std::string::npos) {
    crit = text.substr(0, dash);
    scope = text.substr(dash + 1);
  }
  if (crit == "min") p.criterion = Criterion::Min;
  else if (crit == "max") p.criterion = Criterion::Max;
  else if (crit == "rand") p.criterion = Criterion::Rand;
  else throw ConfigError("unknown selection criterion '" + crit + "'");
  if (scope == "global") p.scope = Scope::Global;
  else if (scope == "local") p.scope = Scope::Local;
  else throw ConfigError("unknown selection scope '" + scope + "'");
  return p;
}

std::vector<int> PruningPlan::kept(const std::string& site, int units) const {
  auto it = sites.find(site);
  if (it == sites.end()) {
    std::vector<int> all(static_cast<std::size_t>(units));
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  if (it->second.units != units) {
    throw ShapeError("plan site " + site + " covers " +
                     std::to_string(it->second.units) + " units, layer has " +
                     std::to_string(units));
  }
  return it->second.kept;
}

std::size_t PruningPlan::total_units() const {
  std::size_t n = 0;
  for (const auto& [id, s] : sites) n += static_cast<std::size_t>(s.units);
  return n;
}

PruningPlan select(const std::vector<Score>& scores, double p,
                   SelectionPolicy policy, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("pruning ratio must lie in [0, 1), got " +
                      std::to_string(p));
  }
  // Order candidates.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a].unit < scores[b].unit;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (scores[order[i]].unit.same_unit(scores[order[i - 1]].unit)) {
      throw ConfigError("duplicate unit " + scores[order[i]].unit.site() + "[" +
                        std::to_string(scores[order[i]].unit.index) + "]");
    }
  }
  switch (policy.criterion) {
    case Criterion::Min:
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return scores[a].value < scores[b].value;
      });
      break;
    case Criterion::Max:
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        return scores[a].value > scores[b].value;
      });
      break;
    case Criterion::Rand: {
      std::mt19937_64 rng(seed);
      std::shuffle(order.begin(), order.end(), rng);
      break;
    }
  }

  PruningPlan plan;
  plan.ratio = p;
  plan.policy = policy;
  plan.seed = seed;
  std::map<std::string, int> budget;  // per-site prune allowance
  std::map<std::string, int> taken;
  for (const Score& s : scores) {
    SitePlan& sp = plan.sites[s.unit.site()];
    sp.layer_id = s.unit.layer_id;
    sp.kind = s.unit.kind;
    sp.units += 1;
  }
  for (auto& [id, sp] : plan.sites) {
    taken[id] = 0;
    budget[id] = policy.scope == Scope::Local
                     ? std::min(static_cast<int>(std::floor(sp.units * p)),
                                sp.units - 1)
                     : sp.units - 1;
  }
  const std::size_t global_target =
      static_cast<std::size_t>(std::floor(static_cast<double>(scores.size()) * p));

  std::vector<char> chosen(scores.size(), 0);
  std::size_t count = 0;
  for (std::size_t idx : order) {
    if (policy.scope == Scope::Global && count >= global_target) break;
    const std::string site = scores[idx].unit.site();
    if (taken[site] >= budget[site]) continue;  // keep-one floor / local quota
    ++taken[site];
    chosen[idx] = 1;
    plan.unimportant.push_back(scores[idx].unit);
    ++count;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    SitePlan& sp = plan.sites[scores[i].unit.site()];
    (chosen[i] ? sp.pruned : sp.kept).push_back(scores[i].unit.index);
  }
  for (auto& [id, sp] : plan.sites) {
    std::sort(sp.kept.begin(), sp.kept.end());
    std::sort(sp.pruned.begin(), sp.pruned.end());
  }
  return plan;
}

PruningPlan empty_plan(const NetworkSpec& spec) {
  PruningPlan plan;
  for (const SiteRef& s : prunable_sites(spec)) {
    SitePlan sp;
    sp.layer_id = s.layer_id;
    sp.kind = s.kind;
    sp.units = s.units;
    for (int i = 0; i < s.units; ++i) sp.kept.push_back(i);
    plan.sites.emplace(s.id(), std::move(sp));
  }
  return plan;
}

std::string to_json(const PruningPlan& plan) {
  json sites = json::object();
  for (const auto& [id, sp] : plan.sites) {
    sites[id] = {{"layer", sp.layer_id},
                 {"kind", to_string(sp.kind)},
                 {"units", sp.units},
                 {"kept", sp.kept},
                 {"pruned", sp.pruned}};
  }
  json unimportant = json::array();
  for (const auto& u : plan.unimportant) {
    unimportant.push_back({u.layer_id, to_string(u.kind), u.index});
  }
  json j{{"ratio", plan.ratio},
         {"policy", plan.policy.name()},
         {"seed", plan.seed},
         {"unimportant", unimportant},
         {"sites", sites}};
  return j.dump(2);
}

PruningPlan plan_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    PruningPlan plan;
    plan.ratio = j.at("ratio").get<double>();
    plan.policy = SelectionPolicy::parse(j.at("policy").get<std::string>());
    plan.seed = j.value("seed", std::uint64_t{0});
    for (const auto& u : j.at("unimportant")) {
      PrunableUnit unit;
      unit.layer_id = u.at(0).get<std::string>();
      unit.kind = unit_kind_from(u.at(1).get<std::string>());
      unit.index = u.at(2).get<int>();
      plan.unimportant.push_back(std::move(unit));
    }
    for (const auto& [id, s] : j.at("sites").items()) {
      SitePlan sp;
      sp.layer_id = s.at("layer").get<std::string>();
      sp.kind = unit_kind_from(s.at("kind").get<std::string>());
      sp.units = s.at("units").get<int>();
      sp.kept = s.at("kept").get<std::vector<int>>();
      sp.pruned = s.at("pruned").get<std::vector<int>>();
      if (sp.kept.size() + sp.pruned.size() != static_cast<std::size_t>(sp.units)) {
        throw ConfigError("plan site " + id + ": kept + pruned != units");
      }
      plan.sites.emplace(id, std::move(sp));
    }
    return plan;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("pruning plan: ") + e.what());
  }
}

}  // namespace vsrprune
