#include "vsrprune/experiments.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>

namespace vsrprune {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Only the fields that influence pretraining.
std::string teacher_key(const Profile& p) {
  Profile k = p;
  k.budgets.sparsify = Budgets{}.sparsify;
  k.budgets.finetune = Budgets{}.finetune;
  k.prune = PruneConfig{};
  k.schedule = SirSchedule{};
  k.loss.temporal = true;
  k.cost_height = 1;
  k.cost_width = 1;
  k.name = "";
  return to_json(k);
}

long sparsify_length(const Profile& p) {
  return p.budgets.sparsify < 0 ? p.schedule.done_iteration() : p.budgets.sparsify;
}

PruningPlan merge(PruningPlan a, const PruningPlan& b) {
  for (const auto& [id, sp] : b.sites) a.sites[id] = sp;
  a.unimportant.insert(a.unimportant.end(), b.unimportant.begin(), b.unimportant.end());
  return a;
}

CellResult describe(const std::string& scheme, const SeedContext& ctx,
                    const StageResult& r, double ratio, const std::string& policy) {
  CellResult c;
  c.scheme = scheme;
  c.policy = policy;
  c.ratio = ratio;
  c.seed = ctx.profile.seed;
  c.psnr = r.final_val_psnr;
  c.final_state_error = final_state_error(ctx.teacher, r.spec, r.weights, ctx.data.val);
  const CostReport before = cost(ctx.spec, ctx.profile.data.lr_height, ctx.profile.data.lr_width);
  const CostReport after = cost(r.spec, ctx.profile.data.lr_height, ctx.profile.data.lr_width);
  c.params = after.total_params;
  c.macs = after.total_macs;
  c.macs_fraction = static_cast<double>(after.total_macs) / static_cast<double>(before.total_macs);
  c.params_fraction =
      static_cast<double>(after.total_params) / static_cast<double>(before.total_params);
  c.pruned = r.spec;
  return c;
}

}  // namespace

int worker_threads() {
  if (const char* env = std::getenv("VSRPRUNE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SeedContext prepare_seed(const Profile& profile, std::uint64_t seed,
                         const std::optional<fs::path>& cache_dir) {
  SeedContext ctx;
  ctx.profile = profile;
  ctx.profile.seed = seed;
  ctx.spec = profile_network(ctx.profile);
  ctx.data = make_dataset(ctx.profile.data, seed);

  fs::path cached;
  if (cache_dir) {
    char name[64];
    std::snprintf(name, sizeof name, "teacher-%016llx",
                  static_cast<unsigned long long>(fnv1a(teacher_key(ctx.profile))));
    cached = *cache_dir / name;
    if (fs::exists(cached / "manifest.txt")) {
      ctx.teacher = load_checkpoint(cached);
      ctx.teacher.spec = ctx.spec;  // prune flags follow the current profile
      ctx.teacher_psnr = validation_psnr(ctx.spec, ctx.teacher.weights, nullptr, ctx.data.val);
      return ctx;
    }
  }
  StageInput in;
  in.spec = ctx.spec;
  in.weights = instantiate(ctx.spec, seed);
  StageResult r = run_stage(stage_config(ctx.profile, Stage::Pretrain), std::move(in), ctx.data);
  ctx.teacher = Checkpoint{ctx.spec, std::move(r.weights), std::nullopt};
  ctx.teacher_psnr = r.final_val_psnr;
  if (cache_dir) save_checkpoint(cached, ctx.teacher.spec, ctx.teacher.weights);
  return ctx;
}

NetworkSpec variant_spec(const NetworkSpec& spec, const SslVariant& v) {
  NetworkSpec s = spec;
  apply_prune_scope(s, PruneScope{v.rsc, true, v.rsc, true});
  return s;
}

PruningPlan variant_plan(const NetworkSpec& spec, const Weights& weights,
                         const SslVariant& v, std::uint64_t seed) {
  const NetworkSpec s = variant_spec(spec, v);
  std::vector<Score> scores = score_units(s, weights);
  if (v.shuffle) return select(scores, v.ratio, v.policy, seed);
  std::vector<Score> trunk, head;
  for (const Score& sc : scores) {
    (subnet_of(sc.unit.layer_id) == Subnet::Upsampler ? head : trunk).push_back(sc);
  }
  PruningPlan plan = select(trunk, v.ratio, v.policy, seed);
  SelectionPolicy local = v.policy;
  local.scope = Scope::Local;
  return merge(std::move(plan), select(head, v.ratio, local, seed));
}

CellResult run_ssl_cell(const SeedContext& ctx, const SslVariant& v) {
  const NetworkSpec s = variant_spec(ctx.spec, v);
  const PruningPlan plan = variant_plan(ctx.spec, ctx.teacher.weights, v, ctx.profile.seed);
  ScalingState scaling = prepare_scaling(s, plan, ctx.profile.schedule);
  Weights weights = ctx.teacher.weights;
  if (v.sparsify) {
    StageInput in;
    in.spec = s;
    in.weights = std::move(weights);
    in.scaling = std::move(scaling);
    StageResult r = run_stage(stage_config(ctx.profile, Stage::Sparsify), std::move(in), ctx.data);
    weights = std::move(r.weights);
    scaling = std::move(*r.scaling);
  }
  StageConfig fc = stage_config(ctx.profile, Stage::Finetune);
  fc.use_tf = v.temporal;
  if (!v.sparsify) fc.iterations += sparsify_length(ctx.profile);
  StageInput in;
  in.spec = s;
  in.weights = std::move(weights);
  in.scaling = std::move(scaling);
  in.plan = plan;
  in.teacher = &ctx.teacher;
  const StageResult r = run_stage(fc, std::move(in), ctx.data);
  CellResult c = describe("ssl", ctx, r, v.ratio, v.policy.name());
  c.plan = plan;
  return c;
}

CellResult run_l1_cell(const SeedContext& ctx, double p) {
  StageConfig fc = stage_config(ctx.profile, Stage::Finetune);
  fc.use_tf = false;
  fc.iterations += sparsify_length(ctx.profile);
  NetworkSpec s = ctx.spec;
  apply_prune_scope(s, PruneScope{false, true, false, false});
  const PruningPlan plan = baseline_l1norm_plan(ctx.spec, ctx.teacher.weights, p);
  StageInput in;
  in.spec = s;
  in.weights = ctx.teacher.weights;
  in.plan = plan;
  const StageResult r = run_stage(fc, std::move(in), ctx.data);
  CellResult c = describe("l1norm", ctx, r, p, "min-local");
  c.plan = plan;
  return c;
}

CellResult run_lite_cell(const SeedContext& ctx, double factor) {
  Profile p = ctx.profile;
  p.network = baseline_lite(ctx.profile.network, factor);
  const NetworkSpec spec = profile_network(p);
  StageConfig sc = stage_config(p, Stage::Pretrain);
  sc.iterations = p.budgets.pretrain + sparsify_length(p) + p.budgets.finetune;
  StageInput in;
  in.spec = spec;
  in.weights = instantiate(spec, ctx.profile.seed);
  const StageResult r = run_stage(sc, std::move(in), ctx.data);
  CellResult c;
  c.scheme = "lite";
  c.policy = "-";
  c.ratio = factor;
  c.seed = ctx.profile.seed;
  c.psnr = r.final_val_psnr;
  const CostReport before = cost(ctx.spec, p.data.lr_height, p.data.lr_width);
  const CostReport after = cost(spec, p.data.lr_height, p.data.lr_width);
  c.params = after.total_params;
  c.macs = after.total_macs;
  c.macs_fraction = static_cast<double>(after.total_macs) / static_cast<double>(before.total_macs);
  c.params_fraction =
      static_cast<double>(after.total_params) / static_cast<double>(before.total_params);
  c.pruned = spec;
  c.final_state_error = std::nan("");  // widths differ from the teacher
  return c;
}

double ratio_for_target(const std::function<double(double)>& fraction_at, double target,
                        double max_ratio) {
  double lo = 0.0, hi = max_ratio;
  double best = 0.0;
  double best_gap = std::abs(fraction_at(0.0) - target);
  for (int i = 0; i < 24; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = fraction_at(mid);
    if (std::abs(f - target) < best_gap) {
      best_gap = std::abs(f - target);
      best = mid;
    }
    if (f > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return best;
}

double macs_fraction_of(const NetworkSpec& spec, const Weights& weights,
                        const PruningPlan& plan, int h, int w) {
  const RewriteResult r = compile(spec, weights, nullptr, plan, h, w);
  return static_cast<double>(r.after.total_macs) / static_cast<double>(r.before.total_macs);
}

double params_fraction_of(const NetworkSpec& spec, const Weights& weights,
                          const PruningPlan& plan) {
  const RewriteResult r = compile(spec, weights, nullptr, plan, 1, 1);
  return static_cast<double>(r.after.total_params) / static_cast<double>(r.before.total_params);
}

double final_state_error(const Checkpoint& teacher, const NetworkSpec& spec,
                         const Weights& weights, const std::vector<Sequence>& clips) {
  const Batch b = make_batch(clips);
  const Evaluation ref = evaluate(teacher.spec, teacher.weights,
                                  teacher.scaling ? &*teacher.scaling : nullptr, b);
  const Evaluation cand = evaluate(spec, weights, nullptr, b);
  const HiddenErrorProfile p = hidden_error_profile(ref, cand);
  if (p.backward.empty()) return p.forward.back();
  return 0.5 * (p.forward.back() + p.backward.front());
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ConfigError("spearman: need two equally long series of length >= 2");
  }
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double s = 0.0;
    for (double x : v) s += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(s / static_cast<double>(v.size() - 1));
  }
  return m;
}

void write_layer_ratios(std::ostream& os, const NetworkSpec& spec, const PruningPlan& plan) {
  os << "layer,kind,subnet,units,pruned,ratio\n";
  for (const SiteRef& site : prunable_sites(spec)) {
    auto it = plan.sites.find(site.id());
    const int pruned = it == plan.sites.end() ? 0 : static_cast<int>(it->second.pruned.size());
    os << site.layer_id << ',' << to_string(site.kind) << ',' << to_string(subnet_of(site.layer_id))
       << ',' << site.units << ',' << pruned << ','
       << static_cast<double>(pruned) / site.units << '\n';
  }
}

std::vector<CriteriaRow> criteria_study(const std::vector<SeedContext>& seeds,
                                        const std::vector<double>& ratios,
                                        const std::vector<SelectionPolicy>& policies,
                                        int threads) {
  std::vector<std::function<CellResult()>> tasks;
  for (const SelectionPolicy& pol : policies) {
    for (double p : ratios) {
      for (const SeedContext& ctx : seeds) {
        tasks.push_back([&ctx, pol, p] {
          SslVariant v;
          v.ratio = p;
          v.policy = pol;
          v.temporal = ctx.profile.loss.temporal;
          return run_ssl_cell(ctx, v);
        });
      }
    }
  }
  const auto cells = run_pool(tasks, threads);
  std::vector<CriteriaRow> rows;
  std::size_t k = 0;
  for (const SelectionPolicy& pol : policies) {
    for (double p : ratios) {
      CriteriaRow row{pol.name(), p, {}};
      for (std::size_t s = 0; s < seeds.size(); ++s) row.psnr.push_back(cells[k++].psnr);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string variant_name(const SslVariant& v) {
  std::string n = v.rsc ? "rsc" : "skiplast";
  if (v.shuffle) n += "+shuffle";
  if (v.temporal) n += "+tf";
  return n;
}

std::vector<SslVariant> all_ablation_variants() {
  std::vector<SslVariant> out;
  for (bool rsc : {true, false}) {
    for (bool shuffle : {true, false}) {
      for (bool tf : {true, false}) {
        SslVariant v;
        v.rsc = rsc;
        v.shuffle = shuffle;
        v.temporal = tf;
        out.push_back(v);
      }
    }
  }
  return out;
}

std::vector<AblationRow> ablation_study(const std::vector<SeedContext>& seeds, double ratio,
                                        const std::vector<SslVariant>& variants, int threads) {
  std::vector<std::function<CellResult()>> tasks;
  for (const SslVariant& base : variants) {
    for (const SeedContext& ctx : seeds) {
      tasks.push_back([&ctx, base, ratio] {
        SslVariant v = base;
        v.ratio = ratio;
        if (!v.rsc) {
          // Match the model size of the RSC variant with the same head handling.
          SslVariant ref = v;
          ref.rsc = true;
          const double target = params_fraction_of(
              variant_spec(ctx.spec, ref), ctx.teacher.weights,
              variant_plan(ctx.spec, ctx.teacher.weights, ref, ctx.profile.seed));
          const NetworkSpec s = variant_spec(ctx.spec, v);
          v.ratio = ratio_for_target(
              [&](double p) {
                SslVariant t = v;
                t.ratio = p;
                return params_fraction_of(s, ctx.teacher.weights,
                                          variant_plan(ctx.spec, ctx.teacher.weights, t,
                                                       ctx.profile.seed));
              },
              target);
        }
        return run_ssl_cell(ctx, v);
      });
    }
  }
  const auto cells = run_pool(tasks, threads);
  std::vector<AblationRow> rows;
  std::size_t k = 0;
  for (const SslVariant& v : variants) {
    AblationRow row;
    row.name = variant_name(v);
    row.variant = v;
    row.variant.ratio = ratio;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const CellResult& c = cells[k++];
      row.psnr.push_back(c.psnr);
      row.final_state_error.push_back(c.final_state_error);
      row.params_fraction.push_back(c.params_fraction);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::vector<double> lite_factors(const ReferenceConfig& rc) {
  std::vector<double> out;
  for (int k = 1; k <= 64; ++k) {
    const double f = k / 64.0;
    try {
      baseline_lite(rc, f);
      out.push_back(f);
    } catch (const ConfigError&) {
    }
  }
  return out;
}

}  // namespace

std::vector<SweepRow> sweep_study(const std::vector<SeedContext>& seeds,
                                  const std::vector<double>& targets,
                                  const std::vector<std::string>& schemes, int threads) {
  for (const auto& s : schemes) {
    if (s != "ssl" && s != "l1norm" && s != "lite") {
      throw ConfigError("unknown sweep scheme '" + s + "' (expected ssl, l1norm or lite)");
    }
  }
  std::vector<std::function<CellResult()>> tasks;
  for (const std::string& scheme : schemes) {
    for (double target : targets) {
      for (const SeedContext& ctx : seeds) {
        tasks.push_back([&ctx, scheme, target]() -> CellResult {
          const int h = ctx.profile.data.lr_height;
          const int w = ctx.profile.data.lr_width;
          if (scheme == "ssl") {
            SslVariant v;
            v.policy = ctx.profile.prune.policy;
            v.temporal = ctx.profile.loss.temporal;
            const NetworkSpec s = variant_spec(ctx.spec, v);
            v.ratio = ratio_for_target(
                [&](double p) {
                  SslVariant t = v;
                  t.ratio = p;
                  return macs_fraction_of(
                      s, ctx.teacher.weights,
                      variant_plan(ctx.spec, ctx.teacher.weights, t, ctx.profile.seed), h, w);
                },
                target);
            return run_ssl_cell(ctx, v);
          }
          if (scheme == "l1norm") {
            NetworkSpec s = ctx.spec;
            apply_prune_scope(s, PruneScope{false, true, false, false});
            const double p = ratio_for_target(
                [&](double q) {
                  return macs_fraction_of(s, ctx.teacher.weights,
                                          baseline_l1norm_plan(ctx.spec, ctx.teacher.weights, q),
                                          h, w);
                },
                target);
            return run_l1_cell(ctx, p);
          }
          const CostReport full = cost(ctx.spec, h, w);
          double best = 1.0, gap = 1e9;
          for (double f : lite_factors(ctx.profile.network)) {
            const NetworkSpec s = make_reference_spec(baseline_lite(ctx.profile.network, f));
            const double frac = static_cast<double>(cost(s, h, w).total_macs) /
                                static_cast<double>(full.total_macs);
            if (std::abs(frac - target) < gap) {
              gap = std::abs(frac - target);
              best = f;
            }
          }
          return run_lite_cell(ctx, best);
        });
      }
    }
  }
  const auto cells = run_pool(tasks, threads);
  std::vector<SweepRow> rows;
  std::size_t k = 0;
  for (const std::string& scheme : schemes) {
    for (double target : targets) {
      SweepRow row{scheme, target, {}, {}, {}};
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const CellResult& c = cells[k++];
        row.psnr.push_back(c.psnr);
        row.macs_fraction.push_back(c.macs_fraction);
        row.params.push_back(static_cast<double>(c.params));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

AccumulationResult error_accumulation(const SeedContext& ctx, double ratio, int frames) {
  const PruningPlan plan = make_plan(ctx.spec, ctx.teacher.weights, ratio,
                                     SelectionPolicy{Criterion::Min, Scope::Global},
                                     ctx.profile.seed);
  const RewriteResult pruned = compile(ctx.spec, ctx.teacher.weights, nullptr, plan);
  SynthConfig sc;
  sc.frames = frames;
  sc.hr_height = 4 * ctx.profile.data.lr_height;
  sc.hr_width = 4 * ctx.profile.data.lr_width;
  sc.motion_range = ctx.profile.data.motion_range;
  sc.degradation.kind = ctx.profile.data.degradation;
  std::vector<Sequence> clips;
  for (int i = 0; i < ctx.profile.data.val_clips; ++i) {
    clips.push_back(synth_sequence(ctx.profile.seed * 1000003ULL + 900000ULL + i, sc));
  }
  const Batch b = make_batch(clips);
  const Evaluation ref = evaluate(ctx.teacher.spec, ctx.teacher.weights, nullptr, b);
  const Evaluation cand = evaluate(pruned.spec, pruned.weights, nullptr, b);
  const HiddenErrorProfile p = hidden_error_profile(ref, cand);
  AccumulationResult r;
  r.seed = ctx.profile.seed;
  r.forward = p.forward;
  r.backward = p.backward;
  std::vector<double> t(p.forward.size());
  std::iota(t.begin(), t.end(), 1.0);
  r.rho = spearman(t, p.forward);
  return r;
}

}  // namespace vsrprune
