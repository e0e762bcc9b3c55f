// Command-line front end: one subcommand per pipeline stage or study.
#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vsrprune/checkpoint.hpp"
#include "vsrprune/cost.hpp"
#include "vsrprune/data.hpp"
#include "vsrprune/experiments.hpp"
#include "vsrprune/image_io.hpp"
#include "vsrprune/pipeline.hpp"

namespace fs = std::filesystem;
using namespace vsrprune;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string seeds;  // multi-seed commands
  std::string cache;
  int threads = 0;
};

Profile resolve_profile(const Common& c) {
  Profile p = c.config.empty() ? Profile{} : load_profile(c.config);
  if (c.seed) p.seed = *c.seed;
  return p;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text, std::uint64_t fallback) {
  if (text.empty()) return {fallback};
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--seeds lists no seeds");
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad value '" + item + "' for " + flag);
    }
  }
  if (out.empty()) throw ConfigError(flag + " lists no values");
  return out;
}

std::vector<std::string> parse_words(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

/// Creates the output directory and echoes the resolved profile.
fs::path prepare_out(const Common& c, const Profile& p) {
  fs::path out(c.out);
  fs::create_directories(out);
  open_out(out / "config.json") << to_json(p) << "\n";
  return out;
}

int threads_of(const Common& c) { return c.threads > 0 ? c.threads : worker_threads(); }

std::optional<fs::path> cache_of(const Common& c) {
  if (c.cache.empty()) return std::nullopt;
  return fs::path(c.cache);
}

void add_common(CLI::App* sub, Common& c, bool multi_seed) {
  sub->add_option("--config", c.config, "profile JSON (built-in toy profile when omitted)")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "overrides the profile seed");
  sub->add_option("--out", c.out, "output directory")->envname("VSRPRUNE_OUT")->capture_default_str();
  if (multi_seed) {
    sub->add_option("--seeds", c.seeds, "comma-separated seeds (default: the profile seed)");
    sub->add_option("--cache", c.cache, "directory for pretrained teachers");
    sub->add_option("--threads", c.threads, "worker threads (default: VSRPRUNE_THREADS or all cores)");
  }
}

void print_psnr_line(std::ostream& os, const std::string& label, const std::vector<double>& v) {
  const MeanStd ms = mean_std(v);
  os << std::left << std::setw(28) << label << std::right << std::fixed << std::setprecision(3)
     << ms.mean << " ± " << ms.std << " dB  (n=" << v.size() << ")\n";
}

// ---------------------------------------------------------------------------

void cmd_pretrain(const Common& c) {
  const Profile p = resolve_profile(c);
  const fs::path out = prepare_out(c, p);
  const NetworkSpec spec = profile_network(p);
  const Dataset data = make_dataset(p.data, p.seed);
  StageInput in{spec, instantiate(spec, p.seed), std::nullopt, std::nullopt, nullptr};
  auto log = open_out(out / "log.csv");
  const StageResult r = run_stage(stage_config(p, Stage::Pretrain), std::move(in), data, &log);
  save_checkpoint(out / "checkpoint", r.spec, r.weights);
  auto summary = open_out(out / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    *os << "pretrain: " << r.log.size() << " iterations, params " << parameter_count(r.weights)
        << ", val PSNR " << std::fixed << std::setprecision(3) << r.final_val_psnr << " dB\n";
  }
}

void write_plan_outputs(const fs::path& out, const NetworkSpec& spec, const PruningPlan& plan) {
  open_out(out / "plan.json") << to_json(plan) << "\n";
  auto ratios = open_out(out / "layer_ratios.csv");
  write_layer_ratios(ratios, spec, plan);
}

void cmd_sparsify(const Common& c, const std::string& checkpoint,
                  std::optional<double> ratio, const std::string& policy) {
  Profile p = resolve_profile(c);
  if (ratio) p.prune.ratio = *ratio;
  if (!policy.empty()) p.prune.policy = SelectionPolicy::parse(policy);
  const fs::path out = prepare_out(c, p);
  Checkpoint ck = load_checkpoint(checkpoint);
  NetworkSpec spec = ck.spec;
  apply_prune_scope(spec, p.prune.scope);
  const PruningPlan plan =
      make_plan(spec, ck.weights, p.prune.ratio, p.prune.policy, p.seed, p.prune.normalize_groups);
  write_plan_outputs(out, spec, plan);
  const Dataset data = make_dataset(p.data, p.seed);
  StageInput in{spec, ck.weights, prepare_scaling(spec, plan, p.schedule), std::nullopt, nullptr};
  auto log = open_out(out / "log.csv");
  const StageResult r = run_stage(stage_config(p, Stage::Sparsify), std::move(in), data, &log);
  auto gamma = open_out(out / "gamma.csv");
  write_gamma_csv_header(gamma);
  for (const GammaRecord& g : r.gamma_log) write_gamma_csv_row(gamma, g);
  save_checkpoint(out / "checkpoint", r.spec, r.weights, r.scaling ? &*r.scaling : nullptr);
  auto summary = open_out(out / "summary.txt");
  const GammaRecord last = r.gamma_log.empty() ? GammaRecord{} : r.gamma_log.back();
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    *os << "sparsify: " << plan.unimportant.size() << " of " << plan.total_units()
        << " units regularized (" << plan.policy.name() << ", p=" << p.prune.ratio << ")\n"
        << "iterations " << r.log.size() << ", final alpha " << last.alpha
        << ", mean |gamma| pruned " << last.mean_gamma_pruned << " kept " << last.mean_gamma_kept
        << "\nval PSNR " << std::fixed << std::setprecision(3) << r.final_val_psnr << " dB\n";
  }
}

void write_cost_files(const fs::path& out, const std::string& stem, const CostReport& r) {
  auto csv = open_out(out / (stem + ".csv"));
  write_cost_csv(csv, r);
}

void cmd_prune(const Common& c, const std::string& checkpoint, std::optional<double> ratio,
               const std::string& policy, const std::string& plan_file) {
  Profile p = resolve_profile(c);
  if (ratio) p.prune.ratio = *ratio;
  if (!policy.empty()) p.prune.policy = SelectionPolicy::parse(policy);
  const fs::path out = prepare_out(c, p);
  Checkpoint ck = load_checkpoint(checkpoint);
  NetworkSpec spec = ck.spec;
  PruningPlan plan;
  if (!plan_file.empty()) {
    std::ifstream is(plan_file);
    if (!is) throw IoError("cannot read " + plan_file);
    std::stringstream ss;
    ss << is.rdbuf();
    plan = plan_from_json(ss.str());
  } else if (ck.scaling && !ratio && policy.empty()) {
    plan = plan_from_scaling(spec, *ck.scaling);
  } else {
    apply_prune_scope(spec, p.prune.scope);
    plan = make_plan(spec, ck.weights, p.prune.ratio, p.prune.policy, p.seed,
                     p.prune.normalize_groups);
  }
  write_plan_outputs(out, spec, plan);
  const RewriteResult r = compile(spec, ck.weights, ck.scaling ? &*ck.scaling : nullptr, plan,
                                  p.cost_height, p.cost_width);
  save_checkpoint(out / "checkpoint", r.spec, r.weights);
  auto folds = open_out(out / "fold_report.csv");
  write_fold_report(folds, r);
  write_cost_files(out, "cost_before", r.before);
  write_cost_files(out, "cost_after", r.after);
  auto summary = open_out(out / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    *os << "pruned " << plan.unimportant.size() << " of " << plan.total_units() << " units\n"
        << "params " << r.before.total_params << " -> " << r.after.total_params << "\n"
        << "MACs/frame at " << p.cost_height << "x" << p.cost_width << ": " << r.before.total_macs
        << " -> " << r.after.total_macs << " (" << std::fixed << std::setprecision(3)
        << static_cast<double>(r.after.total_macs) / static_cast<double>(r.before.total_macs)
        << ")\n";
  }
}

void cmd_finetune(const Common& c, const std::string& checkpoint, const std::string& teacher_dir) {
  const Profile p = resolve_profile(c);
  const fs::path out = prepare_out(c, p);
  Checkpoint ck = load_checkpoint(checkpoint);
  std::optional<Checkpoint> teacher;
  if (!teacher_dir.empty()) teacher = load_checkpoint(teacher_dir);
  if (p.loss.temporal && !teacher) {
    throw ConfigError("temporal finetuning is on (loss.temporal) but no --teacher was given");
  }
  StageInput in{ck.spec, ck.weights, ck.scaling, std::nullopt, teacher ? &*teacher : nullptr};
  // A sparsified checkpoint is compiled by its own regularized set first.
  if (ck.scaling) in.plan = plan_from_scaling(ck.spec, *ck.scaling);
  const Dataset data = make_dataset(p.data, p.seed);
  auto log = open_out(out / "log.csv");
  const StageResult r = run_stage(stage_config(p, Stage::Finetune), std::move(in), data, &log);
  save_checkpoint(out / "checkpoint", r.spec, r.weights);
  if (r.rewrite) {
    auto folds = open_out(out / "fold_report.csv");
    write_fold_report(folds, *r.rewrite);
  }
  auto summary = open_out(out / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    *os << "finetune: " << r.log.size() << " iterations, params " << parameter_count(r.weights)
        << ", val PSNR " << std::fixed << std::setprecision(3) << r.final_val_psnr << " dB\n";
  }
}

void cmd_eval(const Common& c, const std::string& checkpoint, const std::string& data_dir,
              bool save_frames_flag) {
  const Profile p = resolve_profile(c);
  const fs::path out = prepare_out(c, p);
  const Checkpoint ck = load_checkpoint(checkpoint);
  std::vector<std::pair<std::string, Sequence>> clips;
  if (!data_dir.empty()) {
    clips.emplace_back(fs::path(data_dir).filename().string(), load_sequence(data_dir));
  } else {
    const Dataset data = make_dataset(p.data, p.seed);
    for (std::size_t i = 0; i < data.val.size(); ++i) {
      clips.emplace_back("val" + std::to_string(i), data.val[i]);
    }
  }
  auto csv = open_out(out / "eval.csv");
  csv << "clip,frame,psnr,ssim\n";
  std::vector<double> all_psnr, all_ssim;
  for (const auto& [name, seq] : clips) {
    if (seq.hr.empty()) throw ConfigError("clip " + name + " has no HR frames to compare against");
    const Evaluation ev = evaluate(ck.spec, ck.weights, ck.scaling ? &*ck.scaling : nullptr,
                                   make_batch({seq}));
    for (int t = 0; t < seq.length(); ++t) {
      const double ps = psnr(ev.sr[t], seq.hr[t]);
      const double ss = ssim(ev.sr[t], seq.hr[t]);
      all_psnr.push_back(ps);
      all_ssim.push_back(ss);
      csv << name << "," << t << "," << std::setprecision(9) << ps << "," << ss << "\n";
    }
    if (save_frames_flag) save_frames(out / "frames" / name, ev.sr, {});
  }
  auto summary = open_out(out / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    *os << "frames " << all_psnr.size() << "\n";
    print_psnr_line(*os, "PSNR", all_psnr);
    *os << "SSIM " << std::fixed << std::setprecision(4) << mean_std(all_ssim).mean << "\n";
  }
}

void cmd_cost(const Common& c, const std::string& checkpoint, std::optional<int> h,
              std::optional<int> w) {
  const Profile p = resolve_profile(c);
  const fs::path out = prepare_out(c, p);
  const NetworkSpec spec = checkpoint.empty() ? profile_network(p) : load_checkpoint(checkpoint).spec;
  const CostReport r = cost(spec, h.value_or(p.cost_height), w.value_or(p.cost_width));
  write_cost_files(out, "cost", r);
  auto summary = open_out(out / "summary.txt");
  write_cost_summary(summary, r);
  write_cost_summary(std::cout, r);
}

std::vector<SeedContext> prepare_seeds(const Common& c, const Profile& p) {
  const auto seeds = parse_seeds(c.seeds, p.seed);
  const auto cache = cache_of(c);
  std::vector<std::function<SeedContext()>> tasks;
  for (std::uint64_t s : seeds) tasks.push_back([&p, s, &cache] { return prepare_seed(p, s, cache); });
  return run_pool(tasks, threads_of(c));
}

void cmd_criteria(const Common& c, const std::string& ratios_text, const std::string& policies_text) {
  const Profile p = resolve_profile(c);
  const fs::path out = prepare_out(c, p);
  const auto ratios = parse_doubles(ratios_text, "--ratios");
  std::vector<SelectionPolicy> policies;
  for (const auto& w : parse_words(policies_text)) policies.push_back(SelectionPolicy::parse(w));
  const auto seeds = prepare_seeds(c, p);
  const auto rows = criteria_study(seeds, ratios, policies, threads_of(c));
  auto csv = open_out(out / "criteria.csv");
  csv << "policy,ratio,seed,psnr\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.psnr.size(); ++i) {
      csv << r.policy << "," << r.ratio << "," << seeds[i].profile.seed << ","
          << std::setprecision(9) << r.psnr[i] << "\n";
    }
  }
  // Per-layer pruned fractions of the min-global plan on the first seed.
  const SelectionPolicy mg{Criterion::Min, Scope::Global};
  for (double ratio : ratios) {
    const PruningPlan plan = make_plan(seeds[0].spec, seeds[0].teacher.weights, ratio, mg,
                                       seeds[0].profile.seed, p.prune.normalize_groups);
    std::ostringstream name;
    name << "layer_ratios_p" << ratio << ".csv";
    auto os = open_out(out / name.str());
    write_layer_ratios(os, seeds[0].spec, plan);
  }
  auto summary = open_out(out / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    std::vector<double> teacher;
    for (const auto& s : seeds) teacher.push_back(s.teacher_psnr);
    print_psnr_line(*os, "unpruned", teacher);
    for (const auto& r : rows) {
      std::ostringstream label;
      label << r.policy << " p=" << r.ratio;
      print_psnr_line(*os, label.str(), r.psnr);
    }
  }
}

void cmd_ablate(const Common& c, std::optional<double> ratio) {
  Profile p = resolve_profile(c);
  if (ratio) p.prune.ratio = *ratio;
  const fs::path out = prepare_out(c, p);
  const auto seeds = prepare_seeds(c, p);
  const auto rows = ablation_study(seeds, p.prune.ratio, all_ablation_variants(), threads_of(c));
  auto csv = open_out(out / "ablation.csv");
  csv << "variant,seed,psnr,final_state_error,params_fraction\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.psnr.size(); ++i) {
      csv << r.name << "," << seeds[i].profile.seed << "," << std::setprecision(9) << r.psnr[i]
          << "," << r.final_state_error[i] << "," << r.params_fraction[i] << "\n";
    }
  }
  auto summary = open_out(out / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    for (const auto& r : rows) print_psnr_line(*os, r.name, r.psnr);
  }
}

void cmd_sweep(const Common& c, const std::string& targets_text, const std::string& schemes_text) {
  const Profile p = resolve_profile(c);
  const fs::path out = prepare_out(c, p);
  const auto targets = parse_doubles(targets_text, "--targets");
  const auto schemes = parse_words(schemes_text);
  for (const auto& s : schemes) {
    if (s != "ssl" && s != "l1norm" && s != "lite") throw ConfigError("unknown scheme '" + s + "'");
  }
  const auto seeds = prepare_seeds(c, p);
  const auto rows = sweep_study(seeds, targets, schemes, threads_of(c));
  auto csv = open_out(out / "sweep.csv");
  csv << "scheme,target,seed,psnr,macs_fraction,params\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.psnr.size(); ++i) {
      csv << r.scheme << "," << r.target << "," << seeds[i].profile.seed << ","
          << std::setprecision(9) << r.psnr[i] << "," << r.macs_fraction[i] << ","
          << static_cast<long long>(r.params[i]) << "\n";
    }
  }
  auto summary = open_out(out / "summary.txt");
  for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
    for (const auto& r : rows) {
      std::ostringstream label;
      label << r.scheme << " macs~" << r.target;
      print_psnr_line(*os, label.str(), r.psnr);
    }
  }
}

void cmd_accumulate(const Common& c, std::optional<double> ratio, int frames) {
  Profile p = resolve_profile(c);
  if (ratio) p.prune.ratio = *ratio;
  const fs::path out = prepare_out(c, p);
  const auto seeds = prepare_seeds(c, p);
  auto csv = open_out(out / "error_accumulation.csv");
  csv << "seed,t,e_forward,e_backward\n";
  auto summary = open_out(out / "summary.txt");
  for (const auto& s : seeds) {
    const AccumulationResult r = error_accumulation(s, p.prune.ratio, frames);
    for (std::size_t t = 0; t < r.forward.size(); ++t) {
      csv << r.seed << "," << t << "," << std::setprecision(9) << r.forward[t] << ","
          << (t < r.backward.size() ? r.backward[t] : 0.0) << "\n";
    }
    for (std::ostream* os : {static_cast<std::ostream*>(&std::cout), static_cast<std::ostream*>(&summary)}) {
      *os << "seed " << r.seed << ": spearman(t, e_t) = " << std::fixed << std::setprecision(3)
          << r.rho << "\n";
    }
  }
}

void cmd_synth(const Common& c, int clips, std::optional<int> frames, std::optional<int> size) {
  Profile p = resolve_profile(c);
  const fs::path out = prepare_out(c, p);
  SynthConfig sc;
  sc.frames = frames.value_or(p.data.val_frames);
  sc.hr_height = size.value_or(p.data.lr_height) * sc.degradation.factor;
  sc.hr_width = size.value_or(p.data.lr_width) * sc.degradation.factor;
  sc.motion_range = p.data.motion_range;
  sc.degradation.kind = p.data.degradation;
  for (int i = 0; i < clips; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clip%03d", i);
    save_sequence(out / name, synth_sequence(p.seed * 1000003ULL + static_cast<std::uint64_t>(i), sc));
  }
  std::cout << "wrote " << clips << " clips of " << sc.frames << " frames to " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured pruning for recurrent video super-resolution networks"};
  app.require_subcommand(1);
  Common c;

  auto* pretrain = app.add_subcommand("pretrain", "train the dense network");
  add_common(pretrain, c, false);

  std::string checkpoint, teacher, plan_file, policy, data_dir;
  std::optional<double> ratio;
  auto* sparsify = app.add_subcommand("sparsify", "score, select and run the SIR stage");
  add_common(sparsify, c, false);
  sparsify->add_option("--checkpoint", checkpoint, "pretrained checkpoint directory")->required();
  sparsify->add_option("--ratio", ratio, "pruning ratio p");
  sparsify->add_option("--policy", policy, "min|max|rand - global|local");

  auto* prune = app.add_subcommand("prune", "compile a checkpoint into a narrower network");
  add_common(prune, c, false);
  prune->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  prune->add_option("--ratio", ratio, "pruning ratio p (re-scores the weights)");
  prune->add_option("--policy", policy, "selection policy (re-scores the weights)");
  prune->add_option("--plan", plan_file, "plan JSON written by sparsify or prune");

  auto* finetune = app.add_subcommand("finetune", "finetune a pruned or sparsified checkpoint");
  add_common(finetune, c, false);
  finetune->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  finetune->add_option("--teacher", teacher, "frozen teacher checkpoint for the temporal loss");

  bool save_frames_flag = false;
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM of a checkpoint");
  add_common(eval, c, false);
  eval->add_option("--checkpoint", checkpoint, "checkpoint directory")->required();
  eval->add_option("--data", data_dir, "sequence directory with lr/ and hr/ (default: synthetic validation clips)");
  eval->add_flag("--save-frames", save_frames_flag, "write the SR frames as PNG");

  std::optional<int> height, width;
  auto* costc = app.add_subcommand("cost", "params and MACs per layer");
  add_common(costc, c, false);
  costc->add_option("--checkpoint", checkpoint, "checkpoint directory (default: the profile network)");
  costc->add_option("--height", height, "LR height");
  costc->add_option("--width", width, "LR width");

  std::string ratios_text = "0.3,0.5,0.7";
  std::string policies_text = "min-global,min-local,max-global,max-local,rand-global,rand-local";
  auto* criteria = app.add_subcommand("criteria", "compare selection policies");
  add_common(criteria, c, true);
  criteria->add_option("--ratios", ratios_text)->capture_default_str();
  criteria->add_option("--policies", policies_text)->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "RSC / shuffle grouping / temporal loss ablation");
  add_common(ablate, c, true);
  ablate->add_option("--ratio", ratio, "pruning ratio of the RSC variants");

  std::string targets_text = "0.75,0.5", schemes_text = "ssl,l1norm,lite";
  auto* sweep = app.add_subcommand("sweep", "SSL against the baselines at matched MACs");
  add_common(sweep, c, true);
  sweep->add_option("--targets", targets_text, "MACs fractions")->capture_default_str();
  sweep->add_option("--schemes", schemes_text)->capture_default_str();

  int frames_acc = 10;
  auto* accumulate = app.add_subcommand("accumulate", "hidden-state error over time after pruning");
  add_common(accumulate, c, true);
  accumulate->add_option("--ratio", ratio, "pruning ratio");
  accumulate->add_option("--frames", frames_acc)->capture_default_str();

  int clips = 4;
  std::optional<int> frames, size;
  auto* synth = app.add_subcommand("synth", "write synthetic sequences as PNG");
  add_common(synth, c, false);
  synth->add_option("--clips", clips)->capture_default_str();
  synth->add_option("--frames", frames);
  synth->add_option("--size", size, "LR edge length");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*pretrain) cmd_pretrain(c);
    else if (*sparsify) cmd_sparsify(c, checkpoint, ratio, policy);
    else if (*prune) cmd_prune(c, checkpoint, ratio, policy, plan_file);
    else if (*finetune) cmd_finetune(c, checkpoint, teacher);
    else if (*eval) cmd_eval(c, checkpoint, data_dir, save_frames_flag);
    else if (*costc) cmd_cost(c, checkpoint, height, width);
    else if (*criteria) cmd_criteria(c, ratios_text, policies_text);
    else if (*ablate) cmd_ablate(c, ratio);
    else if (*sweep) cmd_sweep(c, targets_text, schemes_text);
    else if (*accumulate) cmd_accumulate(c, ratio, frames_acc);
    else if (*synth) cmd_synth(c, clips, frames, size);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
