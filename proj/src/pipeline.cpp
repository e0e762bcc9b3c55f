#include "vsrprune/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vsrprune/optim.hpp"

namespace vsrprune {

using nlohmann::json;

namespace {

// Strict reader over one JSON object: every key must be consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config key '" + name() + "' must be an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_integer()) throw ConfigError("");
      }
      out = it->template get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + qualified(key) + "' has the wrong type");
    }
  }

  std::optional<Section> child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, qualified(key));
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown config key '" + qualified(it.key()) + "'");
      }
    }
  }

 private:
  std::string name() const { return path_.empty() ? "<root>" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "' " + what);
}

Tensor stack_items(const std::vector<const Tensor*>& items) {
  const Shape s = items.front()->shape();
  Tensor out(Shape{static_cast<int>(items.size()), s.c, s.h, s.w});
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!(items[i]->shape() == s)) throw ShapeError("teacher states differ in extent");
    std::copy_n(items[i]->data(), items[i]->size(), out.data() + i * items[i]->size());
  }
  return out;
}

Tensor item(const Tensor& t, int n) {
  const Shape s = t.shape();
  Tensor out(Shape{1, s.c, s.h, s.w});
  std::copy_n(t.data() + static_cast<std::size_t>(n) * out.size(), out.size(), out.data());
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(9) << v;
  return os.str();
}

}  // namespace

const char* to_string(Stage s) {
  switch (s) {
    case Stage::Pretrain: return "pretrain";
    case Stage::Sparsify: return "sparsify";
    case Stage::Finetune: return "finetune";
  }
  return "?";
}

Stage parse_stage(const std::string& text) {
  if (text == "pretrain") return Stage::Pretrain;
  if (text == "sparsify") return Stage::Sparsify;
  if (text == "finetune") return Stage::Finetune;
  throw ConfigError("unknown stage '" + text + "'");
}

Profile profile_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Profile p;
  Section root(j, "");
  root.read("name", p.name);
  root.read("seed", p.seed);
  root.read("val_every", p.val_every);
  if (auto s = root.child("network")) {
    ReferenceConfig& n = p.network;
    s->read("trunk_width", n.trunk_width);
    s->read("blocks_per_direction", n.blocks_per_direction);
    s->read("head_width", n.head_width);
    s->read("hr_width", n.hr_width);
    s->read("bidirectional", n.bidirectional);
    s->read("bias", n.bias);
    s->read("activation_slope", n.activation_slope);
    s->finish();
  }
  if (auto s = root.child("data")) {
    DataConfig& d = p.data;
    std::string deg = to_string(d.degradation);
    s->read("degradation", deg);
    try {
      d.degradation = parse_degradation(deg);
    } catch (const ConfigError&) {
      throw ConfigError("config key 'data.degradation' must be BI or BD");
    }
    s->read("lr_height", d.lr_height);
    s->read("lr_width", d.lr_width);
    s->read("frames", d.frames);
    s->read("batch", d.batch);
    s->read("motion_range", d.motion_range);
    s->read("train_clips", d.train_clips);
    s->read("val_clips", d.val_clips);
    s->read("val_frames", d.val_frames);
    s->finish();
  }
  if (auto s = root.child("optim")) {
    s->read("lr", p.optim.lr);
    s->read("lr_floor", p.optim.lr_floor);
    s->read("gamma_lr", p.optim.gamma_lr);
    s->read("beta1", p.optim.beta1);
    s->read("beta2", p.optim.beta2);
    s->finish();
  }
  if (auto s = root.child("schedule")) {
    s->read("delta", p.schedule.delta);
    s->read("tau", p.schedule.tau);
    s->read("t1", p.schedule.t1);
    s->read("t2", p.schedule.t2);
    s->finish();
  }
  if (auto s = root.child("budgets")) {
    s->read("pretrain", p.budgets.pretrain);
    s->read("sparsify", p.budgets.sparsify);
    s->read("finetune", p.budgets.finetune);
    s->finish();
  }
  if (auto s = root.child("prune")) {
    s->read("ratio", p.prune.ratio);
    std::string policy = p.prune.policy.name();
    s->read("policy", policy);
    try {
      p.prune.policy = SelectionPolicy::parse(policy);
    } catch (const ConfigError&) {
      throw ConfigError("config key 'prune.policy' has unknown value '" + policy + "'");
    }
    s->read("normalize_groups", p.prune.normalize_groups);
    if (auto sc = s->child("scope")) {
      sc->read("rsc_read_write", p.prune.scope.rsc_read_write);
      sc->read("block_mid", p.prune.scope.block_mid);
      sc->read("entry", p.prune.scope.entry);
      sc->read("upsampler", p.prune.scope.upsampler);
      sc->finish();
    }
    s->finish();
  }
  if (auto s = root.child("loss")) {
    s->read("charbonnier_eps", p.loss.charbonnier_eps);
    s->read("temporal", p.loss.temporal);
    std::string norm = p.loss.temporal_norm == TemporalNorm::MAE ? "mae" : "mse";
    s->read("temporal_norm", norm);
    if (norm == "mae") {
      p.loss.temporal_norm = TemporalNorm::MAE;
    } else if (norm == "mse") {
      p.loss.temporal_norm = TemporalNorm::MSE;
    } else {
      throw ConfigError("config key 'loss.temporal_norm' must be mae or mse");
    }
    s->finish();
  }
  if (auto s = root.child("cost")) {
    s->read("height", p.cost_height);
    s->read("width", p.cost_width);
    s->finish();
  }
  root.finish();

  require(p.network.trunk_width > 0, "network.trunk_width", "must be positive");
  require(p.network.blocks_per_direction >= 0, "network.blocks_per_direction", "must be >= 0");
  require(p.network.head_width > 0, "network.head_width", "must be positive");
  require(p.network.hr_width > 0, "network.hr_width", "must be positive");
  require(p.data.lr_height > 0 && p.data.lr_width > 0, "data.lr_height", "must be positive");
  require(p.data.frames > 0, "data.frames", "must be positive");
  require(p.data.val_frames > 0, "data.val_frames", "must be positive");
  require(p.data.batch > 0, "data.batch", "must be positive");
  require(p.data.train_clips > 0, "data.train_clips", "must be positive");
  require(p.data.val_clips > 0, "data.val_clips", "must be positive");
  require(p.data.motion_range >= 0, "data.motion_range", "must be >= 0");
  require(p.optim.lr > 0, "optim.lr", "must be positive");
  require(p.optim.lr_floor >= 0 && p.optim.lr_floor <= p.optim.lr, "optim.lr_floor",
          "must lie in [0, lr]");
  require(p.optim.gamma_lr >= 0, "optim.gamma_lr", "must be >= 0");
  require(p.schedule.delta > 0, "schedule.delta", "must be positive");
  require(p.schedule.tau >= 0, "schedule.tau", "must be >= 0");
  require(p.schedule.t1 > 0, "schedule.t1", "must be positive");
  require(p.schedule.t2 >= 0, "schedule.t2", "must be >= 0");
  require(p.budgets.pretrain >= 0, "budgets.pretrain", "must be >= 0");
  require(p.budgets.finetune >= 0, "budgets.finetune", "must be >= 0");
  require(p.prune.ratio >= 0 && p.prune.ratio < 1, "prune.ratio", "must lie in [0, 1)");
  require(p.loss.charbonnier_eps > 0, "loss.charbonnier_eps", "must be positive");
  require(p.val_every > 0, "val_every", "must be positive");
  require(p.cost_height > 0 && p.cost_width > 0, "cost.height", "must be positive");
  return p;
}

Profile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return profile_from_json(ss.str());
}

std::string to_json(const Profile& p) {
  const auto& n = p.network;
  json j{
      {"name", p.name},
      {"seed", p.seed},
      {"val_every", p.val_every},
      {"network",
       {{"trunk_width", n.trunk_width},
        {"blocks_per_direction", n.blocks_per_direction},
        {"head_width", n.head_width},
        {"hr_width", n.hr_width},
        {"bidirectional", n.bidirectional},
        {"bias", n.bias},
        {"activation_slope", std::round(static_cast<double>(n.activation_slope) * 1e6) / 1e6}}},
      {"data",
       {{"degradation", to_string(p.data.degradation)},
        {"lr_height", p.data.lr_height},
        {"lr_width", p.data.lr_width},
        {"frames", p.data.frames},
        {"batch", p.data.batch},
        {"motion_range", p.data.motion_range},
        {"train_clips", p.data.train_clips},
        {"val_clips", p.data.val_clips},
        {"val_frames", p.data.val_frames}}},
      {"optim",
       {{"lr", p.optim.lr},
        {"lr_floor", p.optim.lr_floor},
        {"gamma_lr", p.optim.gamma_lr},
        {"beta1", p.optim.beta1},
        {"beta2", p.optim.beta2}}},
      {"schedule",
       {{"delta", p.schedule.delta},
        {"tau", p.schedule.tau},
        {"t1", p.schedule.t1},
        {"t2", p.schedule.t2}}},
      {"budgets",
       {{"pretrain", p.budgets.pretrain},
        {"sparsify", p.budgets.sparsify},
        {"finetune", p.budgets.finetune}}},
      {"prune",
       {{"ratio", p.prune.ratio},
        {"policy", p.prune.policy.name()},
        {"normalize_groups", p.prune.normalize_groups},
        {"scope",
         {{"rsc_read_write", p.prune.scope.rsc_read_write},
          {"block_mid", p.prune.scope.block_mid},
          {"entry", p.prune.scope.entry},
          {"upsampler", p.prune.scope.upsampler}}}}},
      {"loss",
       {{"charbonnier_eps", p.loss.charbonnier_eps},
        {"temporal", p.loss.temporal},
        {"temporal_norm", p.loss.temporal_norm == TemporalNorm::MAE ? "mae" : "mse"}}},
      {"cost", {{"height", p.cost_height}, {"width", p.cost_width}}},
  };
  return j.dump(2) + "\n";
}

NetworkSpec profile_network(const Profile& profile) {
  ReferenceConfig rc = profile.network;
  rc.name = profile.name;
  rc.seed = profile.seed;
  NetworkSpec spec = make_reference_spec(rc);
  apply_prune_scope(spec, profile.prune.scope);
  return spec;
}

StageConfig stage_config(const Profile& p, Stage stage) {
  StageConfig c;
  c.stage = stage;
  c.seed = p.seed;
  c.lr = p.optim.lr;
  c.lr_floor = p.optim.lr_floor;
  c.gamma_lr = p.optim.gamma_lr;
  c.beta1 = p.optim.beta1;
  c.beta2 = p.optim.beta2;
  c.charbonnier_eps = p.loss.charbonnier_eps;
  c.temporal_norm = p.loss.temporal_norm;
  c.val_every = p.val_every;
  c.schedule = p.schedule;
  switch (stage) {
    case Stage::Pretrain:
      c.iterations = p.budgets.pretrain;
      break;
    case Stage::Sparsify:
      c.iterations = p.budgets.sparsify;
      c.use_sir = true;
      break;
    case Stage::Finetune:
      c.iterations = p.budgets.finetune;
      c.use_tf = p.loss.temporal;
      break;
  }
  return c;
}

Dataset make_dataset(const DataConfig& config, std::uint64_t seed) {
  Dataset d;
  d.batch = config.batch;
  SynthConfig sc;
  sc.hr_height = 4 * config.lr_height;
  sc.hr_width = 4 * config.lr_width;
  sc.motion_range = config.motion_range;
  sc.degradation.kind = config.degradation;
  // Disjoint seed streams for training and validation clips.
  const std::uint64_t base = seed * 1000003ULL;
  sc.frames = config.frames;
  for (int i = 0; i < config.train_clips; ++i) {
    d.train.push_back(synth_sequence(base + static_cast<std::uint64_t>(i), sc));
  }
  sc.frames = config.val_frames;
  for (int i = 0; i < config.val_clips; ++i) {
    d.val.push_back(synth_sequence(base + 500000ULL + static_cast<std::uint64_t>(i), sc));
  }
  return d;
}

Var temporal_finetune_loss(Var forward_final, Var backward_final,
                           const Tensor& teacher_forward,
                           const Tensor& teacher_backward, TemporalNorm norm) {
  Var f = temporal_finetune_loss(forward_final, teacher_forward, norm);
  Var b = temporal_finetune_loss(backward_final, teacher_backward, norm);
  return add(f, b);
}

Var temporal_finetune_loss(Var forward_final, const Tensor& teacher_forward,
                           TemporalNorm norm) {
  if (!(forward_final.shape() == teacher_forward.shape())) {
    throw ShapeError("temporal loss: state " + forward_final.shape().str() +
                     " vs teacher " + teacher_forward.shape().str());
  }
  Var t = forward_final.tape()->constant(teacher_forward);
  return norm == TemporalNorm::MAE ? mean_abs_error(forward_final, t)
                                   : mean_squared_error(forward_final, t);
}

Var reconstruction_loss(std::span<const Var> sr, std::span<const Tensor> hr,
                        double eps) {
  if (sr.size() != hr.size() || sr.empty()) {
    throw ShapeError("reconstruction loss: " + std::to_string(sr.size()) +
                     " outputs vs " + std::to_string(hr.size()) + " targets");
  }
  std::vector<Var> terms;
  for (std::size_t t = 0; t < sr.size(); ++t) {
    Var target = sr[t].tape()->constant(hr[t]);
    terms.push_back(charbonnier(sr[t], target, eps));
  }
  return scale(sum_scalars(terms), 1.0 / static_cast<double>(terms.size()));
}

Var total_finetune_loss(std::span<const Var> sr, std::span<const Tensor> hr,
                        double eps, std::optional<Var> tf) {
  Var rec = reconstruction_loss(sr, hr, eps);
  return tf ? add(rec, *tf) : rec;
}

void write_log_header(std::ostream& os) {
  os << "iter,loss_rec,loss_sir,loss_tf,alpha,val_psnr\n";
}

void write_log_row(std::ostream& os, const LogRow& r) {
  os << r.iter << ',' << fmt(r.loss_rec) << ',' << fmt(r.loss_sir) << ','
     << fmt(r.loss_tf) << ',' << fmt(r.alpha) << ',';
  if (r.val_psnr) os << fmt(*r.val_psnr);
  os << '\n';
}

TeacherTargets teacher_targets(const NetworkSpec& spec, const Weights& weights,
                               const ScalingState* scaling,
                               const std::vector<Sequence>& clips) {
  TeacherTargets out;
  for (const Sequence& c : clips) {
    const Evaluation e = evaluate(spec, weights, scaling, make_batch({c}));
    out.forward_final.push_back(e.forward_states.back());
    if (!e.backward_states.empty()) out.backward_final.push_back(e.backward_states.front());
  }
  return out;
}

double validation_psnr(const NetworkSpec& spec, const Weights& weights,
                       const ScalingState* scaling,
                       const std::vector<Sequence>& clips) {
  if (clips.empty()) return 0.0;
  const Batch b = make_batch(clips);
  if (b.hr.empty()) throw ConfigError("validation clips carry no HR targets");
  const Evaluation e = evaluate(spec, weights, scaling, b);
  double total = 0.0;
  int count = 0;
  for (std::size_t t = 0; t < e.sr.size(); ++t) {
    for (int n = 0; n < b.batch_size(); ++n) {
      total += psnr(item(e.sr[t], n), item(b.hr[t], n));
      ++count;
    }
  }
  return total / count;
}

StageResult run_stage(const StageConfig& cfg, StageInput input,
                      const Dataset& data, std::ostream* csv) {
  StageResult r;
  r.spec = std::move(input.spec);
  r.weights = std::move(input.weights);
  r.scaling = std::move(input.scaling);

  if (cfg.stage == Stage::Sparsify && !r.scaling) {
    throw ConfigError("sparsify needs a scaling state with unimportant units");
  }
  if (cfg.stage == Stage::Finetune) {
    if (input.plan || r.scaling) {
      const PruningPlan plan = input.plan ? *input.plan : empty_plan(r.spec);
      RewriteResult rw = compile(r.spec, r.weights, r.scaling ? &*r.scaling : nullptr, plan);
      r.spec = rw.spec;
      r.weights = rw.weights;
      r.scaling.reset();
      r.rewrite = std::move(rw);
    }
    if (cfg.use_tf && input.teacher == nullptr) {
      throw ConfigError("finetune with the temporal loss needs a teacher checkpoint");
    }
  }
  const bool train_gammas = cfg.stage == Stage::Sparsify;

  long iterations = cfg.iterations;
  if (iterations < 0) {
    if (cfg.stage != Stage::Sparsify) {
      throw ConfigError(std::string(to_string(cfg.stage)) + ": negative iteration budget");
    }
    r.scaling->schedule = cfg.schedule;
    iterations = std::max(0L, cfg.schedule.done_iteration() - r.scaling->iteration);
  }
  if (cfg.stage == Stage::Sparsify) r.scaling->schedule = cfg.schedule;
  if (iterations > 0 && data.train.empty()) throw ConfigError("no training clips");
  const long horizon = cfg.horizon > 0 ? cfg.horizon : iterations;

  TeacherTargets teacher;
  const bool tf = cfg.stage == Stage::Finetune && cfg.use_tf && iterations > 0;
  if (tf) {
    const Checkpoint& t = *input.teacher;
    teacher = teacher_targets(t.spec, t.weights, t.scaling ? &*t.scaling : nullptr, data.train);
    if (teacher.backward_final.empty() != !r.spec.bidirectional()) {
      throw ShapeError("teacher and student differ in directionality");
    }
  }

  Adam adam(AdamConfig{cfg.beta1, cfg.beta2, 1e-8});
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(cfg.stage) + 1);
  std::uniform_int_distribution<int> pick(0, std::max(0, static_cast<int>(data.train.size()) - 1));

  if (csv) write_log_header(*csv);
  for (long it = 0; it < iterations; ++it) {
    std::vector<int> ids(static_cast<std::size_t>(data.batch));
    for (int& i : ids) i = pick(rng);
    std::vector<Sequence> clips;
    for (int i : ids) clips.push_back(data.train[i]);
    const Batch batch = make_batch(clips);

    Tape tape;
    const BoundWeights w = bind_weights(tape, r.weights, true);
    std::map<std::string, Var> gammas;
    if (r.scaling) gammas = bind_gammas(tape, *r.scaling, train_gammas);
    const ModelOutputs out =
        run_model(r.spec, w, r.scaling ? &gammas : nullptr, batch, tape);

    LogRow row;
    row.iter = it;
    std::vector<Var> terms;
    if (cfg.use_rec) {
      Var rec = reconstruction_loss(out.sr, batch.hr, cfg.charbonnier_eps);
      row.loss_rec = rec.value()[0];
      terms.push_back(rec);
    }
    if (cfg.use_sir && r.scaling) {
      Var sir = sir_penalty(*r.scaling, gammas);
      row.loss_sir = sir.value()[0];
      row.alpha = r.scaling->alpha;
      terms.push_back(sir);
    }
    if (tf) {
      std::vector<const Tensor*> fwd, bwd;
      for (int i : ids) {
        fwd.push_back(&teacher.forward_final[i]);
        if (r.spec.bidirectional()) bwd.push_back(&teacher.backward_final[i]);
      }
      Var ltf = r.spec.bidirectional()
                    ? temporal_finetune_loss(out.forward_states.back(),
                                             out.backward_states.front(),
                                             stack_items(fwd), stack_items(bwd),
                                             cfg.temporal_norm)
                    : temporal_finetune_loss(out.forward_states.back(),
                                             stack_items(fwd), cfg.temporal_norm);
      row.loss_tf = ltf.value()[0];
      terms.push_back(ltf);
    }
    if (terms.empty()) throw ConfigError("every loss term is switched off");
    Var total = terms.size() == 1 ? terms[0] : sum_scalars(terms);
    if (!std::isfinite(total.value()[0])) {
      throw EvalError(std::string(to_string(cfg.stage)) + ": non-finite loss at iteration " +
                      std::to_string(it));
    }
    tape.backward(total);

    const double lr = cosine_lr(cfg.lr, cfg.lr_floor, it, horizon);
    const double lr_scale = lr / cfg.lr;
    for (auto& [id, k] : r.weights) {
      adam.step("w/" + id, k.weight, w.weight.at(id).grad(), lr);
      if (k.bias) adam.step("b/" + id, *k.bias, w.bias.at(id).grad(), lr);
    }
    if (train_gammas) {
      for (auto& [site, g] : r.scaling->gammas) {
        adam.step("g/" + site, g, gammas.at(site).grad(), cfg.gamma_lr * lr_scale);
      }
      step_schedule(*r.scaling);
      GammaRecord rec = gamma_trajectory_record(*r.scaling);
      rec.alpha = row.alpha;
      r.gamma_log.push_back(rec);
    }

    if ((it + 1) % cfg.val_every == 0 || it + 1 == iterations) {
      row.val_psnr = validation_psnr(r.spec, r.weights, r.scaling ? &*r.scaling : nullptr,
                                     data.val);
      r.final_val_psnr = *row.val_psnr;
    }
    if (csv) write_log_row(*csv, row);
    r.log.push_back(row);
  }
  if (iterations == 0 && !data.val.empty()) {
    r.final_val_psnr =
        validation_psnr(r.spec, r.weights, r.scaling ? &*r.scaling : nullptr, data.val);
  }
  return r;
}

PruningPlan make_plan(const NetworkSpec& spec, const Weights& weights, double ratio,
                      SelectionPolicy policy, std::uint64_t seed, bool normalize_groups) {
  return select(score_units(spec, weights, normalize_groups), ratio, policy, seed);
}

ScalingState prepare_scaling(const NetworkSpec& spec, const PruningPlan& plan,
                             const SirSchedule& schedule) {
  ScalingState s = inject_scaling(spec);
  s.schedule = schedule;
  mark_unimportant(s, plan);
  return s;
}

PruningPlan plan_from_scaling(const NetworkSpec& spec, const ScalingState& scaling) {
  PruningPlan plan = empty_plan(spec);
  std::size_t total = 0;
  for (auto& [id, sp] : plan.sites) {
    total += static_cast<std::size_t>(sp.units);
    auto it = scaling.unimportant.find(id);
    if (it == scaling.unimportant.end()) continue;
    std::vector<char> pruned(static_cast<std::size_t>(sp.units), 0);
    for (int i : it->second) {
      if (i < 0 || i >= sp.units) {
        throw ConfigError("scaling state marks " + id + "[" + std::to_string(i) +
                          "], outside the site");
      }
      pruned[i] = 1;
    }
    sp.kept.clear();
    sp.pruned.clear();
    for (int i = 0; i < sp.units; ++i) {
      (pruned[i] ? sp.pruned : sp.kept).push_back(i);
      if (pruned[i]) plan.unimportant.push_back(PrunableUnit{sp.layer_id, sp.kind, i, 0});
    }
    if (sp.kept.empty()) throw ConfigError("scaling state prunes every unit of " + id);
  }
  for (const auto& [id, idx] : scaling.unimportant) {
    if (!plan.sites.count(id) && !idx.empty()) {
      throw ConfigError("scaling state names unknown site " + id);
    }
  }
  plan.ratio = total == 0 ? 0.0
                          : static_cast<double>(plan.unimportant.size()) / static_cast<double>(total);
  return plan;
}

namespace {

NetworkSpec mid_only(const NetworkSpec& spec) {
  NetworkSpec s = spec;
  apply_prune_scope(s, PruneScope{false, true, false, false});
  return s;
}

}  // namespace

PruningPlan baseline_l1norm_plan(const NetworkSpec& spec, const Weights& weights,
                                 double p) {
  const NetworkSpec s = mid_only(spec);
  return select(score_units(s, weights), p, SelectionPolicy{Criterion::Min, Scope::Local});
}

RewriteResult baseline_l1norm(const NetworkSpec& spec, const Weights& weights, double p) {
  const NetworkSpec s = mid_only(spec);
  return compile(s, weights, nullptr, baseline_l1norm_plan(spec, weights, p));
}

ReferenceConfig baseline_lite(const ReferenceConfig& config, double factor) {
  if (!(factor > 0.0)) throw ConfigError("lite width factor must be positive");
  auto scaled = [&](int width, const char* what) {
    const double v = width * factor;
    const long r = std::lround(v);
    if (r < 1 || std::abs(v - static_cast<double>(r)) > 1e-9) {
      throw ConfigError(std::string("lite factor ") + fmt(factor) + " gives non-integer " +
                        what + " " + fmt(v));
    }
    return static_cast<int>(r);
  };
  ReferenceConfig c = config;
  c.trunk_width = scaled(config.trunk_width, "trunk width");
  c.head_width = scaled(config.head_width, "head width");
  c.hr_width = scaled(config.hr_width, "hr width");
  return c;
}

}  // namespace vsrprune
