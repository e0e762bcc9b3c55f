#include "vsrprune/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <random>
#include <set>

namespace vsrprune {

using nlohmann::json;

const char* to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::OutputFilter: return "out";
    case UnitKind::InputChannel: return "in";
    case UnitKind::ShuffleGroup: return "group";
  }
  return "?";
}

namespace {

constexpr std::pair<LayerKind, const char*> kLayerKindNames[] = {
    {LayerKind::Conv, "conv"},
    {LayerKind::FusionConv1x1, "fusion_conv_1x1"},
    {LayerKind::UpsampleConv, "upsample_conv"},
    {LayerKind::PixelShuffle, "pixel_shuffle"},
    {LayerKind::Activation, "activation"},
    {LayerKind::BilinearSkip, "bilinear_skip"},
    {LayerKind::Concat, "concat"},
    {LayerKind::ScatterResidual, "scatter_residual"},
};

LayerKind layer_kind_from(const std::string& name) {
  for (const auto& [kind, text] : kLayerKindNames) {
    if (name == text) return kind;
  }
  throw ConfigError("unknown layer kind '" + name + "'");
}

LayerSpec conv_layer(std::string id, LayerKind kind, int out, int in, int k,
                     bool bias) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = kind;
  l.out_channels = out;
  l.in_channels = in;
  l.kernel_h = k;
  l.kernel_w = k;
  l.stride = 1;
  l.padding = k / 2;
  l.bias = bias;
  return l;
}

LayerSpec plain_layer(std::string id, LayerKind kind, int factor = 0) {
  LayerSpec l;
  l.id = std::move(id);
  l.kind = kind;
  l.factor = factor;
  return l;
}

std::vector<int> iota(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

RecurrentCellSpec make_cell(const ReferenceConfig& cfg, Direction dir) {
  const std::string prefix = dir == Direction::Forward ? "fwd" : "bwd";
  RecurrentCellSpec cell;
  cell.direction = dir;
  cell.image_channels = cfg.image_channels;
  cell.trunk_width = cfg.trunk_width;
  cell.entry_conv = conv_layer(prefix + ".entry", LayerKind::Conv,
                               cfg.trunk_width,
                               cfg.image_channels + cfg.trunk_width, 3, cfg.bias);
  cell.entry_index = iota(cfg.trunk_width);
  for (int b = 0; b < cfg.blocks_per_direction; ++b) {
    char tag[32];
    std::snprintf(tag, sizeof(tag), ".block%02d", b);
    const std::string base = prefix + tag;
    ResidualBlockSpec block;
    block.trunk_width = cfg.trunk_width;
    block.first_conv = conv_layer(base + ".conv1", LayerKind::Conv,
                                  cfg.trunk_width, cfg.trunk_width, 3, cfg.bias);
    block.second_conv = conv_layer(base + ".conv2", LayerKind::Conv,
                                   cfg.trunk_width, cfg.trunk_width, 3, cfg.bias);
    block.read_index = iota(cfg.trunk_width);
    block.write_index = iota(cfg.trunk_width);
    block.read_gamma_site = site_id(block.first_conv.id, UnitKind::InputChannel);
    block.mid_gamma_site = site_id(block.first_conv.id, UnitKind::OutputFilter);
    block.write_gamma_site =
        site_id(block.second_conv.id, UnitKind::OutputFilter);
    cell.blocks.push_back(std::move(block));
  }
  return cell;
}

bool sorted_unique_in_range(const std::vector<int>& v, int limit) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0 || v[i] >= limit) return false;
    if (i > 0 && v[i] <= v[i - 1]) return false;
  }
  return true;
}

void collect_cell_layers(const RecurrentCellSpec& cell,
                         std::vector<const LayerSpec*>& out) {
  out.push_back(&cell.entry_conv);
  for (const auto& b : cell.blocks) {
    out.push_back(&b.first_conv);
    out.push_back(&b.second_conv);
  }
}

std::vector<const LayerSpec*> all_layers(const NetworkSpec& spec) {
  std::vector<const LayerSpec*> out;
  collect_cell_layers(spec.forward_cell, out);
  if (spec.backward_cell) collect_cell_layers(*spec.backward_cell, out);
  for (const auto& l : spec.upsampler) out.push_back(&l);
  return out;
}

void validate_cell(const RecurrentCellSpec& cell, const char* name,
                   std::vector<std::string>& v) {
  const std::string cname = name;
  const int c = cell.trunk_width;
  if (c <= 0) v.push_back(cname + ": trunk width must be positive");
  const LayerSpec& e = cell.entry_conv;
  if (e.in_channels != cell.input_channels()) {
    v.push_back(e.id + ": entry conv expects " + std::to_string(e.in_channels) +
                " input channels, cell provides " +
                std::to_string(cell.input_channels()));
  }
  if (e.out_channels != static_cast<int>(cell.entry_index.size())) {
    v.push_back(e.id + ": " + std::to_string(e.out_channels) +
                " filters but entry index lists " +
                std::to_string(cell.entry_index.size()) + " trunk channels");
  }
  if (cell.entry_index.empty() || !sorted_unique_in_range(cell.entry_index, c)) {
    v.push_back(e.id + ": entry index must be a non-empty sorted subset of [0, " +
                std::to_string(c) + ")");
  }
  if (e.prunable.input_channels || e.prunable.shuffle_groups) {
    v.push_back(e.id + ": entry conv may only prune output filters");
  }
  for (const auto& b : cell.blocks) {
    const LayerSpec& f = b.first_conv;
    const LayerSpec& s = b.second_conv;
    if (b.trunk_width != c) {
      v.push_back(f.id + ": block trunk width " + std::to_string(b.trunk_width) +
                  " differs from cell trunk width " + std::to_string(c));
    }
    if (b.read_index.empty() || !sorted_unique_in_range(b.read_index, c)) {
      v.push_back(f.id + ": read index must be a non-empty sorted subset of [0, " +
                  std::to_string(c) + ")");
    }
    if (b.write_index.empty() || !sorted_unique_in_range(b.write_index, c)) {
      v.push_back(s.id +
                  ": write index must be a non-empty sorted subset of [0, " +
                  std::to_string(c) + ")");
    }
    if (f.in_channels != static_cast<int>(b.read_index.size())) {
      v.push_back(f.id + ": " + std::to_string(f.in_channels) +
                  " input channels but read index has " +
                  std::to_string(b.read_index.size()));
    }
    if (s.out_channels != static_cast<int>(b.write_index.size())) {
      v.push_back(s.id + ": " + std::to_string(s.out_channels) +
                  " filters but write index has " +
                  std::to_string(b.write_index.size()));
    }
    if (f.out_channels != s.in_channels) {
      v.push_back(s.id + ": expects " + std::to_string(s.in_channels) +
                  " inputs but " + f.id + " produces " +
                  std::to_string(f.out_channels));
    }
    if (s.prunable.input_channels || s.prunable.shuffle_groups ||
        f.prunable.shuffle_groups) {
      v.push_back(f.id + ": block convs only prune read channels and filters");
    }
  }
}

}  // namespace

const char* to_string(LayerKind kind) {
  for (const auto& [k, text] : kLayerKindNames) {
    if (k == kind) return text;
  }
  return "?";
}

const char* to_string(Subnet s) {
  switch (s) {
    case Subnet::Forward: return "forward";
    case Subnet::Backward: return "backward";
    case Subnet::Upsampler: return "upsampler";
  }
  return "?";
}

Subnet subnet_of(const std::string& layer_id) {
  if (layer_id.rfind("fwd.", 0) == 0) return Subnet::Forward;
  if (layer_id.rfind("bwd.", 0) == 0) return Subnet::Backward;
  return Subnet::Upsampler;
}

std::string site_id(const std::string& layer_id, UnitKind kind) {
  return layer_id + ":" + to_string(kind);
}

std::string SiteRef::id() const { return site_id(layer_id, kind); }

std::vector<const LayerSpec*> conv_layers(const NetworkSpec& spec) {
  std::vector<const LayerSpec*> out;
  for (const LayerSpec* l : all_layers(spec)) {
    if (l->is_conv()) out.push_back(l);
  }
  std::sort(out.begin(), out.end(),
            [](const LayerSpec* a, const LayerSpec* b) { return a->id < b->id; });
  return out;
}

const LayerSpec* find_layer(const NetworkSpec& spec, const std::string& id) {
  for (const LayerSpec* l : all_layers(spec)) {
    if (l->id == id) return l;
  }
  return nullptr;
}

std::vector<SiteRef> prunable_sites(const NetworkSpec& spec) {
  std::vector<SiteRef> sites;
  for (const LayerSpec* l : conv_layers(spec)) {
    if (l->prunable.input_channels) {
      sites.push_back({l->id, UnitKind::InputChannel, l->in_channels});
    }
    if (l->prunable.output_filters) {
      sites.push_back({l->id, UnitKind::OutputFilter, l->out_channels});
    }
    if (l->prunable.shuffle_groups) {
      sites.push_back({l->id, UnitKind::ShuffleGroup, l->out_channels / 4});
    }
  }
  std::sort(sites.begin(), sites.end(), [](const SiteRef& a, const SiteRef& b) {
    return a.layer_id != b.layer_id ? a.layer_id < b.layer_id : a.kind < b.kind;
  });
  return sites;
}

NetworkSpec make_reference_spec(const ReferenceConfig& cfg) {
  NetworkSpec spec;
  spec.name = cfg.name;
  spec.activation_slope = cfg.activation_slope;
  spec.seed = cfg.seed;
  spec.forward_cell = make_cell(cfg, Direction::Forward);
  if (cfg.bidirectional) spec.backward_cell = make_cell(cfg, Direction::Backward);

  const int fused = (cfg.bidirectional ? 2 : 1) * cfg.trunk_width;
  const int h = cfg.head_width;
  auto& up = spec.upsampler;
  up.push_back(conv_layer("up.fusion", LayerKind::FusionConv1x1, h, fused, 1,
                          cfg.bias));
  up.push_back(plain_layer("up.fusion_act", LayerKind::Activation));
  up.push_back(conv_layer("up.upconv1", LayerKind::UpsampleConv, 4 * h, h, 3,
                          cfg.bias));
  up.push_back(plain_layer("up.shuffle1", LayerKind::PixelShuffle, 2));
  up.push_back(plain_layer("up.act1", LayerKind::Activation));
  up.push_back(conv_layer("up.upconv2", LayerKind::UpsampleConv, 4 * h, h, 3,
                          cfg.bias));
  up.push_back(plain_layer("up.shuffle2", LayerKind::PixelShuffle, 2));
  up.push_back(plain_layer("up.act2", LayerKind::Activation));
  up.push_back(conv_layer("up.conv_hr", LayerKind::Conv, cfg.hr_width, h, 3,
                          cfg.bias));
  up.push_back(plain_layer("up.act_hr", LayerKind::Activation));
  up.push_back(conv_layer("up.conv_last", LayerKind::Conv, cfg.image_channels,
                          cfg.hr_width, 3, cfg.bias));
  up.push_back(plain_layer("up.skip", LayerKind::BilinearSkip, 4));

  apply_prune_scope(spec, PruneScope{});
  return spec;
}

ReferenceConfig toy_reference_config() { return ReferenceConfig{}; }

ReferenceConfig paper_scale_reference_config() {
  ReferenceConfig cfg;
  cfg.name = "paper-scale";
  cfg.trunk_width = 64;
  cfg.blocks_per_direction = 30;
  cfg.head_width = 64;
  cfg.hr_width = 64;
  return cfg;
}

void apply_prune_scope(NetworkSpec& spec, const PruneScope& scope) {
  auto apply_cell = [&](RecurrentCellSpec& cell) {
    cell.entry_conv.prunable = PrunableFlags{};
    cell.entry_conv.prunable.output_filters = scope.entry;
    for (auto& b : cell.blocks) {
      b.first_conv.prunable = PrunableFlags{};
      b.second_conv.prunable = PrunableFlags{};
      b.first_conv.prunable.input_channels = scope.rsc_read_write;
      b.first_conv.prunable.output_filters = scope.block_mid;
      b.second_conv.prunable.output_filters = scope.rsc_read_write;
    }
  };
  apply_cell(spec.forward_cell);
  if (spec.backward_cell) apply_cell(*spec.backward_cell);

  // The last conv produces the image; the one before it is the HR conv.
  int last_conv = -1;
  for (int i = 0; i < static_cast<int>(spec.upsampler.size()); ++i) {
    if (spec.upsampler[i].is_conv()) last_conv = i;
  }
  for (int i = 0; i < static_cast<int>(spec.upsampler.size()); ++i) {
    LayerSpec& l = spec.upsampler[i];
    l.prunable = PrunableFlags{};
    if (!scope.upsampler || i == last_conv) continue;
    if (l.kind == LayerKind::UpsampleConv) l.prunable.shuffle_groups = true;
    if (l.kind == LayerKind::Conv) l.prunable.output_filters = true;
  }
}

std::vector<std::string> validate(const NetworkSpec& spec) {
  std::vector<std::string> v;

  std::set<std::string> ids;
  for (const LayerSpec* l : all_layers(spec)) {
    if (l->id.empty()) v.push_back("layer with empty id");
    if (!ids.insert(l->id).second) v.push_back(l->id + ": duplicate layer id");
    if (l->is_conv()) {
      if (l->out_channels < 1 || l->in_channels < 1 || l->kernel_h < 1 ||
          l->kernel_w < 1 || l->stride < 1 || l->padding < 0) {
        v.push_back(l->id + ": conv extents must be positive");
      }
    }
    if (l->kind == LayerKind::FusionConv1x1 && l->prunable.any()) {
      v.push_back(l->id + ": the 1x1 fusion conv is never prunable");
    }
    if (l->kind == LayerKind::UpsampleConv && l->out_channels % 4 != 0) {
      v.push_back(l->id + ": upsample conv output " +
                  std::to_string(l->out_channels) + " not divisible by 4");
    }
    if (l->prunable.shuffle_groups && l->kind != LayerKind::UpsampleConv) {
      v.push_back(l->id + ": shuffle groups only exist on upsample convs");
    }
  }

  validate_cell(spec.forward_cell, "forward cell", v);
  if (spec.forward_cell.direction != Direction::Forward) {
    v.push_back("forward cell has backward direction");
  }
  if (spec.backward_cell) {
    validate_cell(*spec.backward_cell, "backward cell", v);
    if (spec.backward_cell->direction != Direction::Backward) {
      v.push_back("backward cell has forward direction");
    }
    if (spec.backward_cell->trunk_width != spec.forward_cell.trunk_width ||
        spec.backward_cell->image_channels != spec.forward_cell.image_channels) {
      v.push_back("forward and backward cells disagree on trunk/image width");
    }
  }
  if (!(spec.activation_slope >= 0.0f && spec.activation_slope < 1.0f)) {
    v.push_back("activation slope must lie in [0, 1)");
  }
  if (spec.alignment.kind != "oracle_shift") {
    v.push_back("unsupported alignment '" + spec.alignment.kind + "'");
  }

  // Upsampler: fusion 1x1 first, then convs and shuffles reaching x4, then the
  // bilinear skip of the input frame.
  const auto& up = spec.upsampler;
  int channels = (spec.bidirectional() ? 2 : 1) * spec.trunk_width();
  int scale = 1;
  int skip_factor = 0;
  if (up.empty() || up.front().kind != LayerKind::FusionConv1x1) {
    v.push_back("upsampler must start with a fusion_conv_1x1 layer");
  }
  for (std::size_t i = 0; i < up.size(); ++i) {
    const LayerSpec& l = up[i];
    switch (l.kind) {
      case LayerKind::FusionConv1x1:
        if (i != 0) v.push_back(l.id + ": fusion conv must come first");
        if (l.kernel_h != 1 || l.kernel_w != 1) {
          v.push_back(l.id + ": fusion conv must be 1x1");
        }
        [[fallthrough]];
      case LayerKind::Conv:
      case LayerKind::UpsampleConv:
        if (l.in_channels != channels) {
          v.push_back(l.id + ": expects " + std::to_string(l.in_channels) +
                      " input channels, receives " + std::to_string(channels));
        }
        channels = l.out_channels;
        if (l.kind == LayerKind::UpsampleConv &&
            (i + 1 >= up.size() || up[i + 1].kind != LayerKind::PixelShuffle)) {
          v.push_back(l.id + ": upsample conv must feed a pixel_shuffle");
        }
        if (l.prunable.shuffle_groups && i + 1 < up.size() &&
            up[i + 1].factor != 2) {
          v.push_back(l.id + ": shuffle-group pruning needs a x2 pixel shuffle");
        }
        break;
      case LayerKind::PixelShuffle:
        if (l.factor < 1 || channels % (l.factor * l.factor) != 0) {
          v.push_back(l.id + ": " + std::to_string(channels) +
                      " channels not divisible by r^2");
        } else {
          channels /= l.factor * l.factor;
          scale *= l.factor;
        }
        break;
      case LayerKind::Activation:
        break;
      case LayerKind::BilinearSkip:
        skip_factor = l.factor;
        if (i + 1 != up.size()) v.push_back(l.id + ": bilinear skip must be last");
        break;
      case LayerKind::Concat:
      case LayerKind::ScatterResidual:
        v.push_back(l.id + ": layer kind not allowed in the upsampler");
        break;
    }
  }
  if (scale != 4) {
    v.push_back("upsampler realizes x" + std::to_string(scale) + ", not x4");
  }
  if (skip_factor != 4) v.push_back("upsampler needs a x4 bilinear_skip");
  if (channels != spec.image_channels()) {
    v.push_back("upsampler emits " + std::to_string(channels) +
                " channels, image has " + std::to_string(spec.image_channels()));
  }
  for (std::size_t i = up.size(); i-- > 0;) {
    if (up[i].is_conv()) {
      if (up[i].prunable.any()) {
        v.push_back(up[i].id + ": the image-producing conv is never prunable");
      }
      break;
    }
  }
  return v;
}

void require_valid(const NetworkSpec& spec) {
  const auto violations = validate(spec);
  if (!violations.empty()) {
    std::string msg = "invalid network spec: " + violations.front();
    if (violations.size() > 1) {
      msg += " (+" + std::to_string(violations.size() - 1) + " more)";
    }
    throw ConfigError(msg);
  }
}

Weights instantiate(const NetworkSpec& spec, std::uint64_t seed) {
  require_valid(spec);
  std::set<std::string> damped;
  auto note = [&](const RecurrentCellSpec& cell) {
    for (const auto& b : cell.blocks) damped.insert(b.second_conv.id);
  };
  note(spec.forward_cell);
  if (spec.backward_cell) note(*spec.backward_cell);

  std::mt19937_64 rng(seed);
  Weights weights;
  for (const LayerSpec* l : conv_layers(spec)) {
    Kernel k;
    k.weight = Tensor(l->kernel_shape());
    const double fan_in =
        static_cast<double>(l->in_channels) * l->kernel_h * l->kernel_w;
    double std = std::sqrt(2.0 / fan_in);
    if (damped.count(l->id)) std *= 0.1;
    std::normal_distribution<double> dist(0.0, std);
    for (std::size_t i = 0; i < k.weight.size(); ++i) {
      k.weight[i] = static_cast<float>(dist(rng));
    }
    if (l->bias) k.bias = Tensor(Shape{1, l->out_channels, 1, 1});
    weights.emplace(l->id, std::move(k));
  }
  return weights;
}

void check_weights(const NetworkSpec& spec, const Weights& weights) {
  const auto convs = conv_layers(spec);
  for (const LayerSpec* l : convs) {
    auto it = weights.find(l->id);
    if (it == weights.end()) throw ShapeError(l->id + ": missing weights");
    if (!(it->second.weight.shape() == l->kernel_shape())) {
      throw ShapeError(l->id + ": weight shape " +
                       it->second.weight.shape().str() + " but spec says " +
                       l->kernel_shape().str());
    }
    const bool has_bias = it->second.bias.has_value();
    if (has_bias != l->bias ||
        (has_bias &&
         static_cast<int>(it->second.bias->size()) != l->out_channels)) {
      throw ShapeError(l->id + ": bias does not match spec");
    }
  }
  if (weights.size() != convs.size()) {
    throw ShapeError("weights contain layers the spec does not declare");
  }
}

std::size_t parameter_count(const Weights& weights) {
  std::size_t n = 0;
  for (const auto& [id, k] : weights) n += k.parameter_count();
  return n;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json layer_json(const LayerSpec& l) {
  json j{{"id", l.id}, {"kind", to_string(l.kind)}};
  if (l.is_conv()) {
    j["out_channels"] = l.out_channels;
    j["in_channels"] = l.in_channels;
    j["kernel_h"] = l.kernel_h;
    j["kernel_w"] = l.kernel_w;
    j["stride"] = l.stride;
    j["padding"] = l.padding;
    j["bias"] = l.bias;
    j["prunable"] = {{"output_filters", l.prunable.output_filters},
                     {"input_channels", l.prunable.input_channels},
                     {"shuffle_groups", l.prunable.shuffle_groups}};
  }
  if (l.factor != 0) j["factor"] = l.factor;
  return j;
}

LayerSpec layer_from(const json& j) {
  LayerSpec l;
  l.id = j.at("id").get<std::string>();
  l.kind = layer_kind_from(j.at("kind").get<std::string>());
  if (l.is_conv()) {
    l.out_channels = j.at("out_channels").get<int>();
    l.in_channels = j.at("in_channels").get<int>();
    l.kernel_h = j.at("kernel_h").get<int>();
    l.kernel_w = j.at("kernel_w").get<int>();
    l.stride = j.value("stride", 1);
    l.padding = j.value("padding", 0);
    l.bias = j.value("bias", true);
    if (j.contains("prunable")) {
      const json& p = j["prunable"];
      l.prunable.output_filters = p.value("output_filters", false);
      l.prunable.input_channels = p.value("input_channels", false);
      l.prunable.shuffle_groups = p.value("shuffle_groups", false);
    }
  }
  l.factor = j.value("factor", 0);
  return l;
}

json cell_json(const RecurrentCellSpec& c) {
  json blocks = json::array();
  for (const auto& b : c.blocks) {
    blocks.push_back({{"first_conv", layer_json(b.first_conv)},
                      {"second_conv", layer_json(b.second_conv)},
                      {"trunk_width", b.trunk_width},
                      {"read_index", b.read_index},
                      {"write_index", b.write_index},
                      {"read_gamma_site", b.read_gamma_site},
                      {"mid_gamma_site", b.mid_gamma_site},
                      {"write_gamma_site", b.write_gamma_site}});
  }
  return {{"direction", c.direction == Direction::Forward ? "forward" : "backward"},
          {"image_channels", c.image_channels},
          {"trunk_width", c.trunk_width},
          {"entry_conv", layer_json(c.entry_conv)},
          {"entry_index", c.entry_index},
          {"blocks", blocks}};
}

RecurrentCellSpec cell_from(const json& j) {
  RecurrentCellSpec c;
  const std::string dir = j.at("direction").get<std::string>();
  if (dir != "forward" && dir != "backward") {
    throw ConfigError("cell direction must be forward or backward, got '" + dir +
                      "'");
  }
  c.direction = dir == "forward" ? Direction::Forward : Direction::Backward;
  c.image_channels = j.at("image_channels").get<int>();
  c.trunk_width = j.at("trunk_width").get<int>();
  c.entry_conv = layer_from(j.at("entry_conv"));
  c.entry_index = j.at("entry_index").get<std::vector<int>>();
  for (const json& b : j.at("blocks")) {
    ResidualBlockSpec block;
    block.first_conv = layer_from(b.at("first_conv"));
    block.second_conv = layer_from(b.at("second_conv"));
    block.trunk_width = b.at("trunk_width").get<int>();
    block.read_index = b.at("read_index").get<std::vector<int>>();
    block.write_index = b.at("write_index").get<std::vector<int>>();
    block.read_gamma_site = b.value("read_gamma_site", "");
    block.mid_gamma_site = b.value("mid_gamma_site", "");
    block.write_gamma_site = b.value("write_gamma_site", "");
    c.blocks.push_back(std::move(block));
  }
  return c;
}

}  // namespace

std::string to_json(const NetworkSpec& spec) {
  json up = json::array();
  for (const auto& l : spec.upsampler) up.push_back(layer_json(l));
  json j{{"name", spec.name},
         {"activation_slope", spec.activation_slope},
         {"seed", spec.seed},
         {"alignment", {{"kind", spec.alignment.kind}}},
         {"forward_cell", cell_json(spec.forward_cell)},
         {"backward_cell",
          spec.backward_cell ? cell_json(*spec.backward_cell) : json(nullptr)},
         {"upsampler", up}};
  return j.dump(2);
}

NetworkSpec network_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    NetworkSpec spec;
    spec.name = j.value("name", "");
    spec.activation_slope = j.value("activation_slope", 0.1f);
    spec.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("alignment")) {
      spec.alignment.kind = j["alignment"].value("kind", "oracle_shift");
    }
    spec.forward_cell = cell_from(j.at("forward_cell"));
    if (j.contains("backward_cell") && !j["backward_cell"].is_null()) {
      spec.backward_cell = cell_from(j["backward_cell"]);
    }
    for (const json& l : j.at("upsampler")) spec.upsampler.push_back(layer_from(l));
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network spec: ") + e.what());
  }
}

}  // namespace vsrprune
