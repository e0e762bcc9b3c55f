#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vsrprune/tensor.hpp"

namespace vsrprune {

enum class LayerKind {
  Conv,
  FusionConv1x1,
  UpsampleConv,  // conv feeding a pixel shuffle
  PixelShuffle,
  Activation,
  BilinearSkip,
  Concat,
  ScatterResidual,
};

/// Which unit types a layer exposes to pruning.
struct PrunableFlags {
  bool output_filters = false;
  bool input_channels = false;  // RSC read sites only
  bool shuffle_groups = false;  // upsample convs only

  bool any() const { return output_filters || input_channels || shuffle_groups; }
  bool operator==(const PrunableFlags&) const = default;
};

struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::Conv;
  // Conv extents; unused for non-conv kinds.
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int padding = 0;
  bool bias = true;
  // PixelShuffle / BilinearSkip scale factor.
  int factor = 0;
  PrunableFlags prunable;

  bool is_conv() const {
    return kind == LayerKind::Conv || kind == LayerKind::FusionConv1x1 ||
           kind == LayerKind::UpsampleConv;
  }
  Shape kernel_shape() const {
    return Shape{out_channels, in_channels, kernel_h, kernel_w};
  }
  bool operator==(const LayerSpec&) const = default;
};

/// Residual block under the full-width trunk scheme: the first conv reads the
/// trunk channels in read_index, the second conv's outputs are added onto the
/// trunk channels in write_index. Unpruned blocks read and write all channels.
struct ResidualBlockSpec {
  LayerSpec first_conv;
  LayerSpec second_conv;
  int trunk_width = 0;
  std::vector<int> read_index;
  std::vector<int> write_index;
  std::string read_gamma_site;
  std::string mid_gamma_site;
  std::string write_gamma_site;
  bool operator==(const ResidualBlockSpec&) const = default;
};

enum class Direction { Forward, Backward };

struct RecurrentCellSpec {
  Direction direction = Direction::Forward;
  int image_channels = 3;
  int trunk_width = 0;
  LayerSpec entry_conv;
  /// Trunk channels produced by the entry conv; the rest start at zero.
  std::vector<int> entry_index;
  std::vector<ResidualBlockSpec> blocks;

  int input_channels() const { return image_channels + trunk_width; }
  bool operator==(const RecurrentCellSpec&) const = default;
};

/// Alignment of the previous hidden state. Only an oracle integer shift with
/// zero fill is supported; sequences carry the per-step motion.
struct AlignmentSpec {
  std::string kind = "oracle_shift";
  bool operator==(const AlignmentSpec&) const = default;
};

struct NetworkSpec {
  std::string name;
  RecurrentCellSpec forward_cell;
  std::optional<RecurrentCellSpec> backward_cell;
  std::vector<LayerSpec> upsampler;
  AlignmentSpec alignment;
  float activation_slope = 0.1f;
  std::uint64_t seed = 0;

  bool bidirectional() const { return backward_cell.has_value(); }
  int trunk_width() const { return forward_cell.trunk_width; }
  int image_channels() const { return forward_cell.image_channels; }
  bool operator==(const NetworkSpec&) const = default;
};

using Weights = std::map<std::string, Kernel>;

// ---------------------------------------------------------------------------
// Prunable units and scaling-factor sites.

enum class UnitKind { OutputFilter, InputChannel, ShuffleGroup };

const char* to_string(UnitKind kind);
const char* to_string(LayerKind kind);

/// One attachment point for a scaling vector: a (layer, unit kind) pair.
struct SiteRef {
  std::string layer_id;
  UnitKind kind = UnitKind::OutputFilter;
  int units = 0;

  std::string id() const;  // "<layer>:out" / ":in" / ":group"
  bool operator==(const SiteRef&) const = default;
};

std::string site_id(const std::string& layer_id, UnitKind kind);

/// Every prunable site, sorted by (layer id, kind).
std::vector<SiteRef> prunable_sites(const NetworkSpec& spec);

/// All conv layers, including the block convs, sorted by id.
std::vector<const LayerSpec*> conv_layers(const NetworkSpec& spec);
const LayerSpec* find_layer(const NetworkSpec& spec, const std::string& id);

enum class Subnet { Forward, Backward, Upsampler };
const char* to_string(Subnet s);
Subnet subnet_of(const std::string& layer_id);

// ---------------------------------------------------------------------------
// Reference configurations.

struct ReferenceConfig {
  std::string name = "toy";
  int trunk_width = 16;
  int blocks_per_direction = 3;
  /// Width of the fusion output and of both shuffle stages.
  int head_width = 16;
  /// Width of the conv between the last shuffle and the RGB conv.
  int hr_width = 16;
  bool bidirectional = true;
  int image_channels = 3;
  bool bias = true;
  float activation_slope = 0.1f;
  std::uint64_t seed = 0;
};

/// Which unit types get pruning flags.
struct PruneScope {
  bool rsc_read_write = true;  // block first-conv inputs and second-conv outputs
  bool block_mid = true;       // block first-conv outputs
  bool entry = true;
  bool upsampler = true;       // shuffle groups and the HR conv
};

NetworkSpec make_reference_spec(const ReferenceConfig& config);
ReferenceConfig toy_reference_config();
/// Full-scale BasicVSR: trunk 64, 30 blocks per direction, head 64.
ReferenceConfig paper_scale_reference_config();

/// Rewrites every prunable flag according to scope. The fusion conv and the
/// RGB conv are never flagged.
void apply_prune_scope(NetworkSpec& spec, const PruneScope& scope);

/// Empty result means the spec is well formed.
std::vector<std::string> validate(const NetworkSpec& spec);
void require_valid(const NetworkSpec& spec);

/// Kaiming fan-in normal init, std = sqrt(2 / fan_in); the second conv of
/// each residual block is scaled by 0.1. Biases start at zero.
Weights instantiate(const NetworkSpec& spec, std::uint64_t seed);

/// Throws ShapeError naming the first layer whose weights disagree with spec.
void check_weights(const NetworkSpec& spec, const Weights& weights);

std::size_t parameter_count(const Weights& weights);

std::string to_json(const NetworkSpec& spec);
NetworkSpec network_from_json(const std::string& text);

}  // namespace vsrprune
