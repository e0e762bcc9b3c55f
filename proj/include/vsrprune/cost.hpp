#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "vsrprune/network.hpp"

namespace vsrprune {

struct LayerCost {
  std::string layer;
  Subnet subnet = Subnet::Upsampler;
  std::size_t params = 0;
  std::uint64_t macs = 0;
};

/// Parameter and multiply-accumulate counts for one frame. One MAC counts as
/// one FLOP; bias adds, activations, shuffles, gathers and scatters are free.
struct CostReport {
  int height = 0;  // LR resolution the report was computed at
  int width = 0;
  std::vector<LayerCost> layers;
  std::size_t total_params = 0;
  std::uint64_t total_macs = 0;
  std::map<Subnet, std::size_t> subnet_params;
  std::map<Subnet, std::uint64_t> subnet_macs;

  double mac_share(Subnet s) const;
  double layer_macs(const std::string& id) const;
};

/// Params and MACs of one conv applied to an h×w input; writes the output
/// extents through out_h/out_w when given.
std::size_t conv_params(const LayerSpec& layer);
std::uint64_t conv_macs(const LayerSpec& layer, int h, int w,
                        int* out_h = nullptr, int* out_w = nullptr);

/// Recurrent cells are counted once per frame at LR resolution; upsampler
/// layers at the resolution they actually run at.
CostReport cost(const NetworkSpec& spec, int lr_height, int lr_width);

/// CSV rows "layer,params,macs,subnet" followed by nothing else.
void write_cost_csv(std::ostream& os, const CostReport& report);
/// Human-readable totals with subnet shares.
void write_cost_summary(std::ostream& os, const CostReport& report);

}  // namespace vsrprune
