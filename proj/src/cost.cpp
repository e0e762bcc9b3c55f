#include "vsrprune/cost.hpp"

#include <iomanip>

namespace vsrprune {

double CostReport::mac_share(Subnet s) const {
  if (total_macs == 0) return 0.0;
  auto it = subnet_macs.find(s);
  return it == subnet_macs.end()
             ? 0.0
             : static_cast<double>(it->second) / static_cast<double>(total_macs);
}

double CostReport::layer_macs(const std::string& id) const {
  for (const auto& l : layers) {
    if (l.layer == id) return static_cast<double>(l.macs);
  }
  return 0.0;
}

std::size_t conv_params(const LayerSpec& l) {
  return static_cast<std::size_t>(l.out_channels) * l.in_channels * l.kernel_h *
             l.kernel_w +
         (l.bias ? static_cast<std::size_t>(l.out_channels) : 0);
}

std::uint64_t conv_macs(const LayerSpec& l, int h, int w, int* out_h,
                        int* out_w) {
  const int ho = (h + 2 * l.padding - l.kernel_h) / l.stride + 1;
  const int wo = (w + 2 * l.padding - l.kernel_w) / l.stride + 1;
  if (out_h) *out_h = ho;
  if (out_w) *out_w = wo;
  return static_cast<std::uint64_t>(ho) * wo * l.out_channels * l.in_channels *
         l.kernel_h * l.kernel_w;
}

CostReport cost(const NetworkSpec& spec, int lr_height, int lr_width) {
  CostReport r;
  r.height = lr_height;
  r.width = lr_width;
  auto push = [&](const LayerSpec& l, int h, int w, int* oh, int* ow) {
    LayerCost c;
    c.layer = l.id;
    c.subnet = subnet_of(l.id);
    c.params = conv_params(l);
    c.macs = conv_macs(l, h, w, oh, ow);
    r.total_params += c.params;
    r.total_macs += c.macs;
    r.subnet_params[c.subnet] += c.params;
    r.subnet_macs[c.subnet] += c.macs;
    r.layers.push_back(std::move(c));
  };
  auto cell = [&](const RecurrentCellSpec& cs) {
    push(cs.entry_conv, lr_height, lr_width, nullptr, nullptr);
    for (const auto& b : cs.blocks) {
      push(b.first_conv, lr_height, lr_width, nullptr, nullptr);
      push(b.second_conv, lr_height, lr_width, nullptr, nullptr);
    }
  };
  cell(spec.forward_cell);
  if (spec.backward_cell) cell(*spec.backward_cell);
  int h = lr_height;
  int w = lr_width;
  for (const auto& l : spec.upsampler) {
    if (l.is_conv()) {
      push(l, h, w, &h, &w);
    } else if (l.kind == LayerKind::PixelShuffle) {
      h *= l.factor;
      w *= l.factor;
    }
  }
  return r;
}

void write_cost_csv(std::ostream& os, const CostReport& report) {
  os << "layer,params,macs,subnet\n";
  for (const auto& l : report.layers) {
    os << l.layer << ',' << l.params << ',' << l.macs << ',' << to_string(l.subnet)
       << '\n';
  }
}

void write_cost_summary(std::ostream& os, const CostReport& report) {
  os << "resolution " << report.height << "x" << report.width << " (LR)\n";
  os << std::fixed << std::setprecision(3);
  os << "params " << report.total_params / 1e6 << " M\n";
  os << "FLOPs  " << static_cast<double>(report.total_macs) / 1e9
     << " G (1 MAC = 1 FLOP)\n";
  for (const auto& [s, macs] : report.subnet_macs) {
    os << "  " << to_string(s) << ": params " << report.subnet_params.at(s) / 1e6
       << " M, FLOPs " << static_cast<double>(macs) / 1e9 << " G ("
       << std::setprecision(1) << 100.0 * report.mac_share(s) << "%)\n"
       << std::setprecision(3);
  }
}

}  // namespace vsrprune
