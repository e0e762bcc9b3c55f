#include "vsrprune/rewrite.hpp"

#include <algorithm>
#include <map>
#include <ostream>

namespace vsrprune {

namespace {

void check_keep(const std::string& what, const std::vector<int>& keep,
                int limit) {
  if (keep.empty()) throw RewriteError(what + ": empty kept set");
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] < 0 || keep[i] >= limit || (i > 0 && keep[i] <= keep[i - 1])) {
      throw RewriteError(what + ": kept indices must be sorted, distinct and in [0, " +
                         std::to_string(limit) + ")");
    }
  }
}

std::vector<int> all_indices(int n) {
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::vector<float> ones(int n) { return std::vector<float>(static_cast<std::size_t>(n), 1.0f); }

std::vector<int> compose(const std::vector<int>& outer, const std::vector<int>& keep) {
  std::vector<int> out;
  out.reserve(keep.size());
  for (int k : keep) out.push_back(outer[k]);
  return out;
}

/// new[o', i'] = out_scale[o]·in_scale[i]·W[o, i]; bias scaled by out_scale.
Kernel slice_kernel(const Kernel& k, const std::vector<int>& outs,
                    const std::vector<int>& ins, const std::vector<float>& out_scale,
                    const std::vector<float>& in_scale) {
  const Shape s = k.weight.shape();
  Kernel r;
  r.weight = Tensor(Shape{static_cast<int>(outs.size()), static_cast<int>(ins.size()),
                          s.h, s.w});
  for (std::size_t o = 0; o < outs.size(); ++o) {
    for (std::size_t i = 0; i < ins.size(); ++i) {
      const float f = out_scale[outs[o]] * in_scale[ins[i]];
      const float* src = k.weight.data() + k.weight.offset(outs[o], ins[i], 0, 0);
      float* dst = r.weight.data() +
                   r.weight.offset(static_cast<int>(o), static_cast<int>(i), 0, 0);
      for (std::size_t p = 0; p < s.plane(); ++p) {
        dst[p] = f == 1.0f ? src[p] : f * src[p];
      }
    }
  }
  if (k.bias) {
    Tensor b(Shape{1, static_cast<int>(outs.size()), 1, 1});
    for (std::size_t o = 0; o < outs.size(); ++o) {
      b[o] = out_scale[outs[o]] == 1.0f ? (*k.bias)[outs[o]]
                                        : out_scale[outs[o]] * (*k.bias)[outs[o]];
    }
    r.bias = std::move(b);
  }
  return r;
}

std::vector<float> gamma_or_ones(const ScalingState* scaling,
                                 const std::string& site, int n) {
  if (scaling == nullptr) return ones(n);
  auto it = scaling->gammas.find(site);
  if (it == scaling->gammas.end()) return ones(n);
  if (static_cast<int>(it->second.size()) != n) {
    throw RewriteError(site + ": scaling vector has " +
                       std::to_string(it->second.size()) + " entries, expected " +
                       std::to_string(n));
  }
  return it->second.values();
}

bool has_gamma(const ScalingState* scaling, const std::string& site) {
  return scaling != nullptr && scaling->gammas.count(site) > 0;
}

void check_plan(const NetworkSpec& spec, const PruningPlan& plan) {
  std::map<std::string, int> sites;
  for (const SiteRef& s : prunable_sites(spec)) sites[s.id()] = s.units;
  for (const auto& [id, sp] : plan.sites) {
    auto it = sites.find(id);
    if (it == sites.end()) {
      throw RewriteError("plan references unknown or non-prunable site " + id);
    }
    if (it->second != sp.units) {
      throw RewriteError("plan site " + id + " has " + std::to_string(sp.units) +
                         " units, network has " + std::to_string(it->second));
    }
  }
  for (const auto& u : plan.unimportant) {
    auto it = sites.find(u.site());
    if (it == sites.end() || u.index < 0 || u.index >= it->second) {
      throw RewriteError("plan unit " + u.site() + "[" + std::to_string(u.index) +
                         "] does not exist");
    }
  }
}

}  // namespace

PrunedBlock apply_rsc_rewrite(const ResidualBlockSpec& block, const Kernel& first,
                              const Kernel& second, const BlockGammas& gammas,
                              const std::vector<int>& read,
                              const std::vector<int>& mid,
                              const std::vector<int>& write) {
  const int n_read = block.first_conv.in_channels;
  const int n_mid = block.first_conv.out_channels;
  const int n_write = block.second_conv.out_channels;
  check_keep(block.first_conv.id + " read set", read, n_read);
  check_keep(block.first_conv.id + " mid set", mid, n_mid);
  check_keep(block.second_conv.id + " write set", write, n_write);
  const std::vector<float> g_read = gammas.read.empty() ? ones(n_read) : gammas.read;
  const std::vector<float> g_mid = gammas.mid.empty() ? ones(n_mid) : gammas.mid;
  const std::vector<float> g_write = gammas.write.empty() ? ones(n_write) : gammas.write;
  if (static_cast<int>(g_read.size()) != n_read ||
      static_cast<int>(g_mid.size()) != n_mid ||
      static_cast<int>(g_write.size()) != n_write) {
    throw RewriteError(block.first_conv.id + ": scaling vector length mismatch");
  }

  PrunedBlock out;
  out.spec = block;
  out.spec.read_index = compose(block.read_index, read);
  out.spec.write_index = compose(block.write_index, write);
  out.spec.first_conv.in_channels = static_cast<int>(read.size());
  out.spec.first_conv.out_channels = static_cast<int>(mid.size());
  out.spec.second_conv.in_channels = static_cast<int>(mid.size());
  out.spec.second_conv.out_channels = static_cast<int>(write.size());
  out.first = slice_kernel(first, mid, read, g_mid, g_read);
  out.second = slice_kernel(second, write, mid, g_write, ones(n_mid));
  return out;
}

PrunedShuffle apply_shuffle_rewrite(const LayerSpec& upsample,
                                    const Kernel& upsample_kernel,
                                    const std::vector<float>& group_gamma,
                                    const std::vector<int>& groups,
                                    const LayerSpec& consumer,
                                    const Kernel& consumer_kernel) {
  if (upsample.out_channels % 4 != 0) {
    throw RewriteError(upsample.id + ": " + std::to_string(upsample.out_channels) +
                       " filters are not a whole number of shuffle groups");
  }
  const int n_groups = upsample.out_channels / 4;
  check_keep(upsample.id + " group set", groups, n_groups);
  if (consumer.in_channels != n_groups) {
    throw RewriteError(consumer.id + ": expects " +
                       std::to_string(consumer.in_channels) +
                       " inputs, shuffle produces " + std::to_string(n_groups));
  }
  const std::vector<float> g = group_gamma.empty() ? ones(n_groups) : group_gamma;
  if (static_cast<int>(g.size()) != n_groups) {
    throw RewriteError(upsample.id + ": group scaling vector length mismatch");
  }
  std::vector<int> filters;
  std::vector<float> filter_scale(static_cast<std::size_t>(upsample.out_channels));
  for (int k = 0; k < n_groups; ++k) {
    for (int j = 0; j < 4; ++j) filter_scale[4 * k + j] = g[k];
  }
  for (int k : groups) {
    for (int j = 0; j < 4; ++j) filters.push_back(4 * k + j);
  }
  PrunedShuffle out;
  out.upsample = upsample;
  out.upsample.out_channels = static_cast<int>(filters.size());
  out.upsample_kernel = slice_kernel(upsample_kernel, filters,
                                     all_indices(upsample.in_channels),
                                     filter_scale, ones(upsample.in_channels));
  out.consumer = consumer;
  out.consumer.in_channels = static_cast<int>(groups.size());
  out.consumer_kernel = slice_kernel(consumer_kernel,
                                     all_indices(consumer.out_channels), groups,
                                     ones(consumer.out_channels), ones(n_groups));
  return out;
}

RewriteResult compile(const NetworkSpec& spec, const Weights& weights,
                      const ScalingState* scaling, const PruningPlan& plan,
                      int cost_h, int cost_w) {
  require_valid(spec);
  check_weights(spec, weights);
  check_plan(spec, plan);

  RewriteResult result;
  result.spec = spec;
  result.weights = weights;
  auto fold = [&](const std::string& site, const std::string& layer, int kept,
                  int units) {
    result.folds.push_back({site, layer, kept, units, has_gamma(scaling, site)});
  };
  auto kept_of = [&](const LayerSpec& l, UnitKind kind, int units) {
    const std::string site = site_id(l.id, kind);
    const bool prunable = (kind == UnitKind::OutputFilter && l.prunable.output_filters) ||
                          (kind == UnitKind::InputChannel && l.prunable.input_channels) ||
                          (kind == UnitKind::ShuffleGroup && l.prunable.shuffle_groups);
    return prunable ? plan.kept(site, units) : all_indices(units);
  };

  auto rewrite_cell = [&](RecurrentCellSpec& cell) {
    // Entry conv: keep filters, write them into their trunk channels.
    LayerSpec& e = cell.entry_conv;
    if (e.prunable.output_filters) {
      const std::string site = site_id(e.id, UnitKind::OutputFilter);
      const auto keep = kept_of(e, UnitKind::OutputFilter, e.out_channels);
      check_keep(e.id + " filter set", keep, e.out_channels);
      const auto g = gamma_or_ones(scaling, site, e.out_channels);
      Kernel& k = result.weights.at(e.id);
      k = slice_kernel(k, keep, all_indices(e.in_channels), g, ones(e.in_channels));
      fold(site, e.id, static_cast<int>(keep.size()), e.out_channels);
      cell.entry_index = compose(cell.entry_index, keep);
      e.out_channels = static_cast<int>(keep.size());
    }
    for (ResidualBlockSpec& b : cell.blocks) {
      const LayerSpec& f = b.first_conv;
      const LayerSpec& s = b.second_conv;
      const auto read = kept_of(f, UnitKind::InputChannel, f.in_channels);
      const auto mid = kept_of(f, UnitKind::OutputFilter, f.out_channels);
      const auto write = kept_of(s, UnitKind::OutputFilter, s.out_channels);
      BlockGammas g;
      if (f.prunable.input_channels) g.read = gamma_or_ones(scaling, b.read_gamma_site, f.in_channels);
      if (f.prunable.output_filters) g.mid = gamma_or_ones(scaling, b.mid_gamma_site, f.out_channels);
      if (s.prunable.output_filters) g.write = gamma_or_ones(scaling, b.write_gamma_site, s.out_channels);
      if (f.prunable.input_channels) fold(b.read_gamma_site, f.id, static_cast<int>(read.size()), f.in_channels);
      if (f.prunable.output_filters) fold(b.mid_gamma_site, f.id, static_cast<int>(mid.size()), f.out_channels);
      if (s.prunable.output_filters) fold(b.write_gamma_site, s.id, static_cast<int>(write.size()), s.out_channels);
      const std::string first_id = f.id;
      const std::string second_id = s.id;
      PrunedBlock pb = apply_rsc_rewrite(b, result.weights.at(first_id),
                                         result.weights.at(second_id), g, read,
                                         mid, write);
      b = std::move(pb.spec);
      result.weights.at(first_id) = std::move(pb.first);
      result.weights.at(second_id) = std::move(pb.second);
    }
  };
  rewrite_cell(result.spec.forward_cell);
  if (result.spec.backward_cell) rewrite_cell(*result.spec.backward_cell);

  // Upsampler: each pruned conv shrinks the next conv's inputs.
  auto& up = result.spec.upsampler;
  for (std::size_t i = 0; i < up.size(); ++i) {
    LayerSpec& l = up[i];
    if (!l.is_conv()) continue;
    std::size_t next = i + 1;
    while (next < up.size() && !up[next].is_conv()) ++next;
    if (l.prunable.shuffle_groups) {
      if (next >= up.size()) throw RewriteError(l.id + ": no consumer conv");
      const std::string site = site_id(l.id, UnitKind::ShuffleGroup);
      const int n_groups = l.out_channels / 4;
      const auto keep = kept_of(l, UnitKind::ShuffleGroup, n_groups);
      PrunedShuffle ps = apply_shuffle_rewrite(
          l, result.weights.at(l.id), gamma_or_ones(scaling, site, n_groups), keep,
          up[next], result.weights.at(up[next].id));
      fold(site, l.id, static_cast<int>(keep.size()), n_groups);
      result.weights.at(l.id) = std::move(ps.upsample_kernel);
      result.weights.at(up[next].id) = std::move(ps.consumer_kernel);
      l = std::move(ps.upsample);
      up[next] = std::move(ps.consumer);
    } else if (l.prunable.output_filters) {
      if (next >= up.size()) throw RewriteError(l.id + ": no consumer conv");
      const std::string site = site_id(l.id, UnitKind::OutputFilter);
      const auto keep = kept_of(l, UnitKind::OutputFilter, l.out_channels);
      check_keep(l.id + " filter set", keep, l.out_channels);
      const auto g = gamma_or_ones(scaling, site, l.out_channels);
      Kernel& k = result.weights.at(l.id);
      k = slice_kernel(k, keep, all_indices(l.in_channels), g, ones(l.in_channels));
      LayerSpec& c = up[next];
      Kernel& ck = result.weights.at(c.id);
      ck = slice_kernel(ck, all_indices(c.out_channels), keep, ones(c.out_channels),
                        ones(c.in_channels));
      fold(site, l.id, static_cast<int>(keep.size()), l.out_channels);
      l.out_channels = static_cast<int>(keep.size());
      c.in_channels = static_cast<int>(keep.size());
    }
  }

  require_valid(result.spec);
  check_weights(result.spec, result.weights);
  result.before = cost(spec, cost_h, cost_w);
  result.after = cost(result.spec, cost_h, cost_w);
  return result;
}

void write_fold_report(std::ostream& os, const RewriteResult& r) {
  os << "site,layer,kept,units,gamma_folded\n";
  for (const auto& f : r.folds) {
    os << f.site << ',' << f.layer << ',' << f.kept << ',' << f.units << ','
       << (f.gamma_folded ? "yes" : "no") << '\n';
  }
}

}  // namespace vsrprune
