#include "vsrprune/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace vsrprune {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in host order");

namespace {

struct Entry {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
  std::size_t length = 0;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LoadError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

Shape parse_shape(const std::string& s, const std::string& name) {
  Shape shape;
  if (std::sscanf(s.c_str(), "%dx%dx%dx%d", &shape.n, &shape.c, &shape.h,
                  &shape.w) != 4) {
    throw LoadError(name + ": malformed shape '" + s + "'");
  }
  return shape;
}

json scaling_json(const ScalingState& s) {
  json unimportant = json::object();
  for (const auto& [id, idx] : s.unimportant) unimportant[id] = idx;
  return {{"alpha", s.alpha},
          {"iteration", s.iteration},
          {"increments", s.increments},
          {"phase", to_string(s.phase)},
          {"schedule",
           {{"delta", s.schedule.delta},
            {"tau", s.schedule.tau},
            {"t1", s.schedule.t1},
            {"t2", s.schedule.t2}}},
          {"unimportant", unimportant}};
}

}  // namespace

void save_checkpoint(const fs::path& dir, const NetworkSpec& spec,
                     const Weights& weights, const ScalingState* scaling) {
  require_valid(spec);
  check_weights(spec, weights);
  fs::create_directories(dir);

  std::map<std::string, const Tensor*> tensors;
  for (const auto& [id, k] : weights) {
    tensors[id + ".weight"] = &k.weight;
    if (k.bias) tensors[id + ".bias"] = &*k.bias;
  }
  if (scaling) {
    for (const auto& [site, g] : scaling->gammas) tensors["gamma/" + site] = &g;
  }

  std::ofstream blob(dir / "weights.bin", std::ios::binary | std::ios::trunc);
  std::ostringstream manifest;
  std::size_t offset = 0;
  for (const auto& [name, t] : tensors) {
    const std::size_t bytes = t->size() * sizeof(float);
    blob.write(reinterpret_cast<const char*>(t->data()),
               static_cast<std::streamsize>(bytes));
    manifest << name << " float32 " << t->shape().str() << ' ' << offset << ' '
             << bytes << '\n';
    offset += bytes;
  }
  if (!blob) throw std::runtime_error("failed writing " + (dir / "weights.bin").string());
  blob.close();
  write_text(dir / "manifest.txt", manifest.str());
  write_text(dir / "network.json", to_json(spec) + "\n");
  if (scaling) {
    write_text(dir / "scaling.json", scaling_json(*scaling).dump(2) + "\n");
  } else {
    fs::remove(dir / "scaling.json");
  }
}

Checkpoint load_checkpoint(const fs::path& dir) {
  Checkpoint ckpt;
  try {
    ckpt.spec = network_from_json(read_text(dir / "network.json"));
  } catch (const ConfigError& e) {
    throw LoadError(e.what());
  }
  const std::string blob = read_text(dir / "weights.bin");

  std::map<std::string, Entry> entries;
  std::istringstream manifest(read_text(dir / "manifest.txt"));
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Entry e;
    std::string dtype, shape;
    if (!(ls >> e.name >> dtype >> shape >> e.offset >> e.length)) {
      throw LoadError("malformed manifest line '" + line + "'");
    }
    if (dtype != "float32") throw LoadError(e.name + ": unsupported dtype " + dtype);
    e.shape = parse_shape(shape, e.name);
    if (e.length != e.shape.numel() * sizeof(float)) {
      throw LoadError(e.name + ": manifest length disagrees with shape");
    }
    entries[e.name] = e;
  }

  auto take = [&](const std::string& name, Shape expected) {
    auto it = entries.find(name);
    if (it == entries.end()) throw LoadError(name + ": missing from manifest");
    const Entry& e = it->second;
    if (!(e.shape == expected)) {
      throw LoadError(name + ": manifest shape " + e.shape.str() +
                      " but spec expects " + expected.str());
    }
    if (e.offset + e.length > blob.size()) {
      throw LoadError(name + ": blob truncated (needs bytes up to " +
                      std::to_string(e.offset + e.length) + ", have " +
                      std::to_string(blob.size()) + ")");
    }
    Tensor t(expected);
    std::memcpy(t.data(), blob.data() + e.offset, e.length);
    entries.erase(it);
    return t;
  };

  try {
    require_valid(ckpt.spec);
  } catch (const ConfigError& e) {
    throw LoadError(e.what());
  }
  for (const LayerSpec* l : conv_layers(ckpt.spec)) {
    Kernel k;
    k.weight = take(l->id + ".weight", l->kernel_shape());
    if (l->bias) k.bias = take(l->id + ".bias", Shape{1, l->out_channels, 1, 1});
    ckpt.weights.emplace(l->id, std::move(k));
  }

  if (fs::exists(dir / "scaling.json")) {
    ScalingState s;
    try {
      const json j = json::parse(read_text(dir / "scaling.json"));
      s.alpha = j.at("alpha").get<double>();
      s.iteration = j.at("iteration").get<long>();
      s.increments = j.at("increments").get<long>();
      const std::string phase = j.at("phase").get<std::string>();
      s.phase = phase == "ramping"   ? SchedulePhase::Ramping
                : phase == "holding" ? SchedulePhase::Holding
                                     : SchedulePhase::Done;
      const json& sch = j.at("schedule");
      s.schedule.delta = sch.at("delta").get<double>();
      s.schedule.tau = sch.at("tau").get<double>();
      s.schedule.t1 = sch.at("t1").get<long>();
      s.schedule.t2 = sch.at("t2").get<long>();
      for (const auto& [id, idx] : j.at("unimportant").items()) {
        s.unimportant[id] = idx.get<std::vector<int>>();
      }
    } catch (const json::exception& e) {
      throw LoadError(std::string("scaling.json: ") + e.what());
    }
    for (const SiteRef& site : prunable_sites(ckpt.spec)) {
      s.gammas.emplace(site.id(),
                       take("gamma/" + site.id(), Shape{1, site.units, 1, 1}));
    }
    ckpt.scaling = std::move(s);
  }
  if (!entries.empty()) {
    throw LoadError(entries.begin()->first + ": not declared by the network spec");
  }
  return ckpt;
}

}  // namespace vsrprune
