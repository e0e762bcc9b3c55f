#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "vsrprune/checkpoint.hpp"
#include "vsrprune/rewrite.hpp"

using namespace vsrprune;
using namespace vsrprune::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vsrprune_test_" + name);
  fs::remove_all(p);
  return p;
}

bool contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Validate, ToySpecIsWellFormed) {
  EXPECT_TRUE(validate(make_reference_spec(toy_reference_config())).empty());
  EXPECT_TRUE(validate(make_reference_spec(paper_scale_reference_config())).empty());
  ReferenceConfig uni = toy_reference_config();
  uni.bidirectional = false;
  EXPECT_TRUE(validate(make_reference_spec(uni)).empty());
}

TEST(Validate, UpsampleConvNeedsMultipleOfFour) {
  NetworkSpec spec = make_reference_spec(toy_reference_config());
  for (auto& l : spec.upsampler) {
    if (l.id == "up.upconv1") l.out_channels = 10;
  }
  EXPECT_TRUE(contains(validate(spec), "not divisible by 4"));
}

TEST(Validate, FusionMustSeeBothDirections) {
  NetworkSpec spec = make_reference_spec(toy_reference_config());
  spec.upsampler.front().in_channels = spec.trunk_width();
  EXPECT_TRUE(contains(validate(spec), "up.fusion"));
  EXPECT_THROW(require_valid(spec), ConfigError);
}

TEST(Validate, IsPureFunctionOfSpec) {
  NetworkSpec spec = make_reference_spec(toy_reference_config());
  spec.forward_cell.blocks[1].read_index = {3, 1};
  const auto a = validate(spec);
  const auto b = validate(spec);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Validate, RewrittenSpecsStayValidAndFullWidth) {
  for (int seed = 0; seed < 10; ++seed) {
    const NetworkSpec spec = make_reference_spec(tiny_config(seed));
    const Weights w = instantiate(spec, seed);
    const PruningPlan plan = random_plan(spec, w, 0.2 + 0.05 * seed, seed);
    const RewriteResult r = compile(spec, w, nullptr, plan);
    EXPECT_TRUE(validate(r.spec).empty()) << "seed " << seed;
    EXPECT_EQ(r.spec.forward_cell.trunk_width, spec.trunk_width());
    EXPECT_EQ(r.spec.backward_cell->trunk_width, spec.trunk_width());
    for (const auto& b : r.spec.forward_cell.blocks) EXPECT_EQ(b.trunk_width, spec.trunk_width());
  }
}

TEST(Prunable, ScopeFlagsAndNeverPrunedLayers) {
  NetworkSpec spec = make_reference_spec(toy_reference_config());
  const auto* fusion = find_layer(spec, "up.fusion");
  const auto* last = find_layer(spec, "up.conv_last");
  ASSERT_NE(fusion, nullptr);
  ASSERT_NE(last, nullptr);
  EXPECT_FALSE(fusion->prunable.any());
  EXPECT_FALSE(last->prunable.any());
  EXPECT_TRUE(find_layer(spec, "up.upconv1")->prunable.shuffle_groups);
  EXPECT_TRUE(find_layer(spec, "fwd.block00.conv1")->prunable.input_channels);
  apply_prune_scope(spec, PruneScope{false, true, false, false});
  EXPECT_FALSE(find_layer(spec, "fwd.block00.conv1")->prunable.input_channels);
  EXPECT_TRUE(find_layer(spec, "fwd.block00.conv1")->prunable.output_filters);
  EXPECT_FALSE(find_layer(spec, "fwd.block00.conv2")->prunable.output_filters);
  EXPECT_FALSE(find_layer(spec, "up.upconv1")->prunable.any());
}

TEST(Instantiate, SeedDeterminism) {
  const NetworkSpec spec = make_reference_spec(toy_reference_config());
  const Weights a = instantiate(spec, 7), b = instantiate(spec, 7), c = instantiate(spec, 8);
  bool any_diff = false;
  for (const auto& [id, k] : a) {
    EXPECT_TRUE(k.weight.bitwise_equal(b.at(id).weight)) << id;
    any_diff = any_diff || !k.weight.bitwise_equal(c.at(id).weight);
  }
  EXPECT_TRUE(any_diff);
}

TEST(Instantiate, FanInStd) {
  ReferenceConfig cfg = toy_reference_config();
  cfg.trunk_width = 64;
  const NetworkSpec spec = make_reference_spec(cfg);
  const Weights w = instantiate(spec, 1);
  const Kernel& k = w.at("fwd.block00.conv1");  // fan-in 64·9
  ASSERT_GE(k.weight.size(), 10000u);
  double ss = 0.0;
  for (float v : k.weight.values()) ss += static_cast<double>(v) * v;
  const double sd = std::sqrt(ss / static_cast<double>(k.weight.size()));
  const double want = std::sqrt(2.0 / (64 * 9));
  EXPECT_NEAR(sd, want, 0.2 * want);
  for (float v : k.bias->values()) EXPECT_EQ(v, 0.0f);
}

TEST(Instantiate, CheckWeightsNamesLayer) {
  const NetworkSpec spec = make_reference_spec(toy_reference_config());
  Weights w = instantiate(spec, 1);
  w["fwd.entry"].weight = Tensor(Shape{16, 18, 3, 3});
  try {
    check_weights(spec, w);
    FAIL() << "no error";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("fwd.entry"), std::string::npos);
  }
}

TEST(Checkpoint, RoundTripIsBitwise) {
  const NetworkSpec spec = make_reference_spec(tiny_config());
  const Weights w = instantiate(spec, 3);
  std::mt19937_64 rng(3);
  ScalingState st = random_scaling(spec, rng);
  st.unimportant["up.upconv1:group"] = {1, 4};
  st.alpha = 0.05;
  st.iteration = 17;
  const fs::path dir = scratch("roundtrip");
  save_checkpoint(dir, spec, w, &st);
  const Checkpoint ck = load_checkpoint(dir);
  EXPECT_EQ(ck.spec, spec);
  ASSERT_EQ(ck.weights.size(), w.size());
  for (const auto& [id, k] : w) {
    EXPECT_TRUE(ck.weights.at(id).weight.bitwise_equal(k.weight)) << id;
    EXPECT_TRUE(ck.weights.at(id).bias->bitwise_equal(*k.bias)) << id;
  }
  ASSERT_TRUE(ck.scaling.has_value());
  for (const auto& [id, g] : st.gammas) EXPECT_TRUE(ck.scaling->gammas.at(id).bitwise_equal(g));
  EXPECT_EQ(ck.scaling->unimportant, st.unimportant);
  EXPECT_EQ(ck.scaling->alpha, st.alpha);
  EXPECT_EQ(ck.scaling->iteration, 17);

  // Re-serializing gives the same manifest.
  const fs::path again = scratch("roundtrip2");
  save_checkpoint(again, ck.spec, ck.weights, &*ck.scaling);
  std::ifstream m1(dir / "manifest.txt"), m2(again / "manifest.txt");
  std::string a((std::istreambuf_iterator<char>(m1)), {}), b((std::istreambuf_iterator<char>(m2)), {});
  EXPECT_EQ(a, b);
}

TEST(Checkpoint, WithoutScalingLoadsWithoutScaling) {
  const NetworkSpec spec = make_reference_spec(tiny_config());
  const fs::path dir = scratch("noscaling");
  save_checkpoint(dir, spec, instantiate(spec, 1));
  EXPECT_FALSE(load_checkpoint(dir).scaling.has_value());
}

TEST(Checkpoint, TruncatedBlobFails) {
  const NetworkSpec spec = make_reference_spec(tiny_config());
  const fs::path dir = scratch("truncated");
  save_checkpoint(dir, spec, instantiate(spec, 1));
  const auto size = fs::file_size(dir / "weights.bin");
  fs::resize_file(dir / "weights.bin", size - 1);
  EXPECT_THROW(load_checkpoint(dir), LoadError);
}

TEST(Checkpoint, MissingDirectoryFails) {
  EXPECT_THROW(load_checkpoint(scratch("absent")), LoadError);
}

TEST(Checkpoint, SpecJsonRoundTrip) {
  NetworkSpec spec = make_reference_spec(tiny_config());
  spec.forward_cell.blocks[0].read_index = {0, 2, 5};
  spec.forward_cell.blocks[0].first_conv.in_channels = 3;
  EXPECT_EQ(network_from_json(to_json(spec)), spec);
}
