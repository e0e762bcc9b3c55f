#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "vsrprune/cost.hpp"

using namespace vsrprune;
using namespace vsrprune::testing;

TEST(Cost, EmptyNetworkIsZero) {
  const CostReport r = cost(NetworkSpec{}, 180, 320);
  EXPECT_EQ(r.total_params, 0u);
  EXPECT_EQ(r.total_macs, 0u);
}

TEST(Cost, SingleConvArithmetic) {
  LayerSpec l;
  l.id = "c";
  l.out_channels = l.in_channels = 64;
  l.kernel_h = l.kernel_w = 3;
  l.padding = 1;
  EXPECT_EQ(conv_macs(l, 180, 320), 57600ull * 64 * 64 * 9);
  EXPECT_EQ(conv_macs(l, 180, 320), 2123366400ull);
  EXPECT_EQ(conv_params(l), 64u * 64 * 9 + 64);
  l.bias = false;
  EXPECT_EQ(conv_params(l), 64u * 64 * 9);
}

TEST(Cost, PaperScaleCalibration) {
  const CostReport r = cost(make_reference_spec(paper_scale_reference_config()), 180, 320);
  EXPECT_NEAR(static_cast<double>(r.total_params), 4.9e6, 0.49e6);
  EXPECT_NEAR(static_cast<double>(r.total_macs), 338.5e9, 33.85e9);
  EXPECT_NEAR(r.mac_share(Subnet::Upsampler), 0.22, 0.04);
}

TEST(Cost, MatchesExecutedMacs) {
  const NetworkSpec spec = make_reference_spec(tiny_config());
  const Weights w = instantiate(spec, 1);
  std::mt19937_64 rng(1);
  const int frames = 3;
  const Batch b = make_batch({random_sequence(frames, 5, 7, rng, false)});
  reset_executed_macs();
  evaluate(spec, w, nullptr, b);
  EXPECT_EQ(executed_macs(), frames * cost(spec, 5, 7).total_macs);
}

TEST(Cost, PrunedCostMatchesExecution) {
  const NetworkSpec spec = make_reference_spec(tiny_config());
  const Weights w = instantiate(spec, 2);
  const RewriteResult r = compile(spec, w, nullptr, random_plan(spec, w, 0.5, 2), 6, 4);
  std::mt19937_64 rng(2);
  const Batch b = make_batch({random_sequence(2, 6, 4, rng, false)});
  reset_executed_macs();
  evaluate(r.spec, r.weights, nullptr, b);
  EXPECT_EQ(executed_macs(), 2 * r.after.total_macs);
  EXPECT_EQ(r.after.total_params, parameter_count(r.weights));
}

TEST(Cost, RscAddsNothingOverPlainConvPair) {
  // The RSC block costs exactly what two plain convs of the kept sizes cost.
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const NetworkSpec spec = make_reference_spec(tiny_config());
    const Weights w = instantiate(spec, seed);
    const int c = spec.trunk_width();
    PruningPlan plan = empty_plan(spec);
    auto pick = [&](const std::string& site) {
      SitePlan& sp = plan.sites.at(site);
      sp.kept.clear();
      sp.pruned.clear();
      for (int i = 0; i < c; ++i) (rng() % 3 == 0 ? sp.pruned : sp.kept).push_back(i);
      if (sp.kept.empty()) {
        sp.kept.push_back(sp.pruned.back());
        sp.pruned.pop_back();
      }
      return static_cast<std::uint64_t>(sp.kept.size());
    };
    const std::uint64_t r = pick("fwd.block01.conv1:in");
    const std::uint64_t m = pick("fwd.block01.conv1:out");
    const std::uint64_t o = pick("fwd.block01.conv2:out");
    const RewriteResult res = compile(spec, w, nullptr, plan, 9, 11);
    const std::uint64_t hw = 9 * 11, full = static_cast<std::uint64_t>(c) * c * 9;
    EXPECT_EQ(res.before.total_macs - res.after.total_macs, hw * (2 * full - m * r * 9 - o * m * 9));
    EXPECT_EQ(res.before.total_params - res.after.total_params,
              (2 * full + 2 * c) - (m * r * 9 + m) - (o * m * 9 + o));
  }
}

TEST(Cost, CsvAndSummary) {
  const CostReport r = cost(make_reference_spec(tiny_config()), 4, 4);
  std::ostringstream csv, summary;
  write_cost_csv(csv, r);
  write_cost_summary(summary, r);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "layer,params,macs,subnet");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, static_cast<int>(r.layers.size()));
  EXPECT_NE(summary.str().find("upsampler"), std::string::npos);
}
