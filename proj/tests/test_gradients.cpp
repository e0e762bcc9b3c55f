#include <gtest/gtest.h>

#include "support.hpp"
#include "vsrprune/gradcheck.hpp"
#include "vsrprune/ops.hpp"
#include "vsrprune/pipeline.hpp"
#include "vsrprune/regularizer.hpp"

using namespace vsrprune;
using namespace vsrprune::testing;

namespace {

constexpr int kSeeds = 20;

// Projection onto a fixed random tensor turns any tensor-valued op into a
// scalar that is linear in each single entry, so central differences are exact
// up to float rounding, and gradients stay O(1) whatever the output size.
Var against(Var y, const Tensor& target) {
  Tape& tape = *y.tape();
  const Shape s = y.shape();
  Tensor r(Shape{1, s.c, s.h, s.w});
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = target[i];
  return sum(conv2d(y, tape.constant(r), std::nullopt, 1, 0));
}

void expect_pass(const GradCheckReport& r, const std::string& what, int seed) {
  EXPECT_TRUE(r.passed) << what << " seed " << seed << ": rel " << r.max_relative_error << " at "
                        << r.worst;
}

Tensor away_from_zero(Shape s, std::mt19937_64& rng, float margin) {
  Tensor t = random_tensor(s, rng);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i]) < margin) t[i] = t[i] < 0 ? -margin : margin;
  }
  return t;
}

}  // namespace

TEST(GradCheck, CharbonnierSmallPair) {
  std::mt19937_64 rng(0);
  const Tensor a = random_tensor(Shape{1, 1, 2, 2}, rng);
  const Tensor b = random_tensor(Shape{1, 1, 2, 2}, rng);
  const auto r = grad_check([](Tape&, const std::vector<Var>& v) { return charbonnier(v[0], v[1], 1e-6); },
                            {a, b}, 1e-3, 1e-3);
  EXPECT_TRUE(r.passed) << r.worst;
}

TEST(GradCheck, SumOfConvWrtKernel) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(Shape{1, 2, 4, 4}, rng);
  const Tensor w = random_tensor(Shape{3, 2, 3, 3}, rng);
  const auto r = grad_check(
      [&x](Tape& t, const std::vector<Var>& v) { return sum(conv2d(t.constant(x), v[0], std::nullopt, 1, 1)); },
      {w}, 1e-2, 1e-3);
  EXPECT_TRUE(r.passed) << r.worst;
}

TEST(GradCheck, ScaleOfOnesGivesSpatialSize) {
  const Tensor x(Shape{1, 3, 4, 5}, 1.0f);
  Tape tape;
  Var g = tape.parameter(Tensor::vector({0.3f, -2.0f, 1.0f}));
  tape.backward(sum(channel_scale(tape.constant(x), g)));
  for (int c = 0; c < 3; ++c) EXPECT_EQ(g.grad()[c], 20.0f);
}

TEST(GradCheck, ReportsWrongGradient) {
  // A function whose recorded backward is deliberately wrong must fail.
  const auto bad = [](Tape& t, const std::vector<Var>& v) {
    Tensor val = Tensor::scalar(v[0].value()[0] * v[0].value()[0]);
    return t.record(val, {v[0]}, [id = v[0].id()](Tape& tape, const Tensor& g) {
      tape.grad_buffer(id)[0] += g[0];  // should be 2x·g
    });
  };
  const auto r = grad_check(bad, {Tensor::scalar(3.0f)}, 1e-3, 1e-3);
  EXPECT_FALSE(r.passed);
}

TEST(GradSuite, Conv2d) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::uniform_int_distribution<int> c(1, 3), hw(3, 5), st(1, 2), pd(0, 1), kk(0, 1);
    const int k = 2 * kk(rng) + 1;
    const Shape in{1 + seed % 2, c(rng), hw(rng), hw(rng)};
    const int out = c(rng), stride = st(rng), pad = pd(rng);
    const Tensor x = random_tensor(in, rng);
    const Tensor w = random_tensor(Shape{out, in.c, k, k}, rng);
    const Tensor b = random_tensor(Shape{1, out, 1, 1}, rng);
    const Tensor target = random_tensor(conv2d(x, Kernel{w, b}, stride, pad).shape(), rng);
    const auto r = grad_check(
        [&](Tape&, const std::vector<Var>& v) { return against(conv2d(v[0], v[1], v[2], stride, pad), target); },
        {x, w, b}, 1e-1, 1e-3);
    expect_pass(r, "conv2d", seed);
  }
}

TEST(GradSuite, PixelShuffleAndInverse) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(200 + seed);
    std::uniform_int_distribution<int> d(1, 3);
    const Tensor x = random_tensor(Shape{d(rng), 4 * d(rng), d(rng), d(rng)}, rng);
    const Tensor t1 = random_tensor(pixel_shuffle(x, 2).shape(), rng);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(pixel_shuffle(v[0], 2), t1); },
                           {x}, 1e-1, 1e-3),
                "pixel_shuffle", seed);
    const Tensor y = random_tensor(Shape{1, d(rng), 2 * d(rng), 2 * d(rng)}, rng);
    const Tensor t2 = random_tensor(Shape{1, y.shape().c * 4, y.shape().h / 2, y.shape().w / 2}, rng);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(pixel_unshuffle(v[0], 2), t2); },
                           {y}, 1e-1, 1e-3),
                "pixel_unshuffle", seed);
  }
}

TEST(GradSuite, ChannelScale) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(300 + seed);
    const int group = seed % 2 == 0 ? 1 : 4;
    const int groups = 1 + seed % 3;
    const Tensor x = random_tensor(Shape{2, groups * group, 3, 2}, rng);
    const Tensor g = random_tensor(Shape{1, groups, 1, 1}, rng);
    const Tensor target = random_tensor(x.shape(), rng);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(channel_scale(v[0], v[1], group), target); },
                           {x, g}, 1e-1, 1e-3),
                "channel_scale", seed);
  }
}

TEST(GradSuite, Charbonnier) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(400 + seed);
    const Shape s{1 + seed % 4, 3, 2 + seed % 3, 3};
    // Residuals clear of zero, where the curvature peaks.
    const Tensor b = random_tensor(s, rng);
    Tensor a = b;
    const Tensor d = away_from_zero(s, rng, 0.2f);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += d[i];
    expect_pass(grad_check([](Tape&, const std::vector<Var>& v) { return charbonnier(v[0], v[1], 1e-3); },
                           {a, b}, 1e-2, 1e-3),
                "charbonnier", seed);
  }
}

TEST(GradSuite, SirPenalty) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(500 + seed);
    const int n = 3 + seed % 5;
    const Tensor g = random_tensor(Shape{1, n, 1, 1}, rng);
    std::vector<int> idx;
    for (int i = 0; i < n; i += 2) idx.push_back(i);
    const double alpha = 0.01 * (1 + seed);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return l2_penalty(v[0], idx, alpha); },
                           {g}, 1e-2, 1e-3),
                "l2_penalty", seed);
    // Exact form: 2·α·γ on unimportant entries, 0 elsewhere.
    Tape tape;
    Var gv = tape.parameter(g);
    tape.backward(l2_penalty(gv, idx, alpha));
    for (int i = 0; i < n; ++i) {
      const double want = i % 2 == 0 ? 2.0 * alpha * g[i] : 0.0;
      EXPECT_NEAR(gv.grad()[i], want, 1e-7);
    }
  }
}

TEST(GradSuite, SirPenaltyOverScalingState) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(550 + seed);
    ScalingState st;
    st.gammas["a:out"] = random_tensor(Shape{1, 4, 1, 1}, rng);
    st.gammas["b:group"] = random_tensor(Shape{1, 3, 1, 1}, rng);
    st.unimportant["a:out"] = {1, 3};
    st.unimportant["b:group"] = {0};
    st.alpha = 0.05;
    expect_pass(grad_check(
                    [&](Tape&, const std::vector<Var>& v) {
                      const std::map<std::string, Var> vars{{"a:out", v[0]}, {"b:group", v[1]}};
                      return sir_penalty(st, vars);
                    },
                    {st.gammas["a:out"], st.gammas["b:group"]}, 1e-2, 1e-3),
                "sir_penalty", seed);
  }
}

TEST(GradSuite, TemporalLoss) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(600 + seed);
    const Shape s{1 + seed % 2, 4, 3, 3};
    const Tensor tf = random_tensor(s, rng);
    const Tensor tb = random_tensor(s, rng);
    // Keep every residual clear of the MAE kink.
    Tensor f = tf, b = tb;
    const Tensor df = away_from_zero(s, rng, 0.15f), db = away_from_zero(s, rng, 0.15f);
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] += df[i];
      b[i] += db[i];
    }
    for (TemporalNorm norm : {TemporalNorm::MAE, TemporalNorm::MSE}) {
      expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return temporal_finetune_loss(v[0], v[1], tf, tb, norm); },
                             {f, b}, 1e-1, 1e-3),
                  "temporal_finetune_loss", seed);
    }
  }
}

TEST(GradSuite, RemainingPrimitives) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(700 + seed);
    const Shape s{2, 5, 3, 4};
    const Tensor x = away_from_zero(s, rng, 0.15f);
    const Tensor y = random_tensor(s, rng);
    const Tensor target = random_tensor(s, rng);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(leaky_relu(v[0], 0.1f), target); },
                           {x}, 1e-1, 1e-3),
                "leaky_relu", seed);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(add(v[0], scale(v[1], -0.7)), target); },
                           {x, y}, 1e-1, 1e-3),
                "add/scale", seed);
    const std::vector<int> idx{3, 0, 4};
    const Tensor tg = random_tensor(Shape{2, 3, 3, 4}, rng);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(gather_channels(v[0], idx), tg); },
                           {x}, 1e-1, 1e-3),
                "gather_channels", seed);
    const Tensor src = random_tensor(Shape{2, 3, 3, 4}, rng);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(scatter_add_channels(v[0], v[1], idx), target); },
                           {y, src}, 1e-1, 1e-3),
                "scatter_add_channels", seed);
    const std::vector<Offset> off{{1, -1}, {0, 2}};
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(shift(v[0], off), target); },
                           {y}, 1e-1, 1e-3),
                "shift", seed);
    const Tensor tc = random_tensor(Shape{2, 10, 3, 4}, rng);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(concat_channels(v[0], v[1]), tc); },
                           {x, y}, 1e-1, 1e-3),
                "concat_channels", seed);
    const Tensor small = random_tensor(Shape{1, 2, 2, 3}, rng);
    const Tensor tu = random_tensor(Shape{1, 2, 8, 12}, rng);
    expect_pass(grad_check([&](Tape&, const std::vector<Var>& v) { return against(bilinear_upsample(v[0], 4), tu); },
                           {small}, 1e-1, 1e-3),
                "bilinear_upsample", seed);
  }
}
