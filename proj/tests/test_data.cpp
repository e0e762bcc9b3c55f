#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"
#include "vsrprune/data.hpp"
#include "vsrprune/image_io.hpp"

using namespace vsrprune;
using namespace vsrprune::testing;
namespace fs = std::filesystem;

namespace {

DegradationSpec bd() { return DegradationSpec{}; }
DegradationSpec bi() {
  DegradationSpec s;
  s.kind = DegradationKind::BI;
  return s;
}

}  // namespace

TEST(Degrade, ConstantStaysConstant) {
  for (const DegradationSpec& spec : {bd(), bi()}) {
    const Tensor hr(Shape{1, 3, 32, 24}, 0.375f);
    const Tensor lr = degrade(hr, spec);
    ASSERT_EQ(lr.shape(), (Shape{1, 3, 8, 6}));
    for (float v : lr.values()) EXPECT_NEAR(v, 0.375f, 1e-6);
  }
}

TEST(Degrade, GaussianTapsAreNormalized) {
  const auto g = gaussian_taps(1.6, 13);
  ASSERT_EQ(g.size(), 13u);
  double s = 0.0;
  for (double v : g) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(g[i], g[12 - i], 1e-15);
    EXPECT_NEAR(g[i + 1] / g[i], std::exp(((i - 6.0) * (i - 6.0) - (i - 5.0) * (i - 5.0)) / (2 * 1.6 * 1.6)), 1e-12);
  }
}

TEST(Degrade, ImpulseGivesSampledTaps) {
  const auto g = gaussian_taps(1.6, 13);
  // An impulse at every one of the 16 sampling phases: each LR image holds the
  // taps that land on the sampling grid, and together they cover all taps once.
  double total = 0.0;
  for (int py = 0; py < 4; ++py)
    for (int px = 0; px < 4; ++px) {
      Tensor hr(Shape{1, 1, 40, 40});
      const int cy = 20 + py, cx = 20 + px;
      hr.at(0, 0, cy, cx) = 1.0f;
      const Tensor lr = degrade(hr, bd());
      for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
          const int dy = 4 * y - cy + 6, dx = 4 * x - cx + 6;
          const double want = (dy >= 0 && dy < 13 && dx >= 0 && dx < 13) ? g[dy] * g[dx] : 0.0;
          EXPECT_NEAR(lr.at(0, 0, y, x), want, 1e-7);
          total += lr.at(0, 0, y, x);
        }
    }
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Degrade, BicubicReproducesRamp) {
  Tensor hr(Shape{1, 1, 32, 32});
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) hr.at(0, 0, y, x) = 0.02f * x + 0.01f * y + 0.1f;
  const Tensor lr = degrade(hr, bi());
  // LR pixel j is centred on HR coordinate 4j + 1.5.
  for (int y = 2; y < 6; ++y)
    for (int x = 2; x < 6; ++x)
      EXPECT_NEAR(lr.at(0, 0, y, x), 0.02 * (4 * x + 1.5) + 0.01 * (4 * y + 1.5) + 0.1, 1e-5);
}

TEST(Degrade, CubicKernelProperties) {
  EXPECT_EQ(cubic_kernel(0.0, -0.5), 1.0);
  EXPECT_EQ(cubic_kernel(1.0, -0.5), 0.0);
  EXPECT_EQ(cubic_kernel(2.0, -0.5), 0.0);
  EXPECT_EQ(cubic_kernel(-1.5, -0.5), cubic_kernel(1.5, -0.5));
}

TEST(Degrade, TranslationConsistentForBd) {
  std::mt19937_64 rng(1);
  const Tensor hr = random_tensor(Shape{1, 3, 48, 48}, rng, 0.0f, 1.0f);
  Tensor moved(hr.shape());
  for (int c = 0; c < 3; ++c)
    for (int y = 4; y < 48; ++y)
      for (int x = 0; x < 48; ++x) moved.at(0, c, y, x) = hr.at(0, c, y - 4, x);
  const Tensor a = degrade(hr, bd()), b = degrade(moved, bd());
  for (int c = 0; c < 3; ++c)
    for (int y = 3; y < 10; ++y)
      for (int x = 2; x < 10; ++x) EXPECT_NEAR(b.at(0, c, y, x), a.at(0, c, y - 1, x), 1e-6);
}

TEST(Degrade, IndivisibleExtentsThrow) {
  EXPECT_THROW(degrade(Tensor(Shape{1, 3, 30, 32}), bd()), ShapeError);
}

TEST(Synth, DeterministicPerSeed) {
  SynthConfig cfg;
  const Sequence a = synth_sequence(5, cfg), b = synth_sequence(5, cfg), c = synth_sequence(6, cfg);
  ASSERT_EQ(a.length(), cfg.frames);
  for (int t = 0; t < a.length(); ++t) {
    EXPECT_TRUE(a.frames[t].bitwise_equal(b.frames[t]));
    EXPECT_TRUE(a.hr[t].bitwise_equal(b.hr[t]));
  }
  EXPECT_FALSE(a.hr[0].bitwise_equal(c.hr[0]));
  EXPECT_EQ(a.frames[0].shape(), (Shape{1, 3, 16, 16}));
}

TEST(Synth, NoMotionMeansStillFrames) {
  SynthConfig cfg;
  cfg.motion_range = 0;
  const Sequence s = synth_sequence(2, cfg);
  for (int t = 1; t < s.length(); ++t) {
    EXPECT_TRUE(s.hr[t].bitwise_equal(s.hr[0]));
    EXPECT_TRUE(s.frames[t].bitwise_equal(s.frames[0]));
    EXPECT_EQ(s.motion[t - 1], (Offset{0, 0}));
  }
}

TEST(Synth, DeclaredMotionMatchesCorrelationPeak) {
  SynthConfig cfg;
  cfg.frames = 5;
  cfg.motion_range = 2;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Sequence s = synth_sequence(seed, cfg);
    for (int t = 0; t + 1 < s.length(); ++t) {
      const Tensor& a = s.hr[t];
      const Tensor& b = s.hr[t + 1];
      // Score every candidate shift by mean squared difference on the overlap.
      double best = 1e30;
      Offset arg{};
      for (int dy = -10; dy <= 10; ++dy)
        for (int dx = -10; dx <= 10; ++dx) {
          double se = 0.0;
          long n = 0;
          for (int c = 0; c < 3; ++c)
            for (int y = 12; y < 52; ++y)
              for (int x = 12; x < 52; ++x) {
                const double d = b.at(0, c, y, x) - a.at(0, c, y - dy, x - dx);
                se += d * d;
                ++n;
              }
          if (se / n < best) {
            best = se / n;
            arg = Offset{dy, dx};
          }
        }
      EXPECT_EQ(arg, (Offset{4 * s.motion[t].dy, 4 * s.motion[t].dx})) << "seed " << seed << " t " << t;
    }
  }
}

TEST(Metrics, IdenticalImages) {
  std::mt19937_64 rng(2);
  const Tensor a = random_tensor(Shape{1, 3, 16, 16}, rng, 0.0f, 1.0f);
  EXPECT_EQ(psnr(a, a), 100.0);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Metrics, PsnrOfKnownMse) {
  Tensor a(Shape{1, 1, 4, 4}, 0.5f), b(Shape{1, 1, 4, 4}, 0.6f);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
  EXPECT_NEAR(psnr(a, b, 2.0), 20.0 + 20.0 * std::log10(2.0), 1e-5);
}

TEST(Metrics, MatchLoopOracles) {
  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const Tensor a = random_tensor(Shape{1, 3, 20, 17}, rng, 0.0f, 1.0f);
    Tensor b = a;
    const Tensor noise = random_tensor(a.shape(), rng, -0.1f, 0.1f);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += noise[i];
    EXPECT_NEAR(psnr(a, b), psnr_oracle(a, b, 1.0), 1e-6);
    EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b, 1.0), 1e-6);
    EXPECT_EQ(psnr(a, b), psnr(b, a));
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
  }
}

TEST(Metrics, ShapeMismatchThrows) {
  EXPECT_THROW(psnr(Tensor(Shape{1, 3, 4, 4}), Tensor(Shape{1, 3, 4, 5})), ShapeError);
  EXPECT_THROW(ssim(Tensor(Shape{1, 3, 16, 16}), Tensor(Shape{1, 1, 16, 16})), ShapeError);
}

TEST(ImageIo, PngRoundTripWithinQuantization) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor(Shape{1, 3, 9, 7}, rng, 0.0f, 1.0f);
  const fs::path p = fs::temp_directory_path() / "vsrprune_test_io.png";
  write_png(p, a);
  const Tensor b = read_png(p);
  ASSERT_EQ(b.shape(), a.shape());
  EXPECT_LE(max_abs_diff(a, b), 0.5f / 255.0f + 1e-6f);
  // Values already on the 8-bit grid survive exactly.
  write_png(p, b);
  EXPECT_TRUE(read_png(p).bitwise_equal(b));
}

TEST(ImageIo, SequenceDirectoryRoundTrip) {
  SynthConfig cfg;
  cfg.frames = 3;
  const Sequence s = synth_sequence(4, cfg);
  const fs::path dir = fs::temp_directory_path() / "vsrprune_test_seq";
  fs::remove_all(dir);
  save_sequence(dir, s);
  const Sequence back = load_sequence(dir);
  ASSERT_EQ(back.length(), 3);
  ASSERT_EQ(back.hr.size(), 3u);
  EXPECT_EQ(back.motion, s.motion);
  EXPECT_LE(max_abs_diff(back.frames[1], s.frames[1]), 0.5f / 255.0f + 1e-6f);
  // Without the motion sidecar, alignment falls back to zero shift.
  fs::remove(dir / "lr" / "motion.txt");
  fs::remove(dir / "hr" / "motion.txt");
  const Sequence still = load_sequence(dir);
  for (const Offset& o : still.motion) EXPECT_EQ(o, (Offset{0, 0}));
}

TEST(ImageIo, MissingDirectoryFails) {
  EXPECT_THROW(load_sequence(fs::temp_directory_path() / "vsrprune_absent_dir"), IoError);
}
