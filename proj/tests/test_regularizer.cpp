#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "vsrprune/optim.hpp"
#include "vsrprune/regularizer.hpp"

using namespace vsrprune;
using namespace vsrprune::testing;

namespace {

Batch one_batch(std::uint64_t seed, int frames = 3) {
  std::mt19937_64 rng(seed);
  return make_batch({random_sequence(frames, 6, 5, rng, false)});
}

void expect_same_eval(const Evaluation& a, const Evaluation& b) {
  ASSERT_EQ(a.sr.size(), b.sr.size());
  for (std::size_t t = 0; t < a.sr.size(); ++t) {
    EXPECT_TRUE(a.sr[t].bitwise_equal(b.sr[t])) << "frame " << t;
    EXPECT_TRUE(a.forward_states[t].bitwise_equal(b.forward_states[t])) << "frame " << t;
    EXPECT_TRUE(a.backward_states[t].bitwise_equal(b.backward_states[t])) << "frame " << t;
  }
}

// One SIR-only optimizer step on every gamma; no data term.
void penalty_step(ScalingState& st, Adam& adam, double lr) {
  Tape tape;
  const auto vars = bind_gammas(tape, st, true);
  tape.backward(sir_penalty(st, vars));
  for (auto& [id, g] : st.gammas) adam.step(id, g, vars.at(id).grad(), lr);
  step_schedule(st);
}

}  // namespace

TEST(Inject, OnesPreserveOutputBitwise) {
  const NetworkSpec spec = make_reference_spec(tiny_config());
  const Weights w = instantiate(spec, 2);
  const ScalingState st = inject_scaling(spec);
  EXPECT_EQ(st.gammas.size(), prunable_sites(spec).size());
  const Batch b = one_batch(2);
  expect_same_eval(evaluate(spec, w, nullptr, b), evaluate(spec, w, &st, b));
}

TEST(Inject, ZeroWriteGammaSilencesChannel) {
  const NetworkSpec spec = make_reference_spec(tiny_config());
  Weights w = instantiate(spec, 3);
  for (auto& [id, k] : w)
    for (std::size_t i = 0; i < k.bias->size(); ++i) (*k.bias)[i] = 0.3f;  // bias must vanish too
  ScalingState st = inject_scaling(spec);
  st.gammas.at("fwd.block01.conv2:out")[5] = 0.0f;
  Weights zeroed = w;
  Kernel& k = zeroed.at("fwd.block01.conv2");
  const std::size_t per = k.weight.size() / k.out_channels();
  for (std::size_t i = 0; i < per; ++i) k.weight[5 * per + i] = 0.0f;
  (*k.bias)[5] = 0.0f;
  const Batch b = one_batch(3);
  expect_same_eval(evaluate(spec, w, &st, b), evaluate(spec, zeroed, nullptr, b));
}

TEST(Inject, ZeroShuffleGammaSilencesFourChannels) {
  const NetworkSpec spec = make_reference_spec(tiny_config());
  Weights w = instantiate(spec, 4);
  for (auto& [id, k] : w)
    for (std::size_t i = 0; i < k.bias->size(); ++i) (*k.bias)[i] = -0.2f;
  ScalingState st = inject_scaling(spec);
  st.gammas.at("up.upconv2:group")[2] = 0.0f;
  Weights zeroed = w;
  Kernel& k = zeroed.at("up.upconv2");
  const std::size_t per = k.weight.size() / k.out_channels();
  for (int f = 8; f < 12; ++f) {
    for (std::size_t i = 0; i < per; ++i) k.weight[f * per + i] = 0.0f;
    (*k.bias)[f] = 0.0f;
  }
  const Batch b = one_batch(4);
  expect_same_eval(evaluate(spec, w, &st, b), evaluate(spec, zeroed, nullptr, b));
}

TEST(SirPenalty, HandValues) {
  ScalingState st;
  st.gammas["a:out"] = Tensor::vector({0.5f, 3.0f, -0.5f});
  st.alpha = 0.1;
  EXPECT_EQ(sir_penalty(st), 0.0);
  st.unimportant["a:out"] = {0, 2};
  EXPECT_NEAR(sir_penalty(st), 0.05, 1e-12);
}

TEST(SirPenalty, MatchesLoopOracleAndTapeForm) {
  std::mt19937_64 rng(5);
  const NetworkSpec spec = make_reference_spec(tiny_config());
  ScalingState st = random_scaling(spec, rng);
  mark_unimportant(st, random_plan(spec, instantiate(spec, 5), 0.5, 5));
  st.alpha = 0.07;
  double oracle = 0.0;
  for (const auto& [id, idx] : st.unimportant)
    for (int i : idx) oracle += static_cast<double>(st.gammas.at(id)[i]) * st.gammas.at(id)[i];
  oracle *= 0.07;
  EXPECT_NEAR(sir_penalty(st), oracle, 1e-9);
  Tape tape;
  const auto vars = bind_gammas(tape, st, true);
  Var pen = sir_penalty(st, vars);
  EXPECT_NEAR(pen.value()[0], oracle, 1e-5 * oracle);
  tape.backward(pen);
  for (const auto& [id, g] : st.gammas) {
    std::set<int> bad;
    if (st.unimportant.count(id)) bad.insert(st.unimportant.at(id).begin(), st.unimportant.at(id).end());
    const Tensor& grad = vars.at(id).grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double want = bad.count(static_cast<int>(i)) ? 2 * 0.07 * g[i] : 0.0;
      EXPECT_NEAR(grad.size() ? grad[i] : 0.0f, want, 1e-6) << id << "[" << i << "]";
    }
  }
}

TEST(Schedule, PaperValuesReachCapAndDone) {
  ScalingState st;
  st.schedule = SirSchedule{1e-4, 0.1, 5, 3375};
  EXPECT_EQ(st.schedule.cap_iteration(), 5000);
  EXPECT_EQ(st.schedule.done_iteration(), 8375);
  long first_cap = -1, first_done = -1;
  for (long i = 1; i <= 9000; ++i) {
    step_schedule(st);
    EXPECT_LE(st.alpha, 0.1);
    if (first_cap < 0 && st.alpha == 0.1) first_cap = st.iteration;
    if (first_done < 0 && st.phase == SchedulePhase::Done) first_done = st.iteration;
    if (st.iteration == 4995) EXPECT_NEAR(st.alpha, 0.0999, 1e-12);
  }
  EXPECT_EQ(first_cap, 5000);
  EXPECT_EQ(first_done, 8375);
}

TEST(Schedule, LargeDeltaClampsAtFirstBoundary) {
  ScalingState st;
  st.schedule = SirSchedule{0.5, 0.1, 3, 2};
  step_schedule(st);
  step_schedule(st);
  EXPECT_EQ(st.alpha, 0.0);
  step_schedule(st);
  EXPECT_EQ(st.alpha, 0.1);
  EXPECT_EQ(st.phase, SchedulePhase::Holding);
  step_schedule(st);
  step_schedule(st);
  EXPECT_EQ(st.phase, SchedulePhase::Done);
}

TEST(Schedule, RejectsBadParameters) {
  ScalingState st;
  st.schedule = SirSchedule{0.0, 0.1, 5, 10};
  EXPECT_THROW(step_schedule(st), ConfigError);
  st.schedule = SirSchedule{1e-3, 0.1, 0, 10};
  EXPECT_THROW(step_schedule(st), ConfigError);
}

TEST(GammaLog, OnesWithHalfPruned) {
  ScalingState st;
  st.gammas["a:out"] = Tensor(Shape{1, 4, 1, 1}, 1.0f);
  st.unimportant["a:out"] = {0, 1};
  const GammaRecord r = gamma_trajectory_record(st);
  EXPECT_EQ(r.iteration, 0);
  EXPECT_EQ(r.mean_gamma_pruned, 1.0);
  EXPECT_EQ(r.mean_gamma_kept, 1.0);
  std::ostringstream os;
  write_gamma_csv_header(os);
  write_gamma_csv_row(os, r);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "iter,alpha,mean_gamma_pruned,mean_gamma_kept");
}

TEST(GammaLog, PenaltyOnlyDynamics) {
  const NetworkSpec spec = make_reference_spec(tiny_config());
  ScalingState st = inject_scaling(spec);
  mark_unimportant(st, random_plan(spec, instantiate(spec, 6), 0.5, 6));
  st.schedule = SirSchedule{1e-2, 0.1, 1, 100};
  Adam adam;
  const double lr = 1e-3;
  GammaRecord prev = gamma_trajectory_record(st);
  const ScalingState start = st;
  const int steps = 60;
  for (int i = 0; i < steps; ++i) {
    const ScalingState before = st;
    penalty_step(st, adam, lr);
    const GammaRecord r = gamma_trajectory_record(st);
    if (i > 0) EXPECT_LT(r.mean_gamma_pruned, prev.mean_gamma_pruned) << "step " << i;
    EXPECT_EQ(r.mean_gamma_kept, 1.0);
    for (const auto& [id, g] : st.gammas)
      for (std::size_t k = 0; k < g.size(); ++k) EXPECT_LE(std::abs(g[k]), std::abs(before.gammas.at(id)[k]));
    prev = r;
  }
  // With a gradient of constant sign, Adam moves by about lr per step once
  // alpha is positive (the first step has alpha = 0 and does not move).
  EXPECT_NEAR(prev.mean_gamma_pruned, 1.0 - (steps - 1) * lr, 0.1 * steps * lr);
  EXPECT_EQ(gamma_trajectory_record(start).mean_gamma_pruned, 1.0);
}

TEST(Optim, CosineEndpoints) {
  EXPECT_EQ(cosine_lr(2e-4, 1e-7, 0, 1000), 2e-4);
  EXPECT_EQ(cosine_lr(2e-4, 1e-7, 1000, 1000), 1e-7);
  EXPECT_EQ(cosine_lr(2e-4, 1e-7, 5000, 1000), 1e-7);
  EXPECT_NEAR(cosine_lr(2e-4, 0.0, 500, 1000), 1e-4, 1e-15);
}

TEST(Optim, AdamFirstStepIsLr) {
  Adam adam;
  Tensor p = Tensor::vector({1.0f, -2.0f, 0.5f});
  adam.step("p", p, Tensor::vector({0.3f, -5.0f, 0.0f}), 0.01);
  EXPECT_NEAR(p[0], 0.99, 1e-6);
  EXPECT_NEAR(p[1], -1.99, 1e-6);
  EXPECT_EQ(p[2], 0.5f);
}
