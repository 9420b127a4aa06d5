#include "moesac/env.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "moesac/errors.hpp"

using namespace moesac;

namespace {

// Hand-built single-topic world: every expert matches every subtask.
Scenario flat_world(int n_devices, double snr, double avail) {
  ScenarioConfig cfg;
  cfg.n_devices = n_devices;
  cfg.n_topics = 1;
  Scenario sc = build_scenario(cfg, 1);
  for (EdgeDevice& dev : sc.devices) {
    dev.channel.snr_linear = snr;
    dev.avail_compute_units = avail;
  }
  return sc;
}

Task uniform_task(int k_total, int offload_index, std::int64_t prompt_bits,
                  std::int64_t output_bits, double compute_units) {
  Task t;
  for (int i = 0; i < k_total; ++i) {
    Subtask s;
    s.id = i;
    s.topic = TopicId{0};
    s.prompt_bits = prompt_bits;
    s.output_bits = output_bits;
    s.compute_units = compute_units;
    t.subtasks.push_back(s);
  }
  t.offload_order.push_back(offload_index);
  return t;
}

RewardParams quiet_params(double kappa_c) {
  RewardParams p;
  p.sigma = 0.0;
  p.kappa_c = kappa_c;
  return p;
}

}  // namespace

// Hand evaluation: quality = 5*(0.25*8 + 0.75*9) = 43.75,
// comm = (4000+40000)/4000*0.1 = 1.1, compute = kappa*160000 = 2.2,
// reward = 43.75 - 1.1 - 2.2 = 40.45.
TEST(OffloadOutcome, HandEvaluatedCaseStudyStep) {
  const Scenario sc = flat_world(1, 15.0, 100.0);
  const Task task = uniform_task(4, 0, 4000, 40000, 1.0);
  const RewardBreakdown b =
      offload_outcome(task, sc, 0, quiet_params(1.375e-5), nullptr);
  EXPECT_NEAR(b.quality_total, 43.75, 1e-9);
  EXPECT_NEAR(b.comm_energy_j, 1.1, 1e-9);
  EXPECT_NEAR(b.compute_cost, 2.2, 1e-9);
  EXPECT_NEAR(b.reward, 40.45, 1e-9);
}

// Infeasible device: dropped contribution, prompt energy only, local compute.
TEST(OffloadOutcome, InfeasibleDeviceDropsSubtask) {
  const Scenario sc = flat_world(1, 15.0, 0.0);
  const Task task = uniform_task(4, 0, 4000, 40000, 1.0);
  const RewardBreakdown b =
      offload_outcome(task, sc, 0, quiet_params(1.375e-5), nullptr);
  EXPECT_NEAR(b.quality_total, 33.75, 1e-9);          // 5 * 0.75 * 9
  EXPECT_NEAR(b.comm_energy_j, 0.1, 1e-12);           // 4000 bits at 4000 b/s
  EXPECT_NEAR(b.compute_cost, 1.65, 1e-9);            // three local subtasks
  EXPECT_NEAR(b.reward, 33.75 - 0.1 - 1.65, 1e-9);
}

TEST(OffloadOutcome, ZeroLambdasGiveQualityReward) {
  const Scenario sc = flat_world(3, 12.0, 100.0);
  const Task task = uniform_task(4, 2, 3000, 30000, 0.75);
  RewardParams p = quiet_params(2.5e-5);
  p.lambda_energy = 0.0;
  p.lambda_compute = 0.0;
  const RewardBreakdown b = offload_outcome(task, sc, 1, p, nullptr);
  EXPECT_EQ(b.reward, b.quality_total);
}

TEST(OffloadOutcome, RewardDecompositionIdentity) {
  const Scenario sc = build_scenario(ScenarioConfig{}, 21);
  SeededRng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Task task = sample_task(sc, rng);
    const int dev = static_cast<int>(rng.uniform_int(0, sc.device_count() - 1));
    RewardParams p;
    p.sigma = 0.0;
    const RewardBreakdown b = offload_outcome(task, sc, dev, p, nullptr);
    EXPECT_EQ(b.reward, b.quality_total - p.lambda_energy * b.comm_energy_j -
                            p.lambda_compute * b.compute_cost);
  }
}

TEST(OffloadOutcome, MatchingBeatsNonMatchingAtEqualChannel) {
  Scenario sc = flat_world(2, 10.0, 100.0);
  sc.config.n_topics = 2;
  sc.devices[0].expert.specialty = TopicId{0};
  sc.devices[1].expert.specialty = TopicId{1};
  const Task task = uniform_task(4, 0, 4000, 40000, 1.0);  // topic 0
  RewardParams p = quiet_params(2.5e-5);
  const RewardBreakdown match = offload_outcome(task, sc, 0, p, nullptr);
  const RewardBreakdown off = offload_outcome(task, sc, 1, p, nullptr);
  EXPECT_GE(match.quality_total, off.quality_total);
  EXPECT_GT(match.reward, off.reward);  // identical costs, better quality
}

TEST(EncodeState, NormalizationEndpoints) {
  Scenario sc = flat_world(3, 15.0, 1.5);
  sc.devices[0].channel.snr_linear = 15.0;
  sc.devices[1].channel.snr_linear = 5.0;
  sc.devices[2].channel.snr_linear = 20.0;
  const Task task = uniform_task(4, 0, 4000, 40000, 1.0);
  const StateVector s = encode_state(task, sc);
  ASSERT_EQ(s.size(), 3u + 5u * 3u);
  // device block j starts at 3 + 5*j; snr is the 4th feature of the block
  EXPECT_NEAR(s[3 + 3], (15.0 - 5.0) / 15.0, 1e-12);
  EXPECT_DOUBLE_EQ(s[3 + 5 + 3], 0.0);
  EXPECT_DOUBLE_EQ(s[3 + 10 + 3], 1.0);
}

TEST(EncodeState, MatchFlagFollowsSpecialty) {
  Scenario sc = flat_world(2, 10.0, 1.0);
  sc.config.n_topics = 3;
  sc.devices[0].expert.specialty = TopicId{2};
  sc.devices[1].expert.specialty = TopicId{1};
  Task task = uniform_task(4, 1, 4000, 40000, 1.0);
  task.subtasks[1].topic = TopicId{2};
  const StateVector s = encode_state(task, sc);
  EXPECT_DOUBLE_EQ(s[3 + 2], 1.0);      // device 0 matches topic 2
  EXPECT_DOUBLE_EQ(s[3 + 5 + 2], 0.0);  // device 1 does not
}

TEST(OffloadEnv, ResetIsDeterministicAndNormalized) {
  const Scenario sc = build_scenario(ScenarioConfig{}, 7);
  RewardParams p;
  OffloadEnv env_a(sc, p), env_b(sc, p);
  SeededRng rng_a(3), rng_b(3);
  const StateVector a = env_a.reset(rng_a);
  const StateVector b = env_b.reset(rng_b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 153u);  // 3 + 5*30
}

// Every feature of every reachable state in [0, 1], over 10^4 episodes.
TEST(OffloadEnv, StatesStayInUnitBox) {
  const Scenario sc = build_scenario(ScenarioConfig{}, 11);
  OffloadEnv env(sc, RewardParams{});
  SeededRng rng(8);
  for (int ep = 0; ep < 10000; ++ep) {
    const StateVector s = env.reset(rng);
    for (double v : s) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    const auto sr = env.step(
        Action{static_cast<int>(rng.uniform_int(0, sc.device_count() - 1))},
        rng);
    for (double v : sr.next_state) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(OffloadEnv, StepGuards) {
  const Scenario sc = build_scenario(ScenarioConfig{}, 7);
  OffloadEnv env(sc, RewardParams{});
  SeededRng rng(9);
  env.reset(rng);
  EXPECT_THROW(env.step(Action{-1}, rng), InvalidAction);
  EXPECT_THROW(env.step(Action{sc.device_count()}, rng), InvalidAction);
  const auto sr = env.step(Action{0}, rng);
  EXPECT_TRUE(sr.done);  // default k_offload = 1
  EXPECT_THROW(env.step(Action{0}, rng), EpisodeOver);
}

TEST(OffloadEnv, SequentialEpisodeAggregatesAllSubtasks) {
  ScenarioConfig cfg;
  cfg.n_devices = 2;
  cfg.n_topics = 1;
  cfg.k_total = 3;
  cfg.k_offload = 2;
  Scenario sc = build_scenario(cfg, 5);
  for (EdgeDevice& dev : sc.devices) dev.avail_compute_units = 100.0;
  RewardParams p;
  p.sigma = 0.0;
  OffloadEnv env(sc, p);
  SeededRng rng(2);
  env.reset(rng);

  const auto first = env.step(Action{0}, rng);
  EXPECT_FALSE(first.done);
  const auto second = env.step(Action{1}, rng);
  EXPECT_TRUE(second.done);
  // two edge scores of 8 and one local score of 9 at weight 1/3 each
  EXPECT_NEAR(first.breakdown.quality_total + second.breakdown.quality_total,
              5.0 * (8.0 + 8.0 + 9.0) / 3.0, 1e-9);
}

TEST(EpisodeReward, SumsAndValidates) {
  std::vector<Transition> episode(2);
  episode[0].reward = 1.5;
  episode[0].done = false;
  episode[1].reward = 2.5;
  episode[1].done = true;
  EXPECT_DOUBLE_EQ(episode_reward(episode), 4.0);

  const std::vector<Transition> single = {episode[1]};
  EXPECT_DOUBLE_EQ(episode_reward(single), 2.5);

  EXPECT_THROW(episode_reward(std::vector<Transition>{}),
               std::invalid_argument);
  std::vector<Transition> unfinished(1);
  unfinished[0].done = false;
  EXPECT_THROW(episode_reward(unfinished), std::invalid_argument);
}
