#include "moesac/sac.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "moesac/errors.hpp"
#include "moesac/replay.hpp"

using namespace moesac;

namespace {

SacAgent make_agent(int state_dim, int actions, SacHyperparams hp,
                    std::uint64_t seed = 1) {
  SeededRng rng(seed);
  return SacAgent(state_dim, actions, std::move(hp), rng);
}

void zero_net(Mlp& net) {
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    net.weights[l].setZero();
    net.biases[l].setZero();
  }
}

// Zero weights, fixed output bias: the net computes a constant vector.
void make_constant(Mlp& net, const std::vector<double>& out) {
  zero_net(net);
  for (std::size_t i = 0; i < out.size(); ++i)
    net.biases.back()(static_cast<Eigen::Index>(i)) = out[i];
}

Transition transition(StateVector s, int action, double reward, StateVector s2,
                      bool done) {
  Transition t;
  t.state = std::move(s);
  t.action = Action{action};
  t.reward = reward;
  t.next_state = std::move(s2);
  t.done = done;
  return t;
}

SacHyperparams small_hp() {
  SacHyperparams hp;
  hp.hidden_sizes = {8, 8};
  hp.batch_size = 4;
  hp.buffer_capacity = 64;
  return hp;
}

}  // namespace

TEST(Policy, EqualLogitsUniform) {
  SacAgent agent = make_agent(4, 30, SacHyperparams{});
  zero_net(agent.actor());
  const StateVector s(4, 0.3);
  const std::vector<double> probs = agent.policy(s);
  ASSERT_EQ(probs.size(), 30u);
  double sum = 0.0;
  for (double p : probs) {
    EXPECT_NEAR(p, 1.0 / 30.0, 1e-12);
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Policy, ShiftInvariance) {
  SacAgent agent = make_agent(3, 5, small_hp());
  const StateVector s{0.1, 0.9, 0.4};
  const std::vector<double> before = agent.policy(s);
  agent.actor().biases.back().array() += 123.0;
  const std::vector<double> after = agent.policy(s);
  for (std::size_t i = 0; i < before.size(); ++i)
    EXPECT_NEAR(before[i], after[i], 1e-9);
}

TEST(SelectAction, GreedyArgmaxAndTies) {
  SacAgent agent = make_agent(2, 3, small_hp());
  make_constant(agent.actor(), {1.0, 3.0, 2.0});
  SeededRng rng(1);
  EXPECT_EQ(agent.select_action({0.0, 0.0}, ActionMode::Greedy, rng)
                .device_index,
            1);

  SacAgent tied = make_agent(2, 2, small_hp());
  make_constant(tied.actor(), {2.0, 2.0});
  EXPECT_EQ(tied.select_action({0.0, 0.0}, ActionMode::Greedy, rng)
                .device_index,
            0);
}

TEST(SelectAction, DegenerateSampling) {
  SacAgent agent = make_agent(2, 2, small_hp());
  make_constant(agent.actor(), {100.0, 0.0});
  SeededRng rng(3);
  for (int i = 0; i < 50; ++i)
    EXPECT_EQ(agent.select_action({0.5, 0.5}, ActionMode::Sample, rng)
                  .device_index,
              0);
}

TEST(CriticTarget, TerminalBootstrapsToReward) {
  SacAgent agent = make_agent(2, 2, small_hp());
  const std::vector<Transition> batch = {
      transition({0.1, 0.2}, 0, 1.25, {0.3, 0.4}, true)};
  const Vector y = agent.critic_target(batch);
  EXPECT_DOUBLE_EQ(y(0), 1.25);
}

TEST(CriticTarget, ConstantValueExpectation) {
  // N=2, pi uniform, min target Q = 1, alpha = 0, gamma = 0.99, r = 0
  SacHyperparams hp = small_hp();
  hp.init_alpha = 1.0;
  SacAgent agent = make_agent(2, 2, hp);
  zero_net(agent.actor());
  make_constant(agent.target1(), {1.0, 1.0});
  make_constant(agent.target2(), {1.0, 1.0});
  agent.set_log_alpha(-800.0);  // alpha == 0 to double precision
  const std::vector<Transition> batch = {
      transition({0.0, 0.0}, 0, 0.0, {0.0, 0.0}, false)};
  EXPECT_NEAR(agent.critic_target(batch)(0), 0.99, 1e-12);
}

// Hand-computed oracle: y = 0.99 * (1 + 0.5*ln 2), the entropy of the uniform
// two-action policy being ln 2.
TEST(CriticTarget, HandComputedTwoActionOracle) {
  SacAgent agent = make_agent(2, 2, small_hp());
  zero_net(agent.actor());
  make_constant(agent.target1(), {1.0, 1.0});
  make_constant(agent.target2(), {1.0, 1.0});
  agent.set_log_alpha(std::log(0.5));
  const std::vector<Transition> batch = {
      transition({0.0, 0.0}, 0, 0.0, {0.0, 0.0}, false)};
  const double expected = 0.99 * (1.0 + 0.5 * std::log(2.0));
  EXPECT_NEAR(agent.critic_target(batch)(0), expected, 1e-9);
}

TEST(Update, RequiresFullBatch) {
  SacAgent agent = make_agent(2, 2, small_hp());
  ReplayBuffer buffer(8);
  buffer.push(transition({0.0, 0.0}, 0, 0.0, {0.0, 0.0}, true));
  SeededRng rng(1);
  EXPECT_THROW(agent.update(buffer, rng), NotEnoughData);
}

TEST(Update, PerfectCriticsReportZeroLoss) {
  SacHyperparams hp = small_hp();
  SacAgent agent = make_agent(2, 2, hp);
  // terminal transitions with reward 3 and critics that already output 3
  make_constant(agent.critic1(), {3.0, 3.0});
  make_constant(agent.critic2(), {3.0, 3.0});
  ReplayBuffer buffer(16);
  for (int i = 0; i < 8; ++i)
    buffer.push(transition({0.1, 0.2}, i % 2, 3.0, {0.1, 0.2}, true));
  SeededRng rng(4);
  const LossReport report = agent.update(buffer, rng);
  EXPECT_NEAR(report.critic1_loss, 0.0, 1e-18);
  EXPECT_NEAR(report.critic2_loss, 0.0, 1e-18);
}

TEST(Update, UniformPolicyAtTargetEntropyFreezesAlpha) {
  SacHyperparams hp = small_hp();
  hp.target_entropy_factor = 1.0;  // H* = ln N, the uniform policy's entropy
  SacAgent agent = make_agent(2, 4, hp);
  zero_net(agent.actor());
  // zero actor gradient too: make both critics identical constants
  make_constant(agent.critic1(), {1.0, 1.0, 1.0, 1.0});
  make_constant(agent.critic2(), {1.0, 1.0, 1.0, 1.0});
  const double before = agent.log_alpha();
  ReplayBuffer buffer(16);
  for (int i = 0; i < 8; ++i)
    buffer.push(transition({0.3, 0.3}, i % 4, 1.0, {0.3, 0.3}, true));
  SeededRng rng(4);
  const LossReport report = agent.update(buffer, rng);
  EXPECT_NEAR(agent.log_alpha(), before, 1e-12);
  EXPECT_NEAR(report.alpha_loss, 0.0, 1e-12);
}

// Scripted toy oracle: a frozen one-transition MDP; repeating updates on the
// same batch must reduce the critic loss.
TEST(Update, CriticLossDecreasesOnFrozenToyMdp) {
  SacHyperparams hp = small_hp();
  hp.batch_size = 8;
  hp.lr_critic = 1e-2;
  hp.optimizer = OptimizerKind::Sgd;
  SacAgent agent = make_agent(2, 2, hp);
  ReplayBuffer buffer(8);
  for (int i = 0; i < 8; ++i)
    buffer.push(transition({1.0, 0.0}, 0, 1.0, {0.0, 1.0}, true));
  SeededRng rng(7);
  const LossReport first = agent.update(buffer, rng);
  LossReport last = first;
  for (int i = 0; i < 20; ++i) last = agent.update(buffer, rng);
  EXPECT_LT(last.critic1_loss, first.critic1_loss);
  EXPECT_LT(last.critic2_loss, first.critic2_loss);
}

TEST(Update, DeterministicLossReports) {
  auto run = [] {
    SacHyperparams hp;
    hp.hidden_sizes = {16, 16};
    hp.batch_size = 16;
    hp.buffer_capacity = 256;
    SacAgent agent = make_agent(6, 4, hp, 99);
    ReplayBuffer buffer(hp.buffer_capacity);
    SeededRng fill(3);
    for (int i = 0; i < 64; ++i) {
      StateVector s(6), s2(6);
      for (double& v : s) v = fill.uniform01();
      for (double& v : s2) v = fill.uniform01();
      buffer.push(transition(s, static_cast<int>(fill.uniform_int(0, 3)),
                             fill.uniform_real(-1.0, 1.0), s2,
                             fill.uniform01() < 0.5));
    }
    SeededRng rng(11);
    std::vector<LossReport> reports;
    for (int i = 0; i < 20; ++i) reports.push_back(agent.update(buffer, rng));
    return reports;
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].critic1_loss, b[i].critic1_loss);
    EXPECT_EQ(a[i].critic2_loss, b[i].critic2_loss);
    EXPECT_EQ(a[i].actor_loss, b[i].actor_loss);
    EXPECT_EQ(a[i].alpha_loss, b[i].alpha_loss);
    EXPECT_EQ(a[i].alpha, b[i].alpha);
  }
}

TEST(Update, AlphaStaysPositive) {
  SacHyperparams hp = small_hp();
  hp.lr_alpha = 10.0;  // absurd rate; log-space keeps alpha > 0 regardless
  SacAgent agent = make_agent(2, 2, hp);
  ReplayBuffer buffer(16);
  for (int i = 0; i < 8; ++i)
    buffer.push(transition({0.0, 1.0}, i % 2, 1.0, {1.0, 0.0}, true));
  SeededRng rng(5);
  for (int i = 0; i < 50; ++i) agent.update(buffer, rng);
  EXPECT_GT(agent.alpha(), 0.0);
}

TEST(PolyakUpdate, FullCopyAtTauOne) {
  SacAgent agent = make_agent(3, 3, small_hp());
  agent.critic1().weights[0].setConstant(0.7);
  agent.polyak_update(1.0);
  EXPECT_TRUE(agent.target1().weights[0] == agent.critic1().weights[0]);
}

TEST(PolyakUpdate, ConvexCombinationIsExact) {
  SacAgent agent = make_agent(3, 3, small_hp());
  // online = 1, target = 0 -> target becomes exactly tau
  agent.critic1().weights[0].setOnes();
  agent.target1().weights[0].setZero();
  agent.polyak_update(0.005);
  EXPECT_DOUBLE_EQ(agent.target1().weights[0](0, 0), 0.005);

  // elementwise recomputation matches bit for bit
  SacAgent other = make_agent(4, 5, small_hp(), 31);
  const Mlp online = other.critic2();
  const Mlp before = other.target2();
  const double tau = 0.37;
  other.polyak_update(tau);
  for (std::size_t l = 0; l < online.layer_count(); ++l) {
    const Matrix expected =
        tau * online.weights[l] + (1.0 - tau) * before.weights[l];
    EXPECT_TRUE(other.target2().weights[l] == expected);
  }
}

TEST(PolyakUpdate, GeometricConvergence) {
  SacAgent agent = make_agent(3, 3, small_hp(), 8);
  const double tau = 0.05;
  double prev = (agent.target1().weights[0] - agent.critic1().weights[0])
                    .cwiseAbs()
                    .maxCoeff();
  // targets equal online at construction; perturb to create a gap
  agent.target1().weights[0].array() += 1.0;
  prev = 1.0;
  for (int i = 0; i < 100; ++i) {
    agent.polyak_update(tau);
    const double gap = (agent.target1().weights[0] - agent.critic1().weights[0])
                           .cwiseAbs()
                           .maxCoeff();
    EXPECT_LE(gap, prev * (1.0 - tau) + 1e-15);
    prev = gap;
  }
}

TEST(Checkpoint, BitExactRoundTrip) {
  SacAgent agent = make_agent(7, 5, small_hp(), 77);
  agent.set_log_alpha(-0.123456789);
  const std::string path =
      (std::filesystem::temp_directory_path() / "moesac_ckpt_test.bin")
          .string();
  agent.save(path);

  std::ifstream f(path, std::ios::binary);
  char magic[7];
  f.read(magic, 7);
  EXPECT_EQ(std::string(magic, 7), "MOESAC1");

  const SacAgent loaded = SacAgent::load(path);
  EXPECT_EQ(loaded.state_dim(), agent.state_dim());
  EXPECT_EQ(loaded.action_count(), agent.action_count());
  EXPECT_EQ(loaded.log_alpha(), agent.log_alpha());
  EXPECT_EQ(loaded.hyperparams().hidden_sizes, agent.hyperparams().hidden_sizes);
  EXPECT_EQ(loaded.hyperparams().gamma, agent.hyperparams().gamma);
  for (std::size_t l = 0; l < agent.actor().layer_count(); ++l) {
    EXPECT_TRUE(loaded.actor().weights[l] == agent.actor().weights[l]);
    EXPECT_TRUE(loaded.critic1().weights[l] == agent.critic1().weights[l]);
    EXPECT_TRUE(loaded.critic2().weights[l] == agent.critic2().weights[l]);
    EXPECT_TRUE(loaded.target1().weights[l] == agent.target1().weights[l]);
    EXPECT_TRUE(loaded.target2().weights[l] == agent.target2().weights[l]);
    EXPECT_TRUE(loaded.actor().biases[l] == agent.actor().biases[l]);
  }
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsBadMagicAndTruncation) {
  SacAgent agent = make_agent(3, 2, small_hp());
  const auto dir = std::filesystem::temp_directory_path();
  const std::string good = (dir / "moesac_ckpt_good.bin").string();
  agent.save(good);

  std::ifstream in(good, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  in.close();

  const std::string bad_magic = (dir / "moesac_ckpt_badmagic.bin").string();
  {
    std::string corrupt = data;
    corrupt[0] = 'X';
    std::ofstream out(bad_magic, std::ios::binary);
    out << corrupt;
  }
  EXPECT_THROW(SacAgent::load(bad_magic), CheckpointMismatch);

  const std::string truncated = (dir / "moesac_ckpt_trunc.bin").string();
  {
    std::ofstream out(truncated, std::ios::binary);
    out << data.substr(0, data.size() / 2);
  }
  EXPECT_THROW(SacAgent::load(truncated), CheckpointMismatch);

  EXPECT_THROW(SacAgent::load((dir / "no_such_ckpt.bin").string()), IoError);

  std::filesystem::remove(good);
  std::filesystem::remove(bad_magic);
  std::filesystem::remove(truncated);
}
