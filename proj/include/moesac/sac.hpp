#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "moesac/env.hpp"
#include "moesac/errors.hpp"
#include "moesac/mlp.hpp"
#include "moesac/replay.hpp"
#include "moesac/rng.hpp"

namespace moesac {

struct SacHyperparams {
  std::vector<int> hidden_sizes = {128, 128};
  double gamma = 0.99;
  double tau = 0.005;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double lr_alpha = 3e-4;
  int batch_size = 128;
  std::size_t buffer_capacity = 50000;
  double target_entropy_factor = 0.6;  // H* = factor * ln(action count)
  double init_alpha = 1.0;
  OptimizerKind optimizer = OptimizerKind::Adam;

  void validate() const {
    for (int h : hidden_sizes)
      if (h < 1) throw ConfigError("hidden_sizes: entries must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0))
      throw ConfigError("gamma: must be in [0, 1]");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau: must be in (0, 1]");
    if (lr_actor <= 0.0 || lr_critic <= 0.0 || lr_alpha <= 0.0)
      throw ConfigError("learning rates: must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
    if (buffer_capacity < 1) throw ConfigError("buffer_capacity: must be >= 1");
    if (target_entropy_factor < 0.0)
      throw ConfigError("target_entropy_factor: must be >= 0");
    if (init_alpha <= 0.0) throw ConfigError("init_alpha: must be > 0");
  }
};

struct LossReport {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  double actor_loss = 0.0;
  double alpha_loss = 0.0;
  double alpha = 0.0;  // temperature after the update
};

enum class ActionMode { Sample, Greedy };

namespace detail {

// Row-wise numerically stable log-softmax.
inline Matrix log_softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse =
        m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

}  // namespace detail

// Discrete soft actor-critic over N devices: softmax actor, twin critics with
// polyak-tracked targets, log-space temperature tuned toward a target entropy.
class SacAgent {
 public:
  SacAgent(int state_dim, int action_count, SacHyperparams hp, SeededRng& rng)
      : hp_(std::move(hp)),
        state_dim_(state_dim),
        action_count_(action_count),
        actor_opt_(hp_.optimizer, hp_.lr_actor),
        critic1_opt_(hp_.optimizer, hp_.lr_critic),
        critic2_opt_(hp_.optimizer, hp_.lr_critic),
        alpha_opt_(hp_.optimizer, hp_.lr_alpha) {
    hp_.validate();
    if (state_dim_ < 1 || action_count_ < 1)
      throw ShapeError("SacAgent: state_dim and action_count must be >= 1");
    std::vector<int> sizes;
    sizes.push_back(state_dim_);
    sizes.insert(sizes.end(), hp_.hidden_sizes.begin(), hp_.hidden_sizes.end());
    sizes.push_back(action_count_);
    actor_ = Mlp::create(sizes, rng);
    critic1_ = Mlp::create(sizes, rng);
    critic2_ = Mlp::create(sizes, rng);
    target1_ = critic1_;
    target2_ = critic2_;
    log_alpha_ = std::log(hp_.init_alpha);
    target_entropy_ =
        hp_.target_entropy_factor * std::log(static_cast<double>(action_count_));
  }

  int state_dim() const { return state_dim_; }
  int action_count() const { return action_count_; }
  const SacHyperparams& hyperparams() const { return hp_; }
  double log_alpha() const { return log_alpha_; }
  double alpha() const { return std::exp(log_alpha_); }
  double target_entropy() const { return target_entropy_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic1() const { return critic1_; }
  const Mlp& critic2() const { return critic2_; }
  const Mlp& target1() const { return target1_; }
  const Mlp& target2() const { return target2_; }

  // Mutable access for surgery (analysis, tests, warm starts).
  Mlp& actor() { return actor_; }
  Mlp& critic1() { return critic1_; }
  Mlp& critic2() { return critic2_; }
  Mlp& target1() { return target1_; }
  Mlp& target2() { return target2_; }
  void set_log_alpha(double v) { log_alpha_ = v; }

  // Softmax of the actor logits, shifted by the row max for stability.
  std::vector<double> policy(const StateVector& state) const {
    const Vector logits = forward_one(
        actor_, Eigen::Map<const Vector>(state.data(),
                                         static_cast<Eigen::Index>(state.size())));
    const double m = logits.maxCoeff();
    Vector p = (logits.array() - m).exp();
    p /= p.sum();
    return std::vector<double>(p.data(), p.data() + p.size());
  }

  Action select_action(const StateVector& state, ActionMode mode,
                       SeededRng& rng) const {
    const std::vector<double> probs = policy(state);
    if (mode == ActionMode::Greedy) {
      // Ties break toward the lowest index.
      int best = 0;
      for (int i = 1; i < action_count_; ++i)
        if (probs[static_cast<std::size_t>(i)] >
            probs[static_cast<std::size_t>(best)])
          best = i;
      return Action{best};
    }
    return Action{static_cast<int>(rng.categorical(probs))};
  }

  // Soft Bellman targets: y = r + gamma*(1-done)*V(s') with
  // V(s') = sum_a pi(a|s') * [min(Qt1, Qt2)(s',a) - alpha*ln pi(a|s')].
  Vector critic_target(std::span<const Transition> batch) const {
    const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
    if (b == 0) throw NotEnoughData("critic_target: empty batch");
    Matrix next_states(b, state_dim_);
    for (Eigen::Index i = 0; i < b; ++i)
      next_states.row(i) = Eigen::Map<const Vector>(
          batch[static_cast<std::size_t>(i)].next_state.data(), state_dim_);

    const Matrix log_pi = detail::log_softmax(forward(actor_, next_states));
    const Matrix pi = log_pi.array().exp();
    const Matrix min_qt = forward(target1_, next_states)
                              .cwiseMin(forward(target2_, next_states));
    const double a = alpha();

    Vector y(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      const double v =
          (pi.row(i).array() * (min_qt.row(i).array() - a * log_pi.row(i).array()))
              .sum();
      const Transition& t = batch[static_cast<std::size_t>(i)];
      y(i) = t.reward + hp_.gamma * (t.done ? 0.0 : 1.0) * v;
    }
    return y;
  }

  // One gradient step on both critics, the actor, and the temperature,
  // followed by a polyak target update.
  LossReport update(const ReplayBuffer& buffer, SeededRng& rng) {
    if (buffer.size() < static_cast<std::size_t>(hp_.batch_size))
      throw NotEnoughData("update: buffer smaller than batch size");
    const std::vector<Transition> batch =
        buffer.sample(static_cast<std::size_t>(hp_.batch_size), rng);
    const Eigen::Index b = static_cast<Eigen::Index>(batch.size());

    Matrix states(b, state_dim_);
    for (Eigen::Index i = 0; i < b; ++i)
      states.row(i) = Eigen::Map<const Vector>(
          batch[static_cast<std::size_t>(i)].state.data(), state_dim_);

    const Vector y = critic_target(batch);

    LossReport report;
    report.critic1_loss = critic_step(critic1_, critic1_opt_, states, batch, y);
    report.critic2_loss = critic_step(critic2_, critic2_opt_, states, batch, y);

    // Actor step against the freshly updated critics; the critics receive no
    // gradient from this pass.
    ForwardCache actor_cache;
    const Matrix logits = forward(actor_, states, &actor_cache);
    const Matrix log_pi = detail::log_softmax(logits);
    const Matrix pi = log_pi.array().exp();
    const Matrix min_q =
        forward(critic1_, states).cwiseMin(forward(critic2_, states));
    const double a = alpha();
    const Matrix inner = a * log_pi - min_q;  // alpha*ln pi(a|s) - min Q(s,a)
    const Vector row_loss = (pi.cwiseProduct(inner)).rowwise().sum();
    report.actor_loss = row_loss.mean();
    Matrix upstream(b, action_count_);
    for (Eigen::Index i = 0; i < b; ++i)
      upstream.row(i) =
          pi.row(i).array() * (inner.row(i).array() - row_loss(i));
    upstream /= static_cast<double>(b);
    actor_opt_.apply(actor_, backward(actor_, actor_cache, upstream));

    // Temperature step toward the target entropy, using the pre-step policy.
    const Vector entropy = -(pi.cwiseProduct(log_pi)).rowwise().sum();
    const double entropy_gap = (entropy.array() - target_entropy_).mean();
    report.alpha_loss = log_alpha_ * entropy_gap;
    alpha_opt_.apply(log_alpha_, entropy_gap);
    report.alpha = alpha();

    polyak_update(hp_.tau);
    return report;
  }

  // target <- tau*online + (1-tau)*target, elementwise and exactly.
  void polyak_update(double tau) {
    if (!(tau > 0.0 && tau <= 1.0))
      throw std::invalid_argument("polyak_update: tau must be in (0, 1]");
    blend(target1_, critic1_, tau);
    blend(target2_, critic2_, tau);
  }

  void save(const std::string& path) const;
  static SacAgent load(const std::string& path);

 private:
  SacAgent() = default;

  double critic_step(Mlp& critic, Optimizer& opt, const Matrix& states,
                     std::span<const Transition> batch, const Vector& y) {
    const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
    ForwardCache cache;
    const Matrix q = forward(critic, states, &cache);
    Matrix upstream = Matrix::Zero(b, action_count_);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
      const int ai = batch[static_cast<std::size_t>(i)].action.device_index;
      const double diff = q(i, ai) - y(i);
      loss += diff * diff;
      upstream(i, ai) = 2.0 * diff / static_cast<double>(b);
    }
    loss /= static_cast<double>(b);
    opt.apply(critic, backward(critic, cache, upstream));
    return loss;
  }

  static void blend(Mlp& target, const Mlp& online, double tau) {
    for (std::size_t l = 0; l < target.layer_count(); ++l) {
      target.weights[l] = tau * online.weights[l] + (1.0 - tau) * target.weights[l];
      target.biases[l] = tau * online.biases[l] + (1.0 - tau) * target.biases[l];
    }
  }

  SacHyperparams hp_;
  int state_dim_ = 0;
  int action_count_ = 0;
  Mlp actor_, critic1_, critic2_, target1_, target2_;
  double log_alpha_ = 0.0;
  double target_entropy_ = 0.0;
  Optimizer actor_opt_{OptimizerKind::Adam, 1.0};
  Optimizer critic1_opt_{OptimizerKind::Adam, 1.0};
  Optimizer critic2_opt_{OptimizerKind::Adam, 1.0};
  ScalarOptimizer alpha_opt_{OptimizerKind::Adam, 1.0};
};

// ---- checkpoint format -----------------------------------------------------
// Little-endian binary: the 7-byte magic "MOESAC1", dimensions, hyperparams,
// log_alpha, then the five networks (actor, critic1, critic2, target1,
// target2) as layer sizes followed by row-major weight and bias doubles.
// Round-trips are bit-exact.

namespace detail {

inline void put_u8(std::string& out, std::uint8_t v) {
  out.push_back(static_cast<char>(v));
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f64(std::string& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(byte()); }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string raw(std::size_t n) {
    if (pos_ + n > data_.size())
      throw CheckpointMismatch("checkpoint: truncated file");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool exhausted() const { return pos_ == data_.size(); }

 private:
  unsigned char byte() {
    if (pos_ >= data_.size())
      throw CheckpointMismatch("checkpoint: truncated file");
    return static_cast<unsigned char>(data_[pos_++]);
  }
  std::string data_;
  std::size_t pos_ = 0;
};

inline void put_net(std::string& out, const Mlp& net) {
  put_u32(out, static_cast<std::uint32_t>(net.layer_sizes.size()));
  for (int s : net.layer_sizes) put_u32(out, static_cast<std::uint32_t>(s));
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Matrix& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r)
      put_f64(out, net.biases[l](r));
  }
}

inline Mlp get_net(ByteReader& in) {
  const std::uint32_t n_sizes = in.u32();
  if (n_sizes < 2 || n_sizes > 64)
    throw CheckpointMismatch("checkpoint: bad layer count");
  Mlp net;
  for (std::uint32_t i = 0; i < n_sizes; ++i)
    net.layer_sizes.push_back(static_cast<int>(in.u32()));
  for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    Matrix w(net.layer_sizes[l + 1], net.layer_sizes[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = in.f64();
    Vector b(net.layer_sizes[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = in.f64();
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[] = "MOESAC1";

inline void SacAgent::save(const std::string& path) const {
  std::string out;
  out.append(kCheckpointMagic, 7);
  detail::put_u32(out, static_cast<std::uint32_t>(state_dim_));
  detail::put_u32(out, static_cast<std::uint32_t>(action_count_));
  detail::put_u32(out, static_cast<std::uint32_t>(hp_.hidden_sizes.size()));
  for (int h : hp_.hidden_sizes)
    detail::put_u32(out, static_cast<std::uint32_t>(h));
  detail::put_f64(out, hp_.gamma);
  detail::put_f64(out, hp_.tau);
  detail::put_f64(out, hp_.lr_actor);
  detail::put_f64(out, hp_.lr_critic);
  detail::put_f64(out, hp_.lr_alpha);
  detail::put_u32(out, static_cast<std::uint32_t>(hp_.batch_size));
  detail::put_u64(out, static_cast<std::uint64_t>(hp_.buffer_capacity));
  detail::put_f64(out, hp_.target_entropy_factor);
  detail::put_f64(out, hp_.init_alpha);
  detail::put_u8(out, hp_.optimizer == OptimizerKind::Adam ? 1 : 0);
  detail::put_f64(out, log_alpha_);
  detail::put_net(out, actor_);
  detail::put_net(out, critic1_);
  detail::put_net(out, critic2_);
  detail::put_net(out, target1_);
  detail::put_net(out, target2_);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write on checkpoint: " + path);
}

inline SacAgent SacAgent::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  detail::ByteReader in(std::move(data));
  if (in.raw(7) != std::string(kCheckpointMagic, 7))
    throw CheckpointMismatch("checkpoint: bad magic, expected MOESAC1");

  SacAgent agent;
  agent.state_dim_ = static_cast<int>(in.u32());
  agent.action_count_ = static_cast<int>(in.u32());
  const std::uint32_t n_hidden = in.u32();
  if (n_hidden > 62) throw CheckpointMismatch("checkpoint: bad hidden count");
  agent.hp_.hidden_sizes.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i)
    agent.hp_.hidden_sizes.push_back(static_cast<int>(in.u32()));
  agent.hp_.gamma = in.f64();
  agent.hp_.tau = in.f64();
  agent.hp_.lr_actor = in.f64();
  agent.hp_.lr_critic = in.f64();
  agent.hp_.lr_alpha = in.f64();
  agent.hp_.batch_size = static_cast<int>(in.u32());
  agent.hp_.buffer_capacity = static_cast<std::size_t>(in.u64());
  agent.hp_.target_entropy_factor = in.f64();
  agent.hp_.init_alpha = in.f64();
  agent.hp_.optimizer =
      in.u8() == 1 ? OptimizerKind::Adam : OptimizerKind::Sgd;
  agent.log_alpha_ = in.f64();
  agent.actor_ = detail::get_net(in);
  agent.critic1_ = detail::get_net(in);
  agent.critic2_ = detail::get_net(in);
  agent.target1_ = detail::get_net(in);
  agent.target2_ = detail::get_net(in);
  if (!in.exhausted())
    throw CheckpointMismatch("checkpoint: trailing bytes");
  if (agent.actor_.input_dim() != agent.state_dim_ ||
      agent.actor_.output_dim() != agent.action_count_)
    throw CheckpointMismatch("checkpoint: network/dimension mismatch");

  agent.target_entropy_ =
      agent.hp_.target_entropy_factor *
      std::log(static_cast<double>(agent.action_count_));
  agent.actor_opt_ = Optimizer(agent.hp_.optimizer, agent.hp_.lr_actor);
  agent.critic1_opt_ = Optimizer(agent.hp_.optimizer, agent.hp_.lr_critic);
  agent.critic2_opt_ = Optimizer(agent.hp_.optimizer, agent.hp_.lr_critic);
  agent.alpha_opt_ = ScalarOptimizer(agent.hp_.optimizer, agent.hp_.lr_alpha);
  return agent;
}

}  // namespace moesac
