#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "moesac/errors.hpp"
#include "moesac/rng.hpp"

namespace moesac {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Fully connected net: rectifier hidden layers, linear output. Rows of a
// batch matrix are samples.
struct Mlp {
  std::vector<int> layer_sizes;   // [in, hidden..., out]
  std::vector<Matrix> weights;    // weights[l]: (sizes[l+1] x sizes[l])
  std::vector<Vector> biases;     // biases[l]:  (sizes[l+1])

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  std::size_t layer_count() const { return weights.size(); }

  // Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for weights and biases.
  static Mlp create(std::vector<int> sizes, SeededRng& rng) {
    if (sizes.size() < 2) throw ShapeError("Mlp: need at least two layers");
    for (int s : sizes)
      if (s < 1) throw ShapeError("Mlp: layer sizes must be positive");
    Mlp net;
    net.layer_sizes = std::move(sizes);
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
      const int fan_in = net.layer_sizes[l];
      const int fan_out = net.layer_sizes[l + 1];
      const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
      Matrix w(fan_out, fan_in);
      for (int r = 0; r < fan_out; ++r)
        for (int c = 0; c < fan_in; ++c)
          w(r, c) = rng.uniform_real(-limit, limit);
      Vector b(fan_out);
      for (int r = 0; r < fan_out; ++r) b(r) = rng.uniform_real(-limit, limit);
      net.weights.push_back(std::move(w));
      net.biases.push_back(std::move(b));
    }
    return net;
  }
};

// Post-activation values of every layer, kept for backward().
struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] is the input batch
};

inline Matrix forward(const Mlp& net, const Matrix& input,
                      ForwardCache* cache = nullptr) {
  if (input.cols() != net.input_dim())
    throw ShapeError("forward: input width != first layer size");
  if (cache) {
    cache->activations.clear();
    cache->activations.reserve(net.layer_count() + 1);
    cache->activations.push_back(input);
  }
  Matrix a = input;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Matrix z = a * net.weights[l].transpose();
    z.rowwise() += net.biases[l].transpose();
    if (l + 1 < net.layer_count()) z = z.cwiseMax(0.0);
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

inline Vector forward_one(const Mlp& net, const Vector& input) {
  Matrix row = input.transpose();
  return forward(net, row).row(0).transpose();
}

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Gradients zeros_like(const Mlp& net) {
    Gradients g;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      g.weights.push_back(Matrix::Zero(net.weights[l].rows(),
                                       net.weights[l].cols()));
      g.biases.push_back(Vector::Zero(net.biases[l].size()));
    }
    return g;
  }
};

// Analytic backprop. upstream is dLoss/dOutput for the cached batch
// (same shape as the forward output). The rectifier derivative at exactly 0
// is taken as 0.
inline Gradients backward(const Mlp& net, const ForwardCache& cache,
                          const Matrix& upstream) {
  if (cache.activations.size() != net.layer_count() + 1)
    throw ShapeError("backward: cache does not match the network");
  const Matrix& out = cache.activations.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols())
    throw ShapeError("backward: upstream gradient shape mismatch");

  Gradients grads;
  grads.weights.resize(net.layer_count());
  grads.biases.resize(net.layer_count());

  Matrix delta = upstream;  // dLoss/dZ of the current layer (output is linear)
  for (std::size_t l = net.layer_count(); l-- > 0;) {
    const Matrix& a_prev = cache.activations[l];
    grads.weights[l] = delta.transpose() * a_prev;
    grads.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix da = delta * net.weights[l];
      // Hidden activations are post-rectifier; positive entries pass gradient.
      const Matrix& a = cache.activations[l];
      delta = da.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    }
  }
  return grads;
}

enum class OptimizerKind { Sgd, Adam };

// Gradient-descent state for one network. Sgd applies the raw step; Adam
// keeps per-parameter moments.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

  void apply(Mlp& net, const Gradients& grads) {
    if (kind_ == OptimizerKind::Sgd) {
      for (std::size_t l = 0; l < net.layer_count(); ++l) {
        net.weights[l] -= lr_ * grads.weights[l];
        net.biases[l] -= lr_ * grads.biases[l];
      }
      return;
    }
    if (mw_.empty()) init_moments(net);
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      mw_[l] = beta1_ * mw_[l] + (1.0 - beta1_) * grads.weights[l];
      vw_[l] = beta2_ * vw_[l] +
               (1.0 - beta2_) * grads.weights[l].cwiseProduct(grads.weights[l]);
      mb_[l] = beta1_ * mb_[l] + (1.0 - beta1_) * grads.biases[l];
      vb_[l] = beta2_ * vb_[l] +
               (1.0 - beta2_) * grads.biases[l].cwiseProduct(grads.biases[l]);
      net.weights[l].array() -=
          lr_ * (mw_[l].array() / bc1) /
          ((vw_[l].array() / bc2).sqrt() + eps_);
      net.biases[l].array() -=
          lr_ * (mb_[l].array() / bc1) /
          ((vb_[l].array() / bc2).sqrt() + eps_);
    }
  }

 private:
  void init_moments(const Mlp& net) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
      mw_.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
      vw_.push_back(Matrix::Zero(net.weights[l].rows(), net.weights[l].cols()));
      mb_.push_back(Vector::Zero(net.biases[l].size()));
      vb_.push_back(Vector::Zero(net.biases[l].size()));
    }
  }

  OptimizerKind kind_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long step_ = 0;
  std::vector<Matrix> mw_, vw_;
  std::vector<Vector> mb_, vb_;
};

// Same rule for the scalar log-temperature.
class ScalarOptimizer {
 public:
  ScalarOptimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

  void apply(double& param, double grad) {
    if (kind_ == OptimizerKind::Sgd) {
      param -= lr_ * grad;
      return;
    }
    ++step_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad * grad;
    const double mhat = m_ / (1.0 - std::pow(beta1_, static_cast<double>(step_)));
    const double vhat = v_ / (1.0 - std::pow(beta2_, static_cast<double>(step_)));
    param -= lr_ * mhat / (std::sqrt(vhat) + eps_);
  }

 private:
  OptimizerKind kind_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long step_ = 0;
  double m_ = 0.0, v_ = 0.0;
};

}  // namespace moesac
