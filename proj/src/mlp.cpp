#include "adaocc/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace adaocc {

Mlp::Grads::Grads(const Mlp& mlp) {
  dW.reserve(mlp.layers.size());
  db.reserve(mlp.layers.size());
  for (const Layer& l : mlp.layers) {
    dW.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
    db.push_back(Eigen::VectorXd::Zero(l.b.size()));
  }
}

void Mlp::Grads::set_zero() {
  for (auto& m : dW) m.setZero();
  for (auto& v : db) v.setZero();
}

void Mlp::Grads::scale(double s) {
  for (auto& m : dW) m *= s;
  for (auto& v : db) v *= s;
}

Mlp::Mlp(const std::vector<int>& layer_sizes, Rng& rng) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("need at least input and output sizes");
  for (int s : layer_sizes)
    if (s < 1) throw std::invalid_argument("layer sizes must be positive");
  layers.reserve(layer_sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int in = layer_sizes[l];
    const int out = layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Layer layer;
    layer.W.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.W(r, c) = rng.uniform(-limit, limit);
    layer.b = Eigen::VectorXd::Zero(out);
    layers.push_back(std::move(layer));
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd a = X;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    a = (a * layers[l].W.transpose()).rowwise() + layers[l].b.transpose();
    if (l + 1 < layers.size()) a = a.array().tanh();
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_cached(const Eigen::MatrixXd& X, Cache& cache) const {
  cache.activations.clear();
  cache.activations.reserve(layers.size() + 1);
  cache.activations.push_back(X);
  Eigen::MatrixXd a = X;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    a = (a * layers[l].W.transpose()).rowwise() + layers[l].b.transpose();
    if (l + 1 < layers.size()) a = a.array().tanh();
    cache.activations.push_back(a);
  }
  return a;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& dY, Grads& grads) const {
  if (cache.activations.size() != layers.size() + 1)
    throw std::invalid_argument("cache does not match network depth");
  Eigen::MatrixXd delta = dY;
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (l + 1 < layers.size()) {
      // tanh'(z) expressed through the stored activation
      delta = delta.array() * (1.0 - cache.activations[l + 1].array().square());
    }
    grads.dW[l] += delta.transpose() * cache.activations[l];
    grads.db[l] += delta.colwise().sum().transpose();
    if (l > 0) delta = delta * layers[l].W;
  }
  return delta * layers[0].W;
}

AdamState::AdamState(const Mlp& mlp) {
  for (const Mlp::Layer& l : mlp.layers) {
    mW_.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
    vW_.push_back(Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()));
    mb_.push_back(Eigen::VectorXd::Zero(l.b.size()));
    vb_.push_back(Eigen::VectorXd::Zero(l.b.size()));
  }
}

void AdamState::step(Mlp& mlp, const Mlp::Grads& grads, double learning_rate,
                     const AdamParams& p) {
  ++t_;
  const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(t_));
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    mW_[l] = p.beta1 * mW_[l] + (1.0 - p.beta1) * grads.dW[l];
    vW_[l] = p.beta2 * vW_[l].array() + (1.0 - p.beta2) * grads.dW[l].array().square();
    mb_[l] = p.beta1 * mb_[l] + (1.0 - p.beta1) * grads.db[l];
    vb_[l] = p.beta2 * vb_[l].array() + (1.0 - p.beta2) * grads.db[l].array().square();
    mlp.layers[l].W.array() -=
        learning_rate * (mW_[l].array() / bc1) / ((vW_[l].array() / bc2).sqrt() + p.epsilon);
    mlp.layers[l].b.array() -=
        learning_rate * (mb_[l].array() / bc1) / ((vb_[l].array() / bc2).sqrt() + p.epsilon);
  }
}

void apply_sgd(Mlp& mlp, const Mlp::Grads& grads, double learning_rate) {
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    mlp.layers[l].W -= learning_rate * grads.dW[l];
    mlp.layers[l].b -= learning_rate * grads.db[l];
  }
}

Optimizer::Optimizer(const Mlp& mlp, const TrainConfig& cfg)
    : learning_rate_(cfg.learning_rate), params_(cfg.adam) {
  if (cfg.optimizer == "adam") {
    use_adam_ = true;
    adam_ = AdamState(mlp);
  } else if (cfg.optimizer == "sgd") {
    use_adam_ = false;
  } else {
    throw std::invalid_argument("unknown optimizer: " + cfg.optimizer);
  }
}

void Optimizer::step(Mlp& mlp, const Mlp::Grads& grads) {
  if (use_adam_) {
    adam_.step(mlp, grads, learning_rate_, params_);
  } else {
    apply_sgd(mlp, grads, learning_rate_);
  }
}

}  // namespace adaocc
