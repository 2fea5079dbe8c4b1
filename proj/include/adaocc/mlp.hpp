#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaocc/rng.hpp"

namespace adaocc {

// Fully connected network with tanh hidden layers and an identity output
// layer. Rows of the IO matrices are samples.
class Mlp {
 public:
  struct Layer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;  // out
  };

  struct Cache {
    // activations[0] is the input; activations[l] the output of layer l.
    std::vector<Eigen::MatrixXd> activations;
  };

  struct Grads {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;

    Grads() = default;
    explicit Grads(const Mlp& mlp);
    void set_zero();
    void scale(double s);
  };

  Mlp() = default;

  // layer_sizes = {in, h1, ..., out}. Weights get Xavier-uniform init drawn
  // from `rng` in a fixed order; biases start at zero.
  Mlp(const std::vector<int>& layer_sizes, Rng& rng);

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;
  Eigen::MatrixXd forward_cached(const Eigen::MatrixXd& X, Cache& cache) const;

  // Backpropagates dL/dY through the cached activations, accumulating into
  // `grads` (caller zeroes), and returns dL/dX.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& dY, Grads& grads) const;

  std::vector<Layer> layers;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 16;
  std::uint64_t seed = 0;
  std::string optimizer = "adam";  // "adam" or "sgd"
  AdamParams adam;
};

// Per-parameter first/second moment state for Adam with bias correction.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const Mlp& mlp);
  void step(Mlp& mlp, const Mlp::Grads& grads, double learning_rate, const AdamParams& p);

 private:
  std::vector<Eigen::MatrixXd> mW_, vW_;
  std::vector<Eigen::VectorXd> mb_, vb_;
  long t_ = 0;
};

void apply_sgd(Mlp& mlp, const Mlp::Grads& grads, double learning_rate);

// Parameter updater selected by TrainConfig::optimizer.
class Optimizer {
 public:
  Optimizer(const Mlp& mlp, const TrainConfig& cfg);
  void step(Mlp& mlp, const Mlp::Grads& grads);

 private:
  bool use_adam_ = true;
  double learning_rate_ = 1e-3;
  AdamParams params_;
  AdamState adam_;
};

}  // namespace adaocc
