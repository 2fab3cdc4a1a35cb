#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lossforge/random.hpp"

namespace lossforge {

/// Fully connected network with LeakyReLU hidden layers and a linear output
/// layer. Batches are stored column-wise: one column per sample.
class Mlp {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
  };

  /// Per-layer inputs and pre-activations kept for backpropagation.
  struct Trace {
    std::vector<Eigen::MatrixXd> inputs;
    std::vector<Eigen::MatrixXd> pre;
  };

  Mlp() = default;
  /// `widths` lists every layer width including input and output. Weights
  /// and biases start from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(const std::vector<int>& widths, double leaky_slope, Rng& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Trace& trace) const;

  /// Backpropagates d loss / d output. Accumulates parameter gradients into
  /// `grads` (same shapes as layers()) unless it is null, and returns
  /// d loss / d input.
  Eigen::MatrixXd backward(const Trace& trace, const Eigen::MatrixXd& grad_out,
                           std::vector<Layer>* grads) const;

  std::vector<Layer> zero_gradients() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  int input_width() const { return static_cast<int>(layers_.front().weight.cols()); }
  int output_width() const { return static_cast<int>(layers_.back().weight.rows()); }
  double leaky_slope() const { return slope_; }

 private:
  std::vector<Layer> layers_;
  double slope_ = 0.2;
};

struct AdamSettings {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments, one optimizer per network.
class Adam {
 public:
  Adam(const Mlp& net, AdamSettings settings);
  void step(Mlp& net, const std::vector<Mlp::Layer>& grads);
  long steps() const { return t_; }

 private:
  AdamSettings settings_;
  std::vector<Mlp::Layer> m_;
  std::vector<Mlp::Layer> v_;
  long t_ = 0;
};

}  // namespace lossforge
