#include "lossforge/network.hpp"

#include <cmath>
#include <stdexcept>

namespace lossforge {

Mlp::Mlp(const std::vector<int>& widths, double leaky_slope, Rng& rng) : slope_(leaky_slope) {
  if (widths.size() < 2) throw std::invalid_argument("network needs at least two widths");
  for (const int w : widths) {
    if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
  }
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int in = widths[l];
    const int out = widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (int c = 0; c < in; ++c) {
      for (int r = 0; r < out; ++r) layer.weight(r, c) = uniform_real(rng, -bound, bound);
    }
    for (int r = 0; r < out; ++r) layer.bias(r) = uniform_real(rng, -bound, bound);
    layers_.push_back(std::move(layer));
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * h;
    z.colwise() += layers_[l].bias;
    if (l + 1 < layers_.size()) {
      h = z.unaryExpr([s = slope_](double v) { return v > 0.0 ? v : s * v; });
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Trace& trace) const {
  trace.inputs.clear();
  trace.pre.clear();
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    trace.inputs.push_back(h);
    Eigen::MatrixXd z = layers_[l].weight * h;
    z.colwise() += layers_[l].bias;
    trace.pre.push_back(z);
    if (l + 1 < layers_.size()) {
      h = z.unaryExpr([s = slope_](double v) { return v > 0.0 ? v : s * v; });
    } else {
      h = std::move(z);
    }
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const Trace& trace, const Eigen::MatrixXd& grad_out,
                              std::vector<Layer>* grads) const {
  Eigen::MatrixXd delta = grad_out;  // d loss / d pre-activation of layer l
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (l + 1 < layers_.size()) {
      delta = delta.cwiseProduct(trace.pre[l].unaryExpr(
          [s = slope_](double v) { return v > 0.0 ? 1.0 : s; }));
    }
    if (grads != nullptr) {
      (*grads)[l].weight.noalias() += delta * trace.inputs[l].transpose();
      (*grads)[l].bias += delta.rowwise().sum();
    }
    delta = layers_[l].weight.transpose() * delta;
  }
  return delta;
}

std::vector<Mlp::Layer> Mlp::zero_gradients() const {
  std::vector<Layer> out;
  out.reserve(layers_.size());
  for (const auto& layer : layers_) {
    out.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                   Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return out;
}

Adam::Adam(const Mlp& net, AdamSettings settings)
    : settings_(settings), m_(net.zero_gradients()), v_(net.zero_gradients()) {
  if (!(settings_.lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
}

void Adam::step(Mlp& net, const std::vector<Mlp::Layer>& grads) {
  ++t_;
  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double lr = settings_.lr;
  const double eps = settings_.epsilon;
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, m_[l].weight, v_[l].weight, grads[l].weight);
    update(layers[l].bias, m_[l].bias, v_[l].bias, grads[l].bias);
  }
}

}  // namespace lossforge
