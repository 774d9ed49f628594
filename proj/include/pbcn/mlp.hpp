#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbcn/bits.hpp"

namespace pbcn {

enum class InitMode {
  kScaled,  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases
  kUnit,    // U(0, 1) for every parameter
};

/// Fully connected network: ReLU on hidden layers, identity on the output.
/// Weights are stored out x in; batches are column-major (one sample per
/// column). A gradient is an Mlp of the same shape.
template <typename Scalar = double>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix weight;
    Vector bias;
  };

  Mlp() = default;

  // Zero parameters. sizes = {inputs, hidden..., outputs}.
  explicit Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least two layer sizes");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] < 1 || sizes_[l + 1] < 1) {
        throw std::invalid_argument("Mlp layer sizes must be positive");
      }
      layers_.push_back({Matrix::Zero(sizes_[l + 1], sizes_[l]), Vector::Zero(sizes_[l + 1])});
    }
  }

  static Mlp random(std::vector<int> sizes, InitMode mode, Rng& rng) {
    Mlp net(std::move(sizes));
    for (Layer& layer : net.layers_) {
      const double bound = mode == InitMode::kUnit
                               ? 1.0
                               : 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
      const double low = mode == InitMode::kUnit ? 0.0 : -bound;
      std::uniform_real_distribution<double> dist(low, bound);
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
        layer.weight.data()[i] = static_cast<Scalar>(dist(rng));
      }
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
        layer.bias(i) = static_cast<Scalar>(dist(rng));
      }
    }
    return net;
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int inputs() const { return sizes_.front(); }
  int outputs() const { return sizes_.back(); }
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Matrix forward(const Matrix& batch) const {
    if (batch.rows() != inputs()) {
      throw std::invalid_argument("Mlp input has " + std::to_string(batch.rows()) +
                                  " rows, expected " + std::to_string(inputs()));
    }
    Matrix h = batch;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Matrix z = layers_[l].weight * h;
      z.colwise() += layers_[l].bias;
      h = l + 1 < layers_.size() ? Matrix(z.cwiseMax(Scalar(0))) : std::move(z);
    }
    return h;
  }

  Vector forward(const Vector& input) const {
    return forward(Matrix(input)).col(0);
  }

  Eigen::Index parameter_count() const {
    Eigen::Index count = 0;
    for (const Layer& layer : layers_) count += layer.weight.size() + layer.bias.size();
    return count;
  }

  // Layer by layer: weight (column-major), then bias.
  Vector flatten() const {
    Vector out(parameter_count());
    Eigen::Index k = 0;
    for (const Layer& layer : layers_) {
      out.segment(k, layer.weight.size()) = layer.weight.reshaped();
      k += layer.weight.size();
      out.segment(k, layer.bias.size()) = layer.bias;
      k += layer.bias.size();
    }
    return out;
  }

  void assign(const Vector& params) {
    if (params.size() != parameter_count()) {
      throw std::invalid_argument("parameter vector has the wrong length");
    }
    Eigen::Index k = 0;
    for (Layer& layer : layers_) {
      layer.weight.reshaped() = params.segment(k, layer.weight.size());
      k += layer.weight.size();
      layer.bias = params.segment(k, layer.bias.size());
      k += layer.bias.size();
    }
  }

  // this += scale * other, parameter-wise.
  Mlp& axpy(Scalar scale, const Mlp& other) {
    check_shape(other);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].weight += scale * other.layers_[l].weight;
      layers_[l].bias += scale * other.layers_[l].bias;
    }
    return *this;
  }

  // this = keep * this + (1 - keep) * other.
  Mlp& blend(Scalar keep, const Mlp& other) {
    check_shape(other);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].weight = keep * layers_[l].weight + (Scalar(1) - keep) * other.layers_[l].weight;
      layers_[l].bias = keep * layers_[l].bias + (Scalar(1) - keep) * other.layers_[l].bias;
    }
    return *this;
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (a.sizes_ != b.sizes_) return false;
    for (std::size_t l = 0; l < a.layers_.size(); ++l) {
      if (a.layers_[l].weight != b.layers_[l].weight || a.layers_[l].bias != b.layers_[l].bias) {
        return false;
      }
    }
    return true;
  }

 private:
  void check_shape(const Mlp& other) const {
    if (other.sizes_ != sizes_) throw std::invalid_argument("Mlp shapes differ");
  }

  std::vector<int> sizes_;
  std::vector<Layer> layers_;
};

// Bit vector as a network input column.
template <typename Scalar = double>
typename Mlp<Scalar>::Vector to_input(std::span<const std::uint8_t> bits) {
  typename Mlp<Scalar>::Vector v(static_cast<Eigen::Index>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) v(static_cast<Eigen::Index>(i)) = bits[i];
  return v;
}

template <typename Scalar>
typename Mlp<Scalar>::Vector forward(const Mlp<Scalar>& net, std::span<const std::uint8_t> state) {
  return net.forward(to_input<Scalar>(state));
}

// Index of the first maximal entry.
template <typename Derived>
Eigen::Index argmax(const Eigen::DenseBase<Derived>& values) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values(i) > values(best)) best = i;
  }
  return best;
}

template <typename Scalar>
struct LossGradient {
  Scalar loss;
  Mlp<Scalar> gradient;
};

/// Mean squared error over the batch on the taken action's output only,
///   L = (1/M) sum_i (y_i - Q(x_i, a_i))^2,
/// with reverse-mode gradients. Targets are constants. The ReLU derivative at
/// zero is taken as 0.
template <typename Scalar>
LossGradient<Scalar> loss_and_gradient(const Mlp<Scalar>& net,
                                       const typename Mlp<Scalar>::Matrix& states,
                                       std::span<const std::uint64_t> actions,
                                       const typename Mlp<Scalar>::Vector& targets) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  const auto& layers = net.layers();
  const Eigen::Index batch = states.cols();
  if (static_cast<Eigen::Index>(actions.size()) != batch || targets.size() != batch) {
    throw std::invalid_argument("batch, actions and targets differ in length");
  }

  // activations[l] feeds layer l; pre[l] is layer l's affine output.
  std::vector<Matrix> activations{states};
  std::vector<Matrix> pre;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = layers[l].weight * activations.back();
    z.colwise() += layers[l].bias;
    pre.push_back(z);
    if (l + 1 < layers.size()) activations.push_back(z.cwiseMax(Scalar(0)));
  }

  const Matrix& out = pre.back();
  Matrix delta = Matrix::Zero(out.rows(), batch);
  Scalar loss(0);
  const Scalar scale = Scalar(2) / static_cast<Scalar>(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const auto a = static_cast<Eigen::Index>(actions[static_cast<std::size_t>(i)]);
    const Scalar err = targets(i) - out(a, i);
    loss += err * err;
    delta(a, i) = -scale * err;
  }
  loss /= static_cast<Scalar>(batch);

  Mlp<Scalar> grad(net.sizes());
  for (std::size_t l = layers.size(); l-- > 0;) {
    grad.layers()[l].weight.noalias() = delta * activations[l].transpose();
    grad.layers()[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = layers[l].weight.transpose() * delta;
      delta = back.cwiseProduct((pre[l - 1].array() > Scalar(0)).matrix().template cast<Scalar>());
    }
  }
  return {loss, std::move(grad)};
}

// theta <- theta - beta * gradient.
template <typename Scalar>
void sgd_step(Mlp<Scalar>& net, const Mlp<Scalar>& gradient, Scalar beta) {
  net.axpy(-beta, gradient);
}

// phi <- tau * phi + (1 - tau) * theta.
template <typename Scalar>
void polyak_update(Mlp<Scalar>& target, const Mlp<Scalar>& main, Scalar tau) {
  target.blend(tau, main);
}

}  // namespace pbcn
