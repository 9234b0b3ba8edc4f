// Dense feed-forward network with hand-written backpropagation, templated on
// the scalar type. Stored models use float; the gradient check uses double.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "lkd/errors.hpp"
#include "lkd/types.hpp"

namespace lkd {

enum class Loss { MAE, MSE };

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // fan_out × fan_in
  Vector<Scalar> bias;    // fan_out

  Index fan_in() const { return weight.cols(); }
  Index fan_out() const { return weight.rows(); }
};

template <typename Scalar>
struct MlpGradients {
  std::vector<Matrix<Scalar>> weight;
  std::vector<Vector<Scalar>> bias;
};

/// Activations recorded by a training forward pass.
template <typename Scalar>
struct MlpTape {
  std::vector<Matrix<Scalar>> inputs;  // input to each layer (after dropout)
  std::vector<Matrix<Scalar>> pre;     // pre-activation of each layer
  std::vector<Matrix<Scalar>> masks;   // dropout masks of hidden layers (scaled), may be empty
};

template <typename Scalar>
class MlpNet {
 public:
  MlpNet() = default;

  /// Glorot-uniform weights, zero biases.
  static MlpNet glorot(Index input_dim, const std::vector<int>& hidden, Index output_dim,
                       std::mt19937_64& rng) {
    MlpNet net;
    Index fan_in = input_dim;
    auto add = [&](Index fan_out) {
      DenseLayer<Scalar> layer;
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> u(-a, a);
      layer.weight.resize(fan_out, fan_in);
      for (Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = static_cast<Scalar>(u(rng));
      layer.bias = Vector<Scalar>::Zero(fan_out);
      net.layers_.push_back(std::move(layer));
      fan_in = fan_out;
    };
    for (int h : hidden) add(h);
    add(output_dim);
    return net;
  }

  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }
  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }
  bool empty() const { return layers_.empty(); }
  Index input_dim() const { return layers_.front().fan_in(); }
  Index output_dim() const { return layers_.back().fan_out(); }

  Index param_count() const {
    Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  /// Batched forward pass (rows are samples). Rectifier on hidden layers,
  /// identity on the output. With a tape, activations are recorded and
  /// dropout (rate in [0, 1)) is applied to hidden outputs.
  Matrix<Scalar> forward(const Matrix<Scalar>& x, MlpTape<Scalar>* tape = nullptr,
                         double dropout = 0.0, std::mt19937_64* rng = nullptr) const {
    Matrix<Scalar> h = x;
    if (tape) *tape = {};
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      if (tape) tape->inputs.push_back(h);
      Matrix<Scalar> z = h * layer.weight.transpose();
      z.rowwise() += layer.bias.transpose();
      if (tape) tape->pre.push_back(z);
      if (l + 1 == layers_.size()) return z;
      h = z.cwiseMax(Scalar(0));
      if (tape && dropout > 0.0 && rng) {
        std::bernoulli_distribution keep(1.0 - dropout);
        const Scalar scale = static_cast<Scalar>(1.0 / (1.0 - dropout));
        Matrix<Scalar> mask(h.rows(), h.cols());
        for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? scale : Scalar(0);
        h = h.cwiseProduct(mask);
        tape->masks.push_back(std::move(mask));
      }
    }
    return h;
  }

  /// Weighted loss  sum_{b,k} w(b,k) * l(pred(b,k) - y(b,k)) / (rows * cols).
  static Scalar loss(const Matrix<Scalar>& pred, const Matrix<Scalar>& y, const Matrix<Scalar>& w,
                     Loss kind) {
    const auto r = (pred - y).array();
    const Scalar denom = static_cast<Scalar>(pred.size());
    if (kind == Loss::MSE) return (w.array() * r.square()).sum() / denom;
    return (w.array() * r.abs()).sum() / denom;
  }

  /// Gradient of loss() with respect to every parameter, given a tape from
  /// forward(). MAE uses sign(r) with sign(0) = 0.
  MlpGradients<Scalar> backward(const MlpTape<Scalar>& tape, const Matrix<Scalar>& pred,
                                const Matrix<Scalar>& y, const Matrix<Scalar>& w, Loss kind) const {
    const Scalar denom = static_cast<Scalar>(pred.size());
    Matrix<Scalar> delta;
    if (kind == Loss::MSE) {
      delta = (Scalar(2) / denom) * w.cwiseProduct(pred - y);
    } else {
      delta = (w.array() * (pred - y).array().sign()).matrix() / denom;
    }
    MlpGradients<Scalar> g;
    g.weight.resize(layers_.size());
    g.bias.resize(layers_.size());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      g.weight[l] = delta.transpose() * tape.inputs[l];
      g.bias[l] = delta.colwise().sum().transpose();
      if (l == 0) break;
      Matrix<Scalar> back = delta * layers_[l].weight;
      if (!tape.masks.empty()) back = back.cwiseProduct(tape.masks[l - 1]);
      const auto& pre = tape.pre[l - 1];
      delta = (pre.array() > Scalar(0)).select(back, Scalar(0));
    }
    return g;
  }

  void descend(const MlpGradients<Scalar>& g, Scalar learning_rate) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      layers_[l].weight -= learning_rate * g.weight[l];
      layers_[l].bias -= learning_rate * g.bias[l];
    }
  }

  bool all_finite() const {
    for (const auto& l : layers_) {
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
  }

  // Flat parameter view: per layer, weights row-major then biases.
  Scalar& param(Index i) {
    for (auto& l : layers_) {
      if (i < l.weight.size()) return l.weight.data()[i];
      i -= l.weight.size();
      if (i < l.bias.size()) return l.bias(i);
      i -= l.bias.size();
    }
    throw KOutOfRange("parameter index out of range");
  }
  static Scalar flat_grad(const MlpGradients<Scalar>& g, Index i) {
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
      const auto& gw = g.weight[l];
      if (i < gw.size()) return gw.data()[i];
      i -= gw.size();
      if (i < g.bias[l].size()) return g.bias[l](i);
      i -= g.bias[l].size();
    }
    throw KOutOfRange("parameter index out of range");
  }

  template <typename Other>
  MlpNet<Other> cast() const {
    MlpNet<Other> out;
    for (const auto& l : layers_) {
      out.layers().push_back({l.weight.template cast<Other>(), l.bias.template cast<Other>()});
    }
    return out;
  }

 private:
  std::vector<DenseLayer<Scalar>> layers_;
};

}  // namespace lkd
