#include <algorithm>
#include <numeric>

#include "lkd/regress.hpp"

namespace lkd {

Index mlp_param_count(Index input_dim, const std::vector<int>& hidden, Index output_dim) {
  Index total = 0;
  Index fan_in = input_dim;
  for (int h : hidden) {
    total += fan_in * h + h;
    fan_in = h;
  }
  return total + fan_in * output_dim + output_dim;
}

void MlpModel::fit(const MatrixXd& inputs, const MatrixXd& targets, const MatrixXd& weights,
                   std::uint64_t seed) {
  validate_fit_inputs(inputs, targets, weights);
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) throw InvalidSpec("dropout must lie in [0, 1)");
  if (config_.batch_size < 1 || config_.epochs < 0) throw InvalidSpec("invalid batch size or epochs");
  for (int h : config_.hidden) {
    if (h < 1) throw InvalidSpec("hidden layer width must be positive");
  }

  std::mt19937_64 rng(seed);
  MlpNet<float> net = MlpNet<float>::glorot(inputs.cols(), config_.hidden, targets.cols(), rng);
  const MatrixXf x = inputs.cast<float>();
  const MatrixXf y = targets.cast<float>();
  const MatrixXf w = weights.cast<float>();

  const Index n = inputs.rows();
  const Index batch = std::min(config_.batch_size, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  MatrixXf xb, yb, wb;
  MlpTape<float> tape;
  const auto lr = static_cast<float>(config_.learning_rate);

  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < n; start += batch) {
      const Index rows = std::min(batch, n - start);
      xb.resize(rows, x.cols());
      yb.resize(rows, y.cols());
      wb.resize(rows, w.cols());
      for (Index r = 0; r < rows; ++r) {
        const Index s = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = x.row(s);
        yb.row(r) = y.row(s);
        wb.row(r) = w.row(s);
      }
      const MatrixXf pred = net.forward(xb, &tape, config_.dropout, &rng);
      net.descend(net.backward(tape, pred, yb, wb, config_.loss), lr);
    }
    if (!net.all_finite()) throw NonFiniteInput("MLP training diverged");
  }
  net_ = std::move(net);
}

// Inference accumulates in double over the float weights with a fixed
// summation order, so a row's prediction does not depend on the batch.
VectorXd MlpModel::predict_row(const Eigen::Ref<const RowVector<double>>& x) const {
  if (!fitted()) throw NotFitted("MLP is not fitted");
  if (x.size() != input_dim()) throw ShapeMismatch("input dimension mismatch");
  VectorXd h = x.transpose();
  const auto& layers = net_.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    VectorXd z(layer.fan_out());
    for (Index j = 0; j < layer.fan_out(); ++j) {
      double acc = static_cast<double>(layer.bias(j));
      for (Index i = 0; i < layer.fan_in(); ++i) acc += static_cast<double>(layer.weight(j, i)) * h(i);
      z(j) = (l + 1 < layers.size() && acc < 0.0) ? 0.0 : acc;
    }
    h = std::move(z);
  }
  return h;
}

// Layout: hyperparameter section {hidden count u32, widths u32..., loss u8,
// batch u64, learning rate f64, epochs u32, dropout f64, input_dim u64,
// output_dim u64}, then parameter section {width u8 = 4, count u64, f32...}
// with each layer's weights row-major followed by its biases.
void MlpModel::serialize(ByteWriter& out) const {
  if (!fitted()) throw NotFitted("cannot serialize an unfitted MLP");
  ByteWriter hyper;
  hyper.u32(static_cast<std::uint32_t>(config_.hidden.size()));
  for (int h : config_.hidden) hyper.u32(static_cast<std::uint32_t>(h));
  hyper.u8(config_.loss == Loss::MSE ? 1 : 0);
  hyper.u64(static_cast<std::uint64_t>(config_.batch_size));
  hyper.f64(config_.learning_rate);
  hyper.u32(static_cast<std::uint32_t>(config_.epochs));
  hyper.f64(config_.dropout);
  hyper.u64(static_cast<std::uint64_t>(input_dim()));
  hyper.u64(static_cast<std::uint64_t>(k_max()));

  ByteWriter params;
  params.u8(4);
  params.u64(static_cast<std::uint64_t>(param_count()));
  for (const auto& layer : net_.layers()) {
    for (Index i = 0; i < layer.weight.size(); ++i) params.f32(layer.weight.data()[i]);
    for (Index i = 0; i < layer.bias.size(); ++i) params.f32(layer.bias(i));
  }
  out.section(hyper);
  out.section(params);
}

MlpModel MlpModel::deserialize(ByteReader& in) {
  ByteReader hyper = in.section();
  MlpConfig cfg;
  const std::uint32_t n_hidden = hyper.u32();
  if (n_hidden > 1024) throw CorruptArtifact("implausible MLP depth");
  cfg.hidden.clear();
  for (std::uint32_t i = 0; i < n_hidden; ++i) cfg.hidden.push_back(static_cast<int>(hyper.u32()));
  cfg.loss = hyper.u8() == 1 ? Loss::MSE : Loss::MAE;
  cfg.batch_size = static_cast<Index>(hyper.u64());
  cfg.learning_rate = hyper.f64();
  cfg.epochs = static_cast<int>(hyper.u32());
  cfg.dropout = hyper.f64();
  const auto input_dim = static_cast<Index>(hyper.u64());
  const auto output_dim = static_cast<Index>(hyper.u64());
  hyper.expect_done("MLP hyperparameters");

  ByteReader params = in.section();
  if (params.u8() != 4) throw CorruptArtifact("MLP parameters must be 32-bit");
  const std::uint64_t count = params.u64();
  if (count != static_cast<std::uint64_t>(mlp_param_count(input_dim, cfg.hidden, output_dim)) ||
      params.remaining() != count * 4) {
    throw CorruptArtifact("MLP parameter count mismatch");
  }
  MlpNet<float> net;
  Index fan_in = input_dim;
  std::vector<int> widths = cfg.hidden;
  widths.push_back(static_cast<int>(output_dim));
  for (int fan_out : widths) {
    DenseLayer<float> layer;
    layer.weight.resize(fan_out, fan_in);
    layer.bias.resize(fan_out);
    for (Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = params.f32();
    for (Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = params.f32();
    net.layers().push_back(std::move(layer));
    fan_in = fan_out;
  }
  MlpModel model(cfg);
  model.net_ = std::move(net);
  return model;
}

}  // namespace lkd
