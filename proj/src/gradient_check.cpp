#include <algorithm>
#include <cmath>

#include "lkd/regress.hpp"

namespace lkd {
namespace {

constexpr double kStep = 1e-6;

// Signs that decide which branch of a piecewise-linear function is active:
// hidden pre-activations, and residuals for MAE.
std::vector<signed char> kink_pattern(const MlpNet<double>& net, const MatrixXd& x, const MatrixXd& y,
                                      Loss loss) {
  MlpTape<double> tape;
  const MatrixXd pred = net.forward(x, &tape);
  std::vector<signed char> pattern;
  for (std::size_t l = 0; l + 1 < tape.pre.size(); ++l) {
    for (Index i = 0; i < tape.pre[l].size(); ++i) {
      const double v = tape.pre[l].data()[i];
      pattern.push_back(static_cast<signed char>((v > 0) - (v < 0)));
    }
  }
  if (loss == Loss::MAE) {
    const MatrixXd r = pred - y;
    for (Index i = 0; i < r.size(); ++i) {
      const double v = r.data()[i];
      pattern.push_back(static_cast<signed char>((v > 0) - (v < 0)));
    }
  }
  return pattern;
}

}  // namespace

GradientCheckReport gradient_check(MlpNet<double> net, const MatrixXd& x, const MatrixXd& y,
                                   const MatrixXd& w, Loss loss, double tolerance) {
  GradientCheckReport report;
  MlpTape<double> tape;
  const MatrixXd pred = net.forward(x, &tape);
  const MlpGradients<double> grads = net.backward(tape, pred, y, w, loss);
  const auto base_pattern = kink_pattern(net, x, y, loss);

  for (Index i = 0; i < net.param_count(); ++i) {
    double& theta = net.param(i);
    const double saved = theta;
    theta = saved + kStep;
    const double up = MlpNet<double>::loss(net.forward(x), y, w, loss);
    const bool up_same = kink_pattern(net, x, y, loss) == base_pattern;
    theta = saved - kStep;
    const double down = MlpNet<double>::loss(net.forward(x), y, w, loss);
    const bool down_same = kink_pattern(net, x, y, loss) == base_pattern;
    theta = saved;

    if (!up_same || !down_same) {
      ++report.skipped;
      continue;
    }
    const double numeric = (up - down) / (2.0 * kStep);
    const double analytic = MlpNet<double>::flat_grad(grads, i);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-4});
    report.max_relative_error = std::max(report.max_relative_error, std::abs(analytic - numeric) / denom);
    ++report.checked;
  }
  report.passed = report.checked > 0 && report.max_relative_error < tolerance;
  return report;
}

GradientCheckReport gradient_check(Index input_dim, const std::vector<int>& hidden, Index output_dim,
                                   Loss loss, double tolerance, std::uint64_t seed, Index batch_rows) {
  std::mt19937_64 rng(seed);
  MlpNet<double> net = MlpNet<double>::glorot(input_dim, hidden, output_dim, rng);
  std::uniform_real_distribution<double> bias(-0.5, 0.5);
  for (auto& layer : net.layers()) {
    for (Index j = 0; j < layer.bias.size(); ++j) layer.bias(j) = bias(rng);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.5, 2.0);
  MatrixXd x(batch_rows, input_dim), y(batch_rows, output_dim), w(batch_rows, output_dim);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  for (Index i = 0; i < y.size(); ++i) y.data()[i] = unit(rng);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = weight(rng);
  return gradient_check(std::move(net), x, y, w, loss, tolerance);
}

}  // namespace lkd
