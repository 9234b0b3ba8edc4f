// Iterative sample re-weighting around a single model fit.
#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "lkd/engine.hpp"

namespace lkd {

enum class WeightSource { Uniform, Css, KDistInverse };

WeightSource parse_weight_source(std::string_view name);
std::string_view to_string(WeightSource source);

struct TrainConfig {
  ModelConfig model = TreeConfig{};
  Aggregation aggregation = Aggregation::Combined;
  BoundFlags flags;
  int iterations = 4;
  Index k_max = 64;
  std::uint64_t seed = 0;
  WeightSource weight_source = WeightSource::Css;
  bool floor = true;    // w := max(w, 1)
  bool rescale = true;  // w := w / mean(w)
  unsigned threads = 0;
};

/// z-scored inputs and normalized (snapped) targets for one dataset.
struct TrainingData {
  ZScoreParams zscore;
  KDistNormParams norm;
  MatrixXd inputs;   // n × d
  MatrixXd targets;  // n × k_max
};

TrainingData prepare_training_data(const Dataset& ds, const KDistTable& table);

struct TrainResult {
  IndexArtifact artifact;
  /// Mean CSS over all (database point, k) pairs after each iteration.
  std::vector<double> css_trace;
  /// Weights used for the final fit.
  MatrixXd weights;
  /// Number of fits actually run (a fit is skipped when the weights repeat).
  int fits = 0;
};

TrainResult train_reweighted(const Dataset& ds, const KDistTable& table, const TrainConfig& config);
TrainResult train_reweighted(const Dataset& ds, const KDistTable& table, const TrainingData& data,
                             const TrainConfig& config);

/// Next-iteration weights from a CSS matrix (n × k_max) under the given
/// flooring / rescaling options.
MatrixXd css_weights(const MatrixXi& css, bool floor, bool rescale);

/// 1 / (1e-9 + nndist(p, k)), optionally rescaled to mean 1.
MatrixXd kdist_inverse_weights(const KDistTable& table, bool rescale);

}  // namespace lkd
