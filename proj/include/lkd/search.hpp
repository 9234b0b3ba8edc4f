// Seeded random hyperparameter search.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lkd/bench.hpp"

namespace lkd {

/// Ranges sampled uniformly per trial. Defaults: tree depth 1..15, MLP with
/// 1..5 hidden layers of 4..300 units, batch 2^6..2^12, dropout in [0, 1),
/// MAE or MSE.
struct SearchSpace {
  std::vector<std::string> model_types{"tree", "mlp"};
  int depth_min = 1;
  int depth_max = 15;
  int layers_min = 1;
  int layers_max = 5;
  int units_min = 4;
  int units_max = 300;
  int batch_log2_min = 6;
  int batch_log2_max = 12;
  double dropout_min = 0.0;
  double dropout_max = 1.0;
  std::vector<Loss> losses{Loss::MAE, Loss::MSE};
  std::vector<Aggregation> aggregations{Aggregation::Combined};
  double learning_rate = 0.05;
  int epochs = 200;

  void validate() const;
};

struct TrialResult {
  int trial = 0;
  std::uint64_t seed = 0;
  TrainConfig config;
  std::optional<IndexArtifact> artifact;
  EvalReport report;
  std::vector<double> css_trace;
  std::string error;  // non-empty if the trial failed

  bool ok() const { return error.empty(); }
};

/// Seed of trial t, derived from the search seed only.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

/// The configuration trial t samples (model, aggregation and seed replace
/// those of `base`).
TrainConfig sample_config(const SearchSpace& space, const TrainConfig& base, std::uint64_t seed, int trial);

/// Trains and evaluates `trials` sampled configurations. A trial that throws
/// is recorded with its error message; the search continues. Artifacts are
/// kept only if `keep_artifacts`.
std::vector<TrialResult> random_search(const Dataset& ds, const KDistTable& table, const SearchSpace& space,
                                       const TrainConfig& base, int trials, std::uint64_t seed,
                                       const std::vector<Index>& ks, const std::vector<Index>& queries,
                                       bool keep_artifacts = false);

}  // namespace lkd
