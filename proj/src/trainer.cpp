#include "lkd/trainer.hpp"

#include <numeric>

namespace lkd {

WeightSource parse_weight_source(std::string_view name) {
  if (name == "uniform") return WeightSource::Uniform;
  if (name == "css") return WeightSource::Css;
  if (name == "kdist_inverse") return WeightSource::KDistInverse;
  throw ConfigError("unknown weight source '" + std::string(name) + "'");
}

std::string_view to_string(WeightSource source) {
  switch (source) {
    case WeightSource::Uniform: return "uniform";
    case WeightSource::Css: return "css";
    case WeightSource::KDistInverse: return "kdist_inverse";
  }
  return "?";
}

TrainingData prepare_training_data(const Dataset& ds, const KDistTable& table) {
  if (table.size() != ds.size()) throw ShapeMismatch("table does not match dataset");
  TrainingData data;
  data.zscore = zscore_fit(ds);
  data.norm = kdist_norm_fit(table);
  data.inputs = data.zscore.apply_rows(ds.points());
  data.targets = data.norm.apply_table(table);
  return data;
}

MatrixXd css_weights(const MatrixXi& css, bool floor, bool rescale) {
  MatrixXd w = css.cast<double>();
  if (floor) w = w.cwiseMax(1.0);
  if (rescale) {
    const double mean = w.mean();
    if (mean > 0.0) w /= mean;
  }
  return w;
}

MatrixXd kdist_inverse_weights(const KDistTable& table, bool rescale) {
  MatrixXd w = (table.values().array() + 1e-9).inverse().matrix();
  if (rescale) w /= w.mean();
  return w;
}

TrainResult train_reweighted(const Dataset& ds, const KDistTable& table, const TrainConfig& config) {
  return train_reweighted(ds, table, prepare_training_data(ds, table), config);
}

TrainResult train_reweighted(const Dataset& ds, const KDistTable& table, const TrainingData& data,
                             const TrainConfig& config) {
  if (config.iterations < 1) throw InvalidSpec("iterations must be at least 1");
  if (table.k_max() != config.k_max) throw ShapeMismatch("table was not built with the configured k_max");
  if (table.size() != ds.size()) throw ShapeMismatch("table does not match dataset");

  const Index n = ds.size();
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> ks(static_cast<std::size_t>(config.k_max));
  std::iota(ks.begin(), ks.end(), Index{1});

  TrainResult out;
  MatrixXd weights = MatrixXd::Ones(n, config.k_max);
  std::shared_ptr<const KDistModel> model;
  MatrixXd predictions;
  MatrixXd fitted_weights;

  for (int it = 0; it < config.iterations; ++it) {
    if (!model || weights != fitted_weights) {
      auto m = make_model(config.model);
      m->fit(data.inputs, data.targets, weights, config.seed);
      model = std::move(m);
      predictions = model->predict_batch(data.inputs);
      fitted_weights = weights;
      ++out.fits;
    }
    out.artifact = assemble_learned_artifact(ds, table, data.zscore, data.norm, model, data.inputs, data.targets,
                                             config.aggregation, config.flags, &predictions);
    out.weights = fitted_weights;

    const BoundTable bounds = compute_bound_table(out.artifact, ds, &predictions);
    const MatrixXi css = css_matrix(bounds, ds, ks, all, config.threads);
    out.css_trace.push_back(css.cast<double>().mean());

    switch (config.weight_source) {
      case WeightSource::Uniform: break;
      case WeightSource::Css: weights = css_weights(css, config.floor, config.rescale); break;
      case WeightSource::KDistInverse: weights = kdist_inverse_weights(table, config.rescale); break;
    }
  }
  return out;
}

}  // namespace lkd
