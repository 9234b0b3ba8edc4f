#include "lkd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

namespace lkd {

std::vector<Index> resolve_queries(const QuerySet& set, Index n) {
  QuerySet s = set;
  if (s.kind == QuerySet::Kind::Auto) {
    if (n <= 25000) {
      s.kind = QuerySet::Kind::All;
    } else {
      s.kind = QuerySet::Kind::Sample;
      s.sample_size = 10000;
    }
  }
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  if (s.kind == QuerySet::Kind::All || s.sample_size >= n) return all;
  if (s.sample_size < 1) throw InvalidSpec("query sample size must be positive");
  std::vector<Index> picked;
  std::mt19937_64 rng(s.seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), s.sample_size, rng);
  return picked;
}

std::vector<Index> default_ks(Index k_max) {
  std::vector<Index> ks;
  for (Index k = 1; k <= k_max; k *= 2) ks.push_back(k);
  if (ks.empty() || ks.back() != k_max) ks.push_back(k_max);
  return ks;
}

EvalReport evaluate(const IndexArtifact& artifact, const Dataset& ds, const std::vector<Index>& ks,
                    const std::vector<Index>& queries, unsigned threads, const MatrixXd* predictions) {
  const auto start = std::chrono::steady_clock::now();
  const BoundTable bounds = compute_bound_table(artifact, ds, predictions);
  const MatrixXi css = css_matrix(bounds, ds, ks, queries, threads);

  EvalReport r;
  r.model_type = artifact.model_type();
  r.param_count = artifact.param_count();
  r.query_count = static_cast<Index>(queries.size());
  r.crossings = bounds.crossings;
  r.fingerprint = artifact.fingerprint;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    const auto col = css.col(static_cast<Index>(j));
    KEval e;
    e.k = ks[j];
    e.mean_css = col.size() ? col.cast<double>().mean() : 0.0;
    e.max_css = col.size() ? col.maxCoeff() : 0;
    r.per_k.push_back(e);
  }
  r.mean_css = css.size() ? css.cast<double>().mean() : 0.0;
  r.max_css = css.size() ? css.maxCoeff() : 0;
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string AblationRow::label() const {
  std::string s;
  if (sample_weights) s += 'S';
  if (mode != Aggregation::OverPoints) s += 'K';
  if (mode != Aggregation::OverK) s += 'D';
  if (monotone) s += 'M';
  return s;
}

std::vector<AblationRow> ablation_grid(const Dataset& ds, const KDistTable& table, const TrainConfig& base,
                                       const std::vector<Index>& ks, const std::vector<Index>& queries) {
  const TrainingData data = prepare_training_data(ds, table);
  std::vector<AblationRow> rows;
  for (bool weighted : {false, true}) {
    TrainConfig cfg = base;
    if (weighted) {
      cfg.weight_source = WeightSource::Css;
    } else {
      cfg.iterations = 1;
      cfg.weight_source = WeightSource::Uniform;
    }
    const TrainResult trained = train_reweighted(ds, table, data, cfg);
    const auto& model = trained.artifact.learned().model;
    const MatrixXd predictions = model->predict_batch(data.inputs);
    ResidualMatrix residuals = residuals_from_predictions(predictions, data.targets);
    make_exact(residuals, predictions, data.norm, table);

    for (Aggregation mode : {Aggregation::OverK, Aggregation::OverPoints, Aggregation::Combined}) {
      for (bool monotone : {false, true}) {
        AblationRow row;
        row.sample_weights = weighted;
        row.mode = mode;
        row.monotone = monotone;
        row.flags = base.flags;
        row.flags.restore_monotone = monotone;
        const IndexArtifact artifact = with_bounds(trained.artifact, residuals, mode, row.flags);
        row.report = evaluate(artifact, ds, ks, queries, base.threads, &predictions);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<std::size_t> skyline(const std::vector<SkylinePoint>& points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].size != points[b].size) return points[a].size < points[b].size;
    return points[a].css < points[b].css;
  });
  auto dominates = [&](const SkylinePoint& a, const SkylinePoint& b) {
    return a.size <= b.size && a.css <= b.css && (a.size < b.size || a.css < b.css);
  };
  std::vector<std::size_t> keep;
  for (std::size_t i : order) {
    const bool dominated = std::any_of(points.begin(), points.end(),
                                       [&](const SkylinePoint& other) { return dominates(other, points[i]); });
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

std::vector<std::size_t> skyline(const std::vector<EvalReport>& reports) {
  std::vector<SkylinePoint> points;
  points.reserve(reports.size());
  for (const auto& r : reports) points.push_back({r.param_count, r.mean_css});
  return skyline(points);
}

}  // namespace lkd
