#include "lkd/engine.hpp"

#include <algorithm>
#include <chrono>

#include "lkd/parallel.hpp"

namespace lkd {

Index IndexArtifact::param_count() const {
  if (is_baseline()) return baseline().param_count();
  const auto& f = learned();
  return f.model->param_count() + zscore.param_count() + kdist_norm.param_count() + f.bounds.param_count();
}

std::string IndexArtifact::model_type() const {
  if (is_baseline()) return "cop";
  return model_type_name(learned().model->config());
}

void IndexArtifact::check_dataset(const Dataset& ds) const {
  if (ds.size() != n || ds.dim() != dim || ds.metric() != metric || ds.fingerprint() != fingerprint) {
    throw FingerprintMismatch("index was built for a different dataset");
  }
}

IndexArtifact make_cop_artifact(CopModel model, const Dataset& ds) {
  if (model.size() != ds.size()) throw ShapeMismatch("baseline does not match dataset size");
  IndexArtifact a;
  a.k_max = model.k_max;
  a.filter = std::move(model);
  a.n = ds.size();
  a.dim = ds.dim();
  a.metric = ds.metric();
  a.fingerprint = ds.fingerprint();
  return a;
}

IndexArtifact assemble_learned_artifact(const Dataset& ds, const KDistTable& table, const ZScoreParams& zscore,
                                        const KDistNormParams& norm, std::shared_ptr<const KDistModel> model,
                                        const MatrixXd& inputs, const MatrixXd& targets, Aggregation mode,
                                        BoundFlags flags, const MatrixXd* predictions) {
  if (table.size() != ds.size() || inputs.rows() != ds.size()) throw ShapeMismatch("table does not match dataset");
  MatrixXd own;
  if (!predictions) {
    own = model->predict_batch(inputs);
    predictions = &own;
  }
  ResidualMatrix residuals = residuals_from_predictions(*predictions, targets);
  make_exact(residuals, *predictions, norm, table);

  IndexArtifact a;
  a.zscore = zscore;
  a.kdist_norm = norm;
  a.k_max = table.k_max();
  a.filter = LearnedFilter{std::move(model), aggregate(residuals, mode, flags)};
  a.n = ds.size();
  a.dim = ds.dim();
  a.metric = ds.metric();
  a.fingerprint = ds.fingerprint();
  return a;
}

IndexArtifact with_bounds(const IndexArtifact& artifact, const ResidualMatrix& residuals, Aggregation mode,
                          BoundFlags flags) {
  IndexArtifact a = artifact;
  a.filter = LearnedFilter{artifact.learned().model, aggregate(residuals, mode, flags)};
  return a;
}

BoundTable compute_bound_table(const IndexArtifact& artifact, const Dataset& ds, const MatrixXd* predictions) {
  artifact.check_dataset(ds);
  BoundTable t;
  t.lower.resize(ds.size(), artifact.k_max);
  t.upper.resize(ds.size(), artifact.k_max);
  if (artifact.is_baseline()) {
    for (Index o = 0; o < ds.size(); ++o) {
      const BoundRow row = cop_bound_row(artifact.baseline(), o);
      t.lower.row(o) = row.lower.transpose();
      t.upper.row(o) = row.upper.transpose();
      t.crossings += row.crossings;
    }
    return t;
  }
  const auto& f = artifact.learned();
  MatrixXd own;
  if (!predictions) {
    own = f.model->predict_batch(artifact.zscore.apply_rows(ds.points()));
    predictions = &own;
  }
  for (Index o = 0; o < ds.size(); ++o) {
    const BoundRow row = evaluate_bound_row(f.bounds, predictions->row(o).transpose(), artifact.kdist_norm, o);
    t.lower.row(o) = row.lower.transpose();
    t.upper.row(o) = row.upper.transpose();
    t.crossings += row.crossings;
  }
  return t;
}

// ---------------------------------------------------------------------------

RknnEngine::RknnEngine(const IndexArtifact& artifact, const Dataset& ds)
    : artifact_(&artifact), ds_(&ds), knn_(ds) {
  artifact.check_dataset(ds);
}

template <typename BoundsFn>
QueryResult RknnEngine::run(BoundsFn&& bounds_of, const Eigen::Ref<const RowVector<double>>& q, Index k,
                            std::optional<Index> q_index) const {
  if (k < 1 || k > artifact_->k_max) throw KOutOfRange("k outside 1..k_max");
  if (q.size() != ds_->dim()) throw DimensionMismatch("query has wrong dimension");
  const auto start = std::chrono::steady_clock::now();

  QueryResult out;
  std::vector<std::pair<Index, double>> candidates;
  for (Index o = 0; o < ds_->size(); ++o) {
    if (q_index && *q_index == o) {
      out.stats.self_skipped = true;
      continue;
    }
    const double d = ds_->dist_to(q, o);
    const BoundPair b = bounds_of(o);
    switch (classify(d, b.lower, b.upper)) {
      case FilterDecision::Include:
        out.result.push_back(o);
        ++out.stats.included;
        break;
      case FilterDecision::Candidate:
        candidates.emplace_back(o, d);
        break;
      case FilterDecision::Reject:
        ++out.stats.rejected;
        break;
    }
  }
  out.stats.candidates = static_cast<Index>(candidates.size());
  out.css = out.stats.candidates;

  for (const auto& [o, d] : candidates) {
    const double kd = knn_.nndist(o, k);
    if (d <= kd) {
      out.result.push_back(o);
      ++out.stats.refined_in;
    } else {
      ++out.stats.refined_out;
    }
  }
  std::sort(out.result.begin(), out.result.end());
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

QueryResult RknnEngine::query(const Eigen::Ref<const RowVector<double>>& q, Index k,
                              std::optional<Index> q_index) const {
  if (k < 1 || k > artifact_->k_max) throw KOutOfRange("k outside 1..k_max");
  if (artifact_->is_baseline()) {
    const CopModel& cop = artifact_->baseline();
    return run([&](Index o) { return cop_bounds(cop, o, k); }, q, k, q_index);
  }
  const auto& f = artifact_->learned();
  const MatrixXd predictions = f.model->predict_batch(artifact_->zscore.apply_rows(ds_->points()));
  return run(
      [&](Index o) {
        const BoundRow row = evaluate_bound_row(f.bounds, predictions.row(o).transpose(), artifact_->kdist_norm, o);
        return BoundPair{row.lower(k - 1), row.upper(k - 1)};
      },
      q, k, q_index);
}

QueryResult RknnEngine::query(const BoundTable& bounds, const Eigen::Ref<const RowVector<double>>& q, Index k,
                              std::optional<Index> q_index) const {
  if (bounds.lower.rows() != ds_->size() || bounds.lower.cols() != artifact_->k_max) {
    throw ShapeMismatch("bound table does not match the index");
  }
  return run([&](Index o) { return BoundPair{bounds.lower(o, k - 1), bounds.upper(o, k - 1)}; }, q, k, q_index);
}

QueryResult rknn_query(const IndexArtifact& artifact, const Dataset& ds, const Eigen::Ref<const RowVector<double>>& q,
                       Index k, std::optional<Index> q_index) {
  return RknnEngine(artifact, ds).query(q, k, q_index);
}

MatrixXi css_matrix(const BoundTable& bounds, const Dataset& ds, const std::vector<Index>& ks,
                    const std::vector<Index>& queries, unsigned threads) {
  const Index n = ds.size();
  if (bounds.lower.rows() != n) throw ShapeMismatch("bound table does not match dataset");
  for (Index k : ks) {
    if (k < 1 || k > bounds.lower.cols()) throw KOutOfRange("k outside 1..k_max");
  }
  const auto nk = static_cast<Index>(ks.size());
  // Envelope over the requested ks: outside (min lb, max ub] no k can make o
  // a candidate.
  MatrixXd lo(n, nk), hi(n, nk);
  VectorXd env_lo(n), env_hi(n);
  for (Index o = 0; o < n; ++o) {
    for (Index j = 0; j < nk; ++j) {
      lo(o, j) = bounds.lower(o, ks[static_cast<std::size_t>(j)] - 1);
      hi(o, j) = bounds.upper(o, ks[static_cast<std::size_t>(j)] - 1);
    }
    env_lo(o) = nk ? lo.row(o).minCoeff() : 0.0;
    env_hi(o) = nk ? hi.row(o).maxCoeff() : 0.0;
  }
  MatrixXi css = MatrixXi::Zero(static_cast<Index>(queries.size()), nk);
  parallel_for(
      queries.size(),
      [&](std::size_t i) {
        const Index qi = queries[i];
        const auto q = ds.point(qi);
        auto row = css.row(static_cast<Index>(i));
        for (Index o = 0; o < n; ++o) {
          if (o == qi) continue;
          const double d = distance(q, ds.point(o), ds.metric());
          if (d <= env_lo(o) || d > env_hi(o)) continue;
          for (Index j = 0; j < nk; ++j) {
            if (classify(d, lo(o, j), hi(o, j)) == FilterDecision::Candidate) ++row(j);
          }
        }
      },
      threads);
  return css;
}

}  // namespace lkd
