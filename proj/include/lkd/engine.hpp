// Filter-refinement RkNN query processing and index persistence.
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "lkd/bounds.hpp"
#include "lkd/cop.hpp"
#include "lkd/core.hpp"
#include "lkd/oracle.hpp"
#include "lkd/regress.hpp"

namespace lkd {

/// Learned filter: a regression model plus its aggregated residual deltas.
struct LearnedFilter {
  std::shared_ptr<const KDistModel> model;
  BoundSet bounds;
};

/// Deployable filter: normalization, model (or baseline) and bounds, bound to
/// the dataset it was built on via a content fingerprint.
struct IndexArtifact {
  ZScoreParams zscore;          // empty for the baseline
  KDistNormParams kdist_norm;   // empty for the baseline
  std::variant<LearnedFilter, CopModel> filter;
  Index k_max = 0;
  Index n = 0;
  Index dim = 0;
  Metric metric = Metric::Euclidean;
  std::uint64_t fingerprint = 0;

  bool is_baseline() const { return std::holds_alternative<CopModel>(filter); }
  const LearnedFilter& learned() const { return std::get<LearnedFilter>(filter); }
  const CopModel& baseline() const { return std::get<CopModel>(filter); }

  /// Model parameters + 2d + 2k_max normalization scalars + bound deltas
  /// (4n for the baseline).
  Index param_count() const;
  std::string model_type() const;

  void check_dataset(const Dataset& ds) const;
};

IndexArtifact make_cop_artifact(CopModel model, const Dataset& ds);

/// Normalization, predictions and residuals for a fitted model, assembled into
/// an artifact. `predictions` may pass precomputed model outputs on
/// `inputs`; `targets` are the normalized training targets.
IndexArtifact assemble_learned_artifact(const Dataset& ds, const KDistTable& table, const ZScoreParams& zscore,
                                        const KDistNormParams& norm, std::shared_ptr<const KDistModel> model,
                                        const MatrixXd& inputs, const MatrixXd& targets, Aggregation mode,
                                        BoundFlags flags, const MatrixXd* predictions = nullptr);

/// Replaces the bound set of a learned artifact with one aggregated from
/// `residuals` under a different mode / flags (model shared).
IndexArtifact with_bounds(const IndexArtifact& artifact, const ResidualMatrix& residuals, Aggregation mode,
                          BoundFlags flags);

/// Raw-space bounds for every database point and every k.
struct BoundTable {
  MatrixXd lower;  // n × k_max
  MatrixXd upper;
  Index crossings = 0;
};

BoundTable compute_bound_table(const IndexArtifact& artifact, const Dataset& ds,
                               const MatrixXd* predictions = nullptr);

enum class FilterDecision { Include, Candidate, Reject };

/// Filter branch: d <= lb includes, d <= ub defers to refinement, anything
/// else is rejected. Refinement includes iff d <= nndist(o, k).
inline FilterDecision classify(double d, double lower, double upper) {
  if (d <= lower) return FilterDecision::Include;
  if (d <= upper) return FilterDecision::Candidate;
  return FilterDecision::Reject;
}

struct QueryStats {
  Index included = 0;  // by lower bound, without refinement
  Index candidates = 0;
  Index rejected = 0;
  Index refined_in = 0;
  Index refined_out = 0;
  bool self_skipped = false;
};

struct QueryResult {
  std::vector<Index> result;  // ascending point indices
  QueryStats stats;
  Index css = 0;
  double wall_ms = 0.0;
};

/// Exact RkNN over one artifact and its dataset. Refinement uses exact kNN
/// (kd-tree for d <= 3). Safe for concurrent queries.
class RknnEngine {
 public:
  RknnEngine(const IndexArtifact& artifact, const Dataset& ds);

  /// Model predictions for all points are computed in one batch per call.
  QueryResult query(const Eigen::Ref<const RowVector<double>>& q, Index k,
                    std::optional<Index> q_index = std::nullopt) const;
  /// Same, reading bounds from a precomputed table.
  QueryResult query(const BoundTable& bounds, const Eigen::Ref<const RowVector<double>>& q, Index k,
                    std::optional<Index> q_index = std::nullopt) const;

  const KnnIndex& knn() const { return knn_; }

 private:
  template <typename BoundsFn>
  QueryResult run(BoundsFn&& bounds_of, const Eigen::Ref<const RowVector<double>>& q, Index k,
                  std::optional<Index> q_index) const;

  const IndexArtifact* artifact_;
  const Dataset* ds_;
  KnnIndex knn_;
};

QueryResult rknn_query(const IndexArtifact& artifact, const Dataset& ds,
                       const Eigen::Ref<const RowVector<double>>& q, Index k,
                       std::optional<Index> q_index = std::nullopt);

/// Candidate set sizes of database-point queries, without refinement:
/// result(i, j) = CSS of query point queries[i] at k = ks[j]. Equivalent to
/// RknnEngine::query(...).css, with one distance per (query, object) pair and a
/// per-object envelope test before the per-k comparisons.
MatrixXi css_matrix(const BoundTable& bounds, const Dataset& ds, const std::vector<Index>& ks,
                    const std::vector<Index>& queries, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Index file: magic "LKDI", version u8, then length-prefixed sections in the
// order zscore, kdistnorm, model, bounds, fingerprint.

inline constexpr std::uint8_t kIndexVersion = 1;

std::vector<std::uint8_t> serialize_index(const IndexArtifact& artifact);
IndexArtifact deserialize_index(const std::vector<std::uint8_t>& bytes);
void save_index(const IndexArtifact& artifact, const std::filesystem::path& path);
IndexArtifact load_index(const std::filesystem::path& path);

/// Scalar counts per section, read from the serialized bytes alone.
struct IndexLayout {
  Index zscore_scalars = 0;
  Index kdist_norm_scalars = 0;
  Index model_scalars = 0;
  Index bound_scalars = 0;
  std::string model_tag;

  Index total() const { return zscore_scalars + kdist_norm_scalars + model_scalars + bound_scalars; }
};

IndexLayout inspect_index(const std::vector<std::uint8_t>& bytes);

}  // namespace lkd
