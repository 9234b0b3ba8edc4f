// Candidate-set-size evaluation, ablation grid and Pareto skyline.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lkd/engine.hpp"
#include "lkd/trainer.hpp"

namespace lkd {

/// Which database points act as queries.
struct QuerySet {
  enum class Kind { Auto, All, Sample };
  Kind kind = Kind::Auto;
  Index sample_size = 10000;
  std::uint64_t seed = 0;

  static QuerySet all() { return {Kind::All, 0, 0}; }
  static QuerySet sample(Index m, std::uint64_t seed) { return {Kind::Sample, m, seed}; }
};

/// Auto resolves to all points for n <= 25000 and a seeded 10000-point
/// sample above. Sampled indices are returned in ascending order.
std::vector<Index> resolve_queries(const QuerySet& set, Index n);

/// {1, 2, 4, ...} up to k_max, with k_max itself appended if it is not a
/// power of two.
std::vector<Index> default_ks(Index k_max);

struct KEval {
  Index k = 0;
  double mean_css = 0.0;
  Index max_css = 0;
};

struct EvalReport {
  std::string model_type;
  Index param_count = 0;
  std::vector<KEval> per_k;
  double mean_css = 0.0;  // over all (query, k)
  Index max_css = 0;
  Index query_count = 0;
  Index crossings = 0;
  double wall_ms = 0.0;
  std::uint64_t fingerprint = 0;
};

/// CSS of every query in `queries` at every k in `ks` under the artifact's
/// filter (database points as queries, self excluded).
EvalReport evaluate(const IndexArtifact& artifact, const Dataset& ds, const std::vector<Index>& ks,
                    const std::vector<Index>& queries, unsigned threads = 0,
                    const MatrixXd* predictions = nullptr);

struct AblationRow {
  bool sample_weights = false;
  Aggregation mode = Aggregation::Combined;
  bool monotone = false;
  BoundFlags flags;
  EvalReport report;

  /// "S", "K", "D", "M" letters of the enabled options, e.g. "SKDM".
  std::string label() const;
};

/// The 12 combinations of sample weights × {K, D, KD} × monotonicity, in
/// that nesting order. One model is trained per sample-weight setting and
/// shared by its six rows; clipping follows `base.flags`.
std::vector<AblationRow> ablation_grid(const Dataset& ds, const KDistTable& table, const TrainConfig& base,
                                       const std::vector<Index>& ks, const std::vector<Index>& queries);

struct SkylinePoint {
  Index size = 0;
  double css = 0.0;
};

/// Indices of points not dominated in (size, css), ordered by size, then
/// css, then input position. Exact duplicates are all kept.
std::vector<std::size_t> skyline(const std::vector<SkylinePoint>& points);
std::vector<std::size_t> skyline(const std::vector<EvalReport>& reports);

}  // namespace lkd
