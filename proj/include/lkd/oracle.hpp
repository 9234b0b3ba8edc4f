// Ground truth: exact kNN, k-distances and reverse kNN.
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "lkd/core.hpp"

namespace lkd {

struct KnnResult {
  std::vector<Index> indices;
  std::vector<double> distances;  // ascending; ties ordered by index
};

enum class SearchStrategy { Auto, LinearScan, KdTree };

/// Static kd-tree over a dataset's points. Pruning uses strict comparisons so
/// equal-distance candidates are still visited and the (distance, index)
/// order matches a linear scan exactly.
class KdTree {
 public:
  explicit KdTree(const Dataset& ds, Index leaf_size = 16);

  KnnResult knn(const Eigen::Ref<const RowVector<double>>& q, Index k,
                std::optional<Index> exclude) const;

 private:
  struct Node {
    Index begin = 0;
    Index end = 0;
    Index left = -1;
    Index right = -1;
    Index split_dim = 0;
    double split = 0.0;
  };

  Index build(Index begin, Index end);
  double box_lower_bound(Index node, const Eigen::Ref<const RowVector<double>>& q) const;

  const Dataset* ds_;
  Index leaf_size_;
  std::vector<Index> perm_;
  std::vector<Node> nodes_;
  MatrixXd box_lo_;  // one row per node
  MatrixXd box_hi_;
};

/// kNN search over a dataset, backed by a kd-tree for d <= 3 under Auto.
class KnnIndex {
 public:
  explicit KnnIndex(const Dataset& ds, SearchStrategy strategy = SearchStrategy::Auto);

  const Dataset& dataset() const { return *ds_; }
  bool uses_tree() const { return tree_ != nullptr; }

  KnnResult query(const Eigen::Ref<const RowVector<double>>& q, Index k,
                  std::optional<Index> exclude = std::nullopt) const;
  /// k-th smallest distance from point p to the other points (k is 1-based).
  double nndist(Index p, Index k) const;

 private:
  const Dataset* ds_;
  std::unique_ptr<KdTree> tree_;
};

KnnResult knn_linear_scan(const Dataset& ds, const Eigen::Ref<const RowVector<double>>& q, Index k,
                          std::optional<Index> exclude);

KnnResult knn_query(const Dataset& ds, const Eigen::Ref<const RowVector<double>>& q, Index k,
                    std::optional<Index> exclude = std::nullopt,
                    SearchStrategy strategy = SearchStrategy::Auto);

double nndist(const Dataset& ds, Index p, Index k);

/// One k_max-NN query per point; rows are bit-identical under any thread count.
KDistTable build_kdist_table(const Dataset& ds, Index k_max,
                             SearchStrategy strategy = SearchStrategy::Auto,
                             unsigned threads = 0);

/// o is in the result iff o != q_index and dist(q, o) <= nndist(o, k).
std::vector<Index> rknn_bruteforce(const Dataset& ds, const Eigen::Ref<const RowVector<double>>& q,
                                   Index k, std::optional<Index> q_index = std::nullopt);
/// Same, reading nndist from a precomputed table (k <= table.k_max()).
std::vector<Index> rknn_bruteforce(const Dataset& ds, const KDistTable& table,
                                   const Eigen::Ref<const RowVector<double>>& q, Index k,
                                   std::optional<Index> q_index = std::nullopt);

// KDT1 cache file.
void save_kdist_table(const KDistTable& table, const std::filesystem::path& path);
KDistTable load_kdist_table(const std::filesystem::path& path);

}  // namespace lkd
