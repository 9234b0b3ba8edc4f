// Domain types, dataset ingestion and the two normalization schemes.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lkd/errors.hpp"
#include "lkd/types.hpp"

namespace lkd {

enum class Metric : std::uint8_t { Euclidean = 0, Manhattan = 1 };

Metric parse_metric(std::string_view name);
std::string_view to_string(Metric metric);

/// Distance between two points. Symmetric bit-for-bit: dist(a, b) and
/// dist(b, a) evaluate the same sequence of floating-point operations on the
/// same operands, which the tie semantics of the query engine rely on.
template <typename DerivedA, typename DerivedB>
double distance(const Eigen::MatrixBase<DerivedA>& a,
                const Eigen::MatrixBase<DerivedB>& b, Metric metric) {
  double acc = 0.0;
  const Index d = a.size();
  if (metric == Metric::Euclidean) {
    for (Index i = 0; i < d; ++i) {
      const double diff = static_cast<double>(a(i)) - static_cast<double>(b(i));
      acc += diff * diff;
    }
    return std::sqrt(acc);
  }
  for (Index i = 0; i < d; ++i) {
    acc += std::abs(static_cast<double>(a(i)) - static_cast<double>(b(i)));
  }
  return acc;
}

// n points in d dimensions. Immutable after construction.
class Dataset {
 public:
  Dataset(MatrixXd points, Metric metric = Metric::Euclidean,
          std::vector<std::string> ids = {});

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  Metric metric() const { return metric_; }
  const MatrixXd& points() const { return points_; }
  auto point(Index i) const { return points_.row(i); }
  const std::vector<std::string>& ids() const { return ids_; }

  double dist(Index a, Index b) const {
    return distance(points_.row(a), points_.row(b), metric_);
  }
  template <typename Derived>
  double dist_to(const Eigen::MatrixBase<Derived>& q, Index o) const {
    return distance(q, points_.row(o), metric_);
  }

  /// Content hash over shape, metric and coordinate bytes (FNV-1a, 64 bit).
  std::uint64_t fingerprint() const;

  /// Returns a copy whose rows are scaled to unit Euclidean length.
  Dataset length_normalized() const;
  /// Returns the subset of rows given by `rows`, in that order.
  Dataset subset(const std::vector<Index>& rows) const;

 private:
  MatrixXd points_;
  Metric metric_;
  std::vector<std::string> ids_;
};

enum class DatasetFormat { RoadNetworkNodes, EmbeddingText, Csv };

DatasetFormat parse_format(std::string_view name);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     Metric metric = Metric::Euclidean);

// ---------------------------------------------------------------------------
// z-score normalization of the input coordinates.

struct ZScoreParams {
  VectorXd mean;
  VectorXd std;

  Index dim() const { return mean.size(); }
  Index param_count() const { return 2 * mean.size(); }

  VectorXd apply(const Eigen::Ref<const VectorXd>& x) const;
  VectorXd invert(const Eigen::Ref<const VectorXd>& z) const;
  /// Row-wise application to an m × d matrix.
  MatrixXd apply_rows(const MatrixXd& x) const;
};

/// Per-dimension mean and population standard deviation; dimensions with
/// std below 1e-12 get std 1.
ZScoreParams zscore_fit(const Dataset& ds);
ZScoreParams zscore_fit(const MatrixXd& points);

inline VectorXd zscore_apply(const ZScoreParams& params,
                             const Eigen::Ref<const VectorXd>& x) {
  return params.apply(x);
}
inline VectorXd zscore_invert(const ZScoreParams& params,
                              const Eigen::Ref<const VectorXd>& z) {
  return params.invert(z);
}

// ---------------------------------------------------------------------------
// k-distance table and its per-k min-max normalization.

/// n × k_max matrix of k-distances. Column c holds k = c + 1.
class KDistTable {
 public:
  KDistTable() = default;
  explicit KDistTable(MatrixXd values);

  Index size() const { return values_.rows(); }
  Index k_max() const { return values_.cols(); }
  const MatrixXd& values() const { return values_; }
  /// k is 1-based.
  double at(Index p, Index k) const { return values_(p, k - 1); }

 private:
  MatrixXd values_;
};

inline constexpr double kDegenerateScale = 1e-12;

struct KDistNormParams {
  VectorXd min;  // per-k minimum, rounded down to a power of two (or 0) unless degenerate
  VectorXd max;

  Index k_max() const { return min.size(); }
  Index param_count() const { return 2 * min.size(); }

  /// Smallest power of two >= max − min, or 1 for degenerate columns. k is
  /// 1-based.
  double scale(Index k) const {
    const double s = max(k - 1) - min(k - 1);
    if (s < kDegenerateScale) return 1.0;
    int e = 0;
    const double m = std::frexp(s, &e);
    return std::ldexp(1.0, m == 0.5 ? e - 1 : e);
  }
  double apply(double v, Index k) const { return (v - min(k - 1)) / scale(k); }
  double invert(double t, Index k) const { return min(k - 1) + t * scale(k); }

  /// A normalized value t with invert(t, k) == v bit-exactly, searched within
  /// a few ulps of apply(v, k). Falls back to apply(v, k) if none exists.
  double apply_exact(double v, Index k) const;

  /// Normalizes a whole table (targets for training), using apply_exact.
  MatrixXd apply_table(const KDistTable& table) const;
};

KDistNormParams kdist_norm_fit(const KDistTable& table);

inline double kdist_norm_apply(const KDistNormParams& params, double v, Index k) {
  return params.apply(v, k);
}
inline double kdist_norm_invert(const KDistNormParams& params, double t, Index k) {
  return params.invert(t, k);
}

}  // namespace lkd
