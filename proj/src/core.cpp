#include "lkd/core.hpp"

#include <cfloat>

#include <bit>
#include <cstring>

namespace lkd {

Metric parse_metric(std::string_view name) {
  if (name == "euclidean" || name == "Euclidean" || name == "l2") return Metric::Euclidean;
  if (name == "manhattan" || name == "Manhattan" || name == "l1") return Metric::Manhattan;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

std::string_view to_string(Metric metric) {
  return metric == Metric::Euclidean ? "euclidean" : "manhattan";
}

DatasetFormat parse_format(std::string_view name) {
  if (name == "road" || name == "RoadNetworkNodes" || name == "nodes") {
    return DatasetFormat::RoadNetworkNodes;
  }
  if (name == "embedding" || name == "EmbeddingText" || name == "vec") {
    return DatasetFormat::EmbeddingText;
  }
  if (name == "csv" || name == "Csv") return DatasetFormat::Csv;
  throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

Dataset::Dataset(MatrixXd points, Metric metric, std::vector<std::string> ids)
    : points_(std::move(points)), metric_(metric), ids_(std::move(ids)) {
  if (points_.rows() < 2) throw EmptyDataset("dataset needs at least 2 points");
  if (points_.cols() < 1) throw DimensionMismatch("dataset needs at least 1 dimension");
  if (!points_.allFinite()) throw NonFiniteInput("dataset contains non-finite coordinates");
  if (!ids_.empty() && static_cast<Index>(ids_.size()) != points_.rows()) {
    throw DimensionMismatch("id count does not match point count");
  }
}

std::uint64_t Dataset::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
      h ^= (word >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<std::uint64_t>(size()));
  mix(static_cast<std::uint64_t>(dim()));
  mix(static_cast<std::uint64_t>(metric_));
  for (Index i = 0; i < points_.size(); ++i) {
    mix(std::bit_cast<std::uint64_t>(points_.data()[i]));
  }
  return h;
}

Dataset Dataset::length_normalized() const {
  MatrixXd out = points_;
  for (Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  }
  return Dataset(std::move(out), metric_, ids_);
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  MatrixXd out(static_cast<Index>(rows.size()), dim());
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Index>(i)) = points_.row(rows[i]);
    if (!ids_.empty()) ids.push_back(ids_[static_cast<std::size_t>(rows[i])]);
  }
  return Dataset(std::move(out), metric_, std::move(ids));
}

// ---------------------------------------------------------------------------

VectorXd ZScoreParams::apply(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != mean.size()) throw DimensionMismatch("z-score input has wrong dimension");
  return (x - mean).cwiseQuotient(std);
}

VectorXd ZScoreParams::invert(const Eigen::Ref<const VectorXd>& z) const {
  if (z.size() != mean.size()) throw DimensionMismatch("z-score input has wrong dimension");
  return z.cwiseProduct(std) + mean;
}

MatrixXd ZScoreParams::apply_rows(const MatrixXd& x) const {
  if (x.cols() != mean.size()) throw DimensionMismatch("z-score input has wrong dimension");
  MatrixXd out(x.rows(), x.cols());
  for (Index i = 0; i < x.rows(); ++i) {
    out.row(i) = (x.row(i) - mean.transpose()).cwiseQuotient(std.transpose());
  }
  return out;
}

ZScoreParams zscore_fit(const MatrixXd& points) {
  if (points.rows() < 2) throw EmptyDataset("z-score fit needs at least 2 points");
  ZScoreParams params;
  const double n = static_cast<double>(points.rows());
  params.mean = points.colwise().sum().transpose() / n;
  params.std.resize(points.cols());
  for (Index j = 0; j < points.cols(); ++j) {
    const double var = (points.col(j).array() - params.mean(j)).square().sum() / n;
    const double s = std::sqrt(var);
    params.std(j) = s < 1e-12 ? 1.0 : s;
  }
  return params;
}

ZScoreParams zscore_fit(const Dataset& ds) { return zscore_fit(ds.points()); }

// ---------------------------------------------------------------------------

KDistTable::KDistTable(MatrixXd values) : values_(std::move(values)) {
  if (values_.cols() < 1) throw KTooLarge("k-distance table needs k_max >= 1");
  for (Index p = 0; p < values_.rows(); ++p) {
    for (Index c = 0; c < values_.cols(); ++c) {
      const double v = values_(p, c);
      if (!std::isfinite(v) || v < 0.0) throw NonFiniteInput("invalid k-distance");
      if (c > 0 && v < values_(p, c - 1)) {
        throw InvalidSpec("k-distance row is not monotone");
      }
    }
  }
}

KDistNormParams kdist_norm_fit(const KDistTable& table) {
  KDistNormParams params;
  params.min = table.values().colwise().minCoeff().transpose();
  params.max = table.values().colwise().maxCoeff().transpose();
  for (Index k = 0; k < params.min.size(); ++k) {
    double& lo = params.min(k);
    if (params.max(k) - lo < kDegenerateScale) continue;
    if (lo < DBL_MIN) {
      lo = 0.0;
    } else {
      int e = 0;
      std::frexp(lo, &e);
      lo = std::ldexp(1.0, e - 1);
    }
  }
  return params;
}

double KDistNormParams::apply_exact(double v, Index k) const {
  const double t0 = apply(v, k);
  if (invert(t0, k) == v) return t0;
  // invert is monotone in t; walk toward v for a bounded number of ulps.
  double t = t0;
  const double dir = invert(t0, k) < v ? INFINITY : -INFINITY;
  for (int step = 0; step < 64; ++step) {
    t = std::nextafter(t, dir);
    const double back = invert(t, k);
    if (back == v) return t;
    if ((dir > 0 && back > v) || (dir < 0 && back < v)) break;
  }
  return t0;
}

MatrixXd KDistNormParams::apply_table(const KDistTable& table) const {
  if (table.k_max() != k_max()) throw ShapeMismatch("k_max mismatch in normalization");
  MatrixXd out(table.size(), table.k_max());
  for (Index p = 0; p < table.size(); ++p) {
    for (Index k = 1; k <= table.k_max(); ++k) out(p, k - 1) = apply_exact(table.at(p, k), k);
  }
  return out;
}

}  // namespace lkd
