#include "lkd/cop.hpp"

#include <cmath>

namespace lkd {
namespace {

double lower_value(double slope, double intercept, Index k) {
  const double v = std::exp(slope * std::log(static_cast<double>(k)) + intercept);
  return v <= kLogFloor ? 0.0 : v;
}

double upper_value(double slope, double intercept, Index k) {
  return std::exp(slope * std::log(static_cast<double>(k)) + intercept);
}

}  // namespace

CopModel fit_cop(const KDistTable& table, bool restore_monotone) {
  const Index n = table.size();
  const Index k_max = table.k_max();
  CopModel m;
  m.k_max = k_max;
  m.restore_monotone = restore_monotone;
  m.lower_slope.resize(n);
  m.lower_intercept.resize(n);
  m.upper_slope.resize(n);
  m.upper_intercept.resize(n);

  VectorXd lx(k_max);
  for (Index k = 1; k <= k_max; ++k) lx(k - 1) = std::log(static_cast<double>(k));
  const double x_mean = lx.mean();
  const double sxx = (lx.array() - x_mean).square().sum();

  VectorXd ly(k_max);
  for (Index p = 0; p < n; ++p) {
    for (Index k = 1; k <= k_max; ++k) ly(k - 1) = std::log(std::max(table.at(p, k), kLogFloor));
    const double y_mean = ly.mean();
    const double slope = sxx > 0.0 ? ((lx.array() - x_mean) * (ly.array() - y_mean)).sum() / sxx : 0.0;
    const double intercept = y_mean - slope * x_mean;
    const VectorXd resid = ly - (slope * lx).array().matrix() - VectorXd::Constant(k_max, intercept);
    double lo = intercept + resid.minCoeff();
    double hi = intercept + resid.maxCoeff();

    // The shifted lines are conservative in exact arithmetic; widen by ulps
    // until the evaluated exponentials are too.
    for (Index k = 1; k <= k_max; ++k) {
      const double truth = table.at(p, k);
      double step = std::max(std::abs(lo) * 0x1p-52, 0x1p-1074);
      while (lower_value(slope, lo, k) > truth) {
        lo -= step;
        step *= 2.0;
      }
      step = std::max(std::abs(hi) * 0x1p-52, 0x1p-1074);
      while (upper_value(slope, hi, k) < truth) {
        hi += step;
        step *= 2.0;
      }
    }
    m.lower_slope(p) = slope;
    m.upper_slope(p) = slope;
    m.lower_intercept(p) = lo;
    m.upper_intercept(p) = hi;
  }
  return m;
}

BoundRow cop_bound_row(const CopModel& model, Index p) {
  BoundRow row;
  row.lower.resize(model.k_max);
  row.upper.resize(model.k_max);
  for (Index k = 1; k <= model.k_max; ++k) {
    row.lower(k - 1) = lower_value(model.lower_slope(p), model.lower_intercept(p), k);
    row.upper(k - 1) = upper_value(model.upper_slope(p), model.upper_intercept(p), k);
  }
  if (model.restore_monotone) restore_monotone(row.lower, row.upper);
  row.crossings = repair_crossings(row.lower, row.upper);
  return row;
}

BoundPair cop_bounds(const CopModel& model, Index p, Index k) {
  if (k < 1 || k > model.k_max) throw KOutOfRange("k outside 1..k_max");
  if (!model.restore_monotone) {
    return {lower_value(model.lower_slope(p), model.lower_intercept(p), k),
            upper_value(model.upper_slope(p), model.upper_intercept(p), k)};
  }
  const BoundRow row = cop_bound_row(model, p);
  return {row.lower(k - 1), row.upper(k - 1)};
}

// Hyperparameter section {k_max u64, n u64, monotone u8}, parameter section
// {width u8 = 8, count u64, then per point: slope_l, intercept_l, slope_u,
// intercept_u}.
void CopModel::serialize(ByteWriter& out) const {
  ByteWriter hyper;
  hyper.u64(static_cast<std::uint64_t>(k_max));
  hyper.u64(static_cast<std::uint64_t>(size()));
  hyper.u8(restore_monotone ? 1 : 0);
  ByteWriter params;
  params.u8(8);
  params.u64(static_cast<std::uint64_t>(param_count()));
  for (Index p = 0; p < size(); ++p) {
    params.f64(lower_slope(p));
    params.f64(lower_intercept(p));
    params.f64(upper_slope(p));
    params.f64(upper_intercept(p));
  }
  out.section(hyper);
  out.section(params);
}

CopModel CopModel::deserialize(ByteReader& in) {
  ByteReader hyper = in.section();
  CopModel m;
  m.k_max = static_cast<Index>(hyper.u64());
  const auto n = static_cast<Index>(hyper.u64());
  m.restore_monotone = hyper.u8() != 0;
  hyper.expect_done("baseline hyperparameters");
  ByteReader params = in.section();
  if (params.u8() != 8) throw CorruptArtifact("baseline parameters must be 64-bit");
  const std::uint64_t count = params.u64();
  if (count != static_cast<std::uint64_t>(4 * n) || params.remaining() != count * 8) {
    throw CorruptArtifact("baseline parameter count mismatch");
  }
  m.lower_slope.resize(n);
  m.lower_intercept.resize(n);
  m.upper_slope.resize(n);
  m.upper_intercept.resize(n);
  for (Index p = 0; p < n; ++p) {
    m.lower_slope(p) = params.f64();
    m.lower_intercept(p) = params.f64();
    m.upper_slope(p) = params.f64();
    m.upper_intercept(p) = params.f64();
  }
  return m;
}

}  // namespace lkd
