// Per-point conservative log-log linear k-distance bounds (the comparison
// baseline): four parameters per point.
#pragma once

#include "lkd/binary_io.hpp"
#include "lkd/bounds.hpp"
#include "lkd/core.hpp"

namespace lkd {

/// Distances below this floor are treated as this value before taking logs,
/// and lower-bound values at or below it evaluate to 0.
inline constexpr double kLogFloor = 1e-12;

struct CopModel {
  // Lines in (ln k, ln kdist) space, one entry per point.
  VectorXd lower_slope;
  VectorXd lower_intercept;
  VectorXd upper_slope;
  VectorXd upper_intercept;
  Index k_max = 0;
  bool restore_monotone = false;

  Index size() const { return lower_slope.size(); }
  Index param_count() const { return 4 * size(); }

  void serialize(ByteWriter& out) const;
  static CopModel deserialize(ByteReader& in);
};

/// Least-squares line per point, shifted by the extreme residuals so that
/// both lines bracket every (k, kdist) pair of the table.
CopModel fit_cop(const KDistTable& table, bool restore_monotone = false);

BoundPair cop_bounds(const CopModel& model, Index p, Index k);
BoundRow cop_bound_row(const CopModel& model, Index p);

}  // namespace lkd
