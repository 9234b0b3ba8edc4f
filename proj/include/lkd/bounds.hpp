// Guaranteed lower/upper k-distance bounds from model residuals.
#pragma once

#include <cstdint>
#include <string_view>

#include "lkd/binary_io.hpp"
#include "lkd/core.hpp"
#include "lkd/regress.hpp"

namespace lkd {

/// How residuals are collapsed into stored deltas.
///   OverPoints ("D"): per-k extrema over all points, 2·k_max scalars.
///   OverK      ("K"): per-point extrema over all k, 2·n scalars.
///   Combined   ("KD"): both, evaluated as the tighter of the two.
enum class Aggregation : std::uint8_t { OverPoints = 0, OverK = 1, Combined = 2 };

Aggregation parse_aggregation(std::string_view name);
std::string_view to_string(Aggregation mode);

struct BoundFlags {
  bool clip_nonneg = true;
  bool restore_monotone = true;

  std::uint8_t bits() const {
    return static_cast<std::uint8_t>((clip_nonneg ? 1 : 0) | (restore_monotone ? 2 : 0));
  }
  static BoundFlags from_bits(std::uint8_t b) { return {(b & 1) != 0, (b & 2) != 0}; }
  bool operator==(const BoundFlags&) const = default;
};

/// delta(p, k) = normalized target − prediction. `lower` and `upper` start as
/// copies of `delta`; make_exact() widens them by a few ulps where needed so
/// that the evaluated raw-space bounds hold bit-exactly.
struct ResidualMatrix {
  MatrixXd delta;
  MatrixXd lower;
  MatrixXd upper;

  static ResidualMatrix from_delta(MatrixXd delta);
  Index rows() const { return delta.rows(); }
  Index k_max() const { return delta.cols(); }
};

ResidualMatrix compute_residuals(const KDistModel& model, const MatrixXd& inputs,
                                 const MatrixXd& normalized_targets);
ResidualMatrix residuals_from_predictions(const MatrixXd& predictions, const MatrixXd& normalized_targets);

/// Adjusts residual.lower / residual.upper so that for every cell
///   invert(pred + lower) <= table(p, k) <= invert(pred + upper)
/// holds in floating point. Since every later step is monotone, the guarantee
/// carries over to any aggregate of these residuals.
void make_exact(ResidualMatrix& residuals, const MatrixXd& predictions, const KDistNormParams& norm,
                const KDistTable& table);

struct BoundSet {
  Aggregation mode = Aggregation::Combined;
  BoundFlags flags;
  VectorXd k_lower;  // Δ↓^D(k), length k_max (OverPoints, Combined)
  VectorXd k_upper;  // Δ↑^D(k)
  VectorXd p_lower;  // Δ↓^K(p), length n (OverK, Combined)
  VectorXd p_upper;  // Δ↑^K(p)
  Index k_max = 0;

  double lower_delta(Index p, Index k) const;
  double upper_delta(Index p, Index k) const;
  Index param_count() const { return k_lower.size() + k_upper.size() + p_lower.size() + p_upper.size(); }

  void serialize(ByteWriter& out) const;
  static BoundSet deserialize(ByteReader& in);
};

BoundSet aggregate(const ResidualMatrix& residuals, Aggregation mode, BoundFlags flags = {});

/// Raw-space bounds of one point for k = 1..k_max.
struct BoundRow {
  VectorXd lower;
  VectorXd upper;
  Index crossings = 0;  // entries where lb > ub had to be repaired
};

struct BoundPair {
  double lower;
  double upper;
};

/// Normalized bounds via deltas, denormalized per k, then optionally clipped
/// at zero and made monotone in k.
BoundRow evaluate_bound_row(const BoundSet& bounds, const Eigen::Ref<const VectorXd>& prediction_row,
                            const KDistNormParams& norm, Index p);
BoundPair evaluate_bounds(const BoundSet& bounds, const Eigen::Ref<const VectorXd>& prediction_row,
                          const KDistNormParams& norm, Index p, Index k);

// Post-processing steps, exposed for reuse by the baseline filter.
void clip_nonnegative(VectorXd& lower, VectorXd& upper);
/// ub*(k) = min_{k' >= k} ub(k'); lb*(k) = max_{k' <= k} lb(k').
void restore_monotone(VectorXd& lower, VectorXd& upper);
/// Enforces ub >= lb, returning the number of repaired entries.
Index repair_crossings(const VectorXd& lower, VectorXd& upper);

}  // namespace lkd
