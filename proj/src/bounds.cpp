#include "lkd/bounds.hpp"

#include <cmath>

namespace lkd {

Aggregation parse_aggregation(std::string_view name) {
  if (name == "D" || name == "OverPoints" || name == "points") return Aggregation::OverPoints;
  if (name == "K" || name == "OverK" || name == "k") return Aggregation::OverK;
  if (name == "KD" || name == "DK" || name == "Combined" || name == "combined") return Aggregation::Combined;
  throw ConfigError("unknown aggregation mode '" + std::string(name) + "'");
}

std::string_view to_string(Aggregation mode) {
  switch (mode) {
    case Aggregation::OverPoints: return "D";
    case Aggregation::OverK: return "K";
    case Aggregation::Combined: return "KD";
  }
  return "?";
}

ResidualMatrix ResidualMatrix::from_delta(MatrixXd delta) {
  if (!delta.allFinite()) throw NonFiniteInput("residuals must be finite");
  ResidualMatrix r;
  r.lower = delta;
  r.upper = delta;
  r.delta = std::move(delta);
  return r;
}

ResidualMatrix residuals_from_predictions(const MatrixXd& predictions, const MatrixXd& normalized_targets) {
  if (predictions.rows() != normalized_targets.rows() || predictions.cols() != normalized_targets.cols()) {
    throw ShapeMismatch("predictions and targets disagree in shape");
  }
  return ResidualMatrix::from_delta(normalized_targets - predictions);
}

ResidualMatrix compute_residuals(const KDistModel& model, const MatrixXd& inputs,
                                 const MatrixXd& normalized_targets) {
  if (inputs.rows() != normalized_targets.rows() || model.k_max() != normalized_targets.cols()) {
    throw ShapeMismatch("inputs and targets disagree in shape");
  }
  return residuals_from_predictions(model.predict_batch(inputs), normalized_targets);
}

void make_exact(ResidualMatrix& residuals, const MatrixXd& predictions, const KDistNormParams& norm,
                const KDistTable& table) {
  if (predictions.rows() != residuals.rows() || table.size() != residuals.rows() ||
      table.k_max() != residuals.k_max() || norm.k_max() != residuals.k_max()) {
    throw ShapeMismatch("residual shapes disagree");
  }
  for (Index p = 0; p < residuals.rows(); ++p) {
    for (Index c = 0; c < residuals.k_max(); ++c) {
      const Index k = c + 1;
      const double pred = predictions(p, c);
      const double truth = table.at(p, k);
      double& lo = residuals.lower(p, c);
      double step = std::max(std::abs(pred + lo) * 0x1p-52, 0x1p-1074);
      while (norm.invert(pred + lo, k) > truth) {
        lo -= step;
        step *= 2.0;
      }
      double& hi = residuals.upper(p, c);
      step = std::max(std::abs(pred + hi) * 0x1p-52, 0x1p-1074);
      while (norm.invert(pred + hi, k) < truth) {
        hi += step;
        step *= 2.0;
      }
    }
  }
}

BoundSet aggregate(const ResidualMatrix& residuals, Aggregation mode, BoundFlags flags) {
  if (!residuals.lower.allFinite() || !residuals.upper.allFinite()) {
    throw NonFiniteInput("residuals must be finite");
  }
  BoundSet set;
  set.mode = mode;
  set.flags = flags;
  set.k_max = residuals.k_max();
  if (mode != Aggregation::OverK) {
    set.k_lower = residuals.lower.colwise().minCoeff().transpose();
    set.k_upper = residuals.upper.colwise().maxCoeff().transpose();
  }
  if (mode != Aggregation::OverPoints) {
    set.p_lower = residuals.lower.rowwise().minCoeff();
    set.p_upper = residuals.upper.rowwise().maxCoeff();
  }
  return set;
}

double BoundSet::lower_delta(Index p, Index k) const {
  switch (mode) {
    case Aggregation::OverPoints: return k_lower(k - 1);
    case Aggregation::OverK: return p_lower(p);
    case Aggregation::Combined: return std::max(k_lower(k - 1), p_lower(p));
  }
  return 0.0;
}

double BoundSet::upper_delta(Index p, Index k) const {
  switch (mode) {
    case Aggregation::OverPoints: return k_upper(k - 1);
    case Aggregation::OverK: return p_upper(p);
    case Aggregation::Combined: return std::min(k_upper(k - 1), p_upper(p));
  }
  return 0.0;
}

void clip_nonnegative(VectorXd& lower, VectorXd& upper) {
  lower = lower.cwiseMax(0.0);
  upper = upper.cwiseMax(0.0);
}

void restore_monotone(VectorXd& lower, VectorXd& upper) {
  for (Index i = 1; i < lower.size(); ++i) lower(i) = std::max(lower(i), lower(i - 1));
  for (Index i = upper.size() - 1; i-- > 0;) upper(i) = std::min(upper(i), upper(i + 1));
}

Index repair_crossings(const VectorXd& lower, VectorXd& upper) {
  Index crossings = 0;
  for (Index i = 0; i < upper.size(); ++i) {
    if (lower(i) > upper(i)) {
      upper(i) = lower(i);
      ++crossings;
    }
  }
  return crossings;
}

BoundRow evaluate_bound_row(const BoundSet& bounds, const Eigen::Ref<const VectorXd>& prediction_row,
                            const KDistNormParams& norm, Index p) {
  const Index k_max = bounds.k_max;
  if (prediction_row.size() != k_max || norm.k_max() != k_max) {
    throw ShapeMismatch("prediction row does not match k_max");
  }
  BoundRow row;
  row.lower.resize(k_max);
  row.upper.resize(k_max);
  for (Index k = 1; k <= k_max; ++k) {
    const double pred = prediction_row(k - 1);
    row.lower(k - 1) = norm.invert(pred + bounds.lower_delta(p, k), k);
    row.upper(k - 1) = norm.invert(pred + bounds.upper_delta(p, k), k);
  }
  if (bounds.flags.clip_nonneg) clip_nonnegative(row.lower, row.upper);
  if (bounds.flags.restore_monotone) restore_monotone(row.lower, row.upper);
  row.crossings = repair_crossings(row.lower, row.upper);
  return row;
}

BoundPair evaluate_bounds(const BoundSet& bounds, const Eigen::Ref<const VectorXd>& prediction_row,
                          const KDistNormParams& norm, Index p, Index k) {
  if (k < 1 || k > bounds.k_max) throw KOutOfRange("k outside 1..k_max");
  const BoundRow row = evaluate_bound_row(bounds, prediction_row, norm, p);
  return {row.lower(k - 1), row.upper(k - 1)};
}

// Section layout: mode u8, flags u8, then four length-prefixed f64 vectors
// (k_lower, k_upper, p_lower, p_upper); unused ones have length 0.
void BoundSet::serialize(ByteWriter& out) const {
  out.u8(static_cast<std::uint8_t>(mode));
  out.u8(flags.bits());
  out.u64(static_cast<std::uint64_t>(k_max));
  for (const VectorXd* v : {&k_lower, &k_upper, &p_lower, &p_upper}) {
    out.u64(static_cast<std::uint64_t>(v->size()));
    for (Index i = 0; i < v->size(); ++i) out.f64((*v)(i));
  }
}

BoundSet BoundSet::deserialize(ByteReader& in) {
  BoundSet set;
  const std::uint8_t mode = in.u8();
  if (mode > 2) throw CorruptArtifact("unknown aggregation mode");
  set.mode = static_cast<Aggregation>(mode);
  set.flags = BoundFlags::from_bits(in.u8());
  set.k_max = static_cast<Index>(in.u64());
  for (VectorXd* v : {&set.k_lower, &set.k_upper, &set.p_lower, &set.p_upper}) {
    const std::uint64_t len = in.u64();
    if (len > in.remaining() / 8) throw CorruptArtifact("bound vector length exceeds section");
    v->resize(static_cast<Index>(len));
    for (Index i = 0; i < v->size(); ++i) (*v)(i) = in.f64();
  }
  const bool needs_k = set.mode != Aggregation::OverK;
  const bool needs_p = set.mode != Aggregation::OverPoints;
  if ((needs_k && (set.k_lower.size() != set.k_max || set.k_upper.size() != set.k_max)) ||
      (!needs_k && (set.k_lower.size() != 0 || set.k_upper.size() != 0)) ||
      (needs_p && (set.p_lower.size() == 0 || set.p_upper.size() != set.p_lower.size())) ||
      (!needs_p && (set.p_lower.size() != 0 || set.p_upper.size() != 0))) {
    throw CorruptArtifact("bound vectors do not match aggregation mode");
  }
  return set;
}

}  // namespace lkd
