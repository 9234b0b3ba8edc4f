#include "lkd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace lkd {
namespace {

std::vector<Index> split_counts(Index total, const std::vector<double>& shares) {
  double sum = 0.0;
  for (double s : shares) sum += s;
  std::vector<Index> counts;
  Index used = 0;
  for (double s : shares) {
    counts.push_back(static_cast<Index>(std::floor(static_cast<double>(total) * s / sum)));
    used += counts.back();
  }
  for (std::size_t i = 0; used < total; i = (i + 1) % counts.size(), ++used) ++counts[i];
  return counts;
}

VectorXd point2(double x, double y) {
  VectorXd v(2);
  v << x, y;
  return v;
}

}  // namespace

Index SyntheticSpec::size() const {
  Index n = background;
  for (const auto& b : blobs) n += b.count;
  for (const auto& s : segments) n += s.count;
  return n;
}

void SyntheticSpec::validate() const {
  if (dim < 1) throw InvalidSpec("dimension must be positive");
  for (const auto& b : blobs) {
    if (b.center.size() != dim) throw InvalidSpec("blob center has wrong dimension");
    if (!b.center.allFinite() || !(b.sigma > 0.0) || !std::isfinite(b.sigma)) {
      throw InvalidSpec("blob needs a finite center and a positive sigma");
    }
    if (b.count < 0) throw InvalidSpec("negative blob size");
  }
  for (const auto& s : segments) {
    if (s.from.size() != dim || s.to.size() != dim) throw InvalidSpec("segment endpoint has wrong dimension");
    if (!s.from.allFinite() || !s.to.allFinite() || !(s.jitter >= 0.0) || !std::isfinite(s.jitter)) {
      throw InvalidSpec("segment needs finite endpoints and jitter >= 0");
    }
    if (s.count < 0) throw InvalidSpec("negative segment size");
  }
  if (background < 0) throw InvalidSpec("negative background size");
  if (background > 0 && !(low < high && std::isfinite(low) && std::isfinite(high))) {
    throw InvalidSpec("background box must satisfy low < high");
  }
  if (size() < 2) throw InvalidSpec("a dataset needs at least two points");
}

Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed, Metric metric) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd pts(spec.size(), spec.dim);
  Index row = 0;
  for (const auto& b : spec.blobs) {
    for (Index i = 0; i < b.count; ++i, ++row) {
      for (Index j = 0; j < spec.dim; ++j) pts(row, j) = b.center(j) + b.sigma * gauss(rng);
    }
  }
  for (const auto& s : spec.segments) {
    for (Index i = 0; i < s.count; ++i, ++row) {
      const double t = unit(rng);
      for (Index j = 0; j < spec.dim; ++j) {
        pts(row, j) = s.from(j) + t * (s.to(j) - s.from(j)) + s.jitter * gauss(rng);
      }
    }
  }
  std::uniform_real_distribution<double> box(spec.low, spec.high);
  for (Index i = 0; i < spec.background; ++i, ++row) {
    for (Index j = 0; j < spec.dim; ++j) pts(row, j) = box(rng);
  }
  return Dataset(std::move(pts), metric);
}

SyntheticSpec single_blob_spec(Index n, double sigma, Index dim) {
  SyntheticSpec s;
  s.dim = dim;
  s.blobs.push_back({VectorXd::Zero(dim), sigma, n});
  return s;
}

SyntheticSpec two_blob_spec(Index n, double offset, Index dim) {
  SyntheticSpec s;
  s.dim = dim;
  VectorXd far = VectorXd::Zero(dim);
  far(0) = offset;
  s.blobs.push_back({VectorXd::Zero(dim), 0.1, n / 2});
  s.blobs.push_back({far, 10.0, n - n / 2});
  return s;
}

SyntheticSpec blobs_spec(Index n, Index blobs, std::uint64_t seed) {
  if (blobs < 1) throw InvalidSpec("need at least one blob");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticSpec s;
  s.low = 0.0;
  s.high = 100.0;
  std::vector<double> shares;
  for (Index b = 0; b < blobs; ++b) shares.push_back(0.2 + unit(rng));
  shares.push_back(0.08 * static_cast<double>(blobs));
  const std::vector<Index> counts = split_counts(n, shares);
  for (Index b = 0; b < blobs; ++b) {
    const double sigma = std::exp(std::log(0.3) + unit(rng) * (std::log(8.0) - std::log(0.3)));
    s.blobs.push_back({point2(10.0 + 80.0 * unit(rng), 10.0 + 80.0 * unit(rng)), sigma,
                       counts[static_cast<std::size_t>(b)]});
  }
  s.background = counts.back();
  return s;
}

SyntheticSpec road_network_spec(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index towns = std::max<Index>(3, n / 300);
  std::vector<VectorXd> centers;
  std::vector<double> sigmas;
  std::vector<double> weights;
  for (Index t = 0; t < towns; ++t) {
    centers.push_back(point2(1000.0 * unit(rng), 1000.0 * unit(rng)));
    sigmas.push_back(std::exp(std::log(5.0) + unit(rng) * (std::log(60.0) - std::log(5.0))));
    weights.push_back(-std::log(1.0 - unit(rng)));
  }
  // Each town connects to its two nearest neighbours.
  std::set<std::pair<Index, Index>> roads;
  for (Index a = 0; a < towns; ++a) {
    std::vector<std::pair<double, Index>> near;
    for (Index b = 0; b < towns; ++b) {
      if (b != a) near.emplace_back((centers[a] - centers[b]).norm(), b);
    }
    std::sort(near.begin(), near.end());
    for (std::size_t i = 0; i < std::min<std::size_t>(2, near.size()); ++i) {
      roads.emplace(std::min(a, near[i].second), std::max(a, near[i].second));
    }
  }
  std::vector<double> lengths;
  double total_length = 0.0;
  for (const auto& [a, b] : roads) {
    lengths.push_back((centers[a] - centers[b]).norm());
    total_length += lengths.back();
  }
  const std::vector<Index> parts = split_counts(n, {0.5, 0.45, 0.05});
  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  for (double& w : weights) w /= weight_sum;
  for (double& l : lengths) l /= total_length;
  const std::vector<Index> town_counts = split_counts(parts[0], weights);
  const std::vector<Index> road_counts = split_counts(parts[1], lengths);

  SyntheticSpec s;
  s.low = 0.0;
  s.high = 1000.0;
  for (Index t = 0; t < towns; ++t) {
    s.blobs.push_back({centers[t], sigmas[t], town_counts[static_cast<std::size_t>(t)]});
  }
  std::size_t r = 0;
  for (const auto& [a, b] : roads) {
    s.segments.push_back({centers[a], centers[b], 1.0, road_counts[r++]});
  }
  s.background = parts[2];
  return s;
}

}  // namespace lkd
