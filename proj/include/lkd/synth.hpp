// Seeded synthetic point sets with controllable density contrast.
#pragma once

#include <cstdint>
#include <vector>

#include "lkd/core.hpp"

namespace lkd {

struct Blob {
  VectorXd center;
  double sigma = 1.0;
  Index count = 0;
};

/// Points spread uniformly along a line segment with Gaussian jitter.
struct Segment {
  VectorXd from;
  VectorXd to;
  double jitter = 0.0;
  Index count = 0;
};

struct SyntheticSpec {
  Index dim = 2;
  std::vector<Blob> blobs;
  std::vector<Segment> segments;
  Index background = 0;  // uniform points in [low, high]^dim
  double low = 0.0;
  double high = 1.0;

  Index size() const;
  /// Throws InvalidSpec.
  void validate() const;
};

/// Blobs first, then segments, then background, in declaration order.
Dataset make_synthetic(const SyntheticSpec& spec, std::uint64_t seed, Metric metric = Metric::Euclidean);

SyntheticSpec single_blob_spec(Index n, double sigma = 1.0, Index dim = 2);
/// A tight blob (sigma 0.1) next to a wide one (sigma 10), n/2 points each,
/// centers `offset` apart along the first axis.
SyntheticSpec two_blob_spec(Index n, double offset = 0.0, Index dim = 2);
/// `blobs` blobs of varied spread and size in a 100-unit box plus a uniform
/// background; n points total.
SyntheticSpec blobs_spec(Index n, Index blobs, std::uint64_t seed);
/// Road-network-like 2-d layout: towns of varied density joined by jittered
/// road segments, plus sparse background; n points total.
SyntheticSpec road_network_spec(Index n, std::uint64_t seed);

}  // namespace lkd
