#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "lkd/binary_io.hpp"
#include "lkd/oracle.hpp"

using namespace lkd;

namespace {

// D = {1, 2, 4} on the line; indices 0, 1, 2.
Dataset toy() { return Dataset((MatrixXd(3, 1) << 1, 2, 4).finished()); }

RowVector<double> at(double x) { return (RowVector<double>(1) << x).finished(); }

Dataset random_dataset(Index n, Index d, std::uint64_t seed, bool grid = false, Metric m = Metric::Euclidean) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> gi(0, 6);
  MatrixXd pts(n, d);
  for (Index i = 0; i < pts.size(); ++i) pts.data()[i] = grid ? gi(rng) : u(rng);
  return Dataset(pts, m);
}

// Sorted distance row from p to all other points, by brute force.
std::vector<double> sorted_row(const Dataset& ds, Index p) {
  std::vector<double> r;
  for (Index o = 0; o < ds.size(); ++o) {
    if (o != p) r.push_back(ds.dist(p, o));
  }
  std::sort(r.begin(), r.end());
  return r;
}

}  // namespace

TEST(Knn, ToyNearestOfFour) {
  Dataset ds = toy();
  auto r = knn_query(ds, at(4), 1, Index{2});
  ASSERT_EQ(r.indices.size(), 1u);
  EXPECT_EQ(r.indices[0], 1);
  EXPECT_EQ(r.distances[0], 2.0);
}

TEST(Knn, ToyTwoNearestOfOne) {
  auto r = knn_query(toy(), at(1), 2, Index{0});
  EXPECT_EQ(r.distances, (std::vector<double>{1, 3}));
}

TEST(Knn, SelfExclusion) {
  Dataset ds = random_dataset(50, 2, 1);
  auto r = knn_query(ds, ds.point(7), 1, Index{7});
  EXPECT_NE(r.indices[0], 7);
  auto with_self = knn_query(ds, ds.point(7), 1);
  EXPECT_EQ(with_self.indices[0], 7);
  EXPECT_EQ(with_self.distances[0], 0.0);
}

TEST(Knn, TooLarge) {
  EXPECT_THROW(knn_query(toy(), at(0), 3, Index{0}), KTooLarge);
  EXPECT_NO_THROW(knn_query(toy(), at(0), 3));
  EXPECT_THROW(nndist(toy(), 0, 3), KTooLarge);
  EXPECT_THROW(build_kdist_table(toy(), 3), KTooLarge);
}

TEST(Knn, KdTreeMatchesLinearScan) {
  for (Index d : {1, 2, 3}) {
    for (bool grid : {false, true}) {
      for (Metric m : {Metric::Euclidean, Metric::Manhattan}) {
        Dataset ds = random_dataset(600, d, 11 + static_cast<std::uint64_t>(d), grid, m);
        KnnIndex tree(ds, SearchStrategy::KdTree);
        ASSERT_TRUE(tree.uses_tree());
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 11.0);
        std::uniform_int_distribution<Index> pick(0, ds.size() - 1);
        for (int t = 0; t < 1000; ++t) {
          const Index k = 1 + t % 24;
          if (t % 2 == 0) {
            const Index p = pick(rng);
            auto a = tree.query(ds.point(p), k, p);
            auto b = knn_linear_scan(ds, ds.point(p), k, p);
            ASSERT_EQ(a.indices, b.indices);
            ASSERT_EQ(a.distances, b.distances);
          } else {
            RowVector<double> q(d);
            for (Index j = 0; j < d; ++j) q(j) = grid ? std::round(u(rng)) : u(rng);
            auto a = tree.query(q, k);
            auto b = knn_linear_scan(ds, q, k, std::nullopt);
            ASSERT_EQ(a.indices, b.indices);
            ASSERT_EQ(a.distances, b.distances);
          }
        }
      }
    }
  }
}

TEST(Knn, TiesOrderedByIndex) {
  Dataset ds((MatrixXd(5, 1) << 0, 1, -1, 1, -1).finished());
  auto r = knn_query(ds, at(0), 4, Index{0}, SearchStrategy::KdTree);
  EXPECT_EQ(r.indices, (std::vector<Index>{1, 2, 3, 4}));
}

TEST(Knn, AutoUsesTreeOnlyInLowDimension) {
  EXPECT_TRUE(KnnIndex(random_dataset(20, 3, 1)).uses_tree());
  EXPECT_FALSE(KnnIndex(random_dataset(20, 4, 1)).uses_tree());
}

TEST(NnDist, ToyValues) {
  Dataset ds = toy();
  EXPECT_EQ(nndist(ds, 1, 1), 1.0);
  EXPECT_EQ(nndist(ds, 2, 2), 3.0);
}

TEST(NnDist, Duplicates) {
  Dataset ds((MatrixXd(3, 2) << 0, 0, 0, 0, 5, 5).finished());
  EXPECT_EQ(nndist(ds, 0, 1), 0.0);
  EXPECT_EQ(KnnIndex(ds).nndist(0, 1), 0.0);
}

TEST(NnDist, GridInterior) {
  MatrixXd pts(10, 1);
  for (Index i = 0; i < 10; ++i) pts(i, 0) = static_cast<double>(i);
  EXPECT_EQ(nndist(Dataset(pts), 5, 2), 1.0);
}

TEST(NnDist, EqualsSortedRow) {
  Dataset ds = random_dataset(120, 2, 9, true);
  KnnIndex idx(ds);
  for (Index p = 0; p < ds.size(); ++p) {
    auto row = sorted_row(ds, p);
    for (Index k = 1; k <= 20; ++k) {
      ASSERT_EQ(nndist(ds, p, k), row[static_cast<std::size_t>(k - 1)]);
      ASSERT_EQ(idx.nndist(p, k), row[static_cast<std::size_t>(k - 1)]);
    }
  }
}

TEST(KDistTableBuild, ToyRows) {
  KDistTable t = build_kdist_table(toy(), 2);
  EXPECT_EQ(t.values(), (MatrixXd(3, 2) << 1, 3, 1, 2, 2, 3).finished());
}

TEST(KDistTableBuild, ThreadIndependentAndMonotone) {
  Dataset ds = random_dataset(400, 2, 4);
  KDistTable a = build_kdist_table(ds, 16, SearchStrategy::Auto, 1);
  KDistTable b = build_kdist_table(ds, 16, SearchStrategy::Auto, 4);
  KDistTable c = build_kdist_table(ds, 16, SearchStrategy::LinearScan, 3);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_EQ(a.values(), c.values());
  for (Index p = 0; p < ds.size(); ++p) {
    for (Index k = 1; k < 16; ++k) EXPECT_LE(a.at(p, k), a.at(p, k + 1));
  }
}

TEST(KDistTableFile, RoundTrip) {
  Dataset ds = random_dataset(50, 2, 2);
  KDistTable t = build_kdist_table(ds, 8);
  auto path = std::filesystem::temp_directory_path() / "lkd_table.kdt";
  save_kdist_table(t, path);
  EXPECT_EQ(load_kdist_table(path).values(), t.values());

  auto bytes = read_file_bytes(path);
  EXPECT_EQ(bytes.size(), 4u + 16u + 50u * 8u * 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "KDT1");
  bytes.resize(bytes.size() - 3);
  write_file_bytes(path, bytes);
  EXPECT_THROW(load_kdist_table(path), CorruptArtifact);
  bytes[0] = 'X';
  write_file_bytes(path, bytes);
  EXPECT_THROW(load_kdist_table(path), CorruptArtifact);
  EXPECT_THROW(load_kdist_table("/nonexistent/t.kdt"), IoError);
}

TEST(RknnBruteforce, ToyQueries) {
  Dataset ds = toy();
  EXPECT_EQ(rknn_bruteforce(ds, at(2), 1, Index{1}), (std::vector<Index>{0, 2}));
  EXPECT_EQ(rknn_bruteforce(ds, at(4), 1, Index{2}), (std::vector<Index>{}));
}

TEST(RknnBruteforce, FarQueryEmpty) {
  Dataset ds = random_dataset(100, 2, 3);
  EXPECT_TRUE(rknn_bruteforce(ds, (RowVector<double>(2) << 1e6, 1e6).finished(), 5).empty());
}

TEST(RknnBruteforce, TableAndDirectAgreeAndGrowWithK) {
  Dataset ds = random_dataset(300, 2, 8, true);
  KDistTable t = build_kdist_table(ds, 12);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<Index> pick(0, ds.size() - 1);
  for (int i = 0; i < 30; ++i) {
    const Index q = pick(rng);
    std::vector<Index> prev;
    for (Index k = 1; k <= 12; ++k) {
      auto a = rknn_bruteforce(ds, ds.point(q), k, q);
      auto b = rknn_bruteforce(ds, t, ds.point(q), k, q);
      ASSERT_EQ(a, b);
      EXPECT_TRUE(std::includes(a.begin(), a.end(), prev.begin(), prev.end()));
      EXPECT_FALSE(std::binary_search(a.begin(), a.end(), q));
      prev = a;
    }
  }
}
