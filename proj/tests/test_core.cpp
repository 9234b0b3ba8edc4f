#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "lkd/core.hpp"

using namespace lkd;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / ("lkd_core_" + name);
  std::ofstream(path) << content;
  return path;
}

MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  MatrixXd m(static_cast<Index>(r.size()), static_cast<Index>(r.begin()->size()));
  Index i = 0;
  for (const auto& row : r) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(Dataset, RejectsTooFewPoints) {
  EXPECT_THROW(Dataset(rows({{1.0, 2.0}})), EmptyDataset);
}

TEST(Dataset, RejectsNonFinite) {
  EXPECT_THROW(Dataset(rows({{1.0}, {std::nan("")}})), NonFiniteInput);
}

TEST(Dataset, MetricAxioms) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  MatrixXd pts(40, 3);
  for (Index i = 0; i < pts.size(); ++i) pts.data()[i] = g(rng);
  for (Metric m : {Metric::Euclidean, Metric::Manhattan}) {
    Dataset ds(pts, m);
    for (Index a = 0; a < ds.size(); ++a) {
      EXPECT_EQ(ds.dist(a, a), 0.0);
      for (Index b = 0; b < ds.size(); ++b) {
        EXPECT_GE(ds.dist(a, b), 0.0);
        EXPECT_EQ(ds.dist(a, b), ds.dist(b, a));
      }
    }
  }
}

TEST(Dataset, ManhattanAndEuclideanValues) {
  Dataset e(rows({{0, 0}, {3, 4}}), Metric::Euclidean);
  Dataset m(rows({{0, 0}, {3, 4}}), Metric::Manhattan);
  EXPECT_DOUBLE_EQ(e.dist(0, 1), 5.0);
  EXPECT_DOUBLE_EQ(m.dist(0, 1), 7.0);
}

TEST(Dataset, FingerprintDependsOnContent) {
  Dataset a(rows({{0, 0}, {1, 1}}));
  Dataset b(rows({{0, 0}, {1, 1}}));
  Dataset c(rows({{0, 0}, {1, 2}}));
  Dataset d(rows({{0, 0}, {1, 1}}), Metric::Manhattan);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  EXPECT_NE(a.fingerprint(), d.fingerprint());
}

TEST(Dataset, LengthNormalizedAndSubset) {
  Dataset a(rows({{3, 4}, {0, 2}, {1, 0}}));
  Dataset n = a.length_normalized();
  for (Index i = 0; i < n.size(); ++i) EXPECT_NEAR(n.point(i).norm(), 1.0, 1e-15);
  Dataset s = a.subset({2, 0});
  EXPECT_EQ(s.size(), 2);
  EXPECT_EQ(s.point(0)(0), 1.0);
  EXPECT_EQ(s.point(1)(1), 4.0);
}

TEST(LoadDataset, CsvTwoPoints) {
  auto path = write_temp("two.csv", "0,0\n1,1\n");
  Dataset ds = load_dataset(path, DatasetFormat::Csv);
  EXPECT_EQ(ds.size(), 2);
  EXPECT_EQ(ds.dim(), 2);
  EXPECT_EQ(ds.points(), rows({{0, 0}, {1, 1}}));
}

TEST(LoadDataset, CsvWithHeader) {
  auto path = write_temp("hdr.csv", "x,y\n0,0\n1,1\n2,5\n");
  Dataset ds = load_dataset(path, DatasetFormat::Csv);
  EXPECT_EQ(ds.size(), 3);
  EXPECT_EQ(ds.points()(2, 1), 5.0);
}

TEST(LoadDataset, RoadNodes) {
  auto path = write_temp("road.cnode", "0 1.5 2.5\n1 3 4\n2 -1 0\n");
  Dataset ds = load_dataset(path, DatasetFormat::RoadNetworkNodes);
  EXPECT_EQ(ds.size(), 3);
  EXPECT_EQ(ds.dim(), 2);
  EXPECT_EQ(ds.points()(0, 1), 2.5);
  ASSERT_EQ(ds.ids().size(), 3u);
  EXPECT_EQ(ds.ids()[1], "1");
}

TEST(LoadDataset, EmbeddingText) {
  auto path = write_temp("emb.txt", "3 4\nthe 1 2 3 4\nof 0 0 0 1\nand 1 1 1 1\n");
  Dataset ds = load_dataset(path, DatasetFormat::EmbeddingText);
  EXPECT_EQ(ds.size(), 3);
  EXPECT_EQ(ds.dim(), 4);
  EXPECT_EQ(ds.ids()[0], "the");
  EXPECT_EQ(ds.points()(0, 3), 4.0);
}

TEST(LoadDataset, EmbeddingRowCountMismatch) {
  auto path = write_temp("emb_bad.txt", "3 2\na 1 2\nb 0 0\n");
  EXPECT_THROW(load_dataset(path, DatasetFormat::EmbeddingText), DimensionMismatch);
}

TEST(LoadDataset, Errors) {
  EXPECT_THROW(load_dataset(write_temp("arity.csv", "0,0\n1,1,1\n"), DatasetFormat::Csv), DimensionMismatch);
  EXPECT_THROW(load_dataset(write_temp("one.csv", "0,0\n"), DatasetFormat::Csv), EmptyDataset);
  EXPECT_THROW(load_dataset(write_temp("nan.csv", "0,0\nnan,1\n2,2\n"), DatasetFormat::Csv), ParseError);
  EXPECT_THROW(load_dataset(write_temp("junk.cnode", "0 1 2\n1 x 2\n"), DatasetFormat::RoadNetworkNodes),
               ParseError);
  EXPECT_THROW(load_dataset("/nonexistent/lkd.csv", DatasetFormat::Csv), IoError);
}

TEST(LoadDataset, ParseErrorNamesLine) {
  try {
    load_dataset(write_temp("line.csv", "0,0\n1,1\n2,zz\n"), DatasetFormat::Csv);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find('3'), std::string::npos);
  }
}

TEST(LoadDataset, Deterministic) {
  auto path = write_temp("det.csv", "0.1,0.2\n0.3,0.4\n0.5,0.6\n");
  EXPECT_EQ(load_dataset(path, DatasetFormat::Csv).fingerprint(), load_dataset(path, DatasetFormat::Csv).fingerprint());
}

TEST(ZScore, TwoPointSymmetric) {
  auto p = zscore_fit(rows({{0}, {2}}));
  EXPECT_EQ(p.mean(0), 1.0);
  EXPECT_EQ(p.std(0), 1.0);
}

TEST(ZScore, DegenerateDimension) {
  auto p = zscore_fit(rows({{5}, {5}, {5}}));
  EXPECT_EQ(p.mean(0), 5.0);
  EXPECT_EQ(p.std(0), 1.0);
}

TEST(ZScore, TwoDims) {
  auto p = zscore_fit(rows({{0, 0}, {2, 4}}));
  EXPECT_EQ(p.mean, (VectorXd(2) << 1, 2).finished());
  EXPECT_EQ(p.std, (VectorXd(2) << 1, 2).finished());
  EXPECT_EQ(zscore_apply(p, (VectorXd(2) << 3, 6).finished()), (VectorXd(2) << 2, 2).finished());
  EXPECT_EQ(p.param_count(), 4);
}

TEST(ZScore, ApplyAndRoundTrip) {
  ZScoreParams p{(VectorXd(1) << 1).finished(), (VectorXd(1) << 1).finished()};
  EXPECT_EQ(zscore_apply(p, (VectorXd(1) << 2).finished())(0), 1.0);

  ZScoreParams q{(VectorXd(2) << 0.7, -3.0).finished(), (VectorXd(2) << 1.3, 0.2).finished()};
  VectorXd x = (VectorXd(2) << 0.3, -7.0).finished();
  VectorXd back = zscore_invert(q, zscore_apply(q, x));
  for (Index i = 0; i < 2; ++i) EXPECT_NEAR(back(i), x(i), 1e-9 * std::abs(x(i)));
}

TEST(ZScore, DimensionMismatch) {
  auto p = zscore_fit(rows({{0, 0}, {2, 4}}));
  EXPECT_THROW(zscore_apply(p, VectorXd::Zero(3)), DimensionMismatch);
}

TEST(KDistTableTest, Validation) {
  EXPECT_THROW(KDistTable(rows({{2, 1}})), InvalidSpec);
  EXPECT_THROW(KDistTable(rows({{-1, 1}})), NonFiniteInput);
  KDistTable t(rows({{1, 2}, {0, 0}}));
  EXPECT_EQ(t.at(0, 2), 2.0);
}

TEST(KDistNorm, ColumnEndpoints) {
  KDistTable t(rows({{1}, {2}, {3}}));
  auto p = kdist_norm_fit(t);
  EXPECT_EQ(p.apply(1, 1), 0.0);
  EXPECT_EQ(p.apply(2, 1), 0.5);
  EXPECT_EQ(p.apply(3, 1), 1.0);
}

TEST(KDistNorm, DegenerateColumn) {
  KDistTable t(rows({{2}, {2}, {2}}));
  auto p = kdist_norm_fit(t);
  EXPECT_EQ(p.scale(1), 1.0);
  MatrixXd n = p.apply_table(t);
  EXPECT_TRUE((n.array() == 0.0).all());
  EXPECT_EQ(p.invert(0.0, 1), 2.0);
}

TEST(KDistNorm, AffineInverse) {
  KDistNormParams p{(VectorXd(1) << 1).finished(), (VectorXd(1) << 3).finished()};
  EXPECT_EQ(kdist_norm_invert(p, 0.25, 1), 1.5);
  EXPECT_EQ(p.param_count(), 2);
}

TEST(KDistNorm, RoundTripAndOrder) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  MatrixXd v(200, 4);
  for (Index i = 0; i < v.rows(); ++i) {
    double acc = 0.0;
    for (Index k = 0; k < 4; ++k) v(i, k) = acc += u(rng);
  }
  KDistTable t(v);
  auto p = kdist_norm_fit(t);
  for (Index i = 0; i < v.rows(); ++i) {
    for (Index k = 1; k <= 4; ++k) {
      const double x = t.at(i, k);
      EXPECT_NEAR(kdist_norm_invert(p, kdist_norm_apply(p, x, k), k), x, 1e-9 * x);
      EXPECT_EQ(p.invert(p.apply_exact(x, k), k), x);
      EXPECT_LT(p.apply(x, k), p.apply(x * (1 + 1e-9) + 1e-9, k));
    }
  }
  MatrixXd n = p.apply_table(t);
  EXPECT_GE(n.minCoeff(), -1e-12);
  EXPECT_LE(n.maxCoeff(), 1.0 + 1e-12);
}

TEST(Parsing, NamesRoundTrip) {
  EXPECT_EQ(parse_metric("euclidean"), Metric::Euclidean);
  EXPECT_EQ(parse_metric(to_string(Metric::Manhattan)), Metric::Manhattan);
  EXPECT_EQ(parse_format("csv"), DatasetFormat::Csv);
  EXPECT_ANY_THROW(parse_metric("cosine"));
}
