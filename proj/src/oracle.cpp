#include "lkd/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <queue>

#include "lkd/binary_io.hpp"
#include "lkd/parallel.hpp"

namespace lkd {
namespace {

struct Candidate {
  double dist;
  Index index;
  bool operator<(const Candidate& o) const {
    return dist < o.dist || (dist == o.dist && index < o.index);
  }
};

KnnResult to_result(std::vector<Candidate>& best) {
  std::sort(best.begin(), best.end());
  KnnResult r;
  r.indices.reserve(best.size());
  r.distances.reserve(best.size());
  for (const auto& c : best) {
    r.indices.push_back(c.index);
    r.distances.push_back(c.dist);
  }
  return r;
}

void check_k(const Dataset& ds, Index k, bool excluding) {
  const Index available = ds.size() - (excluding ? 1 : 0);
  if (k < 1 || k > available) {
    throw KTooLarge("k=" + std::to_string(k) + " but only " + std::to_string(available) +
                    " neighbors available");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

KdTree::KdTree(const Dataset& ds, Index leaf_size) : ds_(&ds), leaf_size_(std::max<Index>(1, leaf_size)) {
  perm_.resize(static_cast<std::size_t>(ds.size()));
  std::iota(perm_.begin(), perm_.end(), Index{0});
  nodes_.reserve(static_cast<std::size_t>(2 * ds.size() / leaf_size_ + 2));
  std::vector<std::pair<VectorXd, VectorXd>> boxes;
  build(0, ds.size());
  box_lo_.resize(static_cast<Index>(nodes_.size()), ds.dim());
  box_hi_.resize(static_cast<Index>(nodes_.size()), ds.dim());
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    const auto& node = nodes_[n];
    auto lo = box_lo_.row(static_cast<Index>(n));
    auto hi = box_hi_.row(static_cast<Index>(n));
    lo = ds.point(perm_[static_cast<std::size_t>(node.begin)]);
    hi = lo;
    for (Index i = node.begin + 1; i < node.end; ++i) {
      const auto p = ds.point(perm_[static_cast<std::size_t>(i)]);
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
}

Index KdTree::build(Index begin, Index end) {
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size_) return id;

  const MatrixXd& pts = ds_->points();
  Index best_dim = 0;
  double best_spread = -1.0;
  for (Index j = 0; j < ds_->dim(); ++j) {
    double lo = pts(perm_[static_cast<std::size_t>(begin)], j), hi = lo;
    for (Index i = begin; i < end; ++i) {
      const double v = pts(perm_[static_cast<std::size_t>(i)], j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = j;
    }
  }
  if (best_spread <= 0.0) return id;  // all points identical

  const Index mid = begin + (end - begin) / 2;
  auto first = perm_.begin() + begin;
  std::nth_element(first, perm_.begin() + mid, perm_.begin() + end, [&](Index a, Index b) {
    const double va = pts(a, best_dim), vb = pts(b, best_dim);
    return va < vb || (va == vb && a < b);
  });
  nodes_[static_cast<std::size_t>(id)].split_dim = best_dim;
  nodes_[static_cast<std::size_t>(id)].split = pts(perm_[static_cast<std::size_t>(mid)], best_dim);
  const Index left = build(begin, mid);
  const Index right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

double KdTree::box_lower_bound(Index node, const Eigen::Ref<const RowVector<double>>& q) const {
  // Same accumulation order as distance(), so the bound never exceeds the
  // computed distance of any point inside the box.
  double acc = 0.0;
  const bool euclid = ds_->metric() == Metric::Euclidean;
  for (Index j = 0; j < q.size(); ++j) {
    double gap = 0.0;
    const double lo = box_lo_(node, j), hi = box_hi_(node, j);
    if (q(j) < lo) gap = lo - q(j);
    else if (q(j) > hi) gap = q(j) - hi;
    acc += euclid ? gap * gap : gap;
  }
  return euclid ? std::sqrt(acc) : acc;
}

KnnResult KdTree::knn(const Eigen::Ref<const RowVector<double>>& q, Index k,
                      std::optional<Index> exclude) const {
  std::priority_queue<Candidate> heap;  // max-heap on (dist, index)
  const auto ku = static_cast<std::size_t>(k);

  auto visit = [&](auto&& self, Index node_id) -> void {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (heap.size() == ku && box_lower_bound(node_id, q) > heap.top().dist) return;
    if (node.left < 0) {
      for (Index i = node.begin; i < node.end; ++i) {
        const Index o = perm_[static_cast<std::size_t>(i)];
        if (exclude && *exclude == o) continue;
        const Candidate c{ds_->dist_to(q, o), o};
        if (heap.size() < ku) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const bool go_left_first = q(node.split_dim) <= node.split;
    self(self, go_left_first ? node.left : node.right);
    self(self, go_left_first ? node.right : node.left);
  };
  visit(visit, 0);

  std::vector<Candidate> best;
  best.reserve(heap.size());
  while (!heap.empty()) {
    best.push_back(heap.top());
    heap.pop();
  }
  return to_result(best);
}

// ---------------------------------------------------------------------------

KnnResult knn_linear_scan(const Dataset& ds, const Eigen::Ref<const RowVector<double>>& q, Index k,
                          std::optional<Index> exclude) {
  check_k(ds, k, exclude.has_value());
  std::vector<Candidate> all;
  all.reserve(static_cast<std::size_t>(ds.size()));
  for (Index o = 0; o < ds.size(); ++o) {
    if (exclude && *exclude == o) continue;
    all.push_back({ds.dist_to(q, o), o});
  }
  std::partial_sort(all.begin(), all.begin() + k, all.end());
  all.resize(static_cast<std::size_t>(k));
  return to_result(all);
}

KnnIndex::KnnIndex(const Dataset& ds, SearchStrategy strategy) : ds_(&ds) {
  const bool tree = strategy == SearchStrategy::KdTree ||
                    (strategy == SearchStrategy::Auto && ds.dim() <= 3);
  if (tree) tree_ = std::make_unique<KdTree>(ds);
}

KnnResult KnnIndex::query(const Eigen::Ref<const RowVector<double>>& q, Index k,
                          std::optional<Index> exclude) const {
  if (q.size() != ds_->dim()) throw DimensionMismatch("query has wrong dimension");
  check_k(*ds_, k, exclude.has_value());
  if (tree_) return tree_->knn(q, k, exclude);
  return knn_linear_scan(*ds_, q, k, exclude);
}

double KnnIndex::nndist(Index p, Index k) const {
  const RowVector<double> q = ds_->point(p);
  return query(q, k, p).distances.back();
}

KnnResult knn_query(const Dataset& ds, const Eigen::Ref<const RowVector<double>>& q, Index k,
                    std::optional<Index> exclude, SearchStrategy strategy) {
  return KnnIndex(ds, strategy).query(q, k, exclude);
}

double nndist(const Dataset& ds, Index p, Index k) {
  check_k(ds, k, true);
  const RowVector<double> q = ds.point(p);
  return knn_linear_scan(ds, q, k, p).distances.back();
}

KDistTable build_kdist_table(const Dataset& ds, Index k_max, SearchStrategy strategy,
                             unsigned threads) {
  check_k(ds, k_max, true);
  const KnnIndex index(ds, strategy);
  MatrixXd values(ds.size(), k_max);
  parallel_for(
      static_cast<std::size_t>(ds.size()),
      [&](std::size_t i) {
        const auto p = static_cast<Index>(i);
        const RowVector<double> q = ds.point(p);
        const KnnResult r = index.query(q, k_max, p);
        for (Index c = 0; c < k_max; ++c) values(p, c) = r.distances[static_cast<std::size_t>(c)];
      },
      threads);
  return KDistTable(std::move(values));
}

std::vector<Index> rknn_bruteforce(const Dataset& ds, const KDistTable& table,
                                   const Eigen::Ref<const RowVector<double>>& q, Index k,
                                   std::optional<Index> q_index) {
  if (k < 1 || k > table.k_max()) throw KTooLarge("k exceeds table k_max");
  if (table.size() != ds.size()) throw ShapeMismatch("table does not match dataset");
  std::vector<Index> result;
  for (Index o = 0; o < ds.size(); ++o) {
    if (q_index && *q_index == o) continue;
    if (ds.dist_to(q, o) <= table.at(o, k)) result.push_back(o);
  }
  return result;
}

std::vector<Index> rknn_bruteforce(const Dataset& ds, const Eigen::Ref<const RowVector<double>>& q,
                                   Index k, std::optional<Index> q_index) {
  check_k(ds, k, true);
  std::vector<Index> result;
  for (Index o = 0; o < ds.size(); ++o) {
    if (q_index && *q_index == o) continue;
    if (ds.dist_to(q, o) <= nndist(ds, o, k)) result.push_back(o);
  }
  return result;
}

// ---------------------------------------------------------------------------

void save_kdist_table(const KDistTable& table, const std::filesystem::path& path) {
  ByteWriter w;
  w.tag("KDT1");
  w.u64(static_cast<std::uint64_t>(table.size()));
  w.u64(static_cast<std::uint64_t>(table.k_max()));
  for (Index p = 0; p < table.size(); ++p) {
    for (Index c = 0; c < table.k_max(); ++c) w.f64(table.values()(p, c));
  }
  write_file_bytes(path, w.bytes());
}

KDistTable load_kdist_table(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes);
  if (r.tag() != "KDT1") throw CorruptArtifact("bad k-distance table magic");
  const std::uint64_t n = r.u64();
  const std::uint64_t k_max = r.u64();
  if (k_max == 0 || r.remaining() / 8 / k_max < n || r.remaining() != n * k_max * 8) {
    throw CorruptArtifact("k-distance table length mismatch");
  }
  MatrixXd values(static_cast<Index>(n), static_cast<Index>(k_max));
  for (Index p = 0; p < values.rows(); ++p) {
    for (Index c = 0; c < values.cols(); ++c) values(p, c) = r.f64();
  }
  return KDistTable(std::move(values));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace lkd
