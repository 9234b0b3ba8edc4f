#include <algorithm>
#include <numeric>

#include "lkd/regress.hpp"

namespace lkd {
namespace {

bool rows_identical(const MatrixXd& targets, const std::vector<Index>& samples) {
  const auto first = targets.row(samples.front());
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (targets.row(samples[i]) != first) return false;
  }
  return true;
}

VectorXd leaf_value(const MatrixXd& targets, const MatrixXd& weights, const std::vector<Index>& samples) {
  const Index k = targets.cols();
  VectorXd value(k);
  for (Index c = 0; c < k; ++c) {
    const double first = targets(samples.front(), c);
    bool constant = true;
    double sw = 0.0, swy = 0.0, sy = 0.0;
    for (Index s : samples) {
      const double y = targets(s, c);
      constant = constant && y == first;
      sw += weights(s, c);
      swy += weights(s, c) * y;
      sy += y;
    }
    if (constant) value(c) = first;
    else if (sw > 0.0) value(c) = swy / sw;
    else value(c) = sy / static_cast<double>(samples.size());
  }
  return value;
}

// Weighted SSE summed over outputs from (sum w, sum w·r, sum w·r²).
double sse(const VectorXd& w, const VectorXd& s, const VectorXd& q) {
  double total = 0.0;
  for (Index c = 0; c < w.size(); ++c) {
    if (w(c) > 0.0) total += std::max(0.0, q(c) - s(c) * s(c) / w(c));
  }
  return total;
}

}  // namespace

void DecisionTreeModel::fit(const MatrixXd& inputs, const MatrixXd& targets, const MatrixXd& weights,
                            std::uint64_t /*seed*/) {
  validate_fit_inputs(inputs, targets, weights);
  nodes_.clear();
  input_dim_ = inputs.cols();
  std::vector<Index> samples(static_cast<std::size_t>(inputs.rows()));
  std::iota(samples.begin(), samples.end(), Index{0});
  std::vector<VectorXd> leaves;
  grow(inputs, targets, weights, samples, 0, leaves);
  leaf_values_.resize(static_cast<Index>(leaves.size()), targets.cols());
  for (std::size_t i = 0; i < leaves.size(); ++i) leaf_values_.row(static_cast<Index>(i)) = leaves[i].transpose();
}

Index DecisionTreeModel::grow(const MatrixXd& inputs, const MatrixXd& targets, const MatrixXd& weights,
                              std::vector<Index>& samples, int depth, std::vector<VectorXd>& leaves) {
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.emplace_back();
  auto make_leaf = [&] {
    nodes_[static_cast<std::size_t>(id)].leaf = static_cast<Index>(leaves.size());
    leaves.push_back(leaf_value(targets, weights, samples));
    return id;
  };

  const bool depth_exhausted = config_.max_depth > 0 && depth >= config_.max_depth;
  if (depth_exhausted || samples.size() < 2 || rows_identical(targets, samples)) return make_leaf();

  const Index k = targets.cols();
  // Centering on the node mean keeps the running sums well conditioned.
  VectorXd w_tot = VectorXd::Zero(k), mean = VectorXd::Zero(k);
  for (Index s : samples) {
    w_tot += weights.row(s).transpose();
    mean += weights.row(s).transpose().cwiseProduct(targets.row(s).transpose());
  }
  for (Index c = 0; c < k; ++c) mean(c) = w_tot(c) > 0.0 ? mean(c) / w_tot(c) : 0.0;
  VectorXd s_tot = VectorXd::Zero(k), q_tot = VectorXd::Zero(k);
  for (Index s : samples) {
    for (Index c = 0; c < k; ++c) {
      const double r = targets(s, c) - mean(c);
      s_tot(c) += weights(s, c) * r;
      q_tot(c) += weights(s, c) * r * r;
    }
  }
  const double parent = sse(w_tot, s_tot, q_tot);

  double best_reduction = -1.0;
  Index best_feature = -1;
  double best_threshold = 0.0;
  std::vector<Index> order = samples;
  VectorXd wl(k), sl(k), ql(k);
  for (Index f = 0; f < inputs.cols(); ++f) {
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      const double va = inputs(a, f), vb = inputs(b, f);
      return va < vb || (va == vb && a < b);
    });
    wl.setZero();
    sl.setZero();
    ql.setZero();
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const Index s = order[i];
      for (Index c = 0; c < k; ++c) {
        const double r = targets(s, c) - mean(c);
        wl(c) += weights(s, c);
        sl(c) += weights(s, c) * r;
        ql(c) += weights(s, c) * r * r;
      }
      const double a = inputs(s, f), b = inputs(order[i + 1], f);
      if (!(a < b)) continue;
      const double children = sse(wl, sl, ql) + sse(w_tot - wl, s_tot - sl, q_tot - ql);
      const double reduction = parent - children;
      if (reduction > best_reduction) {
        best_reduction = reduction;
        best_feature = f;
        double t = a + (b - a) / 2.0;
        if (!(t >= a && t < b)) t = a;
        best_threshold = t;
      }
    }
  }
  if (best_feature < 0) return make_leaf();

  std::vector<Index> left, right;
  for (Index s : samples) (inputs(s, best_feature) <= best_threshold ? left : right).push_back(s);
  samples.clear();
  samples.shrink_to_fit();

  nodes_[static_cast<std::size_t>(id)].feature = best_feature;
  nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
  const Index l = grow(inputs, targets, weights, left, depth + 1, leaves);
  nodes_[static_cast<std::size_t>(id)].left = l;
  const Index r = grow(inputs, targets, weights, right, depth + 1, leaves);
  nodes_[static_cast<std::size_t>(id)].right = r;
  return id;
}

Index DecisionTreeModel::route(const Eigen::Ref<const RowVector<double>>& x) const {
  if (!fitted()) throw NotFitted("tree is not fitted");
  if (x.size() != input_dim_) throw ShapeMismatch("input dimension mismatch");
  const Node* node = &nodes_.front();
  while (node->feature >= 0) {
    node = &nodes_[static_cast<std::size_t>(x(node->feature) <= node->threshold ? node->left : node->right)];
  }
  return node->leaf;
}

VectorXd DecisionTreeModel::predict_row(const Eigen::Ref<const RowVector<double>>& x) const {
  return leaf_values_.row(route(x)).transpose();
}

Index DecisionTreeModel::internal_count() const {
  return static_cast<Index>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature >= 0; }));
}

Index DecisionTreeModel::param_count() const { return 2 * internal_count() + leaf_values_.size(); }

Index DecisionTreeModel::depth() const {
  if (nodes_.empty()) return 0;
  auto walk = [&](auto&& self, Index id) -> Index {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.feature < 0) return 0;
    return 1 + std::max(self(self, n.left), self(self, n.right));
  };
  return walk(walk, 0);
}

// Layout: hyperparameter section {max_depth u32, input_dim u64, k_max u64,
// node count u64, preorder topology bits}, then a parameter section
// {width u8 = 8, count u64, scalars}: (feature, threshold) for internal
// nodes and k_max leaf values for leaves, in preorder.
void DecisionTreeModel::serialize(ByteWriter& out) const {
  if (!fitted()) throw NotFitted("cannot serialize an unfitted tree");
  ByteWriter hyper;
  hyper.u32(static_cast<std::uint32_t>(config_.max_depth));
  hyper.u64(static_cast<std::uint64_t>(input_dim_));
  hyper.u64(static_cast<std::uint64_t>(k_max()));
  hyper.u64(nodes_.size());
  std::uint8_t byte = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].feature >= 0) byte |= static_cast<std::uint8_t>(1u << (i % 8));
    if (i % 8 == 7 || i + 1 == nodes_.size()) {
      hyper.u8(byte);
      byte = 0;
    }
  }
  ByteWriter params;
  params.u8(8);
  params.u64(static_cast<std::uint64_t>(param_count()));
  for (const Node& n : nodes_) {
    if (n.feature >= 0) {
      params.f64(static_cast<double>(n.feature));
      params.f64(n.threshold);
    } else {
      for (Index c = 0; c < k_max(); ++c) params.f64(leaf_values_(n.leaf, c));
    }
  }
  out.section(hyper);
  out.section(params);
}

DecisionTreeModel DecisionTreeModel::deserialize(ByteReader& in) {
  ByteReader hyper = in.section();
  TreeConfig cfg;
  cfg.max_depth = static_cast<int>(hyper.u32());
  DecisionTreeModel tree(cfg);
  tree.input_dim_ = static_cast<Index>(hyper.u64());
  const auto k = static_cast<Index>(hyper.u64());
  const std::uint64_t node_count = hyper.u64();
  if (node_count == 0 || k == 0 || hyper.remaining() != (node_count + 7) / 8) {
    throw CorruptArtifact("tree topology length mismatch");
  }
  std::vector<bool> internal(node_count);
  for (std::uint64_t i = 0; i < node_count; i += 8) {
    const std::uint8_t byte = hyper.u8();
    for (std::uint64_t b = 0; b < 8 && i + b < node_count; ++b) internal[i + b] = (byte >> b) & 1u;
  }

  ByteReader params = in.section();
  if (params.u8() != 8) throw CorruptArtifact("tree parameters must be 64-bit");
  const std::uint64_t count = params.u64();
  if (params.remaining() != count * 8) throw CorruptArtifact("tree parameter count mismatch");

  std::vector<VectorXd> leaves;
  tree.nodes_.resize(node_count);
  std::size_t cursor = 0;
  auto rebuild = [&](auto&& self) -> Index {
    if (cursor >= node_count) throw CorruptArtifact("tree topology is truncated");
    const Index id = static_cast<Index>(cursor++);
    Node n;
    if (internal[static_cast<std::size_t>(id)]) {
      n.feature = static_cast<Index>(params.f64());
      n.threshold = params.f64();
      if (n.feature < 0 || n.feature >= tree.input_dim_) throw CorruptArtifact("tree feature out of range");
      tree.nodes_[static_cast<std::size_t>(id)] = n;
      const Index l = self(self);
      const Index r = self(self);
      tree.nodes_[static_cast<std::size_t>(id)].left = l;
      tree.nodes_[static_cast<std::size_t>(id)].right = r;
    } else {
      VectorXd v(k);
      for (Index c = 0; c < k; ++c) v(c) = params.f64();
      n.leaf = static_cast<Index>(leaves.size());
      leaves.push_back(std::move(v));
      tree.nodes_[static_cast<std::size_t>(id)] = n;
    }
    return id;
  };
  rebuild(rebuild);
  if (cursor != node_count) throw CorruptArtifact("tree topology has unused nodes");
  params.expect_done("tree parameters");
  tree.leaf_values_.resize(static_cast<Index>(leaves.size()), k);
  for (std::size_t i = 0; i < leaves.size(); ++i) tree.leaf_values_.row(static_cast<Index>(i)) = leaves[i].transpose();
  return tree;
}

}  // namespace lkd
