// Regression models predicting per-k normalized k-distances from coordinates.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lkd/binary_io.hpp"
#include "lkd/mlp_net.hpp"
#include "lkd/types.hpp"

namespace lkd {

struct TreeConfig {
  int max_depth = 0;  // 0 = unbounded
};

struct MlpConfig {
  std::vector<int> hidden{64, 64};
  Loss loss = Loss::MSE;
  Index batch_size = 256;
  double learning_rate = 0.05;
  int epochs = 200;
  double dropout = 0.0;
};

using ModelConfig = std::variant<TreeConfig, MlpConfig>;

Loss parse_loss(std::string_view name);
std::string_view to_string(Loss loss);

std::string model_type_name(const ModelConfig& config);
std::string describe(const ModelConfig& config);

/// A trained model maps one (z-scored) input row to k_max normalized
/// k-distance predictions. Implementations are immutable once fitted.
class KDistModel {
 public:
  virtual ~KDistModel() = default;

  /// inputs n × d, targets n × k_max, weights n × k_max (finite, >= 0, not all 0).
  virtual void fit(const MatrixXd& inputs, const MatrixXd& targets, const MatrixXd& weights,
                   std::uint64_t seed) = 0;
  virtual VectorXd predict_row(const Eigen::Ref<const RowVector<double>>& x) const = 0;
  /// Row i equals predict_row(inputs.row(i)) bit-for-bit.
  MatrixXd predict_batch(const MatrixXd& inputs) const;

  virtual bool fitted() const = 0;
  virtual Index input_dim() const = 0;
  virtual Index k_max() const = 0;
  virtual Index param_count() const = 0;
  virtual ModelConfig config() const = 0;
  /// Four-character section tag of the serialized form.
  virtual std::string_view tag() const = 0;
  /// Hyperparameter block, then a parameter block of fixed-width scalars.
  virtual void serialize(ByteWriter& out) const = 0;
  virtual std::unique_ptr<KDistModel> clone() const = 0;
};

std::unique_ptr<KDistModel> make_model(const ModelConfig& config);
/// Reads what serialize() wrote for the model with the given tag.
std::unique_ptr<KDistModel> deserialize_model(std::string_view tag, ByteReader& in);

/// Shape / finiteness / weight checks shared by all fit() implementations.
void validate_fit_inputs(const MatrixXd& inputs, const MatrixXd& targets, const MatrixXd& weights);

// ---------------------------------------------------------------------------

class DecisionTreeModel final : public KDistModel {
 public:
  explicit DecisionTreeModel(TreeConfig config = {}) : config_(config) {}

  void fit(const MatrixXd& inputs, const MatrixXd& targets, const MatrixXd& weights,
           std::uint64_t seed) override;
  VectorXd predict_row(const Eigen::Ref<const RowVector<double>>& x) const override;

  bool fitted() const override { return !nodes_.empty(); }
  Index input_dim() const override { return input_dim_; }
  Index k_max() const override { return leaf_values_.cols(); }
  /// 2 per internal node (feature, threshold) + k_max per leaf.
  Index param_count() const override;
  ModelConfig config() const override { return config_; }
  std::string_view tag() const override { return "DTR1"; }
  void serialize(ByteWriter& out) const override;
  std::unique_ptr<KDistModel> clone() const override {
    return std::make_unique<DecisionTreeModel>(*this);
  }

  static DecisionTreeModel deserialize(ByteReader& in);

  Index internal_count() const;
  Index leaf_count() const { return leaf_values_.rows(); }
  Index depth() const;
  /// Leaf index reached by x.
  Index route(const Eigen::Ref<const RowVector<double>>& x) const;

 private:
  struct Node {
    Index feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    Index left = -1;
    Index right = -1;
    Index leaf = -1;
  };

  Index grow(const MatrixXd& inputs, const MatrixXd& targets, const MatrixXd& weights,
             std::vector<Index>& samples, int depth, std::vector<VectorXd>& leaves);

  TreeConfig config_;
  Index input_dim_ = 0;
  std::vector<Node> nodes_;  // nodes_[0] is the root; preorder
  MatrixXd leaf_values_;
};

// ---------------------------------------------------------------------------

class MlpModel final : public KDistModel {
 public:
  explicit MlpModel(MlpConfig config = {}) : config_(std::move(config)) {}

  void fit(const MatrixXd& inputs, const MatrixXd& targets, const MatrixXd& weights,
           std::uint64_t seed) override;
  VectorXd predict_row(const Eigen::Ref<const RowVector<double>>& x) const override;

  bool fitted() const override { return !net_.empty(); }
  Index input_dim() const override { return net_.input_dim(); }
  Index k_max() const override { return net_.output_dim(); }
  Index param_count() const override { return net_.param_count(); }
  ModelConfig config() const override { return config_; }
  std::string_view tag() const override { return "MLP1"; }
  void serialize(ByteWriter& out) const override;
  std::unique_ptr<KDistModel> clone() const override { return std::make_unique<MlpModel>(*this); }

  static MlpModel deserialize(ByteReader& in);

  const MlpNet<float>& net() const { return net_; }
  /// Replaces the network (used by tests to build fixed-weight models).
  void set_net(MlpNet<float> net) { net_ = std::move(net); }

 private:
  MlpConfig config_;
  MlpNet<float> net_;
};

/// Parameter count of an MLP with the given layer widths.
Index mlp_param_count(Index input_dim, const std::vector<int>& hidden, Index output_dim);

// ---------------------------------------------------------------------------

struct GradientCheckReport {
  double max_relative_error = 0.0;
  Index checked = 0;
  Index skipped = 0;  // parameters whose perturbation crosses a kink
  bool passed = false;
};

/// Compares backpropagated gradients of a random 64-bit network against
/// central finite differences (step 1e-6). Relative error per parameter is
/// |a - n| / max(|a|, |n|, 1e-4).
GradientCheckReport gradient_check(Index input_dim, const std::vector<int>& hidden, Index output_dim,
                                   Loss loss, double tolerance, std::uint64_t seed,
                                   Index batch_rows = 8);
/// Same, on a caller-supplied network and batch.
GradientCheckReport gradient_check(MlpNet<double> net, const MatrixXd& x, const MatrixXd& y,
                                   const MatrixXd& w, Loss loss, double tolerance);

}  // namespace lkd
