#include "lkd/regress.hpp"

#include <sstream>

namespace lkd {

Loss parse_loss(std::string_view name) {
  if (name == "MAE" || name == "mae") return Loss::MAE;
  if (name == "MSE" || name == "mse") return Loss::MSE;
  throw ConfigError("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(Loss loss) { return loss == Loss::MSE ? "MSE" : "MAE"; }

std::string model_type_name(const ModelConfig& config) {
  return std::holds_alternative<TreeConfig>(config) ? "tree" : "mlp";
}

std::string describe(const ModelConfig& config) {
  std::ostringstream os;
  if (const auto* t = std::get_if<TreeConfig>(&config)) {
    os << "tree(max_depth=" << t->max_depth << ")";
  } else {
    const auto& m = std::get<MlpConfig>(config);
    os << "mlp(hidden=[";
    for (std::size_t i = 0; i < m.hidden.size(); ++i) os << (i ? "," : "") << m.hidden[i];
    os << "],loss=" << (m.loss == Loss::MSE ? "mse" : "mae") << ",batch=" << m.batch_size
       << ",lr=" << m.learning_rate << ",epochs=" << m.epochs << ",dropout=" << m.dropout << ")";
  }
  return os.str();
}

MatrixXd KDistModel::predict_batch(const MatrixXd& inputs) const {
  if (!fitted()) throw NotFitted("model is not fitted");
  if (inputs.cols() != input_dim()) throw ShapeMismatch("input dimension mismatch");
  MatrixXd out(inputs.rows(), k_max());
  for (Index i = 0; i < inputs.rows(); ++i) out.row(i) = predict_row(inputs.row(i)).transpose();
  return out;
}

std::unique_ptr<KDistModel> make_model(const ModelConfig& config) {
  if (const auto* t = std::get_if<TreeConfig>(&config)) return std::make_unique<DecisionTreeModel>(*t);
  return std::make_unique<MlpModel>(std::get<MlpConfig>(config));
}

std::unique_ptr<KDistModel> deserialize_model(std::string_view tag, ByteReader& in) {
  if (tag == "DTR1") return std::make_unique<DecisionTreeModel>(DecisionTreeModel::deserialize(in));
  if (tag == "MLP1") return std::make_unique<MlpModel>(MlpModel::deserialize(in));
  throw CorruptArtifact("unknown model tag '" + std::string(tag) + "'");
}

void validate_fit_inputs(const MatrixXd& inputs, const MatrixXd& targets, const MatrixXd& weights) {
  if (inputs.rows() == 0 || inputs.cols() == 0) throw ShapeMismatch("empty training inputs");
  if (targets.rows() != inputs.rows() || weights.rows() != inputs.rows() ||
      weights.cols() != targets.cols() || targets.cols() == 0) {
    throw ShapeMismatch("inputs, targets and weights disagree in shape");
  }
  if (!inputs.allFinite() || !targets.allFinite() || !weights.allFinite()) {
    throw NonFiniteInput("non-finite training data");
  }
  if ((weights.array() < 0.0).any()) throw DegenerateWeights("negative sample weight");
  if ((weights.array() == 0.0).all()) throw DegenerateWeights("all sample weights are zero");
}

}  // namespace lkd
