#include "lkd/search.hpp"

#include <cmath>
#include <random>

namespace lkd {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename T>
const T& pick(const std::vector<T>& options, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, options.size() - 1);
  return options[dist(rng)];
}

int uniform_int(int lo, int hi, std::mt19937_64& rng) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

}  // namespace

void SearchSpace::validate() const {
  if (model_types.empty() || losses.empty() || aggregations.empty()) {
    throw InvalidSpec("search space lists must not be empty");
  }
  for (const auto& t : model_types) {
    if (t != "tree" && t != "mlp") throw InvalidSpec("unknown model type '" + t + "' in search space");
  }
  if (depth_min < 1 || depth_max < depth_min || layers_min < 1 || layers_max < layers_min || units_min < 1 ||
      units_max < units_min || batch_log2_min < 0 || batch_log2_max < batch_log2_min || batch_log2_max > 30 ||
      dropout_min < 0.0 || dropout_max > 1.0 || dropout_max < dropout_min || !(learning_rate > 0.0) ||
      epochs < 1) {
    throw InvalidSpec("invalid search space range");
  }
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(trial));
}

TrainConfig sample_config(const SearchSpace& space, const TrainConfig& base, std::uint64_t seed, int trial) {
  space.validate();
  std::mt19937_64 rng(trial_seed(seed, trial));
  TrainConfig cfg = base;
  cfg.seed = rng();
  const std::string& type = pick(space.model_types, rng);
  if (type == "tree") {
    cfg.model = TreeConfig{uniform_int(space.depth_min, space.depth_max, rng)};
  } else {
    MlpConfig m;
    m.hidden.resize(static_cast<std::size_t>(uniform_int(space.layers_min, space.layers_max, rng)));
    for (int& u : m.hidden) u = uniform_int(space.units_min, space.units_max, rng);
    m.batch_size = Index{1} << uniform_int(space.batch_log2_min, space.batch_log2_max, rng);
    double dropout = std::uniform_real_distribution<double>(space.dropout_min, space.dropout_max)(rng);
    m.dropout = dropout >= 1.0 ? std::nextafter(1.0, 0.0) : dropout;
    m.loss = pick(space.losses, rng);
    m.learning_rate = space.learning_rate;
    m.epochs = space.epochs;
    cfg.model = m;
  }
  cfg.aggregation = pick(space.aggregations, rng);
  return cfg;
}

std::vector<TrialResult> random_search(const Dataset& ds, const KDistTable& table, const SearchSpace& space,
                                       const TrainConfig& base, int trials, std::uint64_t seed,
                                       const std::vector<Index>& ks, const std::vector<Index>& queries,
                                       bool keep_artifacts) {
  if (trials < 1) throw InvalidSpec("trials must be at least 1");
  space.validate();
  const TrainingData data = prepare_training_data(ds, table);
  std::vector<TrialResult> results;
  for (int t = 0; t < trials; ++t) {
    TrialResult r;
    r.trial = t;
    r.config = sample_config(space, base, seed, t);
    r.seed = r.config.seed;
    try {
      TrainResult trained = train_reweighted(ds, table, data, r.config);
      r.css_trace = trained.css_trace;
      r.report = evaluate(trained.artifact, ds, ks, queries, base.threads);
      if (keep_artifacts) r.artifact = std::move(trained.artifact);
    } catch (const std::exception& e) {
      r.error = e.what();
      if (r.error.empty()) r.error = "unknown error";
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace lkd
