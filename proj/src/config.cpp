#include "lkd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace lkd {
namespace {

using nlohmann::json;

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string("section '") + section + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in section '" + section + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void read_range(const json& j, const char* key, int& lo, int& hi) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw ConfigError(std::string("'") + key + "' must be [min, max]");
  }
  lo = v[0].get<int>();
  hi = v[1].get<int>();
}

ModelConfig parse_model(const json& j) {
  std::string type = "tree";
  read(j, "type", type);
  if (type == "tree") {
    check_keys(j, "model", {"type", "max_depth"});
    TreeConfig t;
    read(j, "max_depth", t.max_depth);
    if (t.max_depth < 0) throw ConfigError("max_depth must be >= 0");
    return t;
  }
  if (type == "mlp") {
    check_keys(j, "model", {"type", "hidden", "loss", "batch_size", "learning_rate", "epochs", "dropout"});
    MlpConfig m;
    read(j, "hidden", m.hidden);
    std::string loss = std::string(to_string(m.loss));
    read(j, "loss", loss);
    m.loss = parse_loss(loss);
    read(j, "batch_size", m.batch_size);
    read(j, "learning_rate", m.learning_rate);
    read(j, "epochs", m.epochs);
    read(j, "dropout", m.dropout);
    for (int h : m.hidden) {
      if (h < 1) throw ConfigError("hidden layer widths must be positive");
    }
    if (m.batch_size < 1 || m.epochs < 1 || !(m.learning_rate > 0.0) || m.dropout < 0.0 || m.dropout >= 1.0) {
      throw ConfigError("invalid MLP hyperparameters");
    }
    return m;
  }
  throw ConfigError("unknown model type '" + type + "'");
}

json model_to_json(const ModelConfig& config) {
  if (const auto* t = std::get_if<TreeConfig>(&config)) return {{"type", "tree"}, {"max_depth", t->max_depth}};
  const auto& m = std::get<MlpConfig>(config);
  return {{"type", "mlp"},
          {"hidden", m.hidden},
          {"loss", std::string(to_string(m.loss))},
          {"batch_size", m.batch_size},
          {"learning_rate", m.learning_rate},
          {"epochs", m.epochs},
          {"dropout", m.dropout}};
}

json query_set_to_json(const QuerySet& q) {
  switch (q.kind) {
    case QuerySet::Kind::All: return "all";
    case QuerySet::Kind::Auto: return "auto";
    case QuerySet::Kind::Sample: return {{"sample", q.sample_size}, {"seed", q.seed}};
  }
  return "auto";
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(root, "root", {"dataset", "model", "bounds", "trainer", "eval", "search"});
  RunConfig cfg;

  if (root.contains("dataset")) {
    const json& j = root["dataset"];
    check_keys(j, "dataset", {"path", "format", "metric", "length_normalize", "k_max"});
    read(j, "path", cfg.dataset.path);
    read(j, "format", cfg.dataset.format);
    read(j, "metric", cfg.dataset.metric);
    read(j, "length_normalize", cfg.dataset.length_normalize);
    read(j, "k_max", cfg.dataset.k_max);
    parse_format(cfg.dataset.format);
    parse_metric(cfg.dataset.metric);
    if (cfg.dataset.k_max < 1) throw ConfigError("k_max must be positive");
  }
  cfg.train.k_max = cfg.dataset.k_max;

  if (root.contains("model")) cfg.train.model = parse_model(root["model"]);

  if (root.contains("bounds")) {
    const json& j = root["bounds"];
    check_keys(j, "bounds", {"aggregate", "clip", "monotone"});
    std::string mode = std::string(to_string(cfg.train.aggregation));
    read(j, "aggregate", mode);
    cfg.train.aggregation = parse_aggregation(mode);
    read(j, "clip", cfg.train.flags.clip_nonneg);
    read(j, "monotone", cfg.train.flags.restore_monotone);
  }

  if (root.contains("trainer")) {
    const json& j = root["trainer"];
    check_keys(j, "trainer", {"iterations", "weight_source", "floor", "rescale", "seed"});
    read(j, "iterations", cfg.train.iterations);
    std::string source = std::string(to_string(cfg.train.weight_source));
    read(j, "weight_source", source);
    cfg.train.weight_source = parse_weight_source(source);
    read(j, "floor", cfg.train.floor);
    read(j, "rescale", cfg.train.rescale);
    read(j, "seed", cfg.train.seed);
    if (cfg.train.iterations < 1) throw ConfigError("iterations must be at least 1");
  }

  if (root.contains("eval")) {
    const json& j = root["eval"];
    check_keys(j, "eval", {"ks", "query_set"});
    read(j, "ks", cfg.eval.ks);
    for (Index k : cfg.eval.ks) {
      if (k < 1 || k > cfg.dataset.k_max) throw ConfigError("eval ks must lie in 1..k_max");
    }
    if (j.contains("query_set")) {
      const json& q = j["query_set"];
      if (q == "all") {
        cfg.eval.queries = QuerySet::all();
      } else if (q == "auto") {
        cfg.eval.queries = QuerySet{};
      } else if (q.is_object()) {
        check_keys(q, "query_set", {"sample", "seed"});
        Index m = 0;
        std::uint64_t seed = 0;
        read(q, "sample", m);
        read(q, "seed", seed);
        if (m < 1) throw ConfigError("query sample size must be positive");
        cfg.eval.queries = QuerySet::sample(m, seed);
      } else {
        throw ConfigError("query_set must be \"all\", \"auto\" or {\"sample\": m, \"seed\": s}");
      }
    }
  }

  if (root.contains("search")) {
    const json& j = root["search"];
    check_keys(j, "search", {"trials", "model_types", "max_depth", "n_layers", "units", "batch_size_log2",
                             "dropout", "loss", "aggregate", "learning_rate", "epochs"});
    auto& s = cfg.search;
    read(j, "trials", cfg.trials);
    read(j, "model_types", s.model_types);
    read_range(j, "max_depth", s.depth_min, s.depth_max);
    read_range(j, "n_layers", s.layers_min, s.layers_max);
    read_range(j, "units", s.units_min, s.units_max);
    read_range(j, "batch_size_log2", s.batch_log2_min, s.batch_log2_max);
    if (j.contains("dropout")) {
      std::vector<double> d;
      read(j, "dropout", d);
      if (d.size() != 2) throw ConfigError("'dropout' must be [min, max]");
      s.dropout_min = d[0];
      s.dropout_max = d[1];
    }
    if (j.contains("loss")) {
      std::vector<std::string> names;
      read(j, "loss", names);
      s.losses.clear();
      for (const auto& n : names) s.losses.push_back(parse_loss(n));
    }
    if (j.contains("aggregate")) {
      std::vector<std::string> names;
      read(j, "aggregate", names);
      s.aggregations.clear();
      for (const auto& n : names) s.aggregations.push_back(parse_aggregation(n));
    }
    read(j, "learning_rate", s.learning_rate);
    read(j, "epochs", s.epochs);
    if (cfg.trials < 1) throw ConfigError("trials must be at least 1");
    try {
      s.validate();
    } catch (const InvalidSpec& e) {
      throw ConfigError(e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  json losses = json::array();
  for (Loss l : c.search.losses) losses.push_back(std::string(to_string(l)));
  json aggs = json::array();
  for (Aggregation a : c.search.aggregations) aggs.push_back(std::string(to_string(a)));
  json root = {
      {"dataset",
       {{"path", c.dataset.path},
        {"format", c.dataset.format},
        {"metric", c.dataset.metric},
        {"length_normalize", c.dataset.length_normalize},
        {"k_max", c.dataset.k_max}}},
      {"model", model_to_json(c.train.model)},
      {"bounds",
       {{"aggregate", std::string(to_string(c.train.aggregation))},
        {"clip", c.train.flags.clip_nonneg},
        {"monotone", c.train.flags.restore_monotone}}},
      {"trainer",
       {{"iterations", c.train.iterations},
        {"weight_source", std::string(to_string(c.train.weight_source))},
        {"floor", c.train.floor},
        {"rescale", c.train.rescale},
        {"seed", c.train.seed}}},
      {"eval", {{"ks", c.eval.ks}, {"query_set", query_set_to_json(c.eval.queries)}}},
      {"search",
       {{"trials", c.trials},
        {"model_types", c.search.model_types},
        {"max_depth", {c.search.depth_min, c.search.depth_max}},
        {"n_layers", {c.search.layers_min, c.search.layers_max}},
        {"units", {c.search.units_min, c.search.units_max}},
        {"batch_size_log2", {c.search.batch_log2_min, c.search.batch_log2_max}},
        {"dropout", {c.search.dropout_min, c.search.dropout_max}},
        {"loss", losses},
        {"aggregate", aggs},
        {"learning_rate", c.search.learning_rate},
        {"epochs", c.search.epochs}}},
  };
  return root.dump();
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config_to_json(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace lkd
