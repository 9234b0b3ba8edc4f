// JSON run configuration.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lkd/search.hpp"

namespace lkd {

struct DatasetConfig {
  std::string path;
  std::string format = "road";
  std::string metric = "euclidean";
  bool length_normalize = false;
  Index k_max = 64;
};

struct EvalConfig {
  std::vector<Index> ks;  // empty = powers of two up to k_max
  QuerySet queries;
};

struct RunConfig {
  DatasetConfig dataset;
  TrainConfig train;
  EvalConfig eval;
  SearchSpace search;
  int trials = 50;
};

/// Sections: dataset, model, bounds, trainer, eval, search. Every section
/// and key is optional; unknown keys raise ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of the full configuration (defaults filled in).
std::string config_to_json(const RunConfig& config);
/// FNV-1a of config_to_json.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace lkd
