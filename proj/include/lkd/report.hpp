// Metrics CSV and skyline SVG output.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lkd/bench.hpp"

namespace lkd {

/// Schema version 1 of the metrics CSV; column order is fixed.
inline constexpr const char* kMetricsColumns =
    "run_id,dataset,model_type,config_hash,seed,agg_mode,clip,monotone,sample_weights,iterations,"
    "param_count,mean_css,max_css,wall_ms";

struct MetricsRow {
  std::string run_id;
  std::string dataset;
  std::string model_type;
  std::string config_hash;  // 16 hex digits
  std::uint64_t seed = 0;
  std::string agg_mode;  // "K", "D", "KD" or "-" for the baseline
  bool clip = false;
  bool monotone = false;
  bool sample_weights = false;
  int iterations = 0;
  Index param_count = 0;
  double mean_css = 0.0;
  Index max_css = 0;
  double wall_ms = 0.0;
};

std::string to_csv_line(const MetricsRow& row);
MetricsRow parse_csv_line(const std::string& line);

/// Appends rows, writing the header first if the file is new or empty.
void append_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
/// Throws ParseError if the header does not match kMetricsColumns.
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

std::string hex64(std::uint64_t v);

/// Log-log scatter of (param_count, mean_css): one series per dataset with
/// its skyline drawn as a step line; baseline rows drawn as squares.
std::string skyline_svg(const std::vector<MetricsRow>& rows);

}  // namespace lkd
