#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include "lkd/core.hpp"

namespace lkd {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_char(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    std::string_view field = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
    out.push_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> try_parse(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

double parse_coord(std::string_view token, std::size_t line_no) {
  const auto value = try_parse(token);
  if (!value) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" +
                     std::string(token) + "' as a number");
  }
  if (!std::isfinite(*value)) {
    throw ParseError("line " + std::to_string(line_no) + ": non-finite coordinate");
  }
  return *value;
}

MatrixXd to_matrix(const std::vector<double>& flat, Index d) {
  const Index n = d == 0 ? 0 : static_cast<Index>(flat.size()) / d;
  MatrixXd points(n, d);
  std::copy(flat.begin(), flat.end(), points.data());
  return points;
}

Dataset make_checked(std::vector<double> flat, Index d, Metric metric,
                     std::vector<std::string> ids) {
  const Index n = d == 0 ? 0 : static_cast<Index>(flat.size()) / d;
  if (n < 2) throw EmptyDataset("dataset has " + std::to_string(n) + " points, need >= 2");
  return Dataset(to_matrix(flat, d), metric, std::move(ids));
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format, Metric metric) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");

  std::vector<double> flat;
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  Index d = 0;

  switch (format) {
    case DatasetFormat::RoadNetworkNodes: {
      d = 2;
      while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 3) {
          throw DimensionMismatch("line " + std::to_string(line_no) + ": expected 'id x y', got " +
                                  std::to_string(fields.size()) + " fields");
        }
        ids.emplace_back(fields[0]);
        flat.push_back(parse_coord(fields[1], line_no));
        flat.push_back(parse_coord(fields[2], line_no));
      }
      break;
    }
    case DatasetFormat::EmbeddingText: {
      Index declared_n = 0;
      while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (d == 0) {
          if (fields.size() != 2) throw ParseError("line " + std::to_string(line_no) + ": expected header 'n d'");
          const auto n_val = try_parse(fields[0]);
          const auto d_val = try_parse(fields[1]);
          if (!n_val || !d_val || *n_val < 0 || *d_val < 1 || *n_val != std::floor(*n_val) ||
              *d_val != std::floor(*d_val)) {
            throw ParseError("line " + std::to_string(line_no) + ": malformed header");
          }
          declared_n = static_cast<Index>(*n_val);
          d = static_cast<Index>(*d_val);
          flat.reserve(static_cast<std::size_t>(declared_n * d));
          continue;
        }
        if (static_cast<Index>(fields.size()) != d + 1) {
          throw DimensionMismatch("line " + std::to_string(line_no) + ": expected token and " +
                                  std::to_string(d) + " values");
        }
        ids.emplace_back(fields[0]);
        for (Index j = 0; j < d; ++j) flat.push_back(parse_coord(fields[j + 1], line_no));
      }
      if (d == 0) throw EmptyDataset("embedding file has no header");
      if (static_cast<Index>(ids.size()) != declared_n) {
        throw DimensionMismatch("header declares " + std::to_string(declared_n) + " rows, file has " +
                                std::to_string(ids.size()));
      }
      break;
    }
    case DatasetFormat::Csv: {
      bool first = true;
      while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (split_ws(line).empty()) continue;
        const auto fields = split_char(line, ',');
        if (first) {
          first = false;
          bool numeric = true;
          for (auto f : fields) numeric = numeric && try_parse(f).has_value();
          if (!numeric) continue;  // header
        }
        if (d == 0) d = static_cast<Index>(fields.size());
        if (static_cast<Index>(fields.size()) != d) {
          throw DimensionMismatch("line " + std::to_string(line_no) + ": expected " + std::to_string(d) +
                                  " columns, got " + std::to_string(fields.size()));
        }
        for (auto f : fields) flat.push_back(parse_coord(f, line_no));
      }
      break;
    }
  }
  return make_checked(std::move(flat), d, metric, std::move(ids));
}

}  // namespace lkd
