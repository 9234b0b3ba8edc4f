#include "lkd/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace lkd {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T parse_number(const std::string& s, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(std::string("bad ") + what + " '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ParseError("bad boolean '" + s + "'");
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::string to_csv_line(const MetricsRow& r) {
  for (const std::string* s : {&r.run_id, &r.dataset, &r.model_type, &r.config_hash, &r.agg_mode}) {
    if (s->find_first_of(",\n\"") != std::string::npos) throw InvalidSpec("CSV field contains a separator");
  }
  std::ostringstream os;
  os << std::setprecision(17);
  os << r.run_id << ',' << r.dataset << ',' << r.model_type << ',' << r.config_hash << ',' << r.seed << ','
     << r.agg_mode << ',' << r.clip << ',' << r.monotone << ',' << r.sample_weights << ',' << r.iterations << ','
     << r.param_count << ',' << r.mean_css << ',' << r.max_css << ',' << r.wall_ms;
  return os.str();
}

MetricsRow parse_csv_line(const std::string& line) {
  const auto f = split(line, ',');
  if (f.size() != 14) throw ParseError("metrics row needs 14 fields");
  MetricsRow r;
  r.run_id = f[0];
  r.dataset = f[1];
  r.model_type = f[2];
  r.config_hash = f[3];
  r.seed = parse_number<std::uint64_t>(f[4], "seed");
  r.agg_mode = f[5];
  r.clip = parse_bool(f[6]);
  r.monotone = parse_bool(f[7]);
  r.sample_weights = parse_bool(f[8]);
  r.iterations = parse_number<int>(f[9], "iterations");
  r.param_count = parse_number<Index>(f[10], "param_count");
  r.mean_css = parse_number<double>(f[11], "mean_css");
  r.max_css = parse_number<Index>(f[12], "max_css");
  r.wall_ms = parse_number<double>(f[13], "wall_ms");
  return r;
}

void append_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot open " + path.string());
  if (fresh) out << kMetricsColumns << '\n';
  for (const auto& r : rows) out << to_csv_line(r) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty metrics file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kMetricsColumns) throw ParseError("unexpected metrics header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(parse_csv_line(line));
  }
  return rows;
}

std::string skyline_svg(const std::vector<MetricsRow>& rows) {
  constexpr double W = 640, H = 480, L = 70, R = 160, T = 20, B = 50;
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(std::log10(std::max<double>(1.0, static_cast<double>(r.param_count))));
    ys.push_back(std::log10(std::max(0.1, r.mean_css)));
  }
  double x0 = 0, x1 = 1, y0 = -1, y1 = 0;
  if (!rows.empty()) {
    x0 = std::floor(*std::min_element(xs.begin(), xs.end()));
    x1 = std::ceil(*std::max_element(xs.begin(), xs.end()));
    y0 = std::floor(*std::min_element(ys.begin(), ys.end()));
    y1 = std::ceil(*std::max_element(ys.begin(), ys.end()));
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
  }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  std::map<std::string, std::vector<std::size_t>> by_dataset;
  for (std::size_t i = 0; i < rows.size(); ++i) by_dataset[rows[i].dataset].push_back(i);

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (double e = x0; e <= x1; e += 1) {
    os << "<text x=\"" << px(e) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">1e" << static_cast<int>(e) << "</text>\n";
  }
  for (double e = y0; e <= y1; e += 1) {
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(e) + 4 << "\" text-anchor=\"end\">1e" << static_cast<int>(e) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">model size (parameters)</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << (T + H - B) / 2 << ")\">mean CSS</text>\n";

  std::size_t series = 0;
  for (const auto& [name, idx] : by_dataset) {
    const char* color = palette[series % 6];
    std::vector<SkylinePoint> pts;
    std::vector<std::size_t> learned;
    for (std::size_t i : idx) {
      const auto& r = rows[i];
      if (r.model_type == "cop") {
        os << "<rect x=\"" << px(xs[i]) - 5 << "\" y=\"" << py(ys[i]) - 5 << "\" width=\"10\" height=\"10\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      } else {
        os << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i]) << "\" r=\"2.5\" fill=\"" << color << "\" fill-opacity=\"0.35\"/>\n";
        pts.push_back({r.param_count, r.mean_css});
        learned.push_back(i);
      }
    }
    const auto front = skyline(pts);
    if (!front.empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t f = 0; f < front.size(); ++f) {
        const std::size_t i = learned[front[f]];
        if (f > 0) os << px(xs[i]) << ',' << py(ys[learned[front[f - 1]]]) << ' ';
        os << px(xs[i]) << ',' << py(ys[i]) << ' ';
      }
      os << "\"/>\n";
    }
    const double ly = T + 14 + 16.0 * static_cast<double>(series);
    os << "<circle cx=\"" << W - R + 16 << "\" cy=\"" << ly - 4 << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    os << "<text x=\"" << W - R + 26 << "\" y=\"" << ly << "\">" << escape_xml(name) << "</text>\n";
    ++series;
  }
  const double ly = T + 14 + 16.0 * static_cast<double>(series);
  os << "<rect x=\"" << W - R + 12 << "\" y=\"" << ly - 8 << "\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W - R + 26 << "\" y=\"" << ly << "\">baseline</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace lkd
