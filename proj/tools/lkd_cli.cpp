// lkd: command-line front end.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "lkd/config.hpp"
#include "lkd/report.hpp"
#include "lkd/synth.hpp"

using namespace lkd;

namespace {

struct Common {
  std::string dataset;
  std::string format;
  std::string metric;
  Index k_max = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
  std::string table;
  unsigned threads = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--dataset", c.dataset, "Dataset file");
  app->add_option("--format", c.format, "road | embedding | csv");
  app->add_option("--metric", c.metric, "euclidean | manhattan");
  app->add_option("--kmax", c.k_max, "Largest k");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--out", c.out, "Output path");
  app->add_option("--config", c.config, "JSON run configuration");
  app->add_option("--table", c.table, "k-distance table cache (read if present, written otherwise)");
  app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (!c.dataset.empty()) cfg.dataset.path = c.dataset;
  if (!c.format.empty()) cfg.dataset.format = c.format;
  if (!c.metric.empty()) cfg.dataset.metric = c.metric;
  if (c.k_max > 0) cfg.dataset.k_max = c.k_max;
  if (c.seed) cfg.train.seed = *c.seed;
  cfg.train.k_max = cfg.dataset.k_max;
  cfg.train.threads = c.threads;
  for (Index k : cfg.eval.ks) {
    if (k > cfg.dataset.k_max) throw ConfigError("eval ks exceed k_max");
  }
  return cfg;
}

Dataset open_dataset(const RunConfig& cfg) {
  if (cfg.dataset.path.empty()) throw ConfigError("no dataset given (--dataset or config dataset.path)");
  Dataset ds = load_dataset(cfg.dataset.path, parse_format(cfg.dataset.format), parse_metric(cfg.dataset.metric));
  return cfg.dataset.length_normalize ? ds.length_normalized() : ds;
}

std::string dataset_name(const RunConfig& cfg) { return std::filesystem::path(cfg.dataset.path).stem().string(); }

KDistTable obtain_table(const Dataset& ds, const RunConfig& cfg, const Common& c) {
  if (!c.table.empty() && std::filesystem::exists(c.table)) {
    KDistTable t = load_kdist_table(c.table);
    if (t.size() != ds.size() || t.k_max() != cfg.dataset.k_max) {
      throw ShapeMismatch("cached table does not match dataset / k_max");
    }
    return t;
  }
  KDistTable t = build_kdist_table(ds, cfg.dataset.k_max, SearchStrategy::Auto, c.threads);
  if (!c.table.empty()) save_kdist_table(t, c.table);
  return t;
}

std::vector<Index> eval_ks(const RunConfig& cfg) {
  return cfg.eval.ks.empty() ? default_ks(cfg.dataset.k_max) : cfg.eval.ks;
}

std::string run_id(const std::string& tag, std::uint64_t hash, std::uint64_t seed) {
  return tag + "-" + hex64(hash).substr(0, 8) + "-" + std::to_string(seed);
}

MetricsRow metrics_row(const RunConfig& cfg, const EvalReport& r, const std::string& id, bool baseline,
                       const TrainConfig& train) {
  MetricsRow m;
  m.run_id = id;
  m.dataset = dataset_name(cfg);
  m.model_type = r.model_type;
  m.config_hash = hex64(config_hash(cfg));
  m.seed = train.seed;
  m.agg_mode = baseline ? "-" : std::string(to_string(train.aggregation));
  m.clip = !baseline && train.flags.clip_nonneg;
  m.monotone = train.flags.restore_monotone;
  m.sample_weights = !baseline && train.weight_source != WeightSource::Uniform && train.iterations > 1;
  m.iterations = baseline ? 0 : train.iterations;
  m.param_count = r.param_count;
  m.mean_css = r.mean_css;
  m.max_css = r.max_css;
  m.wall_ms = r.wall_ms;
  return m;
}

void print_report(const EvalReport& r) {
  std::printf("model=%s params=%lld queries=%lld mean_css=%.6g max_css=%lld crossings=%lld\n", r.model_type.c_str(),
              static_cast<long long>(r.param_count), static_cast<long long>(r.query_count), r.mean_css,
              static_cast<long long>(r.max_css), static_cast<long long>(r.crossings));
  for (const auto& e : r.per_k) {
    std::printf("  k=%-4lld mean_css=%-12.6g max_css=%lld\n", static_cast<long long>(e.k), e.mean_css,
                static_cast<long long>(e.max_css));
  }
}

RowVector<double> parse_point(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  RowVector<double> p(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) p(static_cast<Index>(i)) = v[i];
  return p;
}

void write_points(const Dataset& ds, const std::string& path, const std::string& format) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path);
  out.precision(17);
  if (format == "road") {
    if (ds.dim() != 2) throw InvalidSpec("road format needs 2-d points");
    for (Index i = 0; i < ds.size(); ++i) out << i << ' ' << ds.points()(i, 0) << ' ' << ds.points()(i, 1) << '\n';
  } else if (format == "csv") {
    for (Index i = 0; i < ds.size(); ++i) {
      for (Index j = 0; j < ds.dim(); ++j) out << (j ? "," : "") << ds.points()(i, j);
      out << '\n';
    }
  } else {
    throw ConfigError("synth writes road or csv");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned k-distance bounds for exact reverse k-nearest-neighbour queries"};
  app.require_subcommand(1);

  Common kd_c, train_c, base_c, query_c, eval_c, ablate_c, search_c, sky_c, synth_c;

  auto* kdist = app.add_subcommand("kdist", "Build the k-distance table and write it to --out");
  add_common(kdist, kd_c);

  auto* train = app.add_subcommand("train", "Train a learned filter with sample re-weighting");
  add_common(train, train_c);
  std::string train_metrics;
  train->add_option("--metrics", train_metrics, "Append a metrics row to this CSV");

  auto* baseline = app.add_subcommand("baseline", "Fit the log-log linear baseline filter");
  add_common(baseline, base_c);
  bool base_monotone = false;
  std::string base_metrics;
  baseline->add_flag("--monotone", base_monotone, "Apply monotonicity restoration");
  baseline->add_option("--metrics", base_metrics, "Append a metrics row to this CSV");

  auto* query = app.add_subcommand("query", "Answer one RkNN query");
  add_common(query, query_c);
  std::string q_index_path, q_point;
  std::optional<Index> q_db;
  Index q_k = 1;
  query->add_option("--index", q_index_path, "Index file")->required();
  query->add_option("--k", q_k, "k")->required();
  auto* qp = query->add_option("--point", q_point, "Query coordinates, comma separated");
  auto* qd = query->add_option("--query-index", q_db, "Use database point i as the query (self excluded)");
  qp->excludes(qd);

  auto* eval = app.add_subcommand("eval", "Candidate set sizes of an index over the query set");
  add_common(eval, eval_c);
  std::string e_index, e_metrics;
  eval->add_option("--index", e_index, "Index file")->required();
  eval->add_option("--metrics", e_metrics, "Append a metrics row to this CSV");

  auto* ablate = app.add_subcommand("ablate", "Run the 12-row ablation grid; --out is a metrics CSV");
  add_common(ablate, ablate_c);

  auto* search = app.add_subcommand("search", "Random hyperparameter search; --out is a metrics CSV");
  add_common(search, search_c);
  std::optional<int> s_trials;
  bool s_baseline = false;
  search->add_option("--trials", s_trials, "Number of trials (default from config, else 50)");
  search->add_flag("--with-baseline", s_baseline, "Also evaluate the baseline and append its row");

  auto* sky = app.add_subcommand("skyline", "Pareto skyline of a metrics CSV; --out writes an SVG plot");
  add_common(sky, sky_c);
  std::string sky_metrics;
  sky->add_option("--metrics", sky_metrics, "Metrics CSV")->required();

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset to --out");
  add_common(synth, synth_c);
  std::string s_kind = "blobs";
  Index s_n = 2000, s_blobs = 8;
  synth->add_option("--kind", s_kind, "blobs | single-blob | two-blob | road");
  synth->add_option("--n", s_n, "Number of points");
  synth->add_option("--blobs", s_blobs, "Blob count for --kind blobs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (kdist->parsed()) {
      const RunConfig cfg = resolve_config(kd_c);
      const Dataset ds = open_dataset(cfg);
      if (kd_c.out.empty()) throw ConfigError("--out is required");
      save_kdist_table(build_kdist_table(ds, cfg.dataset.k_max, SearchStrategy::Auto, kd_c.threads), kd_c.out);
      std::printf("wrote %lld x %lld k-distances to %s\n", static_cast<long long>(ds.size()),
                  static_cast<long long>(cfg.dataset.k_max), kd_c.out.c_str());
    } else if (train->parsed()) {
      const RunConfig cfg = resolve_config(train_c);
      const Dataset ds = open_dataset(cfg);
      const KDistTable table = obtain_table(ds, cfg, train_c);
      const TrainResult res = train_reweighted(ds, table, cfg.train);
      std::printf("%s params=%lld\n", describe(cfg.train.model).c_str(),
                  static_cast<long long>(res.artifact.param_count()));
      for (std::size_t i = 0; i < res.css_trace.size(); ++i) {
        std::printf("iteration %zu mean_css=%.6g\n", i + 1, res.css_trace[i]);
      }
      if (!train_c.out.empty()) save_index(res.artifact, train_c.out);
      if (!train_metrics.empty()) {
        const EvalReport r =
            evaluate(res.artifact, ds, eval_ks(cfg), resolve_queries(cfg.eval.queries, ds.size()), train_c.threads);
        append_metrics_csv(train_metrics,
                           {metrics_row(cfg, r, run_id("train", config_hash(cfg), cfg.train.seed), false, cfg.train)});
      }
    } else if (baseline->parsed()) {
      const RunConfig cfg = resolve_config(base_c);
      const Dataset ds = open_dataset(cfg);
      const KDistTable table = obtain_table(ds, cfg, base_c);
      const IndexArtifact art = make_cop_artifact(fit_cop(table, base_monotone), ds);
      std::printf("baseline params=%lld\n", static_cast<long long>(art.param_count()));
      if (!base_c.out.empty()) save_index(art, base_c.out);
      if (!base_metrics.empty()) {
        const EvalReport r =
            evaluate(art, ds, eval_ks(cfg), resolve_queries(cfg.eval.queries, ds.size()), base_c.threads);
        TrainConfig t = cfg.train;
        t.flags.restore_monotone = base_monotone;
        append_metrics_csv(base_metrics, {metrics_row(cfg, r, run_id("baseline", config_hash(cfg), 0), true, t)});
      }
    } else if (query->parsed()) {
      const RunConfig cfg = resolve_config(query_c);
      const Dataset ds = open_dataset(cfg);
      const IndexArtifact art = load_index(q_index_path);
      const RknnEngine engine(art, ds);
      QueryResult r;
      if (q_db) {
        if (*q_db < 0 || *q_db >= ds.size()) throw ConfigError("--query-index out of range");
        r = engine.query(ds.point(*q_db), q_k, *q_db);
      } else {
        if (q_point.empty()) throw ConfigError("--point or --query-index is required");
        r = engine.query(parse_point(q_point), q_k);
      }
      std::printf("result (%zu):", r.result.size());
      for (Index o : r.result) std::printf(" %lld", static_cast<long long>(o));
      std::printf("\nincluded=%lld candidates=%lld rejected=%lld refined_in=%lld refined_out=%lld css=%lld "
                  "wall_ms=%.3f\n",
                  static_cast<long long>(r.stats.included), static_cast<long long>(r.stats.candidates),
                  static_cast<long long>(r.stats.rejected), static_cast<long long>(r.stats.refined_in),
                  static_cast<long long>(r.stats.refined_out), static_cast<long long>(r.css), r.wall_ms);
    } else if (eval->parsed()) {
      const RunConfig cfg = resolve_config(eval_c);
      const Dataset ds = open_dataset(cfg);
      const IndexArtifact art = load_index(e_index);
      RunConfig run = cfg;
      run.dataset.k_max = art.k_max;
      const EvalReport r =
          evaluate(art, ds, eval_ks(run), resolve_queries(cfg.eval.queries, ds.size()), eval_c.threads);
      print_report(r);
      if (!e_metrics.empty()) {
        TrainConfig t = cfg.train;
        if (!art.is_baseline()) {
          t.aggregation = art.learned().bounds.mode;
          t.flags = art.learned().bounds.flags;
        } else {
          t.flags.restore_monotone = art.baseline().restore_monotone;
        }
        append_metrics_csv(e_metrics, {metrics_row(run, r, run_id("eval", art.fingerprint, t.seed),
                                                   art.is_baseline(), t)});
      }
    } else if (ablate->parsed()) {
      const RunConfig cfg = resolve_config(ablate_c);
      const Dataset ds = open_dataset(cfg);
      const KDistTable table = obtain_table(ds, cfg, ablate_c);
      const auto rows =
          ablation_grid(ds, table, cfg.train, eval_ks(cfg), resolve_queries(cfg.eval.queries, ds.size()));
      std::vector<MetricsRow> out;
      std::printf("%-6s %-10s %-12s %-8s\n", "config", "size", "mean_css", "max_css");
      for (const auto& row : rows) {
        std::printf("%-6s %-10lld %-12.6g %-8lld\n", row.label().c_str(),
                    static_cast<long long>(row.report.param_count), row.report.mean_css,
                    static_cast<long long>(row.report.max_css));
        TrainConfig t = cfg.train;
        t.aggregation = row.mode;
        t.flags = row.flags;
        if (!row.sample_weights) {
          t.iterations = 1;
          t.weight_source = WeightSource::Uniform;
        }
        out.push_back(metrics_row(cfg, row.report, run_id("ablate-" + row.label(), config_hash(cfg), t.seed),
                                  false, t));
      }
      if (!ablate_c.out.empty()) append_metrics_csv(ablate_c.out, out);
    } else if (search->parsed()) {
      RunConfig cfg = resolve_config(search_c);
      if (s_trials) cfg.trials = *s_trials;
      const Dataset ds = open_dataset(cfg);
      const KDistTable table = obtain_table(ds, cfg, search_c);
      const auto ks = eval_ks(cfg);
      const auto queries = resolve_queries(cfg.eval.queries, ds.size());
      const auto trials = random_search(ds, table, cfg.search, cfg.train, cfg.trials, cfg.train.seed, ks, queries);
      std::vector<MetricsRow> out;
      for (const auto& t : trials) {
        if (!t.ok()) {
          std::printf("trial %d failed: %s\n", t.trial, t.error.c_str());
          continue;
        }
        std::printf("trial %-3d %-60s params=%-9lld mean_css=%.6g\n", t.trial, describe(t.config.model).c_str(),
                    static_cast<long long>(t.report.param_count), t.report.mean_css);
        RunConfig trial_cfg = cfg;
        trial_cfg.train = t.config;
        out.push_back(metrics_row(trial_cfg, t.report,
                                  run_id("search-t" + std::to_string(t.trial), config_hash(cfg), cfg.train.seed),
                                  false, t.config));
      }
      if (s_baseline) {
        const IndexArtifact art = make_cop_artifact(fit_cop(table), ds);
        const EvalReport r = evaluate(art, ds, ks, queries, search_c.threads);
        std::printf("baseline params=%lld mean_css=%.6g\n", static_cast<long long>(r.param_count), r.mean_css);
        TrainConfig t = cfg.train;
        t.flags.restore_monotone = false;
        out.push_back(metrics_row(cfg, r, run_id("baseline", config_hash(cfg), 0), true, t));
      }
      if (!search_c.out.empty()) append_metrics_csv(search_c.out, out);
    } else if (sky->parsed()) {
      const auto rows = read_metrics_csv(sky_metrics);
      std::vector<SkylinePoint> pts;
      for (const auto& r : rows) pts.push_back({r.param_count, r.mean_css});
      std::printf("%s\n", kMetricsColumns);
      for (std::size_t i : skyline(pts)) std::printf("%s\n", to_csv_line(rows[i]).c_str());
      if (!sky_c.out.empty()) {
        std::ofstream svg(sky_c.out);
        if (!svg) throw IoError("cannot open " + sky_c.out);
        svg << skyline_svg(rows);
      }
    } else if (synth->parsed()) {
      const std::uint64_t seed = synth_c.seed.value_or(0);
      SyntheticSpec spec;
      if (s_kind == "blobs") {
        spec = blobs_spec(s_n, s_blobs, seed);
      } else if (s_kind == "single-blob") {
        spec = single_blob_spec(s_n);
      } else if (s_kind == "two-blob") {
        spec = two_blob_spec(s_n);
      } else if (s_kind == "road") {
        spec = road_network_spec(s_n, seed);
      } else {
        throw ConfigError("unknown synthetic kind '" + s_kind + "'");
      }
      if (synth_c.out.empty()) throw ConfigError("--out is required");
      const Dataset ds = make_synthetic(spec, seed);
      write_points(ds, synth_c.out, synth_c.format.empty() ? "road" : synth_c.format);
      std::printf("wrote %lld points to %s\n", static_cast<long long>(ds.size()), synth_c.out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
