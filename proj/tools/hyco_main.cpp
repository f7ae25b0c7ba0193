// hyco: one executable exposing the library. Subcommands: delta (Gromov
// hyperbolicity of a metric sample), capacity (Euclidean vs hyperbolic radius
// sweep), hcn train / hcn predict (cognitive network), align (soft-prompt
// alignment against the toy sequence model), metrics (multi-label report),
// synth (synthetic feature/label generator).
//
// Exit codes: 0 success; 1 usage or unclassified error; 2 file I/O;
// 3 schema, metric, or input validation; 4 resource cap; 5 divergence.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyco/alignment.hpp"
#include "hyco/capacity.hpp"
#include "hyco/core.hpp"
#include "hyco/hcn.hpp"
#include "hyco/hyperbolicity.hpp"
#include "hyco/io.hpp"
#include "hyco/metrics.hpp"
#include "hyco/poincare.hpp"
#include "hyco/taxonomy.hpp"

namespace {

using nlohmann::ordered_json;
namespace io = hyco::io;

io::RunManifest start_manifest(const std::string& subcommand, uint64_t seed) {
  io::RunManifest m;
  m.subcommand = subcommand;
  m.seed = seed;
  m.started_at = io::utc_timestamp();
  return m;
}

void finish_and_write(io::RunManifest& m, ordered_json report, const std::string& out_path) {
  m.finished_at = io::utc_timestamp();
  io::write_json_file(out_path, io::wrap_report(m, std::move(report)));
}

nlohmann::json parse_json_file(const std::string& path) {
  const std::string text = io::read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw hyco::schema_error(path + ": " + e.what());
  }
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

int parse_nonneg_int(std::string_view raw, const char* what) {
  const std::string_view t = io::detail::trim(raw);
  int v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || v < 0)
    throw hyco::schema_error(std::string(what) + ": bad value '" + std::string(raw) + "'");
  return v;
}

/// Depth list syntax: "A..B" (inclusive range), a single depth, or a
/// comma-separated list.
std::vector<int> parse_depths(const std::string& s) {
  std::vector<int> out;
  const size_t dots = s.find("..");
  if (dots != std::string::npos) {
    const int a = parse_nonneg_int(std::string_view(s).substr(0, dots), "--depths");
    const int b = parse_nonneg_int(std::string_view(s).substr(dots + 2), "--depths");
    if (b < a) throw hyco::schema_error("--depths: empty range '" + s + "'");
    for (int k = a; k <= b; ++k) out.push_back(k);
    return out;
  }
  std::string_view sv(s);
  size_t pos = 0;
  while (true) {
    const size_t comma = sv.find(',', pos);
    out.push_back(parse_nonneg_int(
        sv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos),
        "--depths"));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

/// Accepts both a raw checkpoint ({config, params}) and the wrapped form this
/// tool writes ({manifest, report: {config, params, ...}}).
std::pair<hyco::hcn::HcnConfig, hyco::hcn::HcnModel> load_checkpoint(const std::string& path) {
  nlohmann::json doc = parse_json_file(path);
  if (doc.is_object() && doc.contains("manifest") && doc.contains("report"))
    return hyco::hcn::model_from_json(doc["report"]);
  return hyco::hcn::model_from_json(doc);
}

std::string row_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%05d", i);
  return buf;
}

hyco::Vec mat_row(const hyco::Mat& m, int i) {
  hyco::Vec v(m.cols);
  for (int j = 0; j < m.cols; ++j) v[j] = m(i, j);
  return v;
}

ordered_json params_json(const std::vector<std::pair<std::string, hyco::Mat>>& params) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, mat] : params)
    j[name] = {{"rows", mat.rows}, {"cols", mat.cols}, {"data", mat.a}};
  return j;
}

// ---------------------------------------------------------------- delta ----

struct DeltaOpts {
  std::string input;
  std::string space = "euclidean";
  std::string mode = "sampled";
  long long quadruples = 200000;
  uint64_t seed = 42;
  double curvature = 1.0;
  std::string out;
};

void run_delta(const DeltaOpts& o) {
  auto m = start_manifest("delta", o.seed);
  m.config = {{"input", o.input},       {"space", o.space}, {"mode", o.mode},
              {"quadruples", o.quadruples}, {"seed", o.seed},   {"curvature", o.curvature}};
  m.add_input(o.input);

  hyco::hyperbolicity::MetricSample sample = [&] {
    if (ends_with(o.input, ".jsonl")) {
      auto set = io::read_embeddings_jsonl(o.input);
      if (o.space == "hyperbolic") {
        const hyco::poincare::BallConfig ball(o.curvature,
                                              static_cast<int>(set.points[0].size()));
        return hyco::hyperbolicity::metric_from_embeddings(set.points, ball);
      }
      return hyco::hyperbolicity::metric_from_embeddings(set.points);
    }
    return hyco::hyperbolicity::MetricSample::from_matrix(io::read_csv_matrix(o.input));
  }();

  const auto rep = o.mode == "exact"
                       ? hyco::hyperbolicity::gromov_delta_exact(sample)
                       : hyco::hyperbolicity::gromov_delta_sampled(sample, o.quadruples, o.seed);
  finish_and_write(m, io::delta_report_json(rep), o.out);
}

// ------------------------------------------------------------- capacity ----

struct CapacityOpts {
  int branching = 2;
  std::string depths = "1..8";
  int dim = 2;
  double epsilon = 0.5;
  int trials = 1;
  uint64_t seed = 0;
  std::string out;
  std::string csv_out;
};

void run_capacity(const CapacityOpts& o) {
  hyco::capacity::CapacityConfig cfg;
  cfg.branching_b = o.branching;
  cfg.depth_range = parse_depths(o.depths);
  cfg.dim_d = o.dim;
  cfg.epsilon_sep = o.epsilon;
  cfg.trials = o.trials;
  cfg.seed = o.seed;

  auto m = start_manifest("capacity", o.seed);
  m.config = {{"branching_b", cfg.branching_b}, {"depth_range", cfg.depth_range},
              {"dim_d", cfg.dim_d},             {"epsilon_sep", cfg.epsilon_sep},
              {"trials", cfg.trials},           {"seed", cfg.seed}};

  const auto rep = hyco::capacity::run_capacity(cfg);
  if (!o.csv_out.empty()) io::write_text_file(o.csv_out, hyco::capacity::report_to_csv(rep));
  finish_and_write(m, hyco::capacity::report_to_json(rep), o.out);
}

// ------------------------------------------------------------ hcn train ----

struct HcnTrainOpts {
  std::string features;
  std::string labels;
  int synthetic = 0;
  double noise = 0.1;
  std::string config;
  int steps = 200;
  std::optional<uint64_t> seed;
  std::string out;
  std::string trace_out;
};

void run_hcn_train(const HcnTrainOpts& o) {
  if (o.steps < 1) throw hyco::invalid_input_error("hcn train: --steps must be >= 1");
  const auto tax = hyco::taxonomy::builtin_taxonomy();

  hyco::hcn::HcnConfig cfg;
  nlohmann::json cfg_obj = nlohmann::json::object();
  if (!o.config.empty()) {
    cfg_obj = parse_json_file(o.config);
    cfg = io::hcn_config_from_json(cfg_obj, cfg);
  }
  if (o.seed) cfg.seed = *o.seed;

  const bool use_synth = o.synthetic > 0;
  if (use_synth && (!o.features.empty() || !o.labels.empty()))
    throw hyco::invalid_input_error("hcn train: use --synthetic or --features/--labels, not both");
  if (!use_synth && (o.features.empty() || o.labels.empty()))
    throw hyco::invalid_input_error("hcn train: need --features and --labels, or --synthetic N");

  hyco::Mat feats;
  std::vector<hyco::taxonomy::CognitiveLabel> labels;
  if (use_synth) {
    std::tie(feats, labels) =
        hyco::taxonomy::generate_synthetic(tax, o.synthetic, cfg.feature_dim, o.noise, cfg.seed);
  } else {
    feats = io::read_csv_matrix(o.features);
    auto ds = hyco::taxonomy::load_dataset(o.labels, tax);
    if (static_cast<int>(ds.size()) != feats.rows)
      throw hyco::schema_error("hcn train: " + std::to_string(feats.rows) + " feature rows but " +
                               std::to_string(ds.size()) + " labeled samples");
    labels.reserve(ds.size());
    for (const auto& s : ds) labels.push_back(s.label);
    if (cfg_obj.contains("feature_dim") && cfg.feature_dim != feats.cols)
      throw hyco::schema_error("hcn train: config feature_dim " +
                               std::to_string(cfg.feature_dim) + " != features width " +
                               std::to_string(feats.cols));
    cfg.feature_dim = feats.cols;
  }
  if (cfg_obj.contains("class_counts") && cfg.class_counts != tax.leaf_counts())
    throw hyco::schema_error("hcn train: config class_counts must match the builtin taxonomy");
  cfg.class_counts = tax.leaf_counts();
  cfg.validate();

  auto m = start_manifest("hcn train", cfg.seed);
  m.config = io::hcn_config_json(cfg);
  m.config["steps"] = o.steps;
  if (use_synth) {
    m.config["data"] = {{"synthetic", o.synthetic}, {"noise", o.noise}};
  } else {
    m.config["data"] = {{"features", o.features}, {"labels", o.labels}};
    m.add_input(o.features);
    m.add_input(o.labels);
  }
  if (!o.config.empty()) m.add_input(o.config);

  auto model = hyco::hcn::init_model(cfg);
  hyco::hcn::TrainState st(model, cfg.seed);
  const int n = feats.rows;
  const int B = cfg.batch_size;
  std::string trace = "step,l_task,l_hyp,total\n";
  double initial_total = 0.0, final_total = 0.0;
  for (int t = 0; t < o.steps; ++t) {
    hyco::hcn::Batch batch;
    batch.features = hyco::Mat(B, cfg.feature_dim);
    batch.labels.resize(B);
    for (int j = 0; j < B; ++j) {
      const int idx = static_cast<int>((static_cast<long long>(t) * B + j) % n);
      for (int c = 0; c < cfg.feature_dim; ++c) batch.features(j, c) = feats(idx, c);
      batch.labels[j] = labels[idx];
    }
    const auto losses = hyco::hcn::train_step(model, cfg, st, batch);
    trace += std::to_string(t + 1);
    trace += ',';
    trace += hyco::format_double(losses.l_task);
    trace += ',';
    trace += hyco::format_double(losses.l_hyp);
    trace += ',';
    trace += hyco::format_double(losses.total);
    trace += '\n';
    if (t == 0) initial_total = losses.total;
    final_total = losses.total;
  }
  io::write_text_file(o.trace_out.empty() ? o.out + ".trace.csv" : o.trace_out, trace);

  ordered_json report = hyco::hcn::model_to_json(cfg, model);
  report["training"] = {{"steps", o.steps},
                        {"samples", n},
                        {"initial_total", initial_total},
                        {"final_total", final_total}};
  finish_and_write(m, std::move(report), o.out);
}

// ---------------------------------------------------------- hcn predict ----

struct HcnPredictOpts {
  std::string model;
  std::string features;
  std::string labels;
  uint64_t seed = 0;
  std::string out;
};

void run_hcn_predict(const HcnPredictOpts& o) {
  auto m = start_manifest("hcn predict", o.seed);
  m.config = {{"model", o.model},
              {"features", o.features},
              {"labels", o.labels.empty() ? ordered_json(nullptr) : ordered_json(o.labels)}};
  m.add_input(o.model);
  m.add_input(o.features);
  if (!o.labels.empty()) m.add_input(o.labels);

  auto [cfg, model] = load_checkpoint(o.model);
  const auto tax = hyco::taxonomy::builtin_taxonomy();
  if (cfg.class_counts != tax.leaf_counts())
    throw hyco::schema_error("hcn predict: checkpoint class_counts do not match the taxonomy");
  const hyco::Mat feats = io::read_csv_matrix(o.features);
  if (feats.cols != cfg.feature_dim)
    throw hyco::schema_error("hcn predict: features width " + std::to_string(feats.cols) +
                             " != model feature_dim " + std::to_string(cfg.feature_dim));

  const bool with_gold = !o.labels.empty();
  std::vector<hyco::taxonomy::Sample> ds;
  if (with_gold) {
    ds = hyco::taxonomy::load_dataset(o.labels, tax);
    if (static_cast<int>(ds.size()) != feats.rows)
      throw hyco::schema_error("hcn predict: " + std::to_string(feats.rows) +
                               " feature rows but " + std::to_string(ds.size()) +
                               " labeled samples");
  }

  hyco::metrics::PredictionSet rows;
  rows.reserve(feats.rows);
  for (int i = 0; i < feats.rows; ++i) {
    hyco::metrics::PredictionRow row;
    row.id = with_gold ? ds[i].id : row_id(i);
    row.pred = hyco::hcn::predict(model, cfg, mat_row(feats, i));
    if (with_gold) row.gold = ds[i].label;
    rows.push_back(std::move(row));
  }
  io::write_predictions_jsonl(o.out, tax, rows, with_gold);
}

// ---------------------------------------------------------------- align ----

struct AlignOpts {
  std::string anchors;
  std::string from_hcn;
  std::string features;
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::string trace_out;
};

void run_align(const AlignOpts& o) {
  hyco::align::AlignConfig cfg;
  nlohmann::json cfg_obj = nlohmann::json::object();
  if (!o.config.empty()) {
    cfg_obj = parse_json_file(o.config);
    cfg = io::align_config_from_json(cfg_obj, cfg);
  }
  if (o.seed) cfg.seed = *o.seed;

  if (!o.anchors.empty() && !o.from_hcn.empty())
    throw hyco::invalid_input_error("align: use --anchors or --from-hcn, not both");
  if (o.anchors.empty() && o.from_hcn.empty())
    throw hyco::invalid_input_error("align: need --anchors or --from-hcn");

  auto m = start_manifest("align", cfg.seed);

  std::vector<hyco::Vec> anchors;
  if (!o.anchors.empty()) {
    m.add_input(o.anchors);
    const hyco::Mat a = io::read_csv_matrix(o.anchors);
    anchors.reserve(a.rows);
    for (int i = 0; i < a.rows; ++i) anchors.push_back(mat_row(a, i));
  } else {
    if (o.features.empty())
      throw hyco::invalid_input_error("align: --from-hcn requires --features");
    m.add_input(o.from_hcn);
    m.add_input(o.features);
    auto [hcfg, hmodel] = load_checkpoint(o.from_hcn);
    const hyco::Mat feats = io::read_csv_matrix(o.features);
    if (feats.cols != hcfg.feature_dim)
      throw hyco::schema_error("align: features width " + std::to_string(feats.cols) +
                               " != model feature_dim " + std::to_string(hcfg.feature_dim));
    anchors.reserve(feats.rows);
    for (int i = 0; i < feats.rows; ++i)
      anchors.push_back(hyco::hcn::forward(hmodel, hcfg, mat_row(feats, i)).v_cog);
  }
  if (!o.config.empty()) m.add_input(o.config);

  const int adim = static_cast<int>(anchors[0].size());
  if (cfg_obj.contains("anchor_dim") && cfg.proj.anchor_dim != adim)
    throw hyco::schema_error("align: config anchor_dim " + std::to_string(cfg.proj.anchor_dim) +
                             " != anchor width " + std::to_string(adim));
  cfg.proj.anchor_dim = adim;
  cfg.validate();
  if (cfg.vocab < 9)
    throw hyco::invalid_input_error("align: vocab must be >= 9 for the builtin corpus");

  m.seed = cfg.seed;
  m.config = io::align_config_json(cfg);
  m.config["data"] = o.anchors.empty()
                         ? ordered_json{{"from_hcn", o.from_hcn}, {"features", o.features}}
                         : ordered_json{{"anchors", o.anchors}};

  // Deterministic toy corpus: fixed context/target tokens, generation target
  // chosen by the sign of the anchor's first coordinate.
  std::vector<hyco::align::AlignSample> corpus;
  corpus.reserve(anchors.size());
  for (auto& v : anchors) {
    hyco::align::AlignSample s;
    s.context = {1, 2};
    s.target = {3};
    s.gen = v[0] >= 0.0 ? std::vector<int>{5, 6} : std::vector<int>{7, 8};
    s.v_cog = std::move(v);
    corpus.push_back(std::move(s));
  }

  auto model = hyco::align::init_toy_model(cfg);
  const auto trace = hyco::align::align_train(model, cfg, corpus);

  std::string csv = "step,sft,sct,total\n";
  for (const auto& r : trace) {
    csv += std::to_string(r.step);
    csv += ',';
    csv += hyco::format_double(r.sft);
    csv += ',';
    csv += hyco::format_double(r.sct);
    csv += ',';
    csv += hyco::format_double(r.total);
    csv += '\n';
  }
  io::write_text_file(o.trace_out.empty() ? o.out + ".trace.csv" : o.trace_out, csv);

  ordered_json report;
  report["steps"] = static_cast<long long>(trace.size());
  report["samples"] = static_cast<long long>(corpus.size());
  report["final"] = {{"sft", trace.back().sft},
                    {"sct", trace.back().sct},
                    {"total", trace.back().total}};
  report["params"] = params_json(model.params);
  finish_and_write(m, std::move(report), o.out);
}

// -------------------------------------------------------------- metrics ----

struct MetricsOpts {
  std::string pred;
  uint64_t seed = 0;
  std::string out;
};

void run_metrics(const MetricsOpts& o) {
  auto m = start_manifest("metrics", o.seed);
  m.config = {{"pred", o.pred}};
  m.add_input(o.pred);
  const auto tax = hyco::taxonomy::builtin_taxonomy();
  const auto preds = io::read_predictions_jsonl(o.pred, tax);
  const auto rep = hyco::metrics::evaluate(tax, preds);
  finish_and_write(m, io::metrics_report_json(tax, rep), o.out);
}

// ---------------------------------------------------------------- synth ----

struct SynthOpts {
  int n = 0;
  int feature_dim = 64;
  double noise = 0.1;
  uint64_t seed = 0;
  std::string out;
  std::string labels_out;
};

void run_synth(const SynthOpts& o) {
  const auto tax = hyco::taxonomy::builtin_taxonomy();
  auto [feats, labels] =
      hyco::taxonomy::generate_synthetic(tax, o.n, o.feature_dim, o.noise, o.seed);
  io::write_csv_matrix(o.out, feats);
  if (!o.labels_out.empty()) {
    std::vector<hyco::taxonomy::Sample> samples;
    samples.reserve(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
      hyco::taxonomy::Sample s;
      s.id = row_id(static_cast<int>(i));
      s.context = "";
      s.target = "synthetic";
      s.label = labels[i];
      samples.push_back(std::move(s));
    }
    hyco::taxonomy::save_dataset(o.labels_out, samples, tax);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperbolic cognitive modeling toolkit: hyperbolicity profiling, "
               "capacity experiments, cognitive-network training, alignment, and "
               "evaluation. Run '<subcommand> --help' for flags."};
  app.require_subcommand(0, 1);

  DeltaOpts d;
  auto* delta = app.add_subcommand("delta", "Gromov delta-hyperbolicity of a metric sample");
  delta->add_option("--input", d.input,
                    "CSV distance matrix, or JSONL embeddings when the path ends in .jsonl")
      ->required();
  delta->add_option("--space", d.space, "Metric for embeddings input: euclidean|hyperbolic")
      ->check(CLI::IsMember({"euclidean", "hyperbolic"}))
      ->capture_default_str();
  delta->add_option("--mode", d.mode, "exact (all quadruples) or sampled")
      ->check(CLI::IsMember({"exact", "sampled"}))
      ->capture_default_str();
  delta->add_option("--quadruples", d.quadruples, "Sampled mode: number of random quadruples")
      ->capture_default_str();
  delta->add_option("--seed", d.seed, "Sampled mode: RNG seed")->capture_default_str();
  delta->add_option("--curvature", d.curvature, "Ball curvature c for hyperbolic embeddings")
      ->capture_default_str();
  delta->add_option("--out", d.out, "Output JSON report path")->required();
  delta->callback([&d] { run_delta(d); });

  CapacityOpts c;
  auto* capacity =
      app.add_subcommand("capacity", "Euclidean vs hyperbolic packing-radius sweep over tree depth");
  capacity->add_option("--branching", c.branching, "Tree branching factor b")
      ->capture_default_str();
  capacity->add_option("--depths", c.depths, "Depths to sweep: 'A..B', a single k, or 'k1,k2,...'")
      ->capture_default_str();
  capacity->add_option("--dim", c.dim, "Euclidean embedding dimension d")->capture_default_str();
  capacity->add_option("--epsilon", c.epsilon, "Required pairwise separation")
      ->capture_default_str();
  capacity->add_option("--trials", c.trials, "Independent repulsion trials per depth (min kept)")
      ->capture_default_str();
  capacity->add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  capacity->add_option("--out", c.out, "Output JSON report path")->required();
  capacity->add_option("--csv-out", c.csv_out, "Optional plot-ready CSV path");
  capacity->callback([&c] { run_capacity(c); });

  auto* hcn = app.add_subcommand("hcn", "Cognitive network: train or predict");
  hcn->require_subcommand(1);

  HcnTrainOpts ht;
  auto* train = hcn->add_subcommand("train", "Train the cognitive network");
  train->add_option("--features", ht.features, "Feature matrix CSV, one row per sample");
  train->add_option("--labels", ht.labels, "Dataset JSONL with the four gold label fields");
  train->add_option("--synthetic", ht.synthetic,
                    "Generate N synthetic samples instead of reading files");
  train->add_option("--noise", ht.noise, "Synthetic feature noise level")->capture_default_str();
  train->add_option("--config", ht.config, "JSON file overriding network defaults");
  train->add_option("--steps", ht.steps, "Optimization steps")->capture_default_str();
  train->add_option("--seed", ht.seed, "Overrides the config seed");
  train->add_option("--out", ht.out, "Checkpoint JSON path")->required();
  train->add_option("--trace-out", ht.trace_out,
                    "Loss trace CSV path (default: <out>.trace.csv)");
  train->callback([&ht] { run_hcn_train(ht); });

  HcnPredictOpts hp;
  auto* predict = hcn->add_subcommand("predict", "Predict labels with a trained checkpoint");
  predict->add_option("--model", hp.model, "Checkpoint JSON (raw or as written by hcn train)")
      ->required();
  predict->add_option("--features", hp.features, "Feature matrix CSV")->required();
  predict->add_option("--labels", hp.labels,
                      "Optional dataset JSONL; supplies row ids and gold labels");
  predict->add_option("--seed", hp.seed, "Recorded in the manifest; prediction is deterministic")
      ->capture_default_str();
  predict->add_option("--out", hp.out, "Predictions JSONL path")->required();
  predict->callback([&hp] { run_hcn_predict(hp); });

  AlignOpts al;
  auto* align = app.add_subcommand(
      "align", "Train the soft-prompt projector against the toy sequence model");
  align->add_option("--anchors", al.anchors, "Anchor vectors CSV, one row per sample");
  align->add_option("--from-hcn", al.from_hcn,
                    "Derive anchors from a trained checkpoint (requires --features)");
  align->add_option("--features", al.features, "Feature matrix CSV for --from-hcn");
  align->add_option("--config", al.config, "JSON file overriding alignment defaults");
  align->add_option("--seed", al.seed, "Overrides the config seed");
  align->add_option("--out", al.out, "Summary JSON path (trained model + final losses)")
      ->required();
  align->add_option("--trace-out", al.trace_out,
                    "Loss trace CSV path (default: <out>.trace.csv)");
  align->callback([&al] { run_align(al); });

  MetricsOpts me;
  auto* metrics = app.add_subcommand("metrics", "Evaluate a predictions file");
  metrics->add_option("--pred", me.pred, "Predictions JSONL with pred and gold labels")
      ->required();
  metrics->add_option("--seed", me.seed, "Recorded in the manifest; evaluation is deterministic")
      ->capture_default_str();
  metrics->add_option("--out", me.out, "Output JSON report path")->required();
  metrics->callback([&me] { run_metrics(me); });

  SynthOpts sy;
  auto* synth = app.add_subcommand("synth", "Generate synthetic features and labels");
  synth->add_option("--n", sy.n, "Number of samples")->required();
  synth->add_option("--feature-dim", sy.feature_dim, "Feature dimension (>= 8)")
      ->capture_default_str();
  synth->add_option("--noise", sy.noise, "Feature noise level")->capture_default_str();
  synth->add_option("--seed", sy.seed, "RNG seed")->capture_default_str();
  synth->add_option("--out", sy.out, "Feature matrix CSV path")->required();
  synth->add_option("--labels-out", sy.labels_out, "Optional dataset JSONL path");
  synth->callback([&sy] { run_synth(sy); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 1;
  } catch (const hyco::io_error& e) {
    std::fprintf(stderr, "hyco: %s\n", e.what());
    return 2;
  } catch (const hyco::schema_error& e) {
    std::fprintf(stderr, "hyco: %s\n", e.what());
    return 3;
  } catch (const hyco::invalid_metric_error& e) {
    std::fprintf(stderr, "hyco: %s\n", e.what());
    return 3;
  } catch (const hyco::invalid_input_error& e) {
    std::fprintf(stderr, "hyco: %s\n", e.what());
    return 3;
  } catch (const hyco::out_of_manifold_error& e) {
    std::fprintf(stderr, "hyco: %s\n", e.what());
    return 3;
  } catch (const hyco::too_large_error& e) {
    std::fprintf(stderr, "hyco: %s\n", e.what());
    return 4;
  } catch (const hyco::divergence_error& e) {
    std::fprintf(stderr, "hyco: %s\n", e.what());
    return 5;
  } catch (const hyco::error& e) {
    std::fprintf(stderr, "hyco: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "hyco: %s\n", e.what());
    return 1;
  }

  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 0;
  }
  return 0;
}
