#pragma once

// File plumbing shared by the command-line tool: text and numeric-CSV
// helpers, JSONL readers/writers for embeddings and predictions, the JSON
// shapes of the delta/metrics reports and of training configs, FNV-1a input
// digests, and the run manifest embedded in every JSON output.

#include <charconv>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hyco/alignment.hpp"
#include "hyco/core.hpp"
#include "hyco/hcn.hpp"
#include "hyco/hyperbolicity.hpp"
#include "hyco/metrics.hpp"
#include "hyco/taxonomy.hpp"

namespace hyco::io {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw io_error("read failed for " + path);
  return std::move(buf).str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw io_error("write failed for " + path);
}

/// 64-bit FNV-1a of the raw bytes, as 16 lowercase hex digits.
inline std::string fnv1a64_hex(std::string_view bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[h & 0xf];
    h >>= 4;
  }
  return std::string(buf, 16);
}

inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool looks_numeric(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

/// Parse a numeric CSV into a dense matrix. Rows must all have the same
/// width; one leading header row is tolerated (detected by a non-numeric
/// first cell) so that CSV files this tool writes read back through the same
/// parser. Errors name the offending 1-based row.
inline Mat parse_csv_matrix(const std::string& text) {
  std::vector<Vec> rows;
  size_t width = 0;
  int row_no = 0;
  size_t pos = 0;
  bool first_content_row = true;
  while (pos <= text.size()) {
    const size_t eol = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (eol == std::string::npos ? text.size() : eol) - pos);
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
    ++row_no;
    if (detail::trim(line).empty()) continue;

    Vec row;
    size_t cell_start = 0;
    bool header = false;
    while (true) {
      const size_t comma = line.find(',', cell_start);
      std::string_view cell = detail::trim(
          line.substr(cell_start, comma == std::string_view::npos ? std::string_view::npos
                                                                  : comma - cell_start));
      if (first_content_row && !detail::looks_numeric(cell)) {
        header = true;
        break;
      }
      if (cell.empty()) throw schema_error("csv row " + std::to_string(row_no) + ": empty cell");
      try {
        row.push_back(parse_double(cell));
      } catch (const schema_error& e) {
        throw schema_error("csv row " + std::to_string(row_no) + ": " + e.what());
      }
      if (comma == std::string_view::npos) break;
      cell_start = comma + 1;
    }
    first_content_row = false;
    if (header) continue;

    if (rows.empty()) {
      width = row.size();
    } else if (row.size() != width) {
      throw schema_error("csv row " + std::to_string(row_no) + ": expected " +
                         std::to_string(width) + " cells, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw schema_error("csv: no numeric rows");
  Mat m(static_cast<int>(rows.size()), static_cast<int>(width));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < width; ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return m;
}

inline Mat read_csv_matrix(const std::string& path) {
  try {
    return parse_csv_matrix(read_text_file(path));
  } catch (const schema_error& e) {
    throw schema_error(path + ": " + e.what());
  }
}

inline std::string format_csv_matrix(const Mat& m) {
  std::string out;
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_csv_matrix(const std::string& path, const Mat& m) {
  write_text_file(path, format_csv_matrix(m));
}

struct EmbeddingSet {
  std::vector<std::string> ids;
  std::vector<Vec> points;
};

/// JSONL embeddings: one {"id": string, "vec": [real, ...]} object per line.
/// All vectors must share one dimension and be finite.
inline EmbeddingSet read_embeddings_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  EmbeddingSet set;
  std::string line;
  int line_no = 0;
  auto reject = [&](const std::string& why) {
    throw schema_error(path + " line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      reject("malformed JSON");
    }
    if (!obj.is_object()) reject("not a JSON object");
    auto id_it = obj.find("id");
    if (id_it == obj.end() || !id_it->is_string()) reject("missing string field 'id'");
    auto vec_it = obj.find("vec");
    if (vec_it == obj.end() || !vec_it->is_array() || vec_it->empty())
      reject("missing nonempty array field 'vec'");
    Vec v;
    v.reserve(vec_it->size());
    for (const auto& x : *vec_it) {
      if (!x.is_number()) reject("field 'vec' must contain only numbers");
      v.push_back(x.get<double>());
    }
    if (!all_finite(v)) reject("field 'vec' contains a non-finite value");
    if (!set.points.empty() && v.size() != set.points[0].size())
      reject("dimension mismatch: expected " + std::to_string(set.points[0].size()) + ", got " +
             std::to_string(v.size()));
    set.ids.push_back(id_it->get<std::string>());
    set.points.push_back(std::move(v));
  }
  if (set.points.empty()) throw schema_error(path + ": no embeddings");
  return set;
}

namespace detail {

inline taxonomy::CognitiveLabel label_from_json(const taxonomy::Taxonomy& tax,
                                                const nlohmann::json& obj,
                                                const std::string& where) {
  if (!obj.is_object()) throw schema_error(where + ": label block must be an object");
  taxonomy::CognitiveLabel y;
  for (int k = 0; k < 4; ++k) {
    const auto& spec = tax.dim(k);
    auto it = obj.find(spec.name);
    if (it == obj.end() || !it->is_string())
      throw schema_error(where + ": missing string field '" + spec.name + "'");
    const int idx = spec.leaf_index(it->get<std::string>());
    if (idx < 0)
      throw schema_error(where + ": field '" + spec.name + "': unknown label '" +
                         it->get<std::string>() + "'");
    y[k] = idx;
  }
  return y;
}

inline nlohmann::ordered_json label_to_json(const taxonomy::Taxonomy& tax,
                                            const taxonomy::CognitiveLabel& y) {
  nlohmann::ordered_json obj;
  for (int k = 0; k < 4; ++k) obj[tax.dim(k).name] = tax.dim(k).leaves.at(y[k]);
  return obj;
}

}  // namespace detail

/// Predictions JSONL: {"id": ..., "pred": {4 label fields}, "gold": {4 label
/// fields}} per line, labels as leaf-name strings.
inline metrics::PredictionSet read_predictions_jsonl(const std::string& path,
                                                     const taxonomy::Taxonomy& tax) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  metrics::PredictionSet rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = path + " line " + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw schema_error(where + ": malformed JSON");
    }
    if (!obj.is_object()) throw schema_error(where + ": not a JSON object");
    metrics::PredictionRow row;
    auto id_it = obj.find("id");
    if (id_it == obj.end() || !id_it->is_string())
      throw schema_error(where + ": missing string field 'id'");
    row.id = id_it->get<std::string>();
    auto pred_it = obj.find("pred");
    if (pred_it == obj.end()) throw schema_error(where + ": missing field 'pred'");
    row.pred = detail::label_from_json(tax, *pred_it, where + " 'pred'");
    auto gold_it = obj.find("gold");
    if (gold_it == obj.end()) throw schema_error(where + ": missing field 'gold'");
    row.gold = detail::label_from_json(tax, *gold_it, where + " 'gold'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw schema_error(path + ": no prediction rows");
  return rows;
}

/// Inverse of read_predictions_jsonl. When with_gold is false the gold block
/// is omitted entirely (the rows only carry predictions).
inline void write_predictions_jsonl(const std::string& path, const taxonomy::Taxonomy& tax,
                                    const metrics::PredictionSet& rows, bool with_gold) {
  std::string out;
  for (const auto& row : rows) {
    nlohmann::ordered_json obj;
    obj["id"] = row.id;
    obj["pred"] = detail::label_to_json(tax, row.pred);
    if (with_gold) obj["gold"] = detail::label_to_json(tax, row.gold);
    out += obj.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

inline nlohmann::ordered_json delta_report_json(const hyperbolicity::DeltaReport& r) {
  nlohmann::ordered_json j;
  j["delta"] = r.delta;
  j["diameter"] = r.diameter;
  j["relative_delta"] = r.relative_delta;
  j["mode"] = r.mode;
  j["quadruples_evaluated"] = r.quadruples_evaluated;
  if (r.seed)
    j["seed"] = *r.seed;
  else
    j["seed"] = nullptr;
  return j;
}

/// Report shape mirrors the evaluation table column names: per-dimension ACC
/// and macro F1, prefix-match accuracy PMA@1..4, and hamming_loss.
inline nlohmann::ordered_json metrics_report_json(const taxonomy::Taxonomy& tax,
                                                  const metrics::MetricsReport& r) {
  nlohmann::ordered_json per_dim;
  for (int k = 0; k < 4; ++k) {
    per_dim[tax.dim(k).name] = {{"ACC", r.per_dimension[k].acc},
                                {"F1", r.per_dimension[k].macro_f1}};
  }
  nlohmann::ordered_json j;
  j["per_dimension"] = std::move(per_dim);
  for (int k = 0; k < 4; ++k) j["PMA@" + std::to_string(k + 1)] = r.pma[k];
  j["hamming_loss"] = r.hamming_loss;
  return j;
}

namespace detail {

template <typename T>
inline void take(const nlohmann::json& obj, const char* field, T& slot, bool& seen) {
  auto it = obj.find(field);
  if (it == obj.end()) return;
  try {
    slot = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw schema_error(std::string("config field '") + field + "' has the wrong type");
  }
  seen = true;
}

inline void reject_unknown(const nlohmann::json& obj, const std::vector<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : known) ok = ok || k == it.key();
    if (!ok) throw schema_error("config: unknown field '" + it.key() + "'");
  }
}

}  // namespace detail

/// Apply a partial JSON override onto a base config. Unknown fields are
/// schema errors; validation happens after the CLI finishes resolving.
inline hcn::HcnConfig hcn_config_from_json(const nlohmann::json& obj, hcn::HcnConfig base = {}) {
  if (!obj.is_object()) throw schema_error("config: root must be a JSON object");
  static const std::vector<std::string> known = {
      "feature_dim",    "hidden_dim",       "layers_N",      "heads_H",
      "dropout",        "class_counts",     "margin_m",      "lambda_hyper",
      "lambda_contrastive", "temperature_tau", "curvature_c", "learning_rate",
      "batch_size",     "seed"};
  detail::reject_unknown(obj, known);
  bool seen = false;
  detail::take(obj, "feature_dim", base.feature_dim, seen);
  detail::take(obj, "hidden_dim", base.hidden_dim, seen);
  detail::take(obj, "layers_N", base.layers_N, seen);
  detail::take(obj, "heads_H", base.heads_H, seen);
  detail::take(obj, "dropout", base.dropout, seen);
  detail::take(obj, "class_counts", base.class_counts, seen);
  detail::take(obj, "margin_m", base.margin_m, seen);
  detail::take(obj, "lambda_hyper", base.lambda_hyper, seen);
  detail::take(obj, "lambda_contrastive", base.lambda_contrastive, seen);
  detail::take(obj, "temperature_tau", base.temperature_tau, seen);
  detail::take(obj, "curvature_c", base.curvature_c, seen);
  detail::take(obj, "learning_rate", base.learning_rate, seen);
  detail::take(obj, "batch_size", base.batch_size, seen);
  detail::take(obj, "seed", base.seed, seen);
  return base;
}

inline nlohmann::ordered_json hcn_config_json(const hcn::HcnConfig& c) {
  return {{"feature_dim", c.feature_dim},
          {"hidden_dim", c.hidden_dim},
          {"layers_N", c.layers_N},
          {"heads_H", c.heads_H},
          {"dropout", c.dropout},
          {"class_counts", c.class_counts},
          {"margin_m", c.margin_m},
          {"lambda_hyper", c.lambda_hyper},
          {"lambda_contrastive", c.lambda_contrastive},
          {"temperature_tau", c.temperature_tau},
          {"curvature_c", c.curvature_c},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

/// Alignment run config: all projector fields plus the trainer fields.
inline align::AlignConfig align_config_from_json(const nlohmann::json& obj,
                                                 align::AlignConfig base = {}) {
  if (!obj.is_object()) throw schema_error("config: root must be a JSON object");
  static const std::vector<std::string> known = {
      "anchor_dim", "d_model",       "prompt_len_L", "scale_a", "lambda_sct", "cosine_eps",
      "vocab",      "epochs",        "learning_rate", "batch_size", "seed"};
  detail::reject_unknown(obj, known);
  bool seen = false;
  detail::take(obj, "anchor_dim", base.proj.anchor_dim, seen);
  detail::take(obj, "d_model", base.proj.d_model, seen);
  detail::take(obj, "prompt_len_L", base.proj.prompt_len_L, seen);
  detail::take(obj, "scale_a", base.proj.scale_a, seen);
  detail::take(obj, "lambda_sct", base.proj.lambda_sct, seen);
  detail::take(obj, "cosine_eps", base.proj.cosine_eps, seen);
  detail::take(obj, "vocab", base.vocab, seen);
  detail::take(obj, "epochs", base.epochs, seen);
  detail::take(obj, "learning_rate", base.learning_rate, seen);
  detail::take(obj, "batch_size", base.batch_size, seen);
  detail::take(obj, "seed", base.seed, seen);
  return base;
}

inline nlohmann::ordered_json align_config_json(const align::AlignConfig& c) {
  return {{"anchor_dim", c.proj.anchor_dim},
          {"d_model", c.proj.d_model},
          {"prompt_len_L", c.proj.prompt_len_L},
          {"scale_a", c.proj.scale_a},
          {"lambda_sct", c.proj.lambda_sct},
          {"cosine_eps", c.proj.cosine_eps},
          {"vocab", c.vocab},
          {"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"seed", c.seed}};
}

/// Traceability block embedded in every JSON output. Reruns with identical
/// inputs differ only in the two timestamps.
struct RunManifest {
  std::string subcommand;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::vector<std::pair<std::string, std::string>> input_digests;  // path -> fnv1a64 hex
  std::string started_at;
  std::string finished_at;

  void add_input(const std::string& path) {
    input_digests.emplace_back(path, fnv1a64_hex(read_text_file(path)));
  }
};

inline nlohmann::ordered_json manifest_json(const RunManifest& m) {
  nlohmann::ordered_json digests = nlohmann::ordered_json::object();
  for (const auto& [path, hex] : m.input_digests) digests[path] = hex;
  nlohmann::ordered_json j;
  j["subcommand"] = m.subcommand;
  j["tool_version"] = m.tool_version;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["input_digests"] = std::move(digests);
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  return j;
}

inline nlohmann::ordered_json wrap_report(const RunManifest& m, nlohmann::ordered_json report) {
  nlohmann::ordered_json j;
  j["manifest"] = manifest_json(m);
  j["report"] = std::move(report);
  return j;
}

/// Pretty JSON with a trailing newline, the one serialization the tool uses
/// for every .json output file.
inline void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace hyco::io
