#pragma once

// Desk-scale hyperbolic cognitive network: four per-dimension projections
// into a shared Poincare ball, cross-dimensional attention over the tangent
// representatives, a pooled cognitive anchor, one classification head per
// dimension, and the composite objective task + lambda_hyper * contrastive.
//
// All learnable parameters are flat matrices; manifold points appear only
// as activations, so a standard adaptive optimizer applies.

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hyco/autodiff.hpp"
#include "hyco/core.hpp"
#include "hyco/poincare.hpp"
#include "hyco/taxonomy.hpp"

namespace hyco::hcn {

inline constexpr std::array<const char*, 4> kDimNames = {"emotion", "thinking", "stance",
                                                         "intent"};

struct HcnConfig {
  // Desk-scale defaults; the full-scale encoder pairing is 4096/512.
  int feature_dim = 64;
  int hidden_dim = 32;
  int layers_N = 4;
  int heads_H = 8;
  double dropout = 0.1;
  std::array<int, 4> class_counts = {9, 8, 3, 7};
  double margin_m = 1.0;
  double lambda_hyper = 0.1;
  double lambda_contrastive = 0.1;  // optional InfoNCE mode only
  double temperature_tau = 0.5;     // optional InfoNCE mode only
  double curvature_c = 1.0;
  double learning_rate = 1e-3;
  int batch_size = 32;
  uint64_t seed = 0;

  void validate() const {
    if (feature_dim < 1 || hidden_dim < 1) throw invalid_input_error("HcnConfig: bad dims");
    if (layers_N < 1 || heads_H < 1) throw invalid_input_error("HcnConfig: bad depth");
    if (hidden_dim % heads_H != 0)
      throw invalid_input_error("HcnConfig: hidden_dim must be divisible by heads_H");
    if (dropout < 0.0 || dropout >= 1.0)
      throw invalid_input_error("HcnConfig: dropout must be in [0,1)");
    for (int c : class_counts)
      if (c < 1) throw invalid_input_error("HcnConfig: class counts must be positive");
    if (!(margin_m > 0.0)) throw invalid_input_error("HcnConfig: margin must be positive");
    if (lambda_hyper < 0.0 || lambda_contrastive < 0.0)
      throw invalid_input_error("HcnConfig: negative loss weight");
    if (!(temperature_tau > 0.0)) throw invalid_input_error("HcnConfig: tau must be positive");
    if (!(curvature_c > 0.0)) throw invalid_input_error("HcnConfig: curvature must be positive");
    if (!(learning_rate > 0.0)) throw invalid_input_error("HcnConfig: bad learning rate");
    if (batch_size < 1) throw invalid_input_error("HcnConfig: bad batch size");
  }

  poincare::BallConfig ball() const { return poincare::BallConfig(curvature_c, hidden_dim); }
};

/// Named parameter store; iteration order is creation order and is the
/// contract for optimizer state and checkpoints.
struct HcnModel {
  std::vector<std::pair<std::string, Mat>> params;

  Mat& at(const std::string& name) {
    for (auto& [n, m] : params)
      if (n == name) return m;
    throw invalid_input_error("HcnModel: unknown parameter " + name);
  }
  const Mat& at(const std::string& name) const {
    for (const auto& [n, m] : params)
      if (n == name) return m;
    throw invalid_input_error("HcnModel: unknown parameter " + name);
  }
  bool all_finite_params() const {
    for (const auto& [n, m] : params)
      if (!all_finite(m.a)) return false;
    return true;
  }
};

struct LossBreakdown {
  double l_task = 0.0;
  double l_hyp = 0.0;
  double total = 0.0;
};

struct Batch {
  Mat features;  // batch × feature_dim
  std::vector<taxonomy::CognitiveLabel> labels;
};

struct ForwardResult {
  std::array<Vec, 4> z;       // ball points, one per dimension
  Vec v_cog;                  // pooled tangent anchor
  std::array<Vec, 4> logits;  // per-dimension class scores
  std::vector<Mat> attention;  // row-stochastic maps, layers_N * heads_H entries
};

inline HcnModel init_model(const HcnConfig& cfg) {
  cfg.validate();
  HcnModel model;
  Rng rng(cfg.seed);
  auto add = [&](const std::string& name, int rows, int cols) {
    Mat m(rows, cols);
    for (auto& v : m.a) v = 0.02 * rng.normal();
    model.params.emplace_back(name, std::move(m));
  };
  for (const char* d : kDimNames) add(std::string("w_proj.") + d, cfg.feature_dim, cfg.hidden_dim);
  add("dim_embed", 4, cfg.hidden_dim);
  const int dh = cfg.hidden_dim / cfg.heads_H;
  for (int l = 0; l < cfg.layers_N; ++l) {
    const std::string b = "block" + std::to_string(l) + ".";
    for (int h = 0; h < cfg.heads_H; ++h) {
      const std::string hb = b + "head" + std::to_string(h) + ".";
      add(hb + "wq", cfg.hidden_dim, dh);
      add(hb + "wk", cfg.hidden_dim, dh);
      add(hb + "wv", cfg.hidden_dim, dh);
    }
    add(b + "attn_out", cfg.hidden_dim, cfg.hidden_dim);
    add(b + "ff_w1", cfg.hidden_dim, 2 * cfg.hidden_dim);
    add(b + "ff_b1", 1, 2 * cfg.hidden_dim);
    add(b + "ff_w2", 2 * cfg.hidden_dim, cfg.hidden_dim);
    add(b + "ff_b2", 1, cfg.hidden_dim);
  }
  for (int k = 0; k < 4; ++k) {
    const std::string hb = std::string("head.") + kDimNames[k] + ".";
    add(hb + "w1", cfg.hidden_dim, cfg.hidden_dim);
    add(hb + "b1", 1, cfg.hidden_dim);
    add(hb + "w2", cfg.hidden_dim, cfg.class_counts[k]);
    add(hb + "b2", 1, cfg.class_counts[k]);
  }
  return model;
}

namespace detail {

/// Leaf ids for every model parameter, aligned with model.params.
struct ParamIds {
  std::vector<int> ids;
  const HcnModel* model = nullptr;

  int at(const std::string& name) const {
    for (size_t i = 0; i < model->params.size(); ++i)
      if (model->params[i].first == name) return ids[i];
    throw invalid_input_error("ParamIds: unknown parameter " + name);
  }
};

inline ParamIds load_params(ad::Tape& t, const HcnModel& model) {
  ParamIds pm;
  pm.model = &model;
  for (const auto& [name, mat] : model.params) pm.ids.push_back(t.leaf(mat));
  return pm;
}

struct SampleGraph {
  std::array<int, 4> tangents;  // 1×hidden rows, pre exp-map
  int ball_rows = -1;           // 4×hidden, the z_k points
  int tokens_out = -1;          // 4×hidden after all blocks
  int v_cog = -1;               // 1×hidden
  std::array<int, 4> logits{};  // 1×class_counts[k]
};

inline int build_block(ad::Tape& t, const HcnConfig& cfg, const ParamIds& pm, int layer, int x,
                       bool train_mode, Rng* rng, std::vector<int>* attn_ids) {
  const int dh = cfg.hidden_dim / cfg.heads_H;
  const std::string b = "block" + std::to_string(layer) + ".";
  std::vector<int> head_outs;
  for (int h = 0; h < cfg.heads_H; ++h) {
    const std::string hb = b + "head" + std::to_string(h) + ".";
    const int q = t.matmul(x, pm.at(hb + "wq"));
    const int k = t.matmul(x, pm.at(hb + "wk"));
    const int v = t.matmul(x, pm.at(hb + "wv"));
    const int scores = t.scale(t.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(dh)));
    const int probs = t.softmax_rows(scores);
    if (attn_ids) attn_ids->push_back(probs);
    const int attended = train_mode && cfg.dropout > 0.0
                             ? t.dropout(probs, cfg.dropout, *rng)
                             : probs;
    head_outs.push_back(t.matmul(attended, v));
  }
  const int merged = t.matmul(t.concat_cols(head_outs), pm.at(b + "attn_out"));
  const int x1 = t.add(x, merged);
  const int f1 = t.tanh_op(t.add_broadcast_row(t.matmul(x1, pm.at(b + "ff_w1")), pm.at(b + "ff_b1")));
  const int f2 = t.add_broadcast_row(t.matmul(f1, pm.at(b + "ff_w2")), pm.at(b + "ff_b2"));
  return t.add(x1, f2);
}

inline SampleGraph build_sample(ad::Tape& t, const HcnConfig& cfg, const ParamIds& pm,
                                int features_leaf, bool train_mode, Rng* rng,
                                std::vector<int>* attn_ids) {
  SampleGraph g;
  const auto ball = cfg.ball();
  for (int k = 0; k < 4; ++k)
    g.tangents[k] = t.matmul(features_leaf, pm.at(std::string("w_proj.") + kDimNames[k]));
  const int tangent_rows =
      t.concat_rows({g.tangents[0], g.tangents[1], g.tangents[2], g.tangents[3]});
  g.ball_rows = t.exp_map_rows(tangent_rows, ball);
  const int back = t.log_map_rows(g.ball_rows, ball);
  int x = t.add(back, pm.at("dim_embed"));
  for (int l = 0; l < cfg.layers_N; ++l)
    x = build_block(t, cfg, pm, l, x, train_mode, rng, attn_ids);
  g.tokens_out = x;
  {
    Mat pool(1, 4);
    pool.fill(0.25);
    g.v_cog = t.matmul(t.leaf(std::move(pool)), x);
  }
  for (int k = 0; k < 4; ++k) {
    const std::string hb = std::string("head.") + kDimNames[k] + ".";
    const int tok = t.slice_rows(x, k, 1);
    const int hidden =
        t.tanh_op(t.add_broadcast_row(t.matmul(tok, pm.at(hb + "w1")), pm.at(hb + "b1")));
    g.logits[k] = t.add_broadcast_row(t.matmul(hidden, pm.at(hb + "w2")), pm.at(hb + "b2"));
  }
  return g;
}

/// Full training graph for a batch: mean task loss, the four-dimension
/// contrastive sum, and the weighted total that backward() is run on.
struct BatchGraph {
  int l_task = -1;
  int l_hyp = -1;  // -1 when the batch is too small to form pairs
  int total = -1;
};

inline BatchGraph build_batch(ad::Tape& t, const HcnConfig& cfg, const ParamIds& pm,
                              const Batch& batch, bool train_mode, Rng* rng) {
  const int bsz = batch.features.rows;
  if (bsz < 1 || batch.features.cols != cfg.feature_dim ||
      static_cast<int>(batch.labels.size()) != bsz)
    throw invalid_input_error("build_batch: malformed batch");
  const auto ball = cfg.ball();

  std::vector<SampleGraph> graphs;
  graphs.reserve(bsz);
  int task_sum = -1;
  for (int s = 0; s < bsz; ++s) {
    Mat f(1, cfg.feature_dim);
    for (int j = 0; j < cfg.feature_dim; ++j) f(0, j) = batch.features(s, j);
    const int leaf = t.leaf(std::move(f));
    auto g = build_sample(t, cfg, pm, leaf, train_mode, rng, nullptr);
    int acc = -1;
    for (int k = 0; k < 4; ++k) {
      const int ce = t.softmax_xent_sum(g.logits[k], {batch.labels[s][k]});
      acc = acc < 0 ? ce : t.add(acc, ce);
    }
    const int sample_loss = t.scale(acc, 0.25);
    task_sum = task_sum < 0 ? sample_loss : t.add(task_sum, sample_loss);
    graphs.push_back(g);
  }

  BatchGraph out;
  out.l_task = t.scale(task_sum, 1.0 / bsz);

  // Contrastive term: per dimension, the batch's tangent rows are mapped to
  // the ball and paired under that dimension's labels; the four terms sum.
  if (bsz >= 2) {
    for (int k = 0; k < 4; ++k) {
      std::vector<int> rows;
      std::vector<int> labels;
      for (int s = 0; s < bsz; ++s) {
        rows.push_back(graphs[s].tangents[k]);
        labels.push_back(batch.labels[s][k]);
      }
      const int zk = t.exp_map_rows(t.concat_rows(rows), ball);
      const int lk = t.hyp_pair_contrastive(zk, labels, cfg.margin_m, ball);
      out.l_hyp = out.l_hyp < 0 ? lk : t.add(out.l_hyp, lk);
    }
  }

  out.total = out.l_task;
  if (cfg.lambda_hyper > 0.0 && out.l_hyp >= 0)
    out.total = t.add(out.l_task, t.scale(out.l_hyp, cfg.lambda_hyper));
  return out;
}

}  // namespace detail

/// Inference pass on one feature vector. Dropout is never applied here, so
/// the result is a pure function of (model, cfg, features).
inline ForwardResult forward(const HcnModel& model, const HcnConfig& cfg, const Vec& features) {
  cfg.validate();
  if (static_cast<int>(features.size()) != cfg.feature_dim)
    throw invalid_input_error("forward: feature length mismatch");
  if (!all_finite(features)) throw invalid_input_error("forward: non-finite features");
  ad::Tape t;
  auto pm = detail::load_params(t, model);
  Mat f(1, cfg.feature_dim);
  f.a = features;
  const int leaf = t.leaf(std::move(f));
  std::vector<int> attn_ids;
  auto g = detail::build_sample(t, cfg, pm, leaf, false, nullptr, &attn_ids);
  ForwardResult r;
  const Mat& Z = t.value(g.ball_rows);
  for (int k = 0; k < 4; ++k) r.z[k] = Vec(Z.row(k).begin(), Z.row(k).end());
  r.v_cog = t.value(g.v_cog).a;
  for (int k = 0; k < 4; ++k) r.logits[k] = t.value(g.logits[k]).a;
  for (int id : attn_ids) r.attention.push_back(t.value(id));
  return r;
}

/// Mean over the four dimensions of softmax cross-entropy.
inline double task_loss(const std::array<Vec, 4>& logits, const taxonomy::CognitiveLabel& y) {
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Vec& row = logits[k];
    if (y[k] < 0 || y[k] >= static_cast<int>(row.size()))
      throw invalid_input_error("task_loss: label out of range");
    double mx = -1e300;
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    total += std::log(z) + mx - row[y[k]];
  }
  return total / 4.0;
}

/// Eq.-1 style margin objective: mean over unordered pairs of squared
/// distance (matching labels) or squared hinge (differing labels).
inline double hyp_contrastive_loss(const std::vector<poincare::BallPoint>& points,
                                   const std::vector<int>& labels, double margin,
                                   const poincare::BallConfig& ball) {
  if (points.size() != labels.size() || points.size() < 2)
    throw invalid_input_error("hyp_contrastive_loss: need matched lists of length >= 2");
  const int n = static_cast<int>(points.size());
  double loss = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = poincare::poincare_distance(ball, points[i], points[j]);
      if (labels[i] == labels[j]) {
        loss += d * d;
      } else {
        const double h = std::max(0.0, margin - d);
        loss += h * h;
      }
    }
  return loss / (n * (n - 1) / 2.0);
}

/// Optional temperature-based alternative (not used by train_step): mean
/// over anchors with at least one positive of -log of the softmax mass the
/// anchor assigns to its positives under similarity -d/tau.
inline double hyp_infonce_loss(const std::vector<poincare::BallPoint>& points,
                               const std::vector<int>& labels, double tau,
                               const poincare::BallConfig& ball) {
  if (points.size() != labels.size() || points.size() < 2)
    throw invalid_input_error("hyp_infonce_loss: need matched lists of length >= 2");
  if (!(tau > 0.0)) throw invalid_input_error("hyp_infonce_loss: tau must be positive");
  const int n = static_cast<int>(points.size());
  double loss = 0.0;
  int anchors = 0;
  for (int i = 0; i < n; ++i) {
    double denom = 0.0, pos = 0.0;
    bool has_pos = false;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double w =
          std::exp(-poincare::poincare_distance(ball, points[i], points[j]) / tau);
      denom += w;
      if (labels[i] == labels[j]) {
        pos += w;
        has_pos = true;
      }
    }
    if (!has_pos) continue;
    loss += -std::log(pos / denom);
    ++anchors;
  }
  if (anchors == 0) return 0.0;
  return loss / anchors;
}

/// Adam state plus the dropout stream; aligned with model.params order.
struct TrainState {
  long long step = 0;
  std::vector<Mat> m1, m2;
  Rng rng;

  TrainState(const HcnModel& model, uint64_t seed) : rng(seed ^ 0x5bd1e995u) {
    for (const auto& [name, mat] : model.params) {
      m1.emplace_back(mat.rows, mat.cols);
      m2.emplace_back(mat.rows, mat.cols);
    }
  }
};

/// One optimization step on a batch. Returns the pre-update losses.
inline LossBreakdown train_step(HcnModel& model, const HcnConfig& cfg, TrainState& st,
                                const Batch& batch) {
  cfg.validate();
  ad::Tape t;
  auto pm = detail::load_params(t, model);
  auto g = detail::build_batch(t, cfg, pm, batch, true, &st.rng);

  LossBreakdown out;
  out.l_task = t.value(g.l_task)(0, 0);
  out.l_hyp = g.l_hyp >= 0 ? t.value(g.l_hyp)(0, 0) : 0.0;
  out.total = out.l_task + cfg.lambda_hyper * out.l_hyp;
  if (!std::isfinite(out.l_task)) throw divergence_error("train_step: task loss diverged");
  if (!std::isfinite(out.l_hyp)) throw divergence_error("train_step: contrastive loss diverged");

  t.backward(g.total);

  // Adam with standard moment defaults.
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  st.step += 1;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  for (size_t p = 0; p < model.params.size(); ++p) {
    const Mat& grad = t.grad(pm.ids[p]);
    Mat& theta = model.params[p].second;
    Mat& m1 = st.m1[p];
    Mat& m2 = st.m2[p];
    for (size_t e = 0; e < theta.a.size(); ++e) {
      m1.a[e] = b1 * m1.a[e] + (1.0 - b1) * grad.a[e];
      m2.a[e] = b2 * m2.a[e] + (1.0 - b2) * grad.a[e] * grad.a[e];
      theta.a[e] -=
          cfg.learning_rate * (m1.a[e] / corr1) / (std::sqrt(m2.a[e] / corr2) + eps);
    }
  }
  if (!model.all_finite_params())
    throw divergence_error("train_step: parameters became non-finite after update");
  return out;
}

/// Per-dimension argmax; ties resolve to the lowest class index.
inline taxonomy::CognitiveLabel predict(const HcnModel& model, const HcnConfig& cfg,
                                        const Vec& features) {
  auto r = forward(model, cfg, features);
  taxonomy::CognitiveLabel y;
  for (int k = 0; k < 4; ++k) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(r.logits[k].size()); ++j)
      if (r.logits[k][j] > r.logits[k][best]) best = j;
    y[k] = best;
  }
  return y;
}

/// Checkpoint document: config block plus one named row-major array per
/// parameter, in parameter order.
inline nlohmann::ordered_json model_to_json(const HcnConfig& cfg, const HcnModel& model) {
  nlohmann::ordered_json doc;
  doc["config"] = {{"feature_dim", cfg.feature_dim},
                   {"hidden_dim", cfg.hidden_dim},
                   {"layers_N", cfg.layers_N},
                   {"heads_H", cfg.heads_H},
                   {"dropout", cfg.dropout},
                   {"class_counts", cfg.class_counts},
                   {"margin_m", cfg.margin_m},
                   {"lambda_hyper", cfg.lambda_hyper},
                   {"lambda_contrastive", cfg.lambda_contrastive},
                   {"temperature_tau", cfg.temperature_tau},
                   {"curvature_c", cfg.curvature_c},
                   {"learning_rate", cfg.learning_rate},
                   {"batch_size", cfg.batch_size},
                   {"seed", cfg.seed}};
  nlohmann::ordered_json params;
  for (const auto& [name, mat] : model.params) {
    params[name] = {{"rows", mat.rows}, {"cols", mat.cols}, {"data", mat.a}};
  }
  doc["params"] = std::move(params);
  return doc;
}

inline void save_model(const std::string& path, const HcnConfig& cfg, const HcnModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("save_model: cannot open " + path);
  out << model_to_json(cfg, model).dump() << '\n';
}

/// Inverse of model_to_json: validates the config, checks every parameter
/// shape against a fresh init, and rejects non-finite entries.
inline std::pair<HcnConfig, HcnModel> model_from_json(const nlohmann::json& doc) {
  HcnConfig cfg;
  try {
    const auto& c = doc.at("config");
    cfg.feature_dim = c.at("feature_dim").get<int>();
    cfg.hidden_dim = c.at("hidden_dim").get<int>();
    cfg.layers_N = c.at("layers_N").get<int>();
    cfg.heads_H = c.at("heads_H").get<int>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.class_counts = c.at("class_counts").get<std::array<int, 4>>();
    cfg.margin_m = c.at("margin_m").get<double>();
    cfg.lambda_hyper = c.at("lambda_hyper").get<double>();
    cfg.lambda_contrastive = c.at("lambda_contrastive").get<double>();
    cfg.temperature_tau = c.at("temperature_tau").get<double>();
    cfg.curvature_c = c.at("curvature_c").get<double>();
    cfg.learning_rate = c.at("learning_rate").get<double>();
    cfg.batch_size = c.at("batch_size").get<int>();
    cfg.seed = c.at("seed").get<uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw schema_error(std::string("checkpoint: bad config block: ") + e.what());
  }
  cfg.validate();
  HcnModel expect = init_model(cfg);
  HcnModel model;
  try {
    const auto& params = doc.at("params");
    for (const auto& [name, ref] : expect.params) {
      const auto& entry = params.at(name);
      Mat m(entry.at("rows").get<int>(), entry.at("cols").get<int>());
      if (!m.same_shape(ref))
        throw schema_error("checkpoint: shape mismatch for parameter " + name);
      const auto& data = entry.at("data");
      if (static_cast<int>(data.size()) != m.rows * m.cols)
        throw schema_error("checkpoint: data length mismatch for parameter " + name);
      m.a = data.get<Vec>();
      model.params.emplace_back(name, std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw schema_error(std::string("checkpoint: bad params block: ") + e.what());
  }
  if (!model.all_finite_params()) throw schema_error("checkpoint: non-finite parameter");
  return {cfg, model};
}

inline std::pair<HcnConfig, HcnModel> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("load_model: cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw schema_error(std::string("load_model: ") + e.what());
  }
  return model_from_json(doc);
}

}  // namespace hyco::hcn
