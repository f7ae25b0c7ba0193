#pragma once

// Alignment components exercised against a toy stand-in sequence model: the
// cognitive projector turning a frozen anchor vector into bounded soft-prompt
// rows, prefix input assembly, the semantic-cognitive topology loss (one
// minus cosine between the projected last hidden state and the anchor), and
// the joint objective sft + lambda * sct with a deterministic trainer.

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hyco/autodiff.hpp"
#include "hyco/core.hpp"

namespace hyco::align {

struct ProjectorConfig {
  int anchor_dim = 32;  // matches the cognitive network's hidden width
  int d_model = 32;
  int prompt_len_L = 4;
  double scale_a = 1.0;
  double lambda_sct = 1.0;
  double cosine_eps = 1e-8;

  void validate() const {
    if (anchor_dim < 1 || d_model < 1)
      throw invalid_input_error("ProjectorConfig: bad dims");
    if (prompt_len_L < 1) throw invalid_input_error("ProjectorConfig: prompt_len_L must be >= 1");
    if (!(scale_a > 0.0)) throw invalid_input_error("ProjectorConfig: scale_a must be positive");
    if (lambda_sct < 0.0) throw invalid_input_error("ProjectorConfig: negative lambda_sct");
    if (!(cosine_eps > 0.0)) throw invalid_input_error("ProjectorConfig: cosine_eps must be positive");
  }
};

struct AlignConfig {
  ProjectorConfig proj;
  int vocab = 16;
  int epochs = 3;
  double learning_rate = 2e-4;
  int batch_size = 8;
  uint64_t seed = 0;

  void validate() const {
    proj.validate();
    if (vocab < 2) throw invalid_input_error("AlignConfig: vocab must be >= 2");
    if (epochs < 1) throw invalid_input_error("AlignConfig: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw invalid_input_error("AlignConfig: bad learning rate");
    if (batch_size < 1) throw invalid_input_error("AlignConfig: bad batch size");
  }
};

/// One-block causal-attention language model plus the alignment projector
/// A_phi and the prompt projector. Parameter order is the checkpoint and
/// optimizer contract.
struct ToySeqModel {
  std::vector<std::pair<std::string, Mat>> params;

  Mat& at(const std::string& name) {
    for (auto& [n, m] : params)
      if (n == name) return m;
    throw invalid_input_error("ToySeqModel: unknown parameter " + name);
  }
  const Mat& at(const std::string& name) const {
    for (const auto& [n, m] : params)
      if (n == name) return m;
    throw invalid_input_error("ToySeqModel: unknown parameter " + name);
  }
  bool all_finite_params() const {
    for (const auto& [n, m] : params)
      if (!all_finite(m.a)) return false;
    return true;
  }
  int vocab() const { return at("emb").rows; }
  int d_model() const { return at("emb").cols; }
};

struct AlignSample {
  std::vector<int> context;  // C
  std::vector<int> target;   // T
  std::vector<int> gen;      // Y, teacher-forced generation targets, nonempty
  Vec v_cog;                 // frozen anchor, anchor_dim
};

struct LossTriple {
  double sft = 0.0;
  double sct = 0.0;
  double total = 0.0;
};

struct TraceRow {
  int step = 0;
  double sft = 0.0;
  double sct = 0.0;
  double total = 0.0;
};

inline ToySeqModel init_toy_model(const AlignConfig& cfg) {
  cfg.validate();
  ToySeqModel model;
  Rng rng(cfg.seed);
  const int d = cfg.proj.d_model;
  const int ph = 2 * d;  // projector hidden width
  auto gauss = [&](const std::string& name, int rows, int cols) {
    Mat m(rows, cols);
    for (auto& v : m.a) v = 0.02 * rng.normal();
    model.params.emplace_back(name, std::move(m));
  };
  auto fixed = [&](const std::string& name, int rows, int cols, double value) {
    Mat m(rows, cols);
    m.fill(value);
    model.params.emplace_back(name, std::move(m));
  };
  gauss("emb", cfg.vocab, d);
  gauss("wq", d, d);
  gauss("wk", d, d);
  gauss("wv", d, d);
  gauss("wo", d, d);
  gauss("ff_w1", d, 2 * d);
  fixed("ff_b1", 1, 2 * d, 0.0);
  gauss("ff_w2", 2 * d, d);
  fixed("ff_b2", 1, d, 0.0);
  gauss("out_proj", d, cfg.vocab);
  gauss("a_phi", d, cfg.proj.anchor_dim);
  gauss("p_w1", cfg.proj.anchor_dim, ph);
  fixed("p_gamma", 1, ph, 1.0);  // layer-norm affine starts at identity
  fixed("p_beta", 1, ph, 0.0);
  gauss("p_w2", ph, cfg.proj.prompt_len_L * d);
  return model;
}

/// Eq.-2 projector: a * tanh(W2 * sigmoid(LN(W1 * v))) reshaped to L rows.
/// The optional gamma/beta pair is the layer norm's learned affine; omitting
/// it is the identity affine.
inline Mat project_prompt(const ProjectorConfig& pcfg, const Mat& w1, const Mat& w2,
                          const Vec& v_cog, const Mat* gamma = nullptr,
                          const Mat* beta = nullptr) {
  pcfg.validate();
  if (static_cast<int>(v_cog.size()) != pcfg.anchor_dim || !all_finite(v_cog))
    throw invalid_input_error("project_prompt: bad anchor vector");
  if (w1.rows != pcfg.anchor_dim) throw invalid_input_error("project_prompt: W1 shape mismatch");
  if (w2.rows != w1.cols || w2.cols != pcfg.prompt_len_L * pcfg.d_model)
    throw invalid_input_error("project_prompt: W2 shape mismatch");
  const int ph = w1.cols;
  if (gamma && (gamma->rows != 1 || gamma->cols != ph))
    throw invalid_input_error("project_prompt: gamma shape mismatch");
  if (beta && (beta->rows != 1 || beta->cols != ph))
    throw invalid_input_error("project_prompt: beta shape mismatch");

  Vec h(ph, 0.0);
  for (int i = 0; i < pcfg.anchor_dim; ++i)
    for (int j = 0; j < ph; ++j) h[j] += v_cog[i] * w1(i, j);
  // Layer normalization matching the autodiff op: population variance, 1e-5.
  double mu = 0.0;
  for (double x : h) mu += x;
  mu /= ph;
  double var = 0.0;
  for (double x : h) var += (x - mu) * (x - mu);
  var /= ph;
  const double inv_std = 1.0 / std::sqrt(var + 1e-5);
  for (int j = 0; j < ph; ++j) {
    double x = (h[j] - mu) * inv_std;
    if (gamma) x *= (*gamma)(0, j);
    if (beta) x += (*beta)(0, j);
    h[j] = 1.0 / (1.0 + std::exp(-x));
  }
  Mat out(pcfg.prompt_len_L, pcfg.d_model);
  for (int j = 0; j < pcfg.prompt_len_L * pcfg.d_model; ++j) {
    double s = 0.0;
    for (int i = 0; i < ph; ++i) s += h[i] * w2(i, j);
    out.a[j] = pcfg.scale_a * std::tanh(s);
  }
  return out;
}

/// Prompt for a model's own projector parameters.
inline Mat prompt_of(const ToySeqModel& model, const ProjectorConfig& pcfg, const Vec& v_cog) {
  const Mat& gamma = model.at("p_gamma");
  const Mat& beta = model.at("p_beta");
  return project_prompt(pcfg, model.at("p_w1"), model.at("p_w2"), v_cog, &gamma, &beta);
}

/// Eq.-3 assembly: prompt rows, then embedded context, then embedded target.
inline Mat assemble_input(const ToySeqModel& model, const Mat& prompt,
                          const std::vector<int>& context, const std::vector<int>& target) {
  const Mat& emb = model.at("emb");
  if (prompt.cols != emb.cols) throw invalid_input_error("assemble_input: width mismatch");
  Mat out(prompt.rows + static_cast<int>(context.size() + target.size()), emb.cols);
  int at = 0;
  for (int i = 0; i < prompt.rows; ++i, ++at)
    for (int j = 0; j < emb.cols; ++j) out(at, j) = prompt(i, j);
  auto put = [&](const std::vector<int>& ids) {
    for (int id : ids) {
      if (id < 0 || id >= emb.rows) throw invalid_input_error("assemble_input: token id out of range");
      for (int j = 0; j < emb.cols; ++j) out(at, j) = emb(id, j);
      ++at;
    }
  };
  put(context);
  put(target);
  return out;
}

/// Eq.-4 loss on raw vectors: 1 - cos with an epsilon-stabilized denominator.
inline double sct_value(const ProjectorConfig& pcfg, const Vec& v_sem, const Vec& v_cog) {
  if (v_sem.size() != v_cog.size()) throw invalid_input_error("sct_value: length mismatch");
  return 1.0 - dot(v_sem, v_cog) / (norm(v_sem) * norm(v_cog) + pcfg.cosine_eps);
}

/// Eq.-4 loss from a hidden state: v_sem = h_last * A_phi.
inline double sct_loss(const ProjectorConfig& pcfg, const Vec& h_last, const Vec& v_cog,
                       const Mat& a_phi) {
  pcfg.validate();
  if (static_cast<int>(h_last.size()) != a_phi.rows ||
      a_phi.cols != static_cast<int>(v_cog.size()) ||
      static_cast<int>(v_cog.size()) != pcfg.anchor_dim)
    throw invalid_input_error("sct_loss: shape mismatch");
  Vec v_sem(a_phi.cols, 0.0);
  for (int i = 0; i < a_phi.rows; ++i)
    for (int j = 0; j < a_phi.cols; ++j) v_sem[j] += h_last[i] * a_phi(i, j);
  return sct_value(pcfg, v_sem, v_cog);
}

namespace detail {

struct ParamIds {
  std::vector<int> ids;
  const ToySeqModel* model = nullptr;

  int at(const std::string& name) const {
    for (size_t i = 0; i < model->params.size(); ++i)
      if (model->params[i].first == name) return ids[i];
    throw invalid_input_error("ParamIds: unknown parameter " + name);
  }
};

inline ParamIds load_params(ad::Tape& t, const ToySeqModel& model) {
  ParamIds pm;
  pm.model = &model;
  for (const auto& [name, mat] : model.params) pm.ids.push_back(t.leaf(mat));
  return pm;
}

struct AlignGraph {
  int sft = -1;
  int sct = -1;
  int total = -1;
};

/// Teacher-forced graph for one batch. The input per sample is
/// prompt ⊕ Emb(C) ⊕ Emb(T) ⊕ Emb(Y[0..m-2]); position L+|C|+|T|-1+j
/// predicts Y[j], and h_last is the hidden state at the final row (the
/// position that generates the last target token).
inline AlignGraph build_align_batch(ad::Tape& t, const ProjectorConfig& pcfg,
                                    const ParamIds& pm, const std::vector<AlignSample>& batch) {
  if (batch.empty()) throw invalid_input_error("build_align_batch: empty batch");
  const int L = pcfg.prompt_len_L;
  const int d = pcfg.d_model;
  const int vocab = pm.model->vocab();

  int ce_sum = -1;
  long long n_targets = 0;
  int sct_sum = -1;
  for (const AlignSample& s : batch) {
    if (s.gen.empty()) throw invalid_input_error("build_align_batch: empty generation targets");
    if (static_cast<int>(s.v_cog.size()) != pcfg.anchor_dim || !all_finite(s.v_cog))
      throw invalid_input_error("build_align_batch: bad anchor vector");
    for (int id : s.context)
      if (id < 0 || id >= vocab) throw invalid_input_error("build_align_batch: token id out of range");
    for (int id : s.target)
      if (id < 0 || id >= vocab) throw invalid_input_error("build_align_batch: token id out of range");
    for (int id : s.gen)
      if (id < 0 || id >= vocab) throw invalid_input_error("build_align_batch: token id out of range");

    // Projector: a * tanh(W2 * sigmoid(LN_affine(W1 * v))).
    Mat v(1, pcfg.anchor_dim);
    v.a = s.v_cog;
    const int anchor = t.leaf(std::move(v));  // frozen input, gradients unused
    const int pre_norm = t.matmul(anchor, pm.at("p_w1"));
    const int normed = t.add_broadcast_row(
        t.mul_broadcast_row(t.layernorm_rows(pre_norm), pm.at("p_gamma")), pm.at("p_beta"));
    const int squashed = t.tanh_op(t.matmul(t.sigmoid_op(normed), pm.at("p_w2")));
    const int prompt = t.reshape(t.scale(squashed, pcfg.scale_a), L, d);

    std::vector<int> ids = s.context;
    ids.insert(ids.end(), s.target.begin(), s.target.end());
    ids.insert(ids.end(), s.gen.begin(), s.gen.end() - 1);
    int x = ids.empty() ? prompt
                        : t.concat_rows({prompt, t.embed_rows(pm.at("emb"), ids)});

    // Single causal attention block with a tanh feed-forward.
    const int q = t.matmul(x, pm.at("wq"));
    const int k = t.matmul(x, pm.at("wk"));
    const int vv = t.matmul(x, pm.at("wv"));
    const int scores = t.scale(t.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
    const int probs = t.softmax_rows(scores, true);
    const int x1 = t.add(x, t.matmul(t.matmul(probs, vv), pm.at("wo")));
    const int f1 = t.tanh_op(t.add_broadcast_row(t.matmul(x1, pm.at("ff_w1")), pm.at("ff_b1")));
    const int h = t.add(x1, t.add_broadcast_row(t.matmul(f1, pm.at("ff_w2")), pm.at("ff_b2")));

    const int m = static_cast<int>(s.gen.size());
    const int start = L + static_cast<int>(s.context.size() + s.target.size()) - 1;
    const int logits = t.matmul(t.slice_rows(h, start, m), pm.at("out_proj"));
    const int ce = t.softmax_xent_sum(logits, s.gen);
    ce_sum = ce_sum < 0 ? ce : t.add(ce_sum, ce);
    n_targets += m;

    const int rows = t.value(h).rows;
    const int h_last = t.slice_rows(h, rows - 1, 1);
    const int v_sem = t.matmul(h_last, pm.at("a_phi"));
    Mat vc(1, pcfg.anchor_dim);
    vc.a = s.v_cog;
    const int sample_sct = t.cosine_loss(v_sem, t.leaf(std::move(vc)), pcfg.cosine_eps);
    sct_sum = sct_sum < 0 ? sample_sct : t.add(sct_sum, sample_sct);
  }

  AlignGraph g;
  g.sft = t.scale(ce_sum, 1.0 / static_cast<double>(n_targets));
  g.sct = t.scale(sct_sum, 1.0 / static_cast<double>(batch.size()));
  g.total = pcfg.lambda_sct > 0.0 ? t.add(g.sft, t.scale(g.sct, pcfg.lambda_sct)) : g.sft;
  return g;
}

}  // namespace detail

/// Eq.-5 losses on a batch with frozen parameters (no update).
inline LossTriple total_loss(const ToySeqModel& model, const ProjectorConfig& pcfg,
                             const std::vector<AlignSample>& batch) {
  pcfg.validate();
  ad::Tape t;
  auto pm = detail::load_params(t, model);
  auto g = detail::build_align_batch(t, pcfg, pm, batch);
  LossTriple out;
  out.sft = t.value(g.sft)(0, 0);
  out.sct = t.value(g.sct)(0, 0);
  out.total = out.sft + pcfg.lambda_sct * out.sct;
  if (!std::isfinite(out.sft)) throw divergence_error("total_loss: sft diverged");
  if (!std::isfinite(out.sct)) throw divergence_error("total_loss: sct diverged");
  return out;
}

/// Deterministic alignment training: epochs over the dataset in order with
/// Adam, emitting one trace row per step.
inline std::vector<TraceRow> align_train(ToySeqModel& model, const AlignConfig& cfg,
                                         const std::vector<AlignSample>& dataset) {
  cfg.validate();
  if (dataset.empty()) throw invalid_input_error("align_train: empty dataset");

  std::vector<Mat> m1, m2;
  for (const auto& [name, mat] : model.params) {
    m1.emplace_back(mat.rows, mat.cols);
    m2.emplace_back(mat.rows, mat.cols);
  }
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const int n = static_cast<int>(dataset.size());
  std::vector<TraceRow> trace;
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int begin = 0; begin < n; begin += cfg.batch_size) {
      const int end = std::min(n, begin + cfg.batch_size);
      std::vector<AlignSample> batch(dataset.begin() + begin, dataset.begin() + end);

      ad::Tape t;
      auto pm = detail::load_params(t, model);
      auto g = detail::build_align_batch(t, cfg.proj, pm, batch);
      TraceRow row;
      row.step = ++step;
      row.sft = t.value(g.sft)(0, 0);
      row.sct = t.value(g.sct)(0, 0);
      row.total = row.sft + cfg.proj.lambda_sct * row.sct;
      if (!std::isfinite(row.sft)) throw divergence_error("align_train: sft diverged");
      if (!std::isfinite(row.sct)) throw divergence_error("align_train: sct diverged");
      if (row.total > 1e6) throw divergence_error("align_train: total loss exceeded 1e6");
      trace.push_back(row);

      t.backward(g.total);
      const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (size_t p = 0; p < model.params.size(); ++p) {
        const Mat& grad = t.grad(pm.ids[p]);
        Mat& theta = model.params[p].second;
        for (size_t e = 0; e < theta.a.size(); ++e) {
          m1[p].a[e] = b1 * m1[p].a[e] + (1.0 - b1) * grad.a[e];
          m2[p].a[e] = b2 * m2[p].a[e] + (1.0 - b2) * grad.a[e] * grad.a[e];
          theta.a[e] -=
              cfg.learning_rate * (m1[p].a[e] / corr1) / (std::sqrt(m2[p].a[e] / corr2) + eps);
        }
      }
      if (!model.all_finite_params())
        throw divergence_error("align_train: parameters became non-finite after update");
    }
  }
  return trace;
}

/// Prompt-free autoregressive decoding: greedy argmax continuation of the
/// given tokens. Runs with no anchor or projector input at all.
inline std::vector<int> infer_greedy(const ToySeqModel& model, const std::vector<int>& tokens,
                                     int steps) {
  if (tokens.empty()) throw invalid_input_error("infer_greedy: need at least one token");
  if (steps < 1) throw invalid_input_error("infer_greedy: steps must be >= 1");
  const int vocab = model.vocab();
  const int d = model.d_model();
  for (int id : tokens)
    if (id < 0 || id >= vocab) throw invalid_input_error("infer_greedy: token id out of range");

  std::vector<int> ids = tokens;
  std::vector<int> out;
  for (int s = 0; s < steps; ++s) {
    ad::Tape t;
    auto pm = detail::load_params(t, model);
    const int x = t.embed_rows(pm.at("emb"), ids);
    const int q = t.matmul(x, pm.at("wq"));
    const int k = t.matmul(x, pm.at("wk"));
    const int v = t.matmul(x, pm.at("wv"));
    const int scores = t.scale(t.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
    const int probs = t.softmax_rows(scores, true);
    const int x1 = t.add(x, t.matmul(t.matmul(probs, v), pm.at("wo")));
    const int f1 = t.tanh_op(t.add_broadcast_row(t.matmul(x1, pm.at("ff_w1")), pm.at("ff_b1")));
    const int h = t.add(x1, t.add_broadcast_row(t.matmul(f1, pm.at("ff_w2")), pm.at("ff_b2")));
    const int logits = t.matmul(t.slice_rows(h, t.value(h).rows - 1, 1), pm.at("out_proj"));
    const Mat& row = t.value(logits);
    int best = 0;
    for (int j = 1; j < vocab; ++j)
      if (row(0, j) > row(0, best)) best = j;
    ids.push_back(best);
    out.push_back(best);
  }
  return out;
}

}  // namespace hyco::align
