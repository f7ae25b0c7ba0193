#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "hyco/hcn.hpp"
#include "hyco/taxonomy.hpp"
#include "gradcheck_util.hpp"

using Catch::Matchers::WithinAbs;
using namespace hyco;

namespace {

hcn::HcnConfig tiny_config() {
  hcn::HcnConfig cfg;
  cfg.feature_dim = 8;
  cfg.hidden_dim = 8;
  cfg.layers_N = 1;
  cfg.heads_H = 2;
  cfg.batch_size = 4;
  cfg.dropout = 0.0;
  return cfg;
}

hcn::Batch make_batch(const taxonomy::Taxonomy& tax, int n, int feature_dim, double noise,
                      uint64_t seed) {
  auto [features, labels] = taxonomy::generate_synthetic(tax, n, feature_dim, noise, seed);
  return {std::move(features), std::move(labels)};
}

hcn::Batch slice_batch(const hcn::Batch& full, int start, int count) {
  hcn::Batch b;
  b.features = Mat(count, full.features.cols);
  for (int i = 0; i < count; ++i) {
    const int s = (start + i) % full.features.rows;
    for (int j = 0; j < full.features.cols; ++j) b.features(i, j) = full.features(s, j);
    b.labels.push_back(full.labels[s]);
  }
  return b;
}

/// Loss of the full objective on a batch without dropout or updates.
hcn::LossBreakdown eval_losses(const hcn::HcnModel& model, const hcn::HcnConfig& cfg,
                               const hcn::Batch& batch) {
  ad::Tape t;
  auto pm = hcn::detail::load_params(t, model);
  auto g = hcn::detail::build_batch(t, cfg, pm, batch, false, nullptr);
  hcn::LossBreakdown out;
  out.l_task = t.value(g.l_task)(0, 0);
  out.l_hyp = g.l_hyp >= 0 ? t.value(g.l_hyp)(0, 0) : 0.0;
  out.total = out.l_task + cfg.lambda_hyper * out.l_hyp;
  return out;
}

void zero_params(hcn::HcnModel& model) {
  for (auto& [name, mat] : model.params) mat.fill(0.0);
}

}  // namespace

TEST_CASE("config validation rejects inconsistent settings") {
  auto cfg = tiny_config();
  cfg.heads_H = 3;  // 8 % 3 != 0
  REQUIRE_THROWS_AS(cfg.validate(), invalid_input_error);
  cfg = tiny_config();
  cfg.dropout = 1.0;
  REQUIRE_THROWS_AS(cfg.validate(), invalid_input_error);
  cfg = tiny_config();
  cfg.margin_m = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(), invalid_input_error);
  cfg = tiny_config();
  cfg.learning_rate = -1.0;
  REQUIRE_THROWS_AS(cfg.validate(), invalid_input_error);
  REQUIRE_NOTHROW(tiny_config().validate());
}

TEST_CASE("zero weights put every z_k at the origin and pass dimension embeddings through") {
  auto cfg = tiny_config();
  auto model = hcn::init_model(cfg);
  zero_params(model);
  Mat& emb = model.at("dim_embed");
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < cfg.hidden_dim; ++j) emb(k, j) = 0.1 * (k + 1) + 0.01 * j;

  Vec features(cfg.feature_dim, 1.5);
  auto r = hcn::forward(model, cfg, features);

  for (int k = 0; k < 4; ++k) REQUIRE(norm(r.z[k]) < 1e-15);
  for (int j = 0; j < cfg.hidden_dim; ++j) {
    const double want = (emb(0, j) + emb(1, j) + emb(2, j) + emb(3, j)) / 4.0;
    REQUIRE_THAT(r.v_cog[j], WithinAbs(want, 1e-12));
  }
  // Zero heads mean all-zero logits, and the tie-break selects class 0.
  auto label = hcn::predict(model, cfg, features);
  for (int k = 0; k < 4; ++k) REQUIRE(label[k] == 0);
}

TEST_CASE("attention rows are probability distributions") {
  auto cfg = tiny_config();
  auto model = hcn::init_model(cfg);
  auto data = make_batch(taxonomy::builtin_taxonomy(), 1, cfg.feature_dim, 0.2, 99);
  Vec features(data.features.row(0).begin(), data.features.row(0).end());
  auto r = hcn::forward(model, cfg, features);

  REQUIRE(static_cast<int>(r.attention.size()) == cfg.layers_N * cfg.heads_H);
  for (const Mat& probs : r.attention) {
    REQUIRE(probs.rows == 4);
    REQUIRE(probs.cols == 4);
    for (int i = 0; i < 4; ++i) {
      double s = 0.0;
      for (int j = 0; j < 4; ++j) {
        REQUIRE(probs(i, j) >= 0.0);
        s += probs(i, j);
      }
      REQUIRE_THAT(s, WithinAbs(1.0, 1e-9));
    }
  }
}

TEST_CASE("logit lengths follow the class counts") {
  auto cfg = tiny_config();
  auto model = hcn::init_model(cfg);
  Vec features(cfg.feature_dim, 0.3);
  auto r = hcn::forward(model, cfg, features);
  REQUIRE(r.logits[0].size() == 9);
  REQUIRE(r.logits[1].size() == 8);
  REQUIRE(r.logits[2].size() == 3);
  REQUIRE(r.logits[3].size() == 7);
  REQUIRE(r.v_cog.size() == static_cast<size_t>(cfg.hidden_dim));
}

TEST_CASE("task loss on uniform logits is the mean log class count") {
  std::array<Vec, 4> logits = {Vec(9, 0.0), Vec(8, 0.0), Vec(3, 0.0), Vec(7, 0.0)};
  taxonomy::CognitiveLabel y{2, 1, 0, 6};
  // mean(ln 9, ln 8, ln 3, ln 7)
  REQUIRE_THAT(hcn::task_loss(logits, y), WithinAbs(1.8302971391848697, 1e-14));

  // Favoring the true class lowers the loss.
  auto favored = logits;
  for (int k = 0; k < 4; ++k) favored[k][y[k]] = 3.0;
  REQUIRE(hcn::task_loss(favored, y) < hcn::task_loss(logits, y));

  // Permuting classes together with the label changes nothing.
  std::array<Vec, 4> shuffled = logits;
  Rng rng(5);
  for (int k = 0; k < 4; ++k)
    for (double& v : shuffled[k]) v = rng.normal();
  taxonomy::CognitiveLabel y2{4, 3, 2, 1};
  auto swapped = shuffled;
  for (int k = 0; k < 4; ++k) std::swap(swapped[k][y2[k]], swapped[k][0]);
  taxonomy::CognitiveLabel y0{0, 0, 0, 0};
  REQUIRE_THAT(hcn::task_loss(swapped, y0), WithinAbs(hcn::task_loss(shuffled, y2), 1e-12));

  taxonomy::CognitiveLabel bad{9, 0, 0, 0};
  REQUIRE_THROWS_AS(hcn::task_loss(logits, bad), invalid_input_error);
}

TEST_CASE("contrastive loss frozen pair cases") {
  poincare::BallConfig ball(1.0, 3);
  poincare::BallPoint a{{0.1, 0.2, -0.1}};
  poincare::BallPoint far{{-0.6, 0.5, 0.3}};

  // Same label, same location: squared distance term is zero.
  REQUIRE_THAT(hcn::hyp_contrastive_loss({a, a}, {3, 3}, 1.0, ball), WithinAbs(0.0, 1e-15));

  // Different labels at distance beyond the margin: hinge inactive.
  const double d = poincare::poincare_distance(ball, a, far);
  REQUIRE(d > 0.75);
  REQUIRE_THAT(hcn::hyp_contrastive_loss({a, far}, {0, 1}, 0.75, ball), WithinAbs(0.0, 1e-15));

  // Different labels at the same location: the full margin penalty.
  REQUIRE_THAT(hcn::hyp_contrastive_loss({a, a}, {0, 1}, 0.75, ball),
               WithinAbs(0.5625, 1e-15));

  // Mean semantics over three points: recompute the three pairs by hand.
  poincare::BallPoint b{{0.0, -0.3, 0.2}};
  std::vector<poincare::BallPoint> pts = {a, b, far};
  std::vector<int> labels = {1, 1, 2};
  const double dab = poincare::poincare_distance(ball, a, b);
  const double daf = poincare::poincare_distance(ball, a, far);
  const double dbf = poincare::poincare_distance(ball, b, far);
  auto hinge = [](double m, double x) { return std::max(0.0, m - x); };
  const double want =
      (dab * dab + hinge(2.0, daf) * hinge(2.0, daf) + hinge(2.0, dbf) * hinge(2.0, dbf)) / 3.0;
  REQUIRE_THAT(hcn::hyp_contrastive_loss(pts, labels, 2.0, ball), WithinAbs(want, 1e-12));

  REQUIRE_THROWS_AS(hcn::hyp_contrastive_loss({a}, {0}, 1.0, ball), invalid_input_error);
}

TEST_CASE("InfoNCE mode basics") {
  poincare::BallConfig ball(1.0, 2);
  poincare::BallPoint a{{0.1, 0.0}};
  poincare::BallPoint b{{-0.2, 0.3}};
  poincare::BallPoint c{{0.4, -0.1}};

  // A lone positive pair assigns all mass to the positive: loss 0.
  REQUIRE_THAT(hcn::hyp_infonce_loss({a, b}, {7, 7}, 0.5, ball), WithinAbs(0.0, 1e-12));
  // No anchor has a positive: defined as 0.
  REQUIRE_THAT(hcn::hyp_infonce_loss({a, b}, {0, 1}, 0.5, ball), WithinAbs(0.0, 1e-15));

  // One anchor with one positive and one negative, checked by hand.
  const double dab = poincare::poincare_distance(ball, a, b);
  const double dac = poincare::poincare_distance(ball, a, c);
  const double dbc = poincare::poincare_distance(ball, b, c);
  const double tau = 0.5;
  const double la = -std::log(std::exp(-dab / tau) / (std::exp(-dab / tau) + std::exp(-dac / tau)));
  const double lb = -std::log(std::exp(-dab / tau) / (std::exp(-dab / tau) + std::exp(-dbc / tau)));
  const double want = (la + lb) / 2.0;  // c has no positive and is skipped
  REQUIRE_THAT(hcn::hyp_infonce_loss({a, b, c}, {1, 1, 2}, tau, ball), WithinAbs(want, 1e-12));

  REQUIRE_THROWS_AS(hcn::hyp_infonce_loss({a, b}, {0, 0}, 0.0, ball), invalid_input_error);
}

TEST_CASE("batch gradients match finite differences on the frozen tiny configuration") {
  auto cfg = tiny_config();
  auto model = hcn::init_model(cfg);
  auto batch = make_batch(taxonomy::builtin_taxonomy(), 4, cfg.feature_dim, 0.3, 7);

  std::vector<Mat> params;
  for (const auto& [name, mat] : model.params) params.push_back(mat);

  auto build = [&](ad::Tape& t, const std::vector<int>& ids) {
    hcn::detail::ParamIds pm;
    pm.ids = ids;
    pm.model = &model;
    auto g = hcn::detail::build_batch(t, cfg, pm, batch, true, nullptr);
    return g.total;
  };
  auto rep = gradcheck::compare(params, build, 1e-4, 1e-3);
  INFO("worst relative gradient error " << rep.worst);
  REQUIRE(rep.worst < 1e-3);
  REQUIRE(std::isfinite(rep.loss));
}

TEST_CASE("lambda_hyper zero reduces exactly to pure multi-task gradients") {
  auto cfg = tiny_config();
  cfg.lambda_hyper = 0.0;
  auto model = hcn::init_model(cfg);
  auto batch = make_batch(taxonomy::builtin_taxonomy(), 4, cfg.feature_dim, 0.2, 11);

  // Full objective with the contrastive term weighted by zero.
  ad::Tape ta;
  auto pa = hcn::detail::load_params(ta, model);
  auto ga = hcn::detail::build_batch(ta, cfg, pa, batch, true, nullptr);
  ta.backward(ga.total);

  // Task-only graph with no contrastive nodes at all.
  ad::Tape tb;
  auto pb = hcn::detail::load_params(tb, model);
  int task_sum = -1;
  for (int s = 0; s < 4; ++s) {
    Mat f(1, cfg.feature_dim);
    for (int j = 0; j < cfg.feature_dim; ++j) f(0, j) = batch.features(s, j);
    auto g = hcn::detail::build_sample(tb, cfg, pb, tb.leaf(std::move(f)), true, nullptr, nullptr);
    int acc = -1;
    for (int k = 0; k < 4; ++k) {
      const int ce = tb.softmax_xent_sum(g.logits[k], {batch.labels[s][k]});
      acc = acc < 0 ? ce : tb.add(acc, ce);
    }
    const int sample_loss = tb.scale(acc, 0.25);
    task_sum = task_sum < 0 ? sample_loss : tb.add(task_sum, sample_loss);
  }
  tb.backward(tb.scale(task_sum, 1.0 / 4));

  for (size_t p = 0; p < model.params.size(); ++p) {
    const Mat& grad_full = ta.grad(pa.ids[p]);
    const Mat& grad_task = tb.grad(pb.ids[p]);
    for (size_t e = 0; e < grad_full.a.size(); ++e) REQUIRE(grad_full.a[e] == grad_task.a[e]);
  }
}

TEST_CASE("training descends on synthetic data") {
  hcn::HcnConfig cfg;
  cfg.feature_dim = 16;
  cfg.hidden_dim = 16;
  cfg.layers_N = 2;
  cfg.heads_H = 2;
  cfg.seed = 1;
  auto tax = taxonomy::builtin_taxonomy();
  auto data = make_batch(tax, 512, cfg.feature_dim, 0.1, 21);

  auto model = hcn::init_model(cfg);
  hcn::TrainState st(model, cfg.seed);
  auto probe = slice_batch(data, 0, 128);
  const auto before = eval_losses(model, cfg, probe);

  for (int step = 0; step < 200; ++step) {
    auto batch = slice_batch(data, step * cfg.batch_size, cfg.batch_size);
    auto losses = hcn::train_step(model, cfg, st, batch);
    REQUIRE(std::isfinite(losses.total));
    REQUIRE(losses.l_task >= 0.0);
    REQUIRE(losses.l_hyp >= 0.0);
    REQUIRE_THAT(losses.total, WithinAbs(losses.l_task + cfg.lambda_hyper * losses.l_hyp, 1e-12));
  }
  const auto after = eval_losses(model, cfg, probe);
  REQUIRE(after.total < before.total);
  REQUIRE(after.l_task < before.l_task);
}

TEST_CASE("equal seeds give bit-identical trajectories") {
  auto cfg = tiny_config();
  cfg.dropout = 0.1;  // exercise the dropout stream as well
  auto tax = taxonomy::builtin_taxonomy();
  auto data = make_batch(tax, 64, cfg.feature_dim, 0.2, 33);

  auto run = [&]() {
    auto model = hcn::init_model(cfg);
    hcn::TrainState st(model, cfg.seed);
    std::vector<hcn::LossBreakdown> losses;
    for (int step = 0; step < 20; ++step) {
      auto batch = slice_batch(data, step * cfg.batch_size, cfg.batch_size);
      losses.push_back(hcn::train_step(model, cfg, st, batch));
    }
    return std::make_pair(std::move(model), std::move(losses));
  };
  auto [m1, l1] = run();
  auto [m2, l2] = run();

  for (size_t p = 0; p < m1.params.size(); ++p) {
    REQUIRE(m1.params[p].first == m2.params[p].first);
    REQUIRE(m1.params[p].second.a == m2.params[p].second.a);
  }
  for (size_t i = 0; i < l1.size(); ++i) {
    REQUIRE(l1[i].total == l2[i].total);
    REQUIRE(l1[i].l_hyp == l2[i].l_hyp);
  }
}

TEST_CASE("forward is deterministic when dropout is disabled") {
  auto cfg = tiny_config();
  auto model = hcn::init_model(cfg);
  Vec features(cfg.feature_dim);
  Rng rng(8);
  for (auto& v : features) v = rng.normal();
  auto r1 = hcn::forward(model, cfg, features);
  auto r2 = hcn::forward(model, cfg, features);
  for (int k = 0; k < 4; ++k) {
    REQUIRE(r1.z[k] == r2.z[k]);
    REQUIRE(r1.logits[k] == r2.logits[k]);
  }
  REQUIRE(r1.v_cog == r2.v_cog);
}

TEST_CASE("predict decodes argmax with deterministic tie handling") {
  auto cfg = tiny_config();
  auto model = hcn::init_model(cfg);
  zero_params(model);
  Vec features(cfg.feature_dim, 0.7);

  // All-zero logits tie; every dimension resolves to class 0.
  auto base = hcn::predict(model, cfg, features);
  for (int k = 0; k < 4; ++k) REQUIRE(base[k] == 0);

  // A unique maximum wins.
  model.at("head.emotion.b2")(0, 5) = 2.0;
  model.at("head.stance.b2")(0, 2) = 1.0;
  auto picked = hcn::predict(model, cfg, features);
  REQUIRE(picked[0] == 5);
  REQUIRE(picked[2] == 2);

  // Shifting a dimension's logits by a constant changes nothing.
  Mat& b2 = model.at("head.emotion.b2");
  for (int j = 0; j < b2.cols; ++j) b2(0, j) += 3.25;
  auto shifted = hcn::predict(model, cfg, features);
  REQUIRE(shifted[0] == picked[0]);
}

TEST_CASE("training separates classes and reflects the hierarchy") {
  hcn::HcnConfig cfg;  // desk defaults: 64 features, 32 hidden, 4 layers, 8 heads
  cfg.seed = 2;
  auto tax = taxonomy::builtin_taxonomy();
  auto data = make_batch(tax, 1024, cfg.feature_dim, 0.1, 77);

  auto model = hcn::init_model(cfg);
  const auto ball = cfg.ball();

  // z_emo population over a fixed evaluation subset.
  const int eval_n = 192;
  auto collect = [&](const hcn::HcnModel& m) {
    std::vector<poincare::BallPoint> pts;
    std::vector<int> labels;
    for (int s = 0; s < eval_n; ++s) {
      Vec f(data.features.row(s).begin(), data.features.row(s).end());
      pts.push_back(poincare::BallPoint{hcn::forward(m, cfg, f).z[0]});
      labels.push_back(data.labels[s][0]);
    }
    return std::make_pair(std::move(pts), std::move(labels));
  };

  auto [pts0, labels0] = collect(model);
  const double contrastive_before =
      hcn::hyp_contrastive_loss(pts0, labels0, cfg.margin_m, ball);

  hcn::TrainState st(model, cfg.seed);
  for (int step = 0; step < 500; ++step) {
    auto batch = slice_batch(data, step * cfg.batch_size, cfg.batch_size);
    hcn::train_step(model, cfg, st, batch);
  }

  auto [pts, labels] = collect(model);
  const double contrastive_after = hcn::hyp_contrastive_loss(pts, labels, cfg.margin_m, ball);
  REQUIRE(contrastive_after <= 0.5 * contrastive_before);

  const auto& emo = tax.dim(0);
  double within = 0.0, between = 0.0, same_cat = 0.0, cross_cat = 0.0;
  long long nw = 0, nb = 0, nsc = 0, ncc = 0;
  for (int i = 0; i < eval_n; ++i)
    for (int j = i + 1; j < eval_n; ++j) {
      const double d = poincare::poincare_distance(ball, pts[i], pts[j]);
      if (labels[i] == labels[j]) {
        within += d;
        ++nw;
      } else {
        between += d;
        ++nb;
        if (emo.leaf_category[labels[i]] == emo.leaf_category[labels[j]]) {
          same_cat += d;
          ++nsc;
        } else {
          cross_cat += d;
          ++ncc;
        }
      }
    }
  REQUIRE(nw > 0);
  REQUIRE(nsc > 0);
  REQUIRE(ncc > 0);
  // Same-leaf pairs end closer than different-leaf pairs, and leaves sharing
  // a category stay closer than leaves from different categories.
  REQUIRE(within / nw < between / nb);
  REQUIRE(same_cat / nsc < cross_cat / ncc);
}

TEST_CASE("checkpoints round-trip exactly") {
  auto cfg = tiny_config();
  cfg.lambda_hyper = 0.25;
  cfg.seed = 9;
  auto model = hcn::init_model(cfg);
  auto tax = taxonomy::builtin_taxonomy();
  auto data = make_batch(tax, 8, cfg.feature_dim, 0.2, 5);
  hcn::TrainState st(model, cfg.seed);
  hcn::train_step(model, cfg, st, slice_batch(data, 0, 4));

  const std::string path = "hcn_roundtrip.json";
  hcn::save_model(path, cfg, model);
  auto [cfg2, model2] = hcn::load_model(path);

  REQUIRE(cfg2.feature_dim == cfg.feature_dim);
  REQUIRE(cfg2.lambda_hyper == cfg.lambda_hyper);
  REQUIRE(cfg2.seed == cfg.seed);
  REQUIRE(model2.params.size() == model.params.size());
  for (size_t p = 0; p < model.params.size(); ++p) {
    REQUIRE(model2.params[p].first == model.params[p].first);
    REQUIRE(model2.params[p].second.a == model.params[p].second.a);
  }

  Vec features(cfg.feature_dim, 0.4);
  auto r1 = hcn::forward(model, cfg, features);
  auto r2 = hcn::forward(model2, cfg2, features);
  REQUIRE(r1.logits[0] == r2.logits[0]);
  REQUIRE(r1.v_cog == r2.v_cog);

  // Serialization itself is deterministic.
  hcn::save_model("hcn_roundtrip_b.json", cfg, model);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  REQUIRE(slurp(path) == slurp("hcn_roundtrip_b.json"));

  REQUIRE_THROWS_AS(hcn::load_model("does_not_exist.json"), io_error);
  {
    std::ofstream bad("hcn_bad.json", std::ios::binary);
    bad << "{\"config\": 3}\n";
  }
  REQUIRE_THROWS_AS(hcn::load_model("hcn_bad.json"), schema_error);
}

TEST_CASE("non-finite loss aborts with a diagnostic naming the term") {
  auto cfg = tiny_config();
  auto model = hcn::init_model(cfg);
  zero_params(model);
  // With zero weights the emotion logits equal this bias row; an extreme
  // spread makes the cross-entropy overflow to infinity while every
  // activation stays finite.
  Mat& b2 = model.at("head.emotion.b2");
  b2(0, 0) = 1e308;
  b2(0, 1) = -1e308;

  auto tax = taxonomy::builtin_taxonomy();
  hcn::Batch batch;
  batch.features = Mat(2, cfg.feature_dim);
  batch.features.fill(0.1);
  batch.labels = {taxonomy::CognitiveLabel{1, 0, 0, 0}, taxonomy::CognitiveLabel{1, 0, 0, 0}};

  hcn::TrainState st(model, 0);
  REQUIRE_THROWS_WITH(hcn::train_step(model, cfg, st, batch),
                      Catch::Matchers::ContainsSubstring("task loss"));

  // Malformed batches are rejected up front.
  hcn::Batch bad;
  bad.features = Mat(2, cfg.feature_dim);
  bad.labels = {taxonomy::CognitiveLabel{0, 0, 0, 0}};
  REQUIRE_THROWS_AS(hcn::train_step(model, cfg, st, bad), invalid_input_error);
  (void)tax;
}
