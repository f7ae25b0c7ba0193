#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "hyco/capacity.hpp"

using namespace hyco;
using namespace hyco::capacity;
using Catch::Matchers::ContainsSubstring;

namespace {

// Shared sweep caches so the expensive estimates run once per binary.
const EuclideanEstimate& euclid_at(int k) {
  static std::map<int, EuclideanEstimate> cache;
  auto it = cache.find(k);
  if (it == cache.end()) it = cache.emplace(k, min_euclidean_radius(2, k, 2, 0.5, 7)).first;
  return it->second;
}

const TreeEmbedding& hyp_at(int k) {
  static std::map<int, TreeEmbedding> cache;
  auto it = cache.find(k);
  if (it == cache.end()) {
    const poincare::BallConfig ball(1.0, 2);
    it = cache.emplace(k, hyperbolic_tree_embed(2, k, ball, 0.5)).first;
  }
  return it->second;
}

struct LineFit {
  double slope = 0.0;
  double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  LineFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - f.slope * sx) / n;
  double ssr = 0, sst = 0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double fit = icpt + f.slope * xs[i];
    ssr += (ys[i] - fit) * (ys[i] - fit);
    sst += (ys[i] - ybar) * (ys[i] - ybar);
  }
  f.r2 = 1.0 - ssr / sst;
  return f;
}

}  // namespace

TEST_CASE("capacity config validation and desk-scale cap") {
  CapacityConfig cfg;
  cfg.depth_range = {0, 1, 2};
  REQUIRE_NOTHROW(cfg.validate());

  CapacityConfig bad = cfg;
  bad.branching_b = 1;
  REQUIRE_THROWS_AS(bad.validate(), invalid_input_error);
  bad = cfg;
  bad.dim_d = 1;
  REQUIRE_THROWS_AS(bad.validate(), invalid_input_error);
  bad = cfg;
  bad.epsilon_sep = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), invalid_input_error);
  bad = cfg;
  bad.trials = 0;
  REQUIRE_THROWS_AS(bad.validate(), invalid_input_error);
  bad = cfg;
  bad.depth_range = {};
  REQUIRE_THROWS_AS(bad.validate(), invalid_input_error);
  bad = cfg;
  bad.depth_range = {1, -1};
  REQUIRE_THROWS_AS(bad.validate(), invalid_input_error);

  // 2^16 = 65536 sits exactly on the cap; one more level breaks it
  REQUIRE(CapacityConfig::leaf_count(2, 16) == 65536);
  REQUIRE_THROWS_AS(CapacityConfig::leaf_count(2, 17), too_large_error);
  REQUIRE_THROWS_WITH(CapacityConfig::leaf_count(4, 9), ContainsSubstring("cap"));
  bad = cfg;
  bad.depth_range = {17};
  REQUIRE_THROWS_AS(bad.validate(), too_large_error);
}

TEST_CASE("packing lower bound") {
  REQUIRE(packing_lower_bound(1, 2, 1.0) == 0.0);
  // (eps/2)*(2^(1/2) - 1)
  REQUIRE_THAT(packing_lower_bound(2, 2, 1.0),
               Catch::Matchers::WithinAbs(0.20710678118654757, 1e-15));
  REQUIRE(packing_lower_bound(4, 2, 1.0) > packing_lower_bound(2, 2, 1.0));
  REQUIRE(packing_lower_bound(2, 3, 1.0) < packing_lower_bound(2, 2, 1.0));
  REQUIRE_THROWS_AS(packing_lower_bound(0, 2, 1.0), invalid_input_error);
  REQUIRE_THROWS_AS(packing_lower_bound(2, 0, 1.0), invalid_input_error);
  REQUIRE_THROWS_AS(packing_lower_bound(2, 2, 0.0), invalid_input_error);
}

TEST_CASE("euclidean radius: forced configurations") {
  SECTION("single point needs no radius") {
    const EuclideanEstimate e = min_euclidean_radius(2, 0, 2, 1.0, 3);
    REQUIRE(e.radius == 0.0);
    REQUIRE(e.r_lb == 0.0);
    REQUIRE(std::isinf(e.min_separation));
    REQUIRE_FALSE(e.approximate);
  }
  SECTION("two points go antipodal at radius eps/2") {
    for (int d : {2, 3}) {
      const EuclideanEstimate e = min_euclidean_radius(2, 1, d, 1.0, 42);
      INFO("d=" << d);
      REQUIRE(e.radius >= 0.5 - 1e-12);
      REQUIRE(e.radius <= 0.52);  // 1% bisection precision plus placement slack
      REQUIRE(e.min_separation >= 1.0);
      REQUIRE(e.radius > e.r_lb);
      REQUIRE_FALSE(e.approximate);
    }
    REQUIRE_THAT(min_euclidean_radius(2, 1, 2, 1.0, 42).r_lb,
                 Catch::Matchers::WithinAbs(0.20710678118654757, 1e-15));
  }
  SECTION("argument validation") {
    REQUIRE_THROWS_AS(min_euclidean_radius(1, 1, 2, 1.0), invalid_input_error);
    REQUIRE_THROWS_AS(min_euclidean_radius(2, -1, 2, 1.0), invalid_input_error);
    REQUIRE_THROWS_AS(min_euclidean_radius(2, 1, 1, 1.0), invalid_input_error);
    REQUIRE_THROWS_AS(min_euclidean_radius(2, 1, 2, 0.0), invalid_input_error);
    REQUIRE_THROWS_AS(min_euclidean_radius(2, 17, 2, 1.0), too_large_error);
  }
}

TEST_CASE("euclidean radius monotone in depth and separation") {
  for (int k = 1; k < 5; ++k) {
    INFO("k=" << k);
    REQUIRE(euclid_at(k + 1).radius >= euclid_at(k).radius);
  }
  REQUIRE(euclid_at(5).radius > 2.0 * euclid_at(1).radius);

  // The dynamics are scale-free in eps, so doubling eps doubles the estimate.
  const double r_half = min_euclidean_radius(2, 3, 2, 0.25, 7).radius;
  const double r_full = min_euclidean_radius(2, 3, 2, 0.5, 7).radius;
  REQUIRE(r_half < r_full);
  REQUIRE_THAT(r_full / r_half, Catch::Matchers::WithinAbs(2.0, 1e-9));
}

TEST_CASE("euclidean radius grows exponentially with depth") {
  std::vector<double> ks, ln_r;
  for (int k = 1; k <= 8; ++k) {
    const EuclideanEstimate& e = euclid_at(k);
    INFO("k=" << k);
    REQUIRE(e.radius >= e.r_lb);          // packing bound respected on every run
    REQUIRE(e.min_separation >= 0.5);     // the returned placement is valid
    REQUIRE_FALSE(e.approximate);
    ks.push_back(k);
    ln_r.push_back(std::log(e.radius));
  }
  // ln R vs k slope approaches (ln b)/d = 0.34657 within 25%
  const LineFit full = fit_line(ks, ln_r);
  REQUIRE(full.slope >= 0.75 * 0.34657359027997264);
  REQUIRE(full.slope <= 1.25 * 0.34657359027997264);
  // exponential growth: log-radius linear over depths 3..8
  const LineFit tail = fit_line({ks.begin() + 2, ks.end()}, {ln_r.begin() + 2, ln_r.end()});
  REQUIRE(tail.r2 >= 0.95);
}

TEST_CASE("hyperbolic embed: roots and children") {
  const poincare::BallConfig ball(1.0, 2);
  SECTION("depth zero is a single origin point") {
    const TreeEmbedding emb = hyperbolic_tree_embed(3, 0, ball, 0.5);
    REQUIRE(emb.points.size() == 1);
    REQUIRE(emb.depth == std::vector<int>{0});
    REQUIRE(emb.points[0].coords == Vec{0.0, 0.0});
    REQUIRE(emb.max_radius_hyp == 0.0);
  }
  SECTION("two children keep their separation") {
    const TreeEmbedding emb = hyperbolic_tree_embed(2, 1, ball, 0.5);
    REQUIRE(emb.points.size() == 3);
    REQUIRE(emb.depth == std::vector<int>({0, 1, 1}));
    REQUIRE(poincare::poincare_distance(ball, emb.points[1], emb.points[2]) >= 0.5);
    const double r1 = poincare::radial_distance(ball, emb.points[1]);
    const double r2 = poincare::radial_distance(ball, emb.points[2]);
    REQUIRE_THAT(r1, Catch::Matchers::WithinAbs(r2, 1e-12));
    REQUIRE_THAT(emb.max_radius_hyp, Catch::Matchers::WithinAbs(r1, 1e-12));
    REQUIRE(emb.ell > 0.0);
    REQUIRE(emb.ell <= 0.5);
    for (const auto& p : emb.points) REQUIRE(norm(p.coords) < ball.ball_radius());
  }
  SECTION("construction is deterministic") {
    const TreeEmbedding a = hyperbolic_tree_embed(2, 4, ball, 0.5);
    const TreeEmbedding b = hyperbolic_tree_embed(2, 4, ball, 0.5);
    REQUIRE(a.ell == b.ell);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i)
      REQUIRE(a.points[i].coords == b.points[i].coords);
  }
  SECTION("argument validation") {
    REQUIRE_THROWS_AS(hyperbolic_tree_embed(1, 1, ball, 0.5), invalid_input_error);
    REQUIRE_THROWS_AS(hyperbolic_tree_embed(2, -1, ball, 0.5), invalid_input_error);
    REQUIRE_THROWS_AS(hyperbolic_tree_embed(2, 1, ball, 0.0), invalid_input_error);
    REQUIRE_THROWS_AS(hyperbolic_tree_embed(2, 1, poincare::BallConfig(1.0, 1), 0.5),
                      invalid_input_error);
  }
}

TEST_CASE("hyperbolic radius linear in depth") {
  const poincare::BallConfig ball(1.0, 2);
  std::vector<double> ks, radii;
  for (int k = 1; k <= 12; ++k) {
    const TreeEmbedding& emb = hyp_at(k);
    if (k > 1) REQUIRE(emb.max_radius_hyp >= hyp_at(k - 1).max_radius_hyp);
    ks.push_back(k);
    radii.push_back(emb.max_radius_hyp);
  }
  REQUIRE(fit_line(ks, radii).r2 >= 0.99);

  // Within one embedding the level step is constant, so depth-prefix radii
  // grow by at most 2*ell per level: the fitted slope respects that bound.
  const TreeEmbedding& deep = hyp_at(12);
  std::vector<double> prefix(13, 0.0);
  for (std::size_t i = 0; i < deep.points.size(); ++i) {
    const double r = poincare::radial_distance(ball, deep.points[i]);
    for (int k = deep.depth[i]; k <= 12; ++k) prefix[k] = std::max(prefix[k], r);
  }
  const LineFit pf = fit_line(ks, {prefix.begin() + 1, prefix.end()});
  REQUIRE(pf.r2 >= 0.99);
  REQUIRE(pf.slope <= 2.0 * deep.ell + 1e-12);

  // independent post-hoc re-check of the deepest level's separation
  std::vector<std::size_t> leaves;
  for (std::size_t i = 0; i < deep.points.size(); ++i)
    if (deep.depth[i] == 12) leaves.push_back(i);
  REQUIRE(leaves.size() == 4096);
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < leaves.size(); ++a)
    for (std::size_t b = a + 1; b < leaves.size(); ++b)
      min_sep = std::min(
          min_sep, poincare::poincare_distance(ball, deep.points[leaves[a]], deep.points[leaves[b]]));
  REQUIRE(min_sep >= 0.5 - 1e-9);
}

TEST_CASE("hyperbolic embed reports saturation depth") {
  const poincare::BallConfig ball(1.0, 2);
  // 2^16 respects the point cap but the ball runs out of room much earlier
  REQUIRE_THROWS_AS(hyperbolic_tree_embed(2, 16, ball, 0.5), too_large_error);
  REQUIRE_THROWS_WITH(hyperbolic_tree_embed(2, 16, ball, 0.5), ContainsSubstring("level"));
  REQUIRE_THROWS_AS(hyperbolic_tree_embed(2, 17, ball, 0.5), too_large_error);
}

TEST_CASE("crowding index counts colliding mixed pairs") {
  SECTION("euclidean overload") {
    const std::vector<Vec> same(4, Vec{0.0, 0.0});
    REQUIRE(crowding_index(same, {0, 1, 2, 3}, 0.5) == 1.0);
    REQUIRE(crowding_index(same, {0, 0, 0, 0}, 0.5) == 0.0);  // no mixed pairs

    const std::vector<Vec> spread{{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
    REQUIRE(crowding_index(spread, {0, 1, 2}, 0.5) == 0.0);

    // one crowded mixed pair out of three
    const std::vector<Vec> partial{{0.0, 0.0}, {0.1, 0.0}, {10.0, 0.0}};
    REQUIRE_THAT(crowding_index(partial, {0, 1, 2}, 0.5),
                 Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-15));

    REQUIRE_THROWS_AS(crowding_index(spread, {0, 1}, 0.5), invalid_input_error);
    REQUIRE_THROWS_AS(crowding_index(spread, {0, 1, 2}, 0.0), invalid_input_error);
  }
  SECTION("hyperbolic overload") {
    const poincare::BallConfig ball(1.0, 2);
    const TreeEmbedding emb = hyperbolic_tree_embed(2, 2, ball, 0.5);
    std::vector<poincare::BallPoint> leaves;
    for (std::size_t i = 0; i < emb.points.size(); ++i)
      if (emb.depth[i] == 2) leaves.push_back(emb.points[i]);
    std::vector<int> labels(leaves.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i);
    // the embed post-condition makes its own leaves crowd-free at its eps
    REQUIRE(crowding_index(leaves, ball, labels, 0.5) == 0.0);

    // parent/child gaps are below eps, so labeling every node distinctly crowds
    std::vector<int> all_labels(emb.points.size());
    for (std::size_t i = 0; i < all_labels.size(); ++i) all_labels[i] = static_cast<int>(i);
    REQUIRE(crowding_index(emb.points, ball, all_labels, 0.5) > 0.0);
  }
}

TEST_CASE("capacity report: monotone radii and stable serialization") {
  CapacityConfig cfg;
  cfg.branching_b = 2;
  cfg.depth_range = {0, 1, 2, 3};
  cfg.dim_d = 2;
  cfg.epsilon_sep = 0.5;
  cfg.trials = 2;
  cfg.seed = 9;
  const CapacityReport rep = run_capacity(cfg);
  REQUIRE(rep.records.size() == 4);
  const std::vector<long long> expect_n{1, 2, 4, 8};
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const DepthRecord& r = rep.records[i];
    INFO("k=" << r.k);
    REQUIRE(r.k == static_cast<int>(i));
    REQUIRE(r.n_leaves == expect_n[i]);
    REQUIRE(r.min_radius_euclidean >= r.r_lb);
    REQUIRE_FALSE(r.approximate);
    if (i > 0) {
      REQUIRE(r.min_radius_euclidean >= rep.records[i - 1].min_radius_euclidean);
      REQUIRE(r.radius_hyperbolic >= rep.records[i - 1].radius_hyperbolic);
      REQUIRE(r.min_separation_achieved >= 0.5);
      REQUIRE(r.ell > 0.0);
    }
    // shallow trees leave plenty of room at the hyperbolic radius
    REQUIRE(r.crowding == 0.0);
  }
  REQUIRE(rep.records[0].min_radius_euclidean == 0.0);
  REQUIRE(std::isinf(rep.records[0].min_separation_achieved));

  const nlohmann::ordered_json j = report_to_json(rep);
  REQUIRE(j["config"]["branching_b"] == 2);
  REQUIRE(j["config"]["trials"] == 2);
  REQUIRE(j["records"].size() == 4);
  REQUIRE(j["records"][0]["min_separation_achieved"].is_null());
  REQUIRE(j["records"][3]["n_leaves"] == 8);
  REQUIRE(j["records"][3]["min_separation_achieved"].is_number());

  const std::string csv = report_to_csv(rep);
  REQUIRE(csv.rfind("k,n_leaves,R_euc,R_hyp,crowding\n", 0) == 0);
  REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 5);

  // same seed, same bytes
  const CapacityReport rep2 = run_capacity(cfg);
  REQUIRE(report_to_json(rep2).dump() == j.dump());
  REQUIRE(report_to_csv(rep2) == csv);
}

TEST_CASE("euclidean radius overtakes hyperbolic radius by depth twelve") {
  // Find the smallest depth from which the Euclidean estimate always exceeds
  // the hyperbolic radius at the same separation.
  int crossover = -1;
  for (int k = 12; k >= 1; --k) {
    if (euclid_at(k).radius > hyp_at(k).max_radius_hyp)
      crossover = k;
    else
      break;
  }
  REQUIRE(crossover != -1);
  REQUIRE(crossover <= 12);
  // The analytic bound alone forces the deepest comparison: placement quality
  // cannot undo the crossover.
  REQUIRE(euclid_at(12).r_lb > hyp_at(12).max_radius_hyp);
}
