#pragma once

// Capacity experiments: how large a Euclidean ball must grow to hold b^k
// eps-separated points, versus the hyperbolic radius a cone-split tree
// embedding needs for the same separation. Euclidean radii are estimated by
// repulsion dynamics inside a bisection; hyperbolic radii come from an explicit
// construction whose separation is verified post hoc.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "poincare.hpp"

namespace hyco::capacity {

// Desk-scale cap on the number of placed points.
inline constexpr long long kMaxLeaves = 65536;

struct CapacityConfig {
  int branching_b = 2;
  std::vector<int> depth_range;
  int dim_d = 2;
  double epsilon_sep = 0.5;
  int trials = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (branching_b < 2) throw invalid_input_error("CapacityConfig: branching_b must be > 1");
    if (depth_range.empty()) throw invalid_input_error("CapacityConfig: depth_range must be nonempty");
    for (int k : depth_range)
      if (k < 0) throw invalid_input_error("CapacityConfig: depths must be >= 0");
    if (dim_d < 2) throw invalid_input_error("CapacityConfig: dim_d must be >= 2");
    if (!(epsilon_sep > 0.0)) throw invalid_input_error("CapacityConfig: epsilon_sep must be > 0");
    if (trials < 1) throw invalid_input_error("CapacityConfig: trials must be >= 1");
    for (int k : depth_range) leaf_count(branching_b, k);
  }

  /// b^k with the desk-scale cap enforced.
  static long long leaf_count(int b, int k) {
    long long n = 1;
    for (int i = 0; i < k; ++i) {
      n *= b;
      if (n > kMaxLeaves)
        throw too_large_error("capacity: b^k exceeds the " + std::to_string(kMaxLeaves) +
                              " point cap (b=" + std::to_string(b) + ", k=" + std::to_string(k) +
                              ")");
    }
    return n;
  }
};

/// Analytic packing bound (eps/2)*(n^(1/d) - 1): n disjoint eps/2-balls around
/// points inside radius R all fit inside radius R + eps/2, so by volume
/// R >= this value for any valid placement.
inline double packing_lower_bound(long long n, int d, double eps) {
  if (n < 1) throw invalid_input_error("packing_lower_bound: n must be >= 1");
  if (d < 1) throw invalid_input_error("packing_lower_bound: d must be >= 1");
  if (!(eps > 0.0)) throw invalid_input_error("packing_lower_bound: eps must be > 0");
  const double root = std::pow(static_cast<double>(n), 1.0 / static_cast<double>(d));
  return std::max(0.0, 0.5 * eps * (root - 1.0));
}

struct EuclideanEstimate {
  double radius = 0.0;          // smallest feasible radius found, 1% relative precision
  double r_lb = 0.0;            // analytic packing lower bound
  double min_separation = 0.0;  // exact min pairwise distance of the kept placement
  bool approximate = false;     // true when the doubling phase hit its iteration cap
};

struct TreeEmbedding {
  std::vector<poincare::BallPoint> points;  // breadth-first: root, depth 1, ...
  std::vector<int> depth;                   // per point
  double ell = 0.0;                         // tangent step per level
  double max_radius_hyp = 0.0;              // max hyperbolic distance from the origin
};

struct DepthRecord {
  int k = 0;
  long long n_leaves = 0;
  double r_lb = 0.0;
  double min_radius_euclidean = 0.0;
  double min_separation_achieved = 0.0;
  bool approximate = false;
  double radius_hyperbolic = 0.0;
  double ell = 0.0;
  double crowding = 0.0;  // Euclidean crowding at the hyperbolic radius
};

struct CapacityReport {
  CapacityConfig config;
  std::vector<DepthRecord> records;
};

namespace detail {

inline constexpr int kRestarts = 20;

inline double sq_dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// All unordered pairs closer than cutoff. Uses a uniform grid with cell size
/// cutoff so only 3^d neighbor cells need scanning; falls back to the full
/// quadratic scan when the grid would not pay for itself.
inline void near_pairs(const std::vector<Vec>& pts, double cutoff,
                       std::vector<std::pair<int, int>>& out) {
  out.clear();
  const int n = static_cast<int>(pts.size());
  if (n < 2) return;
  const int d = static_cast<int>(pts[0].size());
  const double c2 = cutoff * cutoff;
  double cells = 1.0;
  for (int i = 0; i < d; ++i) cells *= 3.0;
  if (d > 3 || cells * n >= 0.5 * static_cast<double>(n) * n) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (sq_dist(pts[i], pts[j]) < c2) out.emplace_back(i, j);
    return;
  }
  // Pack per-axis cell indices into one key; 20 bits per axis covers d <= 3.
  auto key_of = [&](const Vec& p) {
    std::uint64_t key = 0;
    for (int a = 0; a < d; ++a) {
      const auto idx =
          static_cast<std::int64_t>(std::floor(p[a] / cutoff)) + (1ll << 19);
      key = (key << 20) | static_cast<std::uint64_t>(idx & 0xfffff);
    }
    return key;
  };
  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  grid.reserve(static_cast<std::size_t>(n) * 2);
  for (int i = 0; i < n; ++i) grid[key_of(pts[i])].push_back(i);
  std::vector<std::int64_t> base(d), off(d);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a)
      base[a] = static_cast<std::int64_t>(std::floor(pts[i][a] / cutoff)) + (1ll << 19);
    // odometer over the 3^d neighborhood
    std::fill(off.begin(), off.end(), -1);
    while (true) {
      std::uint64_t key = 0;
      for (int a = 0; a < d; ++a)
        key = (key << 20) | static_cast<std::uint64_t>((base[a] + off[a]) & 0xfffff);
      if (auto it = grid.find(key); it != grid.end())
        for (int j : it->second)
          if (j > i && sq_dist(pts[i], pts[j]) < c2) out.emplace_back(i, j);
      int a = d - 1;
      while (a >= 0 && off[a] == 1) off[a--] = -1;
      if (a < 0) break;
      ++off[a];
    }
  }
}

inline double exact_min_separation(const std::vector<Vec>& pts) {
  const int n = static_cast<int>(pts.size());
  if (n < 2) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) best = std::min(best, sq_dist(pts[i], pts[j]));
  return std::sqrt(best);
}

struct Placement {
  std::vector<Vec> pts;
  double min_sep = 0.0;  // exact once below 1.5*eps; otherwise a lower bound
};

/// One repulsion run: gradient ascent on a soft-min of pairwise distances,
/// points projected back into the radius-R ball after every step. The grid
/// pair list is rebuilt every kRebuildEvery steps with enough margin that any
/// pair able to drop below 1.5*eps before the next rebuild is already listed,
/// so the reported minimum is exact whenever it is below 1.5*eps. Stops early
/// on eps separation or after `patience` steps without improvement.
inline constexpr int kRebuildEvery = 3;

inline Placement repulse(int n, int d, double R, double eps, int iters, int patience, Rng rng) {
  Placement best;
  best.pts.assign(n, Vec(d, 0.0));
  if (n == 1 || R <= 0.0) {
    best.min_sep = n < 2 ? std::numeric_limits<double>::infinity() : 0.0;
    return best;
  }
  std::vector<Vec> x(n, Vec(d));
  for (auto& p : x) {
    double s2 = 0.0;
    for (double& v : p) {
      v = rng.normal();
      s2 += v * v;
    }
    const double r = R * std::pow(rng.uniform(), 1.0 / d) / std::max(std::sqrt(s2), 1e-300);
    for (double& v : p) v *= r;
  }
  const double cutoff = 1.5 * eps;
  const double step0 = 0.35 * eps;
  // Two points can close the gap by at most 2*step0 per step.
  const double grid_cut = cutoff + 2.0 * step0 * kRebuildEvery;
  best.pts = x;
  best.min_sep = -1.0;
  int last_improve = 0;
  std::vector<std::pair<int, int>> cand;
  std::vector<double> dist(1, 0.0);
  std::vector<Vec> g(n, Vec(d, 0.0));
  for (int t = 0; t < iters; ++t) {
    if (t % kRebuildEvery == 0) near_pairs(x, grid_cut, cand);
    dist.resize(cand.size());
    double min_d = cutoff;
    for (std::size_t p = 0; p < cand.size(); ++p) {
      dist[p] = std::sqrt(sq_dist(x[cand[p].first], x[cand[p].second]));
      min_d = std::min(min_d, dist[p]);
    }
    if (min_d > best.min_sep) {
      best.min_sep = min_d;
      best.pts = x;
      last_improve = t;
      if (min_d >= eps) return best;
    } else if (t - last_improve > patience) {
      return best;
    }
    if (cand.empty()) continue;  // nothing within range to push apart
    const double beta = (4.0 + 12.0 * t / iters) / eps;
    for (auto& v : g) std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t p = 0; p < cand.size(); ++p) {
      const auto [i, j] = cand[p];
      const double w = std::exp(-beta * (dist[p] - min_d));
      if (dist[p] < 1e-12) {
        // coincident points: push along a random direction
        for (int a = 0; a < d; ++a) {
          const double u = rng.normal();
          g[i][a] += w * u;
          g[j][a] -= w * u;
        }
        continue;
      }
      for (int a = 0; a < d; ++a) {
        const double u = w * (x[i][a] - x[j][a]) / dist[p];
        g[i][a] += u;
        g[j][a] -= u;
      }
    }
    const double step = step0 * (1.0 - 0.92 * t / iters);
    for (int i = 0; i < n; ++i) {
      const double gn = norm(g[i]);
      if (gn < 1e-15) continue;
      // full step under strong conflict pressure, proportional otherwise so
      // settled points stop churning
      const double scale_g = step / std::max(1.0, gn);
      double s2 = 0.0;
      for (int a = 0; a < d; ++a) {
        x[i][a] += scale_g * g[i][a];
        s2 += x[i][a] * x[i][a];
      }
      if (s2 > R * R) {
        const double scale = R / std::sqrt(s2);
        for (double& v : x[i]) v *= scale;
      }
    }
  }
  return best;
}

// The deep-crossover regime (n > 512) only needs coarse estimates, so its
// budget is trimmed hard.
inline int repulse_iters(long long n) {
  if (n <= 64) return 400;
  if (n <= 512) return 300;
  return 120;
}

inline int repulse_patience(long long n) { return n <= 512 ? 35 : 12; }

struct FeasibleResult {
  bool ok = false;
  Placement best;
};

/// Best of kRestarts repulsion runs at radius R, stopping as soon as one
/// restart reaches eps separation.
inline FeasibleResult try_radius(int n, int d, double R, double eps, int iters, int patience,
                                 Rng& master) {
  FeasibleResult res;
  res.best.min_sep = -1.0;
  for (int r = 0; r < kRestarts; ++r) {
    Placement p =
        repulse(n, d, R, eps, iters, patience, master.fork(static_cast<std::uint64_t>(r)));
    if (p.min_sep > res.best.min_sep) res.best = std::move(p);
    if (res.best.min_sep >= eps) {
      res.ok = true;
      return res;
    }
  }
  return res;
}

}  // namespace detail

/// Smallest radius R (1% relative precision via bisection) at which repulsion
/// placement packs b^k eps-separated points into the d-ball of radius R.
/// The bracket opens at the analytic packing bound, so the estimate always
/// dominates it.
inline EuclideanEstimate min_euclidean_radius(int b, int k, int d, double eps,
                                              std::uint64_t seed = 0) {
  if (b < 2) throw invalid_input_error("min_euclidean_radius: b must be > 1");
  if (k < 0) throw invalid_input_error("min_euclidean_radius: k must be >= 0");
  if (d < 2) throw invalid_input_error("min_euclidean_radius: d must be >= 2");
  if (!(eps > 0.0)) throw invalid_input_error("min_euclidean_radius: eps must be > 0");
  const long long n_ll = CapacityConfig::leaf_count(b, k);
  const int n = static_cast<int>(n_ll);
  EuclideanEstimate est;
  est.r_lb = packing_lower_bound(n_ll, d, eps);
  if (n == 1) {
    est.radius = 0.0;
    est.min_separation = std::numeric_limits<double>::infinity();
    return est;
  }
  const int iters = detail::repulse_iters(n_ll);
  const int patience = detail::repulse_patience(n_ll);
  Rng master(seed ^ 0x9e3779b97f4a7c15ull);
  std::uint64_t probe = 0;
  auto probe_rng = [&] { return master.fork(0x100 + probe++); };
  // The true optimum strictly exceeds r_lb for n >= 2, so the bound is a valid
  // infeasible lower bracket without probing it.
  double lo = est.r_lb;
  double hi = std::max({2.0 * est.r_lb, eps, 1e-12});
  detail::FeasibleResult kept;
  int doublings = 0;
  while (true) {
    Rng r = probe_rng();
    kept = detail::try_radius(n, d, hi, eps, iters, patience, r);
    if (kept.ok) break;
    lo = hi;
    hi *= 2.0;
    if (++doublings > 24) {
      est.approximate = true;
      est.radius = hi;
      est.min_separation = kept.best.min_sep;
      return est;
    }
  }
  while (hi - lo > 0.01 * hi) {
    const double mid = 0.5 * (lo + hi);
    Rng r = probe_rng();
    detail::FeasibleResult f = detail::try_radius(n, d, mid, eps, iters, patience, r);
    if (f.ok) {
      hi = mid;
      kept = std::move(f);
    } else {
      lo = mid;
    }
  }
  est.radius = hi;
  est.min_separation = detail::exact_min_separation(kept.best.pts);
  return est;
}

namespace detail {

struct TangentTree {
  bool saturated = false;
  int saturated_level = 0;
  bool sep_ok = false;
  std::vector<Vec> pos;     // 2-d tangent coordinates per node
  std::vector<int> depth;   // per node
  double max_tangent = 0.0; // largest tangent norm reached
};

/// Build the cone-split tree in the 2-d tangent plane at the origin: each node
/// owns an angular cone, children split it evenly and sit ell further out along
/// their sub-cone centers. Saturation (a point at or past the clip radius)
/// aborts the build; otherwise every same-depth pair is checked for hyperbolic
/// separation >= eps.
inline TangentTree build_tangent_tree(int b, int k, const poincare::BallConfig& ball, double eps,
                                      double ell) {
  TangentTree t;
  const double s = ball.sqrt_c();
  const double clip = ball.clip_radius();
  const double two_pi = 2.0 * std::acos(-1.0);
  t.pos.push_back(Vec{0.0, 0.0});
  t.depth.push_back(0);
  std::vector<std::pair<double, double>> cone{{0.0, two_pi}};
  std::size_t level_begin = 0;
  for (int lvl = 1; lvl <= k; ++lvl) {
    const std::size_t level_end = t.pos.size();
    std::vector<std::pair<double, double>> next_cone;
    for (std::size_t p = level_begin; p < level_end; ++p) {
      const auto [clo, chi] = cone[p - level_begin];
      const double w = (chi - clo) / b;
      for (int i = 0; i < b; ++i) {
        const double theta = clo + (i + 0.5) * w;
        Vec child{t.pos[p][0] + ell * std::cos(theta), t.pos[p][1] + ell * std::sin(theta)};
        const double r = norm(child);
        if (std::tanh(s * r) / s >= clip) {
          t.saturated = true;
          t.saturated_level = lvl;
          return t;
        }
        t.max_tangent = std::max(t.max_tangent, r);
        t.pos.push_back(std::move(child));
        t.depth.push_back(lvl);
        next_cone.emplace_back(clo + i * w, clo + (i + 1) * w);
      }
    }
    level_begin = level_end;
    cone = std::move(next_cone);
  }
  // Ball coordinates in the plane, then pairwise distances per depth.
  const std::size_t m = t.pos.size();
  std::vector<Vec> z(m, Vec(2, 0.0));
  std::vector<double> znorm2(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double r = norm(t.pos[i]);
    if (r < 1e-12) continue;
    const double rho = std::tanh(s * r) / s;
    z[i][0] = rho * t.pos[i][0] / r;
    z[i][1] = rho * t.pos[i][1] / r;
    znorm2[i] = rho * rho;
  }
  const double c = ball.curvature_c;
  std::size_t begin = 1;
  for (int lvl = 1; lvl <= k; ++lvl) {
    std::size_t end = begin;
    while (end < m && t.depth[end] == lvl) ++end;
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = i + 1; j < end; ++j) {
        const double dx = z[i][0] - z[j][0];
        const double dy = z[i][1] - z[j][1];
        const double arg =
            1.0 + 2.0 * c * (dx * dx + dy * dy) / ((1.0 - c * znorm2[i]) * (1.0 - c * znorm2[j]));
        const double dist = std::acosh(std::max(1.0, arg)) / s;
        if (dist < eps) {
          t.sep_ok = false;
          return t;
        }
      }
    begin = end;
  }
  t.sep_ok = true;
  return t;
}

}  // namespace detail

/// Embed the full b-ary depth-k tree in the Poincare ball: root at the origin,
/// children placed ell further out along even angular cone splits in the
/// tangent plane. ell starts at eps, doubles until the post-hoc separation
/// check passes, then bisects down to two decimal places. Throws
/// too_large_error naming the failing level if the ball saturates first.
inline TreeEmbedding hyperbolic_tree_embed(int b, int k, const poincare::BallConfig& ball,
                                           double eps) {
  ball.validate();
  if (b < 2) throw invalid_input_error("hyperbolic_tree_embed: b must be > 1");
  if (k < 0) throw invalid_input_error("hyperbolic_tree_embed: k must be >= 0");
  if (ball.dim < 2) throw invalid_input_error("hyperbolic_tree_embed: ball dim must be >= 2");
  if (!(eps > 0.0)) throw invalid_input_error("hyperbolic_tree_embed: eps must be > 0");
  CapacityConfig::leaf_count(b, k);
  TreeEmbedding emb;
  if (k == 0) {
    emb.points.push_back(poincare::BallPoint{Vec(ball.dim, 0.0)});
    emb.depth.push_back(0);
    return emb;
  }
  auto saturation = [&](int level) {
    return too_large_error("hyperbolic_tree_embed: ball saturates at level " +
                           std::to_string(level) + " of " + std::to_string(k) +
                           "; depth too large for this curvature");
  };
  double lo = 0.0;
  double hi = eps;
  detail::TangentTree t = detail::build_tangent_tree(b, k, ball, eps, hi);
  if (t.saturated) throw saturation(t.saturated_level);
  int doublings = 0;
  while (!t.sep_ok) {
    lo = hi;
    hi *= 2.0;
    t = detail::build_tangent_tree(b, k, ball, eps, hi);
    if (t.saturated) throw saturation(t.saturated_level);
    if (++doublings > 32)
      throw too_large_error("hyperbolic_tree_embed: no separating step length found");
  }
  while (hi - lo > 0.0025) {
    const double mid = 0.5 * (lo + hi);
    detail::TangentTree tm = detail::build_tangent_tree(b, k, ball, eps, mid);
    if (tm.saturated) throw saturation(tm.saturated_level);
    if (tm.sep_ok) {
      hi = mid;
      t = std::move(tm);
    } else {
      lo = mid;
    }
  }
  // Round up to two decimal places; fall back to the unrounded value if the
  // rounded step saturates or loses separation.
  const double rounded = std::ceil(hi * 100.0 - 1e-9) / 100.0;
  if (rounded != hi) {
    detail::TangentTree tr = detail::build_tangent_tree(b, k, ball, eps, rounded);
    if (tr.sep_ok && !tr.saturated) {
      hi = rounded;
      t = std::move(tr);
    }
  }
  emb.ell = hi;
  const double s = ball.sqrt_c();
  emb.points.reserve(t.pos.size());
  for (std::size_t i = 0; i < t.pos.size(); ++i) {
    Vec coords(ball.dim, 0.0);
    const double r = norm(t.pos[i]);
    if (r >= 1e-12) {
      const double rho = std::tanh(s * r) / s;
      coords[0] = rho * t.pos[i][0] / r;
      coords[1] = rho * t.pos[i][1] / r;
    }
    emb.points.push_back(poincare::BallPoint{std::move(coords)});
  }
  emb.depth = std::move(t.depth);
  emb.max_radius_hyp = 2.0 * t.max_tangent;
  return emb;
}

/// Fraction of distinct-label pairs closer than eps. Zero when no
/// distinct-label pair exists.
inline double crowding_index(const std::vector<Vec>& points, const std::vector<int>& labels,
                             double eps) {
  if (points.size() != labels.size())
    throw invalid_input_error("crowding_index: points/labels size mismatch");
  if (!(eps > 0.0)) throw invalid_input_error("crowding_index: eps must be > 0");
  const int n = static_cast<int>(points.size());
  long long mixed = 0, close = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j]) continue;
      ++mixed;
      if (detail::sq_dist(points[i], points[j]) < eps * eps) ++close;
    }
  return mixed == 0 ? 0.0 : static_cast<double>(close) / static_cast<double>(mixed);
}

/// Hyperbolic-distance variant of crowding_index.
inline double crowding_index(const std::vector<poincare::BallPoint>& points,
                             const poincare::BallConfig& ball, const std::vector<int>& labels,
                             double eps) {
  if (points.size() != labels.size())
    throw invalid_input_error("crowding_index: points/labels size mismatch");
  if (!(eps > 0.0)) throw invalid_input_error("crowding_index: eps must be > 0");
  const int n = static_cast<int>(points.size());
  long long mixed = 0, close = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (labels[i] == labels[j]) continue;
      ++mixed;
      if (poincare::poincare_distance(ball, points[i], points[j]) < eps) ++close;
    }
  return mixed == 0 ? 0.0 : static_cast<double>(close) / static_cast<double>(mixed);
}

namespace detail {

/// Crowding of the best Euclidean placement (5 restarts) of n points confined
/// to radius R: fraction of pairs left closer than eps.
inline double euclidean_crowding_at(int n, int d, double R, double eps, std::uint64_t seed) {
  if (n < 2) return 0.0;
  const int iters = repulse_iters(n);
  const int patience = repulse_patience(n);
  Rng master(seed ^ 0xc2b2ae3d27d4eb4full);
  Placement best;
  best.min_sep = -1.0;
  for (int r = 0; r < 5; ++r) {
    Placement p =
        repulse(n, d, R, eps, iters, patience, master.fork(static_cast<std::uint64_t>(r)));
    if (p.min_sep > best.min_sep) best = std::move(p);
    if (best.min_sep >= eps) break;
  }
  long long close = 0;
  const double e2 = eps * eps;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (sq_dist(best.pts[i], best.pts[j]) < e2) ++close;
  const long long pairs = static_cast<long long>(n) * (n - 1) / 2;
  return static_cast<double>(close) / static_cast<double>(pairs);
}

}  // namespace detail

/// Full capacity sweep. Euclidean estimates take the best (smallest) radius
/// over cfg.trials independently seeded runs, folded in trial order. The
/// hyperbolic side uses curvature 1. Crowding measures how tightly b^k
/// Euclidean points can avoid each other when confined to the hyperbolic
/// radius: distinct labels per point, fraction of pairs closer than eps.
inline CapacityReport run_capacity(const CapacityConfig& cfg) {
  cfg.validate();
  CapacityReport rep;
  rep.config = cfg;
  const poincare::BallConfig ball(1.0, cfg.dim_d);
  for (int k : cfg.depth_range) {
    DepthRecord rec;
    rec.k = k;
    rec.n_leaves = CapacityConfig::leaf_count(cfg.branching_b, k);
    EuclideanEstimate best;
    for (int t = 0; t < cfg.trials; ++t) {
      const std::uint64_t s = cfg.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(t + 1);
      EuclideanEstimate e = min_euclidean_radius(cfg.branching_b, k, cfg.dim_d, cfg.epsilon_sep, s);
      if (t == 0 || e.radius < best.radius) best = e;
    }
    rec.r_lb = best.r_lb;
    rec.min_radius_euclidean = best.radius;
    rec.min_separation_achieved = best.min_separation;
    rec.approximate = best.approximate;
    TreeEmbedding emb = hyperbolic_tree_embed(cfg.branching_b, k, ball, cfg.epsilon_sep);
    rec.radius_hyperbolic = emb.max_radius_hyp;
    rec.ell = emb.ell;
    rec.crowding = detail::euclidean_crowding_at(static_cast<int>(rec.n_leaves), cfg.dim_d,
                                                 rec.radius_hyperbolic, cfg.epsilon_sep, cfg.seed);
    rep.records.push_back(std::move(rec));
  }
  return rep;
}

inline nlohmann::ordered_json report_to_json(const CapacityReport& rep) {
  nlohmann::ordered_json j;
  j["config"] = {{"branching_b", rep.config.branching_b},
                 {"depth_range", rep.config.depth_range},
                 {"dim_d", rep.config.dim_d},
                 {"epsilon_sep", rep.config.epsilon_sep},
                 {"trials", rep.config.trials},
                 {"seed", rep.config.seed}};
  j["records"] = nlohmann::ordered_json::array();
  for (const DepthRecord& r : rep.records) {
    nlohmann::ordered_json rj;
    rj["k"] = r.k;
    rj["n_leaves"] = r.n_leaves;
    rj["r_lb"] = r.r_lb;
    rj["min_radius_euclidean"] = r.min_radius_euclidean;
    if (std::isfinite(r.min_separation_achieved))
      rj["min_separation_achieved"] = r.min_separation_achieved;
    else
      rj["min_separation_achieved"] = nullptr;
    rj["approximate"] = r.approximate;
    rj["radius_hyperbolic"] = r.radius_hyperbolic;
    rj["ell"] = r.ell;
    rj["crowding"] = r.crowding;
    j["records"].push_back(std::move(rj));
  }
  return j;
}

inline std::string report_to_csv(const CapacityReport& rep) {
  std::string out = "k,n_leaves,R_euc,R_hyp,crowding\n";
  for (const DepthRecord& r : rep.records) {
    out += std::to_string(r.k);
    out += ',';
    out += std::to_string(r.n_leaves);
    out += ',';
    out += format_double(r.min_radius_euclidean);
    out += ',';
    out += format_double(r.radius_hyperbolic);
    out += ',';
    out += format_double(r.crowding);
    out += '\n';
  }
  return out;
}

}  // namespace hyco::capacity
