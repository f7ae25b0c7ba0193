#pragma once

// Gromov delta-hyperbolicity of finite metric samples via the four-point
// condition: for a quadruple {w,x,y,z} with pairwise sums
//   S1 = d(w,x)+d(y,z), S2 = d(w,y)+d(x,z), S3 = d(w,z)+d(x,y)
// sorted descending as L1 >= L2 >= L3, the contribution is (L1-L2)/2 and
// delta is the maximum over quadruples. Exact scan for small n, uniform
// quadruple sampling for large n.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "hyco/core.hpp"
#include "hyco/poincare.hpp"

namespace hyco::hyperbolicity {

struct MetricSample {
  int n = 0;
  Mat dist;  // n x n, symmetric, zero diagonal

  /// Validate and wrap a distance matrix. Symmetry and the zero diagonal
  /// are required exactly; the triangle inequality is checked within 1e-9,
  /// exhaustively for n <= 200 and on 10n sampled triples otherwise.
  static MetricSample from_matrix(Mat d);
};

struct DeltaReport {
  double delta = 0.0;
  double diameter = 0.0;
  double relative_delta = 0.0;
  std::string mode;  // "exact" or "sampled"
  long long quadruples_evaluated = 0;
  std::optional<uint64_t> seed;
};

namespace detail {

inline double quad_contribution(const Mat& d, int w, int x, int y, int z) {
  const double s1 = d(w, x) + d(y, z);
  const double s2 = d(w, y) + d(x, z);
  const double s3 = d(w, z) + d(x, y);
  double l1 = s1, l2 = s2, l3 = s3;
  if (l1 < l2) std::swap(l1, l2);
  if (l2 < l3) std::swap(l2, l3);
  if (l1 < l2) std::swap(l1, l2);
  return (l1 - l2) / 2.0;
}

inline double diameter_of(const Mat& d) {
  double m = 0.0;
  for (int i = 0; i < d.rows; ++i)
    for (int j = i + 1; j < d.cols; ++j) m = std::max(m, d(i, j));
  return m;
}

inline void finish_report(DeltaReport& r) {
  r.relative_delta = r.diameter > 0.0 ? 2.0 * r.delta / r.diameter : 0.0;
}

}  // namespace detail

inline MetricSample MetricSample::from_matrix(Mat d) {
  if (d.rows != d.cols || d.rows < 1)
    throw invalid_metric_error("MetricSample: matrix must be square and nonempty");
  const int n = d.rows;
  for (int i = 0; i < n; ++i) {
    if (d(i, i) != 0.0) throw invalid_metric_error("MetricSample: nonzero diagonal");
    for (int j = 0; j < n; ++j) {
      const double v = d(i, j);
      if (!std::isfinite(v) || v < 0.0)
        throw invalid_metric_error("MetricSample: negative or non-finite entry");
      if (d(i, j) != d(j, i)) throw invalid_metric_error("MetricSample: asymmetric matrix");
    }
  }
  auto check_triple = [&](int i, int j, int k) {
    if (d(i, k) > d(i, j) + d(j, k) + 1e-9)
      throw invalid_metric_error("MetricSample: triangle inequality violated");
  };
  if (n <= 200) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (i != j && j != k && i != k) check_triple(i, j, k);
  } else {
    Rng rng(static_cast<uint64_t>(n));  // deterministic spot check
    for (int t = 0; t < 10 * n; ++t) {
      const int i = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
      const int j = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
      const int k = static_cast<int>(rng.below(static_cast<uint64_t>(n)));
      if (i != j && j != k && i != k) check_triple(i, j, k);
    }
  }
  return MetricSample{n, std::move(d)};
}

/// Exact four-point scan over all C(n,4) quadruples. n < 4 yields delta 0.
inline DeltaReport gromov_delta_exact(const MetricSample& s) {
  DeltaReport r;
  r.mode = "exact";
  r.diameter = detail::diameter_of(s.dist);
  if (s.n >= 4) {
    for (int w = 0; w < s.n; ++w)
      for (int x = w + 1; x < s.n; ++x)
        for (int y = x + 1; y < s.n; ++y)
          for (int z = y + 1; z < s.n; ++z) {
            r.delta = std::max(r.delta, detail::quad_contribution(s.dist, w, x, y, z));
            ++r.quadruples_evaluated;
          }
  }
  detail::finish_report(r);
  return r;
}

/// Max over uniformly sampled distinct quadruples; deterministic given seed.
/// Duplicated quadruples across draws are allowed (they only repeat work).
inline DeltaReport gromov_delta_sampled(const MetricSample& s, long long num_quadruples,
                                        uint64_t seed) {
  if (num_quadruples < 1) throw invalid_input_error("gromov_delta_sampled: num_quadruples < 1");
  DeltaReport r;
  r.mode = "sampled";
  r.seed = seed;
  r.diameter = detail::diameter_of(s.dist);
  if (s.n >= 4) {
    Rng rng(seed);
    int idx[4];
    for (long long t = 0; t < num_quadruples; ++t) {
      for (int filled = 0; filled < 4;) {
        const int cand = static_cast<int>(rng.below(static_cast<uint64_t>(s.n)));
        bool dup = false;
        for (int u = 0; u < filled; ++u) dup = dup || idx[u] == cand;
        if (!dup) idx[filled++] = cand;
      }
      r.delta = std::max(r.delta, detail::quad_contribution(s.dist, idx[0], idx[1], idx[2], idx[3]));
      ++r.quadruples_evaluated;
    }
  }
  detail::finish_report(r);
  return r;
}

/// Pairwise Euclidean distance matrix.
inline MetricSample metric_from_embeddings(const std::vector<Vec>& points) {
  if (points.empty()) throw invalid_input_error("metric_from_embeddings: no points");
  const int n = static_cast<int>(points.size());
  const size_t d = points[0].size();
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    if (points[i].size() != d)
      throw invalid_input_error("metric_from_embeddings: dimension mismatch");
    if (!all_finite(points[i]))
      throw invalid_input_error("metric_from_embeddings: non-finite point");
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (size_t k = 0; k < d; ++k) {
        const double t = points[i][k] - points[j][k];
        acc += t * t;
      }
      m(i, j) = m(j, i) = std::sqrt(acc);
    }
  return MetricSample::from_matrix(std::move(m));
}

/// Pairwise Poincare distance matrix; points must lie inside the ball.
inline MetricSample metric_from_embeddings(const std::vector<Vec>& points,
                                           const poincare::BallConfig& ball) {
  if (points.empty()) throw invalid_input_error("metric_from_embeddings: no points");
  const int n = static_cast<int>(points.size());
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      m(i, j) = m(j, i) = poincare::poincare_distance(ball, poincare::BallPoint{points[i]},
                                                      poincare::BallPoint{points[j]});
  return MetricSample::from_matrix(std::move(m));
}

}  // namespace hyco::hyperbolicity
