#pragma once

// Shared plumbing for the hyco library: error hierarchy, a portable
// deterministic RNG, a small dense row-major matrix, and number formatting
// helpers used by every serializer.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyco {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise malformed numeric input.
struct invalid_input_error : error {
  using error::error;
};

/// A point claimed to be on the Poincare ball lies on or outside the boundary.
struct out_of_manifold_error : error {
  using error::error;
};

/// Gradient requested at a point where it does not exist (coincident points).
struct degenerate_gradient_error : error {
  using error::error;
};

/// A distance matrix failed symmetry/nonnegativity/triangle validation.
struct invalid_metric_error : error {
  using error::error;
};

/// A requested computation exceeds a hard resource cap.
struct too_large_error : error {
  using error::error;
};

/// A file or record violates its declared schema.
struct schema_error : error {
  using error::error;
};

/// File system / stream failure.
struct io_error : error {
  using error::error;
};

/// Training loss exploded.
struct divergence_error : error {
  using error::error;
};

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sqnorm(std::span<const double> a) { return dot(a, a); }

inline double norm(std::span<const double> a) { return std::sqrt(sqnorm(a)); }

inline bool all_finite(std::span<const double> a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Matrix: dense, row-major, double
// ---------------------------------------------------------------------------

struct Mat {
  int rows = 0;
  int cols = 0;
  Vec a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
  Mat(int r, int c, Vec data) : rows(r), cols(c), a(std::move(data)) {
    if (a.size() != static_cast<std::size_t>(r) * c)
      throw invalid_input_error("Mat: data size does not match shape");
  }

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

  std::span<double> row(int r) { return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const double> row(int r) const {
    return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
  }

  std::size_t size() const { return a.size(); }

  void fill(double v) {
    for (double& x : a) x = v;
  }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

/// out = m1 * m2
inline Mat matmul(const Mat& m1, const Mat& m2) {
  if (m1.cols != m2.rows) throw invalid_input_error("matmul: inner dimensions differ");
  Mat out(m1.rows, m2.cols);
  for (int i = 0; i < m1.rows; ++i) {
    for (int k = 0; k < m1.cols; ++k) {
      const double v = m1(i, k);
      if (v == 0.0) continue;
      const double* src = &m2.a[static_cast<std::size_t>(k) * m2.cols];
      double* dst = &out.a[static_cast<std::size_t>(i) * out.cols];
      for (int j = 0; j < m2.cols; ++j) dst[j] += v * src[j];
    }
  }
  return out;
}

/// out = m1 * m2^T
inline Mat matmul_nt(const Mat& m1, const Mat& m2) {
  if (m1.cols != m2.cols) throw invalid_input_error("matmul_nt: inner dimensions differ");
  Mat out(m1.rows, m2.rows);
  for (int i = 0; i < m1.rows; ++i)
    for (int j = 0; j < m2.rows; ++j) out(i, j) = dot(m1.row(i), m2.row(j));
  return out;
}

/// out = m1^T * m2
inline Mat matmul_tn(const Mat& m1, const Mat& m2) {
  if (m1.rows != m2.rows) throw invalid_input_error("matmul_tn: inner dimensions differ");
  Mat out(m1.cols, m2.cols);
  for (int k = 0; k < m1.rows; ++k) {
    const double* r1 = &m1.a[static_cast<std::size_t>(k) * m1.cols];
    const double* r2 = &m2.a[static_cast<std::size_t>(k) * m2.cols];
    for (int i = 0; i < m1.cols; ++i) {
      double* dst = &out.a[static_cast<std::size_t>(i) * out.cols];
      const double v = r1[i];
      if (v == 0.0) continue;
      for (int j = 0; j < m2.cols; ++j) dst[j] += v * r2[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic RNG
//
// splitmix64 raw stream with hand-rolled distributions so that results are
// bit-identical across standard libraries (std::normal_distribution is
// implementation-defined).
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {
    // splitmix64 warm-up so nearby seeds decorrelate
    for (int i = 0; i < 4; ++i) next_raw();
  }

  std::uint64_t next_raw() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_raw() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection sampling keeps the draw exactly uniform
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_raw();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (caches the second deviate).
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Derive an independent stream for a named sub-task.
  Rng fork(std::uint64_t stream) {
    Rng r(state_ ^ (0xd1b54a32d192ed03ull * (stream + 1)));
    return r;
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

// ---------------------------------------------------------------------------
// Number formatting (shortest round-trip, locale-free)
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw error("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw schema_error("parse_double: not a decimal number: '" + std::string(s) + "'");
  return v;
}

}  // namespace hyco
