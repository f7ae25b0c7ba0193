#pragma once

// Poincare-ball primitives: origin exponential/logarithmic maps, geodesic
// distance, boundary projection and analytic distance gradients.
//
// The ball of curvature -c is { z : ||z|| < 1/sqrt(c) }. All constructors
// clip produced points to radius (1 - boundary_eps)/sqrt(c) so that the
// arctanh/arccosh evaluations downstream stay finite.

#include <cmath>
#include <utility>

#include "hyco/core.hpp"

namespace hyco::poincare {

struct BallConfig {
  double curvature_c = 1.0;
  int dim = 2;
  double boundary_eps = 1e-5;

  BallConfig() = default;
  BallConfig(double c, int d, double eps = 1e-5) : curvature_c(c), dim(d), boundary_eps(eps) {
    validate();
  }

  void validate() const {
    if (!(curvature_c > 0.0)) throw invalid_input_error("BallConfig: curvature_c must be > 0");
    if (dim < 1) throw invalid_input_error("BallConfig: dim must be >= 1");
    if (!(boundary_eps > 0.0 && boundary_eps < 1.0))
      throw invalid_input_error("BallConfig: boundary_eps must be in (0, 1)");
  }

  double sqrt_c() const { return std::sqrt(curvature_c); }

  /// Largest norm a constructed point may have.
  double clip_radius() const { return (1.0 - boundary_eps) / sqrt_c(); }

  /// Open-ball radius 1/sqrt(c).
  double ball_radius() const { return 1.0 / sqrt_c(); }
};

/// A point strictly inside the ball.
struct BallPoint {
  Vec coords;
};

/// An element of the tangent space at the origin. Unbounded.
struct TangentVec {
  Vec coords;
};

namespace detail {

// Norm threshold below which exp/log take their analytic limit at the origin.
inline constexpr double kZeroNormEps = 1e-12;

inline void require_finite(std::span<const double> v, const char* who) {
  if (!all_finite(v)) throw invalid_input_error(std::string(who) + ": non-finite input");
}

inline void require_in_ball(const BallConfig& cfg, std::span<const double> z, const char* who) {
  require_finite(z, who);
  if (static_cast<int>(z.size()) != cfg.dim)
    throw invalid_input_error(std::string(who) + ": dimension mismatch");
  if (norm(z) >= cfg.ball_radius())
    throw out_of_manifold_error(std::string(who) + ": point on or outside the ball boundary");
}

}  // namespace detail

/// Rescale v into the closed ball of radius (1 - boundary_eps)/sqrt(c).
/// Identity for vectors already inside.
inline BallPoint project_to_ball(const BallConfig& cfg, const Vec& v) {
  detail::require_finite(v, "project_to_ball");
  if (static_cast<int>(v.size()) != cfg.dim)
    throw invalid_input_error("project_to_ball: dimension mismatch");
  const double r = norm(v);
  const double rmax = cfg.clip_radius();
  if (r <= rmax) return BallPoint{v};
  Vec out(v);
  const double s = rmax / r;
  for (double& x : out) x *= s;
  return BallPoint{std::move(out)};
}

/// exp_0^c(x) = tanh(sqrt(c)||x||) * x / (sqrt(c)||x||), clipped to the ball.
inline BallPoint exp_map_origin(const BallConfig& cfg, const TangentVec& x) {
  detail::require_finite(x.coords, "exp_map_origin");
  if (static_cast<int>(x.coords.size()) != cfg.dim)
    throw invalid_input_error("exp_map_origin: dimension mismatch");
  const double r = norm(x.coords);
  if (r < detail::kZeroNormEps) return BallPoint{Vec(cfg.dim, 0.0)};
  const double s = cfg.sqrt_c();
  const double scale = std::tanh(s * r) / (s * r);
  Vec z(cfg.dim);
  for (int i = 0; i < cfg.dim; ++i) z[i] = scale * x.coords[i];
  return project_to_ball(cfg, z);
}

/// log_0^c(z) = (1/sqrt(c)) * arctanh(sqrt(c)||z||) * z / ||z||.
inline TangentVec log_map_origin(const BallConfig& cfg, const BallPoint& z) {
  detail::require_in_ball(cfg, z.coords, "log_map_origin");
  const double r = norm(z.coords);
  if (r < detail::kZeroNormEps) return TangentVec{Vec(cfg.dim, 0.0)};
  const double s = cfg.sqrt_c();
  const double arg = std::min(s * r, 1.0 - 1e-15);
  const double scale = std::atanh(arg) / (s * r);
  Vec x(cfg.dim);
  for (int i = 0; i < cfg.dim; ++i) x[i] = scale * z.coords[i];
  return TangentVec{std::move(x)};
}

/// Poincare distance
///   d(z1, z2) = (1/sqrt(c)) arccosh(1 + 2c||z1-z2||^2 /
///                                   ((1 - c||z1||^2)(1 - c||z2||^2)))
inline double poincare_distance(const BallConfig& cfg, const BallPoint& z1, const BallPoint& z2) {
  detail::require_in_ball(cfg, z1.coords, "poincare_distance");
  detail::require_in_ball(cfg, z2.coords, "poincare_distance");
  const double c = cfg.curvature_c;
  double diff2 = 0.0;
  for (int i = 0; i < cfg.dim; ++i) {
    const double d = z1.coords[i] - z2.coords[i];
    diff2 += d * d;
  }
  const double alpha = 1.0 - c * sqnorm(z1.coords);
  const double beta = 1.0 - c * sqnorm(z2.coords);
  double gamma = 1.0 + 2.0 * c * diff2 / (alpha * beta);
  if (gamma < 1.0) gamma = 1.0;  // rounding guard
  return std::acosh(gamma) / cfg.sqrt_c();
}

/// Ambient-coordinate gradients (dd/dz1, dd/dz2) of poincare_distance.
///
/// With A = ||z1-z2||^2, alpha = 1-c||z1||^2, beta = 1-c||z2||^2 and
/// gamma as in the distance:
///   dd/dz1 = 4 sqrt(c) / (alpha beta sqrt(gamma^2-1)) * ((z1-z2) + (cA/alpha) z1)
/// and symmetrically for z2.
inline std::pair<Vec, Vec> distance_grad(const BallConfig& cfg, const BallPoint& z1,
                                         const BallPoint& z2) {
  detail::require_in_ball(cfg, z1.coords, "distance_grad");
  detail::require_in_ball(cfg, z2.coords, "distance_grad");
  const double c = cfg.curvature_c;
  const int d = cfg.dim;
  double diff2 = 0.0;
  for (int i = 0; i < d; ++i) {
    const double t = z1.coords[i] - z2.coords[i];
    diff2 += t * t;
  }
  if (diff2 < detail::kZeroNormEps * detail::kZeroNormEps)
    throw degenerate_gradient_error("distance_grad: coincident points");
  const double alpha = 1.0 - c * sqnorm(z1.coords);
  const double beta = 1.0 - c * sqnorm(z2.coords);
  double gamma = 1.0 + 2.0 * c * diff2 / (alpha * beta);
  if (gamma < 1.0) gamma = 1.0;
  const double root = std::sqrt(std::max(gamma * gamma - 1.0, 1e-300));
  const double common = 4.0 * cfg.sqrt_c() / (alpha * beta * root);
  Vec g1(d), g2(d);
  const double ka = c * diff2 / alpha;
  const double kb = c * diff2 / beta;
  for (int i = 0; i < d; ++i) {
    const double diff = z1.coords[i] - z2.coords[i];
    g1[i] = common * (diff + ka * z1.coords[i]);
    g2[i] = common * (-diff + kb * z2.coords[i]);
  }
  return {std::move(g1), std::move(g2)};
}

/// Distance from the origin, d(0, z) = (2/sqrt(c)) arctanh(sqrt(c)||z||).
/// Closed form used as an independent cross-check of poincare_distance.
inline double radial_distance(const BallConfig& cfg, const BallPoint& z) {
  detail::require_in_ball(cfg, z.coords, "radial_distance");
  const double s = cfg.sqrt_c();
  return 2.0 / s * std::atanh(std::min(s * norm(z.coords), 1.0 - 1e-15));
}

}  // namespace hyco::poincare
