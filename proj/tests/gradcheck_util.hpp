#pragma once

// Central finite-difference gradient checking for Tape graphs.
//
// The builder receives a fresh tape plus the leaf ids of the supplied
// parameter matrices and returns the id of a 1×1 loss node. It must be a
// pure function of the parameter values (any randomness it needs has to be
// reseeded inside, so rebuilds see identical masks).

#include <cmath>
#include <functional>
#include <vector>

#include "hyco/autodiff.hpp"

namespace gradcheck {

using hyco::Mat;

using BuildFn = std::function<int(hyco::ad::Tape&, const std::vector<int>&)>;

struct Report {
  double worst = 0.0;   // max of |analytic-numeric| / (|analytic|+|numeric| + floor/tol)
  int entries = 0;
  double loss = 0.0;
};

inline double eval_loss(const std::vector<Mat>& params, const BuildFn& build) {
  hyco::ad::Tape tape;
  std::vector<int> ids;
  ids.reserve(params.size());
  for (const auto& p : params) ids.push_back(tape.leaf(p));
  return tape.value(build(tape, ids))(0, 0);
}

/// Compare analytic gradients against central differences entry by entry.
/// The acceptance criterion |a-n| < tol*(|a|+|n|) + floor is folded into a
/// single ratio so the caller asserts report.worst < tol.
inline Report compare(std::vector<Mat> params, const BuildFn& build, double step = 1e-5,
                      double tol = 1e-6, double floor = 1e-9) {
  Report rep;
  std::vector<Mat> analytic;
  {
    hyco::ad::Tape tape;
    std::vector<int> ids;
    for (const auto& p : params) ids.push_back(tape.leaf(p));
    const int loss = build(tape, ids);
    rep.loss = tape.value(loss)(0, 0);
    tape.backward(loss);
    for (int id : ids) analytic.push_back(tape.grad(id));
  }
  for (size_t p = 0; p < params.size(); ++p) {
    for (size_t e = 0; e < params[p].a.size(); ++e) {
      const double keep = params[p].a[e];
      params[p].a[e] = keep + step;
      const double up = eval_loss(params, build);
      params[p].a[e] = keep - step;
      const double down = eval_loss(params, build);
      params[p].a[e] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p].a[e];
      const double ratio = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + floor / tol);
      rep.worst = std::max(rep.worst, ratio);
      ++rep.entries;
    }
  }
  return rep;
}

}  // namespace gradcheck
