#pragma once

// Small reverse-mode autodiff tape over Mat values. Every operation computes
// its value eagerly and records a closure that accumulates parent gradients.
// Fused geometry ops (exp/log map rows, pairwise hyperbolic contrastive)
// carry hand-derived Jacobians built on poincare::distance_grad; everything
// is validated against central finite differences in the test suite.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "hyco/core.hpp"
#include "hyco/poincare.hpp"

namespace hyco::ad {

class Tape {
 public:
  /// Create a leaf. Leaves own their gradient buffers; call grad() after
  /// backward() to read them.
  int leaf(Mat value) {
    nodes_.push_back({std::move(value), {}, nullptr});
    Node& n = nodes_.back();
    n.grad = Mat(n.value.rows, n.value.cols);
    return static_cast<int>(nodes_.size()) - 1;
  }

  const Mat& value(int id) const { return nodes_.at(id).value; }
  const Mat& grad(int id) const { return nodes_.at(id).grad; }

  int matmul(int a, int b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    if (A.cols != B.rows) throw invalid_input_error("ad::matmul: shape mismatch");
    Mat out(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
      for (int k = 0; k < A.cols; ++k) {
        const double av = A(i, k);
        if (av == 0.0) continue;
        for (int j = 0; j < B.cols; ++j) out(i, j) += av * B(k, j);
      }
    return push(std::move(out), [a, b](Tape& t, const Mat& g, const Mat&) {
      const Mat& A = t.val(a);
      const Mat& B = t.val(b);
      Mat& dA = t.mut_grad(a);
      Mat& dB = t.mut_grad(b);
      for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < B.cols; ++j) {
          const double gv = g(i, j);
          if (gv == 0.0) continue;
          for (int k = 0; k < A.cols; ++k) {
            dA(i, k) += gv * B(k, j);
            dB(k, j) += gv * A(i, k);
          }
        }
    });
  }

  /// a · bᵀ.
  int matmul_nt(int a, int b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    if (A.cols != B.cols) throw invalid_input_error("ad::matmul_nt: shape mismatch");
    Mat out(A.rows, B.rows);
    for (int i = 0; i < A.rows; ++i)
      for (int j = 0; j < B.rows; ++j) {
        double s = 0.0;
        for (int k = 0; k < A.cols; ++k) s += A(i, k) * B(j, k);
        out(i, j) = s;
      }
    return push(std::move(out), [a, b](Tape& t, const Mat& g, const Mat&) {
      const Mat& A = t.val(a);
      const Mat& B = t.val(b);
      Mat& dA = t.mut_grad(a);
      Mat& dB = t.mut_grad(b);
      for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < B.rows; ++j) {
          const double gv = g(i, j);
          if (gv == 0.0) continue;
          for (int k = 0; k < A.cols; ++k) {
            dA(i, k) += gv * B(j, k);
            dB(j, k) += gv * A(i, k);
          }
        }
    });
  }

  int add(int a, int b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    if (!A.same_shape(B)) throw invalid_input_error("ad::add: shape mismatch");
    Mat out = A;
    for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += B.a[i];
    return push(std::move(out), [a, b](Tape& t, const Mat& g, const Mat&) {
      Mat& dA = t.mut_grad(a);
      Mat& dB = t.mut_grad(b);
      for (size_t i = 0; i < g.a.size(); ++i) {
        dA.a[i] += g.a[i];
        dB.a[i] += g.a[i];
      }
    });
  }

  int sub(int a, int b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    if (!A.same_shape(B)) throw invalid_input_error("ad::sub: shape mismatch");
    Mat out = A;
    for (size_t i = 0; i < out.a.size(); ++i) out.a[i] -= B.a[i];
    return push(std::move(out), [a, b](Tape& t, const Mat& g, const Mat&) {
      Mat& dA = t.mut_grad(a);
      Mat& dB = t.mut_grad(b);
      for (size_t i = 0; i < g.a.size(); ++i) {
        dA.a[i] += g.a[i];
        dB.a[i] -= g.a[i];
      }
    });
  }

  int scale(int a, double s) {
    Mat out = val(a);
    for (double& v : out.a) v *= s;
    return push(std::move(out), [a, s](Tape& t, const Mat& g, const Mat&) {
      Mat& dA = t.mut_grad(a);
      for (size_t i = 0; i < g.a.size(); ++i) dA.a[i] += s * g.a[i];
    });
  }

  /// x (n×d) times a 1×d row applied elementwise to every row.
  int mul_broadcast_row(int x, int r) {
    const Mat& X = val(x);
    const Mat& R = val(r);
    if (R.rows != 1 || R.cols != X.cols)
      throw invalid_input_error("ad::mul_broadcast_row: shape mismatch");
    Mat out = X;
    for (int i = 0; i < X.rows; ++i)
      for (int j = 0; j < X.cols; ++j) out(i, j) *= R(0, j);
    return push(std::move(out), [x, r](Tape& t, const Mat& g, const Mat&) {
      const Mat& X = t.val(x);
      const Mat& R = t.val(r);
      Mat& dX = t.mut_grad(x);
      Mat& dR = t.mut_grad(r);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
          dX(i, j) += g(i, j) * R(0, j);
          dR(0, j) += g(i, j) * X(i, j);
        }
    });
  }

  /// x (n×d) plus a 1×d row repeated over every row.
  int add_broadcast_row(int x, int r) {
    const Mat& X = val(x);
    const Mat& R = val(r);
    if (R.rows != 1 || R.cols != X.cols)
      throw invalid_input_error("ad::add_broadcast_row: shape mismatch");
    Mat out = X;
    for (int i = 0; i < X.rows; ++i)
      for (int j = 0; j < X.cols; ++j) out(i, j) += R(0, j);
    return push(std::move(out), [x, r](Tape& t, const Mat& g, const Mat&) {
      Mat& dX = t.mut_grad(x);
      Mat& dR = t.mut_grad(r);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
          dX(i, j) += g(i, j);
          dR(0, j) += g(i, j);
        }
    });
  }

  int tanh_op(int x) {
    Mat out = val(x);
    for (double& v : out.a) v = std::tanh(v);
    return push(std::move(out), [x](Tape& t, const Mat& g, const Mat& y) {
      Mat& dX = t.mut_grad(x);
      for (size_t i = 0; i < g.a.size(); ++i) dX.a[i] += g.a[i] * (1.0 - y.a[i] * y.a[i]);
    });
  }

  int sigmoid_op(int x) {
    Mat out = val(x);
    for (double& v : out.a) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(out), [x](Tape& t, const Mat& g, const Mat& y) {
      Mat& dX = t.mut_grad(x);
      for (size_t i = 0; i < g.a.size(); ++i) dX.a[i] += g.a[i] * y.a[i] * (1.0 - y.a[i]);
    });
  }

  /// Row-wise softmax; pass causal = true to mask column j > i (square input).
  int softmax_rows(int x, bool causal = false) {
    const Mat& X = val(x);
    if (causal && X.rows != X.cols)
      throw invalid_input_error("ad::softmax_rows: causal mask needs a square matrix");
    Mat out(X.rows, X.cols);
    for (int i = 0; i < X.rows; ++i) {
      const int limit = causal ? i + 1 : X.cols;
      double mx = -1e300;
      for (int j = 0; j < limit; ++j) mx = std::max(mx, X(i, j));
      double z = 0.0;
      for (int j = 0; j < limit; ++j) z += std::exp(X(i, j) - mx);
      for (int j = 0; j < limit; ++j) out(i, j) = std::exp(X(i, j) - mx) / z;
    }
    return push(std::move(out), [x](Tape& t, const Mat& g, const Mat& p) {
      Mat& dX = t.mut_grad(x);
      for (int i = 0; i < g.rows; ++i) {
        double inner = 0.0;
        for (int j = 0; j < g.cols; ++j) inner += g(i, j) * p(i, j);
        for (int j = 0; j < g.cols; ++j) dX(i, j) += p(i, j) * (g(i, j) - inner);
      }
    });
  }

  /// Inverted dropout with keep-prob 1-p; the mask is drawn at build time
  /// from the caller's generator, so trajectories stay seed-deterministic.
  int dropout(int x, double p, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw invalid_input_error("ad::dropout: p must be in [0,1)");
    const Mat& X = val(x);
    const double keep = 1.0 - p;
    Vec mask(X.a.size());
    for (auto& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
    Mat out = X;
    for (size_t i = 0; i < out.a.size(); ++i) out.a[i] *= mask[i];
    return push(std::move(out), [x, mask = std::move(mask)](Tape& t, const Mat& g, const Mat&) {
      Mat& dX = t.mut_grad(x);
      for (size_t i = 0; i < g.a.size(); ++i) dX.a[i] += g.a[i] * mask[i];
    });
  }

  /// Per-row normalization (x - mean) / sqrt(var + 1e-5), no learned affine.
  int layernorm_rows(int x) {
    const Mat& X = val(x);
    Mat out(X.rows, X.cols);
    Vec inv_std(X.rows);
    for (int i = 0; i < X.rows; ++i) {
      double mu = 0.0;
      for (int j = 0; j < X.cols; ++j) mu += X(i, j);
      mu /= X.cols;
      double var = 0.0;
      for (int j = 0; j < X.cols; ++j) var += (X(i, j) - mu) * (X(i, j) - mu);
      var /= X.cols;
      inv_std[i] = 1.0 / std::sqrt(var + 1e-5);
      for (int j = 0; j < X.cols; ++j) out(i, j) = (X(i, j) - mu) * inv_std[i];
    }
    return push(std::move(out),
                [x, inv_std = std::move(inv_std)](Tape& t, const Mat& g, const Mat& y) {
                  Mat& dX = t.mut_grad(x);
                  const int d = g.cols;
                  for (int i = 0; i < g.rows; ++i) {
                    double gsum = 0.0, gysum = 0.0;
                    for (int j = 0; j < d; ++j) {
                      gsum += g(i, j);
                      gysum += g(i, j) * y(i, j);
                    }
                    for (int j = 0; j < d; ++j)
                      dX(i, j) += inv_std[i] * (g(i, j) - gsum / d - y(i, j) * gysum / d);
                  }
                });
  }

  int slice_rows(int x, int start, int count) {
    const Mat& X = val(x);
    if (start < 0 || count < 1 || start + count > X.rows)
      throw invalid_input_error("ad::slice_rows: range out of bounds");
    Mat out(count, X.cols);
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < X.cols; ++j) out(i, j) = X(start + i, j);
    return push(std::move(out), [x, start](Tape& t, const Mat& g, const Mat&) {
      Mat& dX = t.mut_grad(x);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) dX(start + i, j) += g(i, j);
    });
  }

  int concat_rows(const std::vector<int>& xs) {
    if (xs.empty()) throw invalid_input_error("ad::concat_rows: empty input");
    const int cols = val(xs[0]).cols;
    int rows = 0;
    for (int id : xs) {
      if (val(id).cols != cols) throw invalid_input_error("ad::concat_rows: column mismatch");
      rows += val(id).rows;
    }
    Mat out(rows, cols);
    int at = 0;
    for (int id : xs) {
      const Mat& X = val(id);
      for (int i = 0; i < X.rows; ++i, ++at)
        for (int j = 0; j < cols; ++j) out(at, j) = X(i, j);
    }
    return push(std::move(out), [xs](Tape& t, const Mat& g, const Mat&) {
      int at = 0;
      for (int id : xs) {
        Mat& dX = t.mut_grad(id);
        for (int i = 0; i < dX.rows; ++i, ++at)
          for (int j = 0; j < g.cols; ++j) dX(i, j) += g(at, j);
      }
    });
  }

  int concat_cols(const std::vector<int>& xs) {
    if (xs.empty()) throw invalid_input_error("ad::concat_cols: empty input");
    const int rows = val(xs[0]).rows;
    int cols = 0;
    for (int id : xs) {
      if (val(id).rows != rows) throw invalid_input_error("ad::concat_cols: row mismatch");
      cols += val(id).cols;
    }
    Mat out(rows, cols);
    int at = 0;
    for (int id : xs) {
      const Mat& X = val(id);
      for (int j = 0; j < X.cols; ++j, ++at)
        for (int i = 0; i < rows; ++i) out(i, at) = X(i, j);
    }
    return push(std::move(out), [xs](Tape& t, const Mat& g, const Mat&) {
      int at = 0;
      for (int id : xs) {
        Mat& dX = t.mut_grad(id);
        for (int j = 0; j < dX.cols; ++j, ++at)
          for (int i = 0; i < g.rows; ++i) dX(i, j) += g(i, at);
      }
    });
  }

  /// Row-major reinterpretation to a new shape with the same element count.
  int reshape(int x, int rows, int cols) {
    const Mat& X = val(x);
    if (rows * cols != static_cast<int>(X.a.size()))
      throw invalid_input_error("ad::reshape: element count mismatch");
    Mat out(rows, cols);
    out.a = X.a;
    return push(std::move(out), [x](Tape& t, const Mat& g, const Mat&) {
      Mat& dX = t.mut_grad(x);
      for (size_t i = 0; i < g.a.size(); ++i) dX.a[i] += g.a[i];
    });
  }

  /// Gather rows of an embedding table; backward scatter-adds.
  int embed_rows(int table, std::vector<int> ids) {
    const Mat& E = val(table);
    for (int id : ids)
      if (id < 0 || id >= E.rows) throw invalid_input_error("ad::embed_rows: id out of range");
    Mat out(static_cast<int>(ids.size()), E.cols);
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < E.cols; ++j) out(static_cast<int>(i), j) = E(ids[i], j);
    return push(std::move(out), [table, ids = std::move(ids)](Tape& t, const Mat& g, const Mat&) {
      Mat& dE = t.mut_grad(table);
      for (size_t i = 0; i < ids.size(); ++i)
        for (int j = 0; j < g.cols; ++j) dE(ids[i], j) += g(static_cast<int>(i), j);
    });
  }

  /// Sum over rows of softmax cross-entropy against per-row target indices.
  int softmax_xent_sum(int logits, std::vector<int> targets) {
    const Mat& L = val(logits);
    if (static_cast<int>(targets.size()) != L.rows)
      throw invalid_input_error("ad::softmax_xent_sum: one target per row required");
    Mat probs(L.rows, L.cols);
    double loss = 0.0;
    for (int i = 0; i < L.rows; ++i) {
      if (targets[i] < 0 || targets[i] >= L.cols)
        throw invalid_input_error("ad::softmax_xent_sum: target out of range");
      double mx = -1e300;
      for (int j = 0; j < L.cols; ++j) mx = std::max(mx, L(i, j));
      double z = 0.0;
      for (int j = 0; j < L.cols; ++j) z += std::exp(L(i, j) - mx);
      for (int j = 0; j < L.cols; ++j) probs(i, j) = std::exp(L(i, j) - mx) / z;
      loss += std::log(z) + mx - L(i, targets[i]);
    }
    Mat out(1, 1);
    out(0, 0) = loss;
    return push(std::move(out), [logits, targets = std::move(targets),
                                 probs = std::move(probs)](Tape& t, const Mat& g, const Mat&) {
      Mat& dL = t.mut_grad(logits);
      const double gv = g(0, 0);
      for (int i = 0; i < probs.rows; ++i)
        for (int j = 0; j < probs.cols; ++j)
          dL(i, j) += gv * (probs(i, j) - (j == targets[i] ? 1.0 : 0.0));
    });
  }

  /// 1 - cosine similarity of two 1×d rows, with a small epsilon making the
  /// denominator safe at the origin.
  int cosine_loss(int a, int b, double eps = 1e-8) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    if (A.rows != 1 || B.rows != 1 || A.cols != B.cols)
      throw invalid_input_error("ad::cosine_loss: expects matching 1×d rows");
    const double na = norm(A.a), nb = norm(B.a), ab = dot(A.a, B.a);
    const double denom = na * nb + eps;
    Mat out(1, 1);
    out(0, 0) = 1.0 - ab / denom;
    return push(std::move(out), [a, b, na, nb, ab, denom](Tape& t, const Mat& g, const Mat&) {
      const Mat& A = t.val(a);
      const Mat& B = t.val(b);
      Mat& dA = t.mut_grad(a);
      Mat& dB = t.mut_grad(b);
      const double gv = g(0, 0);
      for (int j = 0; j < A.cols; ++j) {
        double da = B(0, j) / denom;
        double db = A(0, j) / denom;
        if (na > 0.0) da -= ab * nb * A(0, j) / (na * denom * denom);
        if (nb > 0.0) db -= ab * na * B(0, j) / (nb * denom * denom);
        dA(0, j) += gv * -da;
        dB(0, j) += gv * -db;
      }
    });
  }

  /// Apply exp_map_origin to every row (rows are tangent vectors).
  int exp_map_rows(int x, const poincare::BallConfig& ball) {
    const Mat& X = val(x);
    if (X.cols != ball.dim) throw invalid_input_error("ad::exp_map_rows: dim mismatch");
    Mat out(X.rows, X.cols);
    // Per-row branch: 0 zero-norm passthrough, 1 smooth map, 2 clipped.
    std::vector<int> branch(X.rows);
    for (int i = 0; i < X.rows; ++i) {
      poincare::TangentVec t{Vec(X.row(i).begin(), X.row(i).end())};
      auto z = poincare::exp_map_origin(ball, t);
      const double r = norm(t.coords);
      if (r < 1e-12)
        branch[i] = 0;
      else
        branch[i] =
            std::tanh(ball.sqrt_c() * r) / ball.sqrt_c() > ball.clip_radius() ? 2 : 1;
      for (int j = 0; j < X.cols; ++j) out(i, j) = z.coords[j];
    }
    return push(std::move(out), [x, ball, branch = std::move(branch)](Tape& t, const Mat& g,
                                                                     const Mat&) {
      const Mat& X = t.val(x);
      Mat& dX = t.mut_grad(x);
      const double s = ball.sqrt_c();
      for (int i = 0; i < g.rows; ++i) {
        const auto xr = X.row(i);
        const double r = norm(xr);
        double gdotx = 0.0;
        for (int j = 0; j < g.cols; ++j) gdotx += g(i, j) * xr[j];
        if (branch[i] == 0) {
          // exp'(0) = identity.
          for (int j = 0; j < g.cols; ++j) dX(i, j) += g(i, j);
        } else if (branch[i] == 2) {
          // z = R x/||x||: J = R/r (I - x xᵀ / r²).
          const double R = ball.clip_radius();
          for (int j = 0; j < g.cols; ++j)
            dX(i, j) += R / r * (g(i, j) - gdotx * xr[j] / (r * r));
        } else {
          // z = a(r) x with a = tanh(s r)/(s r);
          // Jᵀg = a g + (a'(r)/r)(g·x) x.
          const double th = std::tanh(s * r);
          const double a = th / (s * r);
          const double da = (1.0 - th * th) / r - th / (s * r * r);
          for (int j = 0; j < g.cols; ++j)
            dX(i, j) += a * g(i, j) + da / r * gdotx * xr[j];
        }
      }
    });
  }

  /// Apply log_map_origin to every row (rows are ball points).
  int log_map_rows(int z, const poincare::BallConfig& ball) {
    const Mat& Z = val(z);
    if (Z.cols != ball.dim) throw invalid_input_error("ad::log_map_rows: dim mismatch");
    Mat out(Z.rows, Z.cols);
    for (int i = 0; i < Z.rows; ++i) {
      poincare::BallPoint p{Vec(Z.row(i).begin(), Z.row(i).end())};
      auto x = poincare::log_map_origin(ball, p);
      for (int j = 0; j < Z.cols; ++j) out(i, j) = x.coords[j];
    }
    return push(std::move(out), [z, ball](Tape& t, const Mat& g, const Mat&) {
      const Mat& Z = t.val(z);
      Mat& dZ = t.mut_grad(z);
      const double s = ball.sqrt_c();
      for (int i = 0; i < g.rows; ++i) {
        const auto zr = Z.row(i);
        const double rho = norm(zr);
        if (rho < 1e-12) {
          for (int j = 0; j < g.cols; ++j) dZ(i, j) += g(i, j);
          continue;
        }
        // x = b(ρ) z with b = arctanh(sρ)/(sρ);
        // Jᵀg = b g + (b'(ρ)/ρ)(g·z) z.
        const double at = std::atanh(std::min(s * rho, 1.0 - 1e-15));
        const double b = at / (s * rho);
        const double db = 1.0 / (rho * (1.0 - s * s * rho * rho)) - at / (s * rho * rho);
        double gdotz = 0.0;
        for (int j = 0; j < g.cols; ++j) gdotz += g(i, j) * zr[j];
        for (int j = 0; j < g.cols; ++j) dZ(i, j) += b * g(i, j) + db / rho * gdotz * zr[j];
      }
    });
  }

  /// Mean over unordered row pairs of: squared distance when labels match,
  /// squared hinge max(0, m - d)² when they differ. Coincident pairs fall in
  /// the zero-gradient limit (matched) or take the zero subgradient at the
  /// hinge kink (mismatched) and are skipped in backward.
  int hyp_pair_contrastive(int z, std::vector<int> labels, double margin,
                           const poincare::BallConfig& ball) {
    const Mat& Z = val(z);
    if (static_cast<int>(labels.size()) != Z.rows)
      throw invalid_input_error("ad::hyp_pair_contrastive: one label per row required");
    if (Z.rows < 2) throw invalid_input_error("ad::hyp_pair_contrastive: need at least 2 rows");
    const int n = Z.rows;
    const double npairs = n * (n - 1) / 2.0;
    auto row_point = [](const Mat& M, int i) {
      return poincare::BallPoint{Vec(M.row(i).begin(), M.row(i).end())};
    };
    double loss = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double d = poincare::poincare_distance(ball, row_point(Z, i), row_point(Z, j));
        if (labels[i] == labels[j])
          loss += d * d;
        else {
          const double h = std::max(0.0, margin - d);
          loss += h * h;
        }
      }
    Mat out(1, 1);
    out(0, 0) = loss / npairs;
    return push(std::move(out), [z, labels = std::move(labels), margin, ball, npairs, row_point](
                                    Tape& t, const Mat& g, const Mat&) {
      const Mat& Z = t.val(z);
      Mat& dZ = t.mut_grad(z);
      const int n = Z.rows;
      const double gv = g(0, 0) / npairs;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const auto pi = row_point(Z, i);
          const auto pj = row_point(Z, j);
          const double d = poincare::poincare_distance(ball, pi, pj);
          if (d < 1e-9) continue;  // analytic zero (matched) or subgradient zero (hinge kink)
          double coeff;
          if (labels[i] == labels[j])
            coeff = 2.0 * d;
          else if (d < margin)
            coeff = -2.0 * (margin - d);
          else
            continue;
          auto [gi, gj] = poincare::distance_grad(ball, pi, pj);
          for (int c = 0; c < Z.cols; ++c) {
            dZ(i, c) += gv * coeff * gi[c];
            dZ(j, c) += gv * coeff * gj[c];
          }
        }
    });
  }

  /// Seed d(node)/d(node) = 1 on a 1×1 node and sweep the tape in reverse.
  void backward(int loss_id) {
    Node& loss = nodes_.at(loss_id);
    if (loss.value.rows != 1 || loss.value.cols != 1)
      throw invalid_input_error("ad::backward: loss must be 1×1");
    loss.grad(0, 0) = 1.0;
    for (int id = loss_id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.back) n.back(*this, n.grad, n.value);
    }
  }

  void zero_grad() {
    for (Node& n : nodes_) n.grad.fill(0.0);
  }

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&, const Mat& grad, const Mat& value)> back;
  };

  const Mat& val(int id) const { return nodes_.at(id).value; }
  Mat& mut_grad(int id) { return nodes_.at(id).grad; }

  int push(Mat value, std::function<void(Tape&, const Mat&, const Mat&)> back) {
    nodes_.push_back({std::move(value), {}, std::move(back)});
    Node& n = nodes_.back();
    n.grad = Mat(n.value.rows, n.value.cols);
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

}  // namespace hyco::ad
