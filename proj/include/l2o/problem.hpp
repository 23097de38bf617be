#pragma once

// Batched underdetermined least-squares problems
//   F(X) = 1/2 sum_i ||M_i x_i - y_i||^2,   M_i in R^{b x d}, d > b,
// with the smoothness constant beta = max_i ||M_i^T M_i||_2 and the
// row-rank margin beta0 = min_i lambda_min(M_i M_i^T).

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2o/linalg.hpp"

namespace l2o {

// Concatenated per-problem blocks, length N*d.
using BatchPoint = Vector;

struct QuadraticProblem {
  Matrix M;  // b x d
  Vector y;  // b

  std::size_t d() const { return M.cols(); }
  std::size_t b() const { return M.rows(); }
};

class QuadraticBatch {
 public:
  // Validates shapes and full row rank, then caches beta, beta0 and the
  // least-norm solution. Throws std::invalid_argument on violation.
  explicit QuadraticBatch(std::vector<QuadraticProblem> problems, std::uint64_t seed = 0,
                          double tol = 1e-10);

  std::size_t N() const { return problems_.size(); }
  std::size_t d() const { return d_; }
  std::size_t b() const { return b_; }
  std::size_t dim() const { return N() * d_; }
  std::uint64_t seed() const { return seed_; }
  double beta() const { return beta_; }
  double beta0() const { return beta0_; }
  const std::vector<QuadraticProblem>& problems() const { return problems_; }
  const QuadraticProblem& problem(std::size_t i) const { return problems_[i]; }

  // Least-norm minimizer M^T (M M^T)^{-1} Y. Metrics only; never shown to the learner.
  const BatchPoint& x_star() const { return x_star_; }
  // M^T Y, the (negated) gradient at the origin.
  const BatchPoint& mty() const { return mty_; }
  double y_norm() const { return y_norm_; }

  BatchPoint zero_point() const { return BatchPoint(dim(), 0.0); }

  // H v = M^T M v, block by block.
  Vector apply_hessian(std::span<const double> v) const;

 private:
  std::vector<QuadraticProblem> problems_;
  std::uint64_t seed_ = 0;
  std::size_t d_ = 0, b_ = 0;
  double beta_ = 0.0, beta0_ = 0.0, y_norm_ = 0.0;
  BatchPoint x_star_, mty_;
};

namespace detail {

inline void check_point(const QuadraticBatch& batch, std::span<const double> X, const char* who) {
  if (X.size() != batch.dim())
    throw std::invalid_argument(std::string(who) + ": point has length " + std::to_string(X.size()) +
                                ", expected " + std::to_string(batch.dim()));
}

// Per-problem least-norm solution via QR of M^T; throws if M M^T is singular.
inline Vector least_norm_block(const QuadraticProblem& p) {
  const auto [Q, R] = qr_decompose(p.M.transposed());  // M^T = Q R, R is b x b
  const std::size_t b = p.b();
  Vector z(b);
  for (std::size_t i = 0; i < b; ++i) {  // R^T z = y
    if (R(i, i) == 0.0) throw std::domain_error("least_norm_solution: M M^T is singular");
    double s = p.y[i];
    for (std::size_t k = 0; k < i; ++k) s -= R(k, i) * z[k];
    z[i] = s / R(i, i);
  }
  return matvec(Q, z);
}

}  // namespace detail

inline QuadraticBatch::QuadraticBatch(std::vector<QuadraticProblem> problems, std::uint64_t seed,
                                      double tol)
    : problems_(std::move(problems)), seed_(seed) {
  if (problems_.empty()) throw std::invalid_argument("QuadraticBatch: no problems");
  d_ = problems_.front().d();
  b_ = problems_.front().b();
  if (!(d_ > b_ && b_ >= 1)) throw std::invalid_argument("QuadraticBatch: requires d > b >= 1");
  beta0_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < problems_.size(); ++i) {
    const auto& p = problems_[i];
    if (p.d() != d_ || p.b() != b_ || p.y.size() != b_)
      throw std::invalid_argument("QuadraticBatch: problem " + std::to_string(i) +
                                  " has mismatched dimensions");
    if (!p.M.all_finite() || !all_finite(p.y))
      throw std::invalid_argument("QuadraticBatch: non-finite entries in problem " + std::to_string(i));
    const double smax = spectral_norm(p.M, tol);
    const double smin = smallest_singular_value(p.M, tol);
    if (!(smin > 0.0))
      throw std::domain_error("QuadraticBatch: problem " + std::to_string(i) + " is row-rank deficient");
    beta_ = std::max(beta_, smax * smax);
    beta0_ = std::min(beta0_, smin * smin);
  }

  x_star_.reserve(dim());
  mty_.reserve(dim());
  double ysq = 0.0;
  for (const auto& p : problems_) {
    const Vector xs = detail::least_norm_block(p);
    x_star_.insert(x_star_.end(), xs.begin(), xs.end());
    const Vector g = tmatvec(p.M, p.y);
    mty_.insert(mty_.end(), g.begin(), g.end());
    ysq += dot(p.y, p.y);
  }
  y_norm_ = std::sqrt(ysq);
}

inline Vector QuadraticBatch::apply_hessian(std::span<const double> v) const {
  detail::check_point(*this, v, "apply_hessian");
  Vector out(dim());
  for (std::size_t i = 0; i < N(); ++i) {
    const auto& M = problems_[i].M;
    const Vector mv = matvec(M, v.subspan(i * d_, d_));
    const Vector h = tmatvec(M, mv);
    std::copy(h.begin(), h.end(), out.begin() + static_cast<std::ptrdiff_t>(i * d_));
  }
  return out;
}

// Samples every M_i then y_i from the stream, problem by problem. A
// rank-deficient draw (probability zero) is discarded and redrawn.
inline QuadraticBatch make_batch(SeededRng& rng, std::size_t N, std::size_t d, std::size_t b) {
  if (!(d > b && b >= 1)) throw std::invalid_argument("make_batch: requires d > b >= 1");
  if (N == 0) throw std::invalid_argument("make_batch: N must be at least 1");
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::vector<QuadraticProblem> problems;
    problems.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
      Matrix M = gaussian_matrix(rng, b, d);
      Vector y = gaussian_vector(rng, b);
      problems.push_back({std::move(M), std::move(y)});
    }
    try {
      return QuadraticBatch(std::move(problems), rng.seed());
    } catch (const std::domain_error&) {
      continue;
    }
  }
  throw std::runtime_error("make_batch: repeated rank-deficient draws");
}

inline QuadraticBatch make_batch(std::uint64_t seed, std::size_t N, std::size_t d, std::size_t b) {
  SeededRng rng(seed);
  return make_batch(rng, N, d, b);
}

// Residual blocks M_i x_i - y_i concatenated (length N*b).
inline Vector residual(const QuadraticBatch& batch, std::span<const double> X) {
  detail::check_point(batch, X, "residual");
  Vector r;
  r.reserve(batch.N() * batch.b());
  for (std::size_t i = 0; i < batch.N(); ++i) {
    const auto& p = batch.problem(i);
    Vector mx = matvec(p.M, X.subspan(i * batch.d(), batch.d()));
    for (std::size_t k = 0; k < mx.size(); ++k) r.push_back(mx[k] - p.y[k]);
  }
  return r;
}

inline double objective(const QuadraticBatch& batch, std::span<const double> X) {
  const Vector r = residual(batch, X);
  return 0.5 * dot(r, r);
}

// Gamma = M^T (M X - Y).
inline BatchPoint gradient(const QuadraticBatch& batch, std::span<const double> X) {
  detail::check_point(batch, X, "gradient");
  BatchPoint g(batch.dim());
  const std::size_t d = batch.d();
  for (std::size_t i = 0; i < batch.N(); ++i) {
    const auto& p = batch.problem(i);
    Vector r = matvec(p.M, X.subspan(i * d, d));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= p.y[k];
    const Vector gi = tmatvec(p.M, r);
    std::copy(gi.begin(), gi.end(), g.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return g;
}

inline BatchPoint least_norm_solution(const QuadraticBatch& batch) { return batch.x_star(); }

// Plain gradient descent with step 1/beta; returns X_0..X_T.
inline std::vector<BatchPoint> gd_rollout(const QuadraticBatch& batch, const BatchPoint& X0,
                                          std::size_t T) {
  detail::check_point(batch, X0, "gd_rollout");
  std::vector<BatchPoint> traj;
  traj.reserve(T + 1);
  traj.push_back(X0);
  const double inv_beta = 1.0 / batch.beta();
  for (std::size_t t = 1; t <= T; ++t) {
    BatchPoint X = traj.back();
    const BatchPoint g = gradient(batch, X);
    for (std::size_t k = 0; k < X.size(); ++k) X[k] -= inv_beta * g[k];
    traj.push_back(std::move(X));
  }
  return traj;
}

}  // namespace l2o
