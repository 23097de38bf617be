#pragma once

// Dense linear algebra used throughout the project: row-major matrices,
// a seeded Gaussian stream, Householder QR and the two extreme singular
// values. Everything is 64-bit and single-threaded.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace l2o {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_)
      throw std::invalid_argument("Matrix: entry count does not match shape");
  }

  static Matrix identity(std::size_t n) {
    Matrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& entries() const { return data_; }
  std::vector<double>& entries() { return data_; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }
  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  void check_same_shape(const Matrix& o) const {
    if (o.rows_ != rows_ || o.cols_ != cols_)
      throw std::invalid_argument("Matrix: shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix operator*(double s, Matrix m) { return m *= s; }
inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }

inline Matrix matmul(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix C(A.rows(), B.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double* c = C.data() + i * C.cols();
    for (std::size_t k = 0; k < A.cols(); ++k) {
      const double a = A(i, k);
      if (a == 0.0) continue;
      const double* b = B.data() + k * B.cols();
      for (std::size_t j = 0; j < B.cols(); ++j) c[j] += a * b[j];
    }
  }
  return C;
}

// A^T A without forming the transpose.
inline Matrix gram_cols(const Matrix& A) {
  const std::size_t n = A.cols();
  Matrix G(n, n);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    const double* a = A.data() + r * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      double* g = G.data() + i * n;
      for (std::size_t j = i; j < n; ++j) g[j] += ai * a[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) G(i, j) = G(j, i);
  return G;
}

// A A^T.
inline Matrix gram_rows(const Matrix& A) {
  const std::size_t m = A.rows();
  Matrix G(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto ri = A.row(i);
    for (std::size_t j = i; j < m; ++j) {
      const auto rj = A.row(j);
      G(i, j) = G(j, i) = std::inner_product(ri.begin(), ri.end(), rj.begin(), 0.0);
    }
  }
  return G;
}

inline Vector matvec(const Matrix& A, std::span<const double> x) {
  if (A.cols() != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
  Vector y(A.rows());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const auto r = A.row(i);
    y[i] = std::inner_product(r.begin(), r.end(), x.begin(), 0.0);
  }
  return y;
}

// A^T x
inline Vector tmatvec(const Matrix& A, std::span<const double> x) {
  if (A.rows() != x.size()) throw std::invalid_argument("tmatvec: dimension mismatch");
  Vector y(A.cols(), 0.0);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const auto r = A.row(i);
    for (std::size_t j = 0; j < A.cols(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double frobenius_norm(const Matrix& A) { return norm2(A.entries()); }

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

// SplitMix64 counter generator with Box-Muller normals. Identical seeds give
// identical streams on any IEEE-754 platform with a conforming libm.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform on (0, 1].
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Matrix gaussian_matrix(SeededRng& rng, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("gaussian_matrix: empty shape requested");
  Matrix A(rows, cols);
  for (auto& v : A.entries()) v = rng.normal();
  return A;
}

inline Vector gaussian_vector(SeededRng& rng, std::size_t len) {
  Vector v(len);
  for (auto& x : v) x = rng.normal();
  return v;
}

struct QrResult {
  Matrix Q;  // rows x k, orthonormal columns, k = min(rows, cols)
  Matrix R;  // k x cols, upper triangular, nonnegative diagonal
};

// Thin Householder QR. Columns that are already zero below the diagonal are
// left alone, so rank-deficient and zero inputs are fine.
inline QrResult qr_decompose(const Matrix& A) {
  const std::size_t m = A.rows(), n = A.cols();
  if (m == 0 || n == 0) throw std::invalid_argument("qr_decompose: empty matrix");
  const std::size_t k = std::min(m, n);
  Matrix R = A;
  std::vector<Vector> reflectors(k);

  for (std::size_t j = 0; j < k; ++j) {
    double norm_sq = 0.0;
    for (std::size_t i = j; i < m; ++i) norm_sq += R(i, j) * R(i, j);
    const double norm = std::sqrt(norm_sq);
    if (norm == 0.0) continue;

    const double alpha = R(j, j) > 0.0 ? -norm : norm;
    Vector v(m - j);
    for (std::size_t i = j; i < m; ++i) v[i - j] = R(i, j);
    v[0] -= alpha;
    const double vnorm = norm2(v);
    if (vnorm == 0.0) continue;
    for (auto& x : v) x /= vnorm;

    for (std::size_t c = j; c < n; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < m; ++i) s += v[i - j] * R(i, c);
      s *= 2.0;
      for (std::size_t i = j; i < m; ++i) R(i, c) -= s * v[i - j];
    }
    for (std::size_t i = j + 1; i < m; ++i) R(i, j) = 0.0;
    reflectors[j] = std::move(v);
  }

  // Q = H_0 H_1 ... H_{k-1} applied to the first k columns of the identity.
  Matrix Q(m, k);
  for (std::size_t i = 0; i < k; ++i) Q(i, i) = 1.0;
  for (std::size_t jj = k; jj-- > 0;) {
    const Vector& v = reflectors[jj];
    if (v.empty()) continue;
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t i = jj; i < m; ++i) s += v[i - jj] * Q(i, c);
      s *= 2.0;
      for (std::size_t i = jj; i < m; ++i) Q(i, c) -= s * v[i - jj];
    }
  }

  Matrix Rk(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    const double sign = R(i, i) < 0.0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < n; ++c) Rk(i, c) = c < i ? 0.0 : sign * R(i, c);
    if (sign < 0.0)
      for (std::size_t r = 0; r < m; ++r) Q(r, i) = -Q(r, i);
  }
  return {std::move(Q), std::move(Rk)};
}

namespace detail {

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
inline Vector symmetric_eigenvalues(Matrix S) {
  const std::size_t n = S.rows();
  if (n != S.cols()) throw std::invalid_argument("symmetric_eigenvalues: matrix not square");
  const double scale = std::max(frobenius_norm(S), std::numeric_limits<double>::min());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += S(p, q) * S(p, q);
    if (std::sqrt(off) <= 1e-17 * scale) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = S(p, q);
        if (apq == 0.0) continue;
        const double theta = (S(q, q) - S(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double srp = S(r, p), srq = S(r, q);
          S(r, p) = c * srp - s * srq;
          S(r, q) = s * srp + c * srq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double spr = S(p, r), sqr = S(q, r);
          S(p, r) = c * spr - s * sqr;
          S(q, r) = s * spr + c * sqr;
        }
        S(p, q) = S(q, p) = 0.0;
      }
    }
  }
  Vector ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = S(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Gram matrix on the thin side of A.
inline Matrix small_gram(const Matrix& A) {
  return A.rows() <= A.cols() ? gram_rows(A) : gram_cols(A);
}

inline constexpr std::size_t kExactGramLimit = 64;

// Solves R^T R z = b for upper-triangular R in place.
inline void solve_normal_triangular(const Matrix& R, Vector& z) {
  const std::size_t n = R.rows();
  for (std::size_t i = 0; i < n; ++i) {  // R^T w = b
    double s = z[i];
    for (std::size_t k = 0; k < i; ++k) s -= R(k, i) * z[k];
    z[i] = s / R(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {  // R z = w
    double s = z[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= R(i, k) * z[k];
    z[i] = s / R(i, i);
  }
}

}  // namespace detail

// Largest singular value. Thin side <= 64 is solved exactly through the Gram
// eigenvalues; otherwise power iteration on A^T A from a fixed start vector.
inline double spectral_norm(const Matrix& A, double tol = 1e-12) {
  if (A.empty()) throw std::invalid_argument("spectral_norm: empty matrix");
  if (!(tol > 0.0)) throw std::invalid_argument("spectral_norm: tol must be positive");
  if (std::min(A.rows(), A.cols()) <= detail::kExactGramLimit) {
    const Vector ev = detail::symmetric_eigenvalues(detail::small_gram(A));
    return std::sqrt(std::max(ev.back(), 0.0));
  }

  const std::size_t n = A.cols();
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
  double estimate = 0.0;
  for (int it = 0; it < 100000; ++it) {
    const double vn = norm2(v);
    if (vn == 0.0) return 0.0;
    for (auto& x : v) x /= vn;
    Vector w = tmatvec(A, matvec(A, v));
    const double next = std::sqrt(std::max(dot(v, w), 0.0));
    v = std::move(w);
    if (it >= 10 && std::abs(next - estimate) <= tol * next) return next;
    estimate = next;
  }
  return estimate;
}

// Smallest singular value sigma_min over the thin side (0 for rank-deficient
// input). Thin side <= 64 uses the exact Gram eigenvalues. Larger inputs are
// reduced with QR and solved by inverse iteration on R^T R; if that fails to
// settle the Jacobi solve on R^T R is used instead.
inline double smallest_singular_value(const Matrix& A, double tol = 1e-12) {
  if (A.empty()) throw std::invalid_argument("smallest_singular_value: empty matrix");
  const std::size_t k = std::min(A.rows(), A.cols());
  if (k <= detail::kExactGramLimit) {
    const Vector ev = detail::symmetric_eigenvalues(detail::small_gram(A));
    return std::sqrt(std::max(ev.front(), 0.0));
  }

  const Matrix R = qr_decompose(A.rows() >= A.cols() ? A : A.transposed()).R;
  for (std::size_t i = 0; i < k; ++i)
    if (R(i, i) == 0.0) return 0.0;

  Vector z(k);
  for (std::size_t i = 0; i < k; ++i) z[i] = 1.0 + 0.5 * std::cos(static_cast<double>(i + 1));
  double lambda = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 5000; ++it) {
    const double zn = norm2(z);
    if (!std::isfinite(zn) || zn == 0.0) break;
    for (auto& x : z) x /= zn;
    Vector w = z;
    detail::solve_normal_triangular(R, w);
    // Rayleigh quotient of (R^T R)^{-1} at z is z.w
    const double next = 1.0 / dot(z, w);
    z = std::move(w);
    if (std::abs(next - lambda) <= tol * next) return std::sqrt(std::max(next, 0.0));
    lambda = next;
  }
  const Vector ev = detail::symmetric_eigenvalues(gram_cols(R));
  return std::sqrt(std::max(ev.front(), 0.0));
}

}  // namespace l2o
