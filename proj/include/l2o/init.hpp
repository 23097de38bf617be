#pragma once

// Deterministic initialization: W_l = e * Q |R| for the inner layers from the
// QR factors of a Gaussian draw, and a zero last layer.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2o/linalg.hpp"
#include "l2o/model.hpp"

namespace l2o {

struct InitConfig {
  std::vector<std::size_t> dims{2, 2, 64, 1};
  double e = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> C;  // per-layer slack, empty means all 1

  void validate() const {
    if (dims.size() < 2 || dims.front() != 2 || dims.back() != 1)
      throw std::invalid_argument("InitConfig: dims must start at 2 and end at 1");
    for (auto n : dims)
      if (n == 0) throw std::invalid_argument("InitConfig: zero layer width");
    if (!(e >= 1.0) || !std::isfinite(e)) throw std::invalid_argument("InitConfig: e must be finite and >= 1");
    if (!C.empty() && C.size() != dims.size() - 1)
      throw std::invalid_argument("InitConfig: C needs one entry per layer");
    for (double c : C)
      if (!(c > 0.0)) throw std::invalid_argument("InitConfig: C entries must be positive");
  }

  std::vector<double> slack() const { return C.empty() ? std::vector<double>(dims.size() - 1, 1.0) : C; }
};

namespace detail {

inline Matrix conditioned_layer(SeededRng& rng, std::size_t rows, std::size_t cols) {
  const Matrix A = gaussian_matrix(rng, rows, cols);
  auto [Q, R] = qr_decompose(A);
  for (auto& v : R.entries()) v = std::abs(v);
  return matmul(Q, R);
}

}  // namespace detail

inline L2OWeights init_weights(const InitConfig& cfg) {
  cfg.validate();
  const std::size_t L = cfg.dims.size() - 1;
  SeededRng rng(cfg.seed);
  L2OWeights w;
  w.dims = cfg.dims;
  w.seed = cfg.seed;
  w.e = cfg.e;
  for (std::size_t l = 1; l < L; ++l) {
    const std::size_t rows = cfg.dims[l], cols = cfg.dims[l - 1];
    Matrix W;
    int attempt = 0;
    for (;; ++attempt) {
      W = detail::conditioned_layer(rng, rows, cols);
      if (smallest_singular_value(W, 1e-12) > 0.0) break;
      if (attempt == 3)
        throw std::runtime_error("init_weights: layer " + std::to_string(l) + " stayed singular after 3 redraws");
    }
    W *= cfg.e;
    w.W.push_back(std::move(W));
  }
  w.W.emplace_back(1, cfg.dims[L - 1]);
  return w;
}

// Order-of-magnitude choice for e with unit leading constants.
inline double suggest_e(std::size_t T, std::size_t L) {
  if (L < 2) throw std::invalid_argument("suggest_e: L must be at least 2");
  if (T < 1) throw std::invalid_argument("suggest_e: T must be at least 1");
  const double t = static_cast<double>(T), l = static_cast<double>(L);
  const double denom = t * l - t - 4.0 * l + 6.0;
  if (denom == 0.0) throw std::invalid_argument("suggest_e: degenerate exponent denominator (TL - T - 4L + 6 = 0)");
  const double k = 1.0 / (l - 1.0);
  const double cands[] = {
      std::pow(t, k),
      std::pow(t, (3.0 * t + 6.0) / denom),
      std::pow(t, 4.0 * k),
      std::pow(t, 5.0 * k) * std::pow(l, k),
  };
  double best = cands[0];
  for (double c : cands) best = std::max(best, c);
  return best;
}

}  // namespace l2o
