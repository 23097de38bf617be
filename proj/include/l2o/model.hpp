#pragma once

// Coordinate-wise step-size network and the unrolled learned-GD rollout.
//   G_0 = [X; Gamma]            (2 x Nd)
//   G_l = relu(W_l G_{l-1})     l = 1..L-1
//   P   = 2 sigmoid(W_L G_{L-1})
//   X_t = X_{t-1} - (1/beta) P_t .* Gamma_{t-1}

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2o/linalg.hpp"
#include "l2o/problem.hpp"

namespace l2o {

struct L2OWeights {
  std::vector<std::size_t> dims;  // n_0 = 2, ..., n_L = 1
  std::vector<Matrix> W;          // W[l-1] is n_l x n_{l-1}
  std::uint64_t seed = 0;
  double e = 1.0;

  std::size_t L() const { return W.size(); }

  void validate() const {
    if (dims.size() < 2) throw std::invalid_argument("L2OWeights: need at least one layer");
    if (dims.front() != 2) throw std::invalid_argument("L2OWeights: input width must be 2");
    if (dims.back() != 1) throw std::invalid_argument("L2OWeights: output width must be 1");
    if (W.size() + 1 != dims.size()) throw std::invalid_argument("L2OWeights: layer count mismatch");
    for (std::size_t l = 0; l < W.size(); ++l) {
      if (W[l].rows() != dims[l + 1] || W[l].cols() != dims[l])
        throw std::invalid_argument("L2OWeights: layer " + std::to_string(l + 1) + " has shape " +
                                    std::to_string(W[l].rows()) + "x" + std::to_string(W[l].cols()));
      if (!W[l].all_finite())
        throw std::invalid_argument("L2OWeights: non-finite entry in layer " + std::to_string(l + 1));
    }
  }

  static L2OWeights zeros(std::vector<std::size_t> dims) {
    L2OWeights w;
    w.dims = std::move(dims);
    if (w.dims.size() < 2) throw std::invalid_argument("L2OWeights: need at least one layer");
    for (std::size_t l = 1; l < w.dims.size(); ++l) w.W.emplace_back(w.dims[l], w.dims[l - 1]);
    w.validate();
    return w;
  }
};

// Thrown when a rollout produces inf/nan. step is the 1-based unroll index.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(std::size_t step, const std::string& what)
      : std::runtime_error("non-finite value at step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Activations of one network evaluation. G[0] is the feature matrix,
// G[l] the post-relu output of layer l; mask[l] marks pre-activations >= 0.
struct NetActivations {
  std::vector<Matrix> G;                        // L entries, G[l] is n_l x Nd
  std::vector<std::vector<std::uint8_t>> mask;  // L entries, mask[0] unused
  Vector P;
};

namespace detail {

// 2*sigmoid kept strictly inside (0, 2).
inline double two_sigmoid(double z) {
  double p;
  if (z >= 0.0) {
    p = 2.0 / (1.0 + std::exp(-z));
  } else {
    const double ez = std::exp(z);
    p = 2.0 * ez / (1.0 + ez);
  }
  if (p >= 2.0) p = std::nextafter(2.0, 0.0);
  if (p <= 0.0) p = std::numeric_limits<double>::denorm_min();
  return p;
}

// out = W * G, where G has many columns. Row-major axpy form.
inline Matrix layer_product(const Matrix& W, const Matrix& G) {
  const std::size_t n = G.cols();
  Matrix out(W.rows(), n);
  for (std::size_t i = 0; i < W.rows(); ++i) {
    double* o = out.data() + i * n;
    for (std::size_t k = 0; k < W.cols(); ++k) {
      const double w = W(i, k);
      if (w == 0.0) continue;
      const double* g = G.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += w * g[j];
    }
  }
  return out;
}

}  // namespace detail

inline Matrix feature_matrix(std::span<const double> X, std::span<const double> Gamma) {
  if (X.size() != Gamma.size()) throw std::invalid_argument("feature_matrix: X and Gamma lengths differ");
  Matrix G0(2, X.size());
  std::copy(X.begin(), X.end(), G0.data());
  std::copy(Gamma.begin(), Gamma.end(), G0.data() + X.size());
  return G0;
}

inline NetActivations nn_forward(const L2OWeights& w, std::span<const double> X,
                                 std::span<const double> Gamma) {
  if (w.W.empty() || w.W.size() + 1 != w.dims.size())
    throw std::invalid_argument("nn_forward: malformed weights");
  const std::size_t L = w.L();
  NetActivations act;
  act.G.reserve(L);
  act.mask.resize(L);
  act.G.push_back(feature_matrix(X, Gamma));
  for (std::size_t l = 1; l < L; ++l) {
    Matrix Z = detail::layer_product(w.W[l - 1], act.G.back());
    auto& m = act.mask[l];
    m.resize(Z.size());
    auto& z = Z.entries();
    for (std::size_t k = 0; k < z.size(); ++k) {
      m[k] = z[k] >= 0.0 ? 1 : 0;
      if (!m[k]) z[k] = 0.0;
    }
    act.G.push_back(std::move(Z));
  }
  const Matrix zL = detail::layer_product(w.W[L - 1], act.G.back());
  act.P.resize(zL.cols());
  for (std::size_t j = 0; j < zL.cols(); ++j) act.P[j] = detail::two_sigmoid(zL(0, j));
  return act;
}

struct RolloutTrace {
  std::size_t T = 0;
  std::vector<BatchPoint> X;      // X_0..X_T
  std::vector<BatchPoint> Gamma;  // Gamma_0..Gamma_T
  std::vector<Vector> P;          // P[t-1] holds P_t
  // acts[t-1] for step t; empty when the rollout was run without caching.
  std::vector<NetActivations> acts;

  bool has_activations() const { return acts.size() == T; }
};

struct RolloutOptions {
  bool keep_activations = true;
  // Checks every step and throws NonFiniteError with the step index.
  bool check_finite = true;
};

inline void apply_step(const QuadraticBatch& batch, std::span<const double> P,
                       std::span<const double> Gamma, BatchPoint& X) {
  const double inv_beta = 1.0 / batch.beta();
  for (std::size_t k = 0; k < X.size(); ++k) X[k] -= inv_beta * P[k] * Gamma[k];
}

inline RolloutTrace rollout(const L2OWeights& w, const QuadraticBatch& batch, const BatchPoint& X0,
                            std::size_t T, RolloutOptions opt = {}) {
  if (T < 1) throw std::invalid_argument("rollout: T must be at least 1");
  detail::check_point(batch, X0, "rollout");
  w.validate();
  RolloutTrace tr;
  tr.T = T;
  tr.X.reserve(T + 1);
  tr.Gamma.reserve(T + 1);
  tr.P.reserve(T);
  tr.X.push_back(X0);
  tr.Gamma.push_back(gradient(batch, X0));
  for (std::size_t t = 1; t <= T; ++t) {
    NetActivations act = nn_forward(w, tr.X.back(), tr.Gamma.back());
    BatchPoint X = tr.X.back();
    apply_step(batch, act.P, tr.Gamma.back(), X);
    BatchPoint g = gradient(batch, X);
    if (opt.check_finite && (!all_finite(X) || !all_finite(g)))
      throw NonFiniteError(t, "iterate or gradient overflowed");
    tr.P.push_back(std::move(act.P));
    if (opt.keep_activations) {
      act.P.clear();
      tr.acts.push_back(std::move(act));
    }
    tr.X.push_back(std::move(X));
    tr.Gamma.push_back(std::move(g));
  }
  return tr;
}

// Training loss F(X_T).
inline double final_objective(const QuadraticBatch& batch, const RolloutTrace& tr) {
  return objective(batch, tr.X.back());
}

}  // namespace l2o
