#pragma once

// Reverse sweep for dF(X_T)/dW with the network inputs treated as constants
// (the step map's Jacobian in X is I - (1/beta) D(P_t) M^T M), plus a
// central-difference oracle.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2o/linalg.hpp"
#include "l2o/model.hpp"
#include "l2o/problem.hpp"

namespace l2o {

struct WeightGradients {
  std::vector<Matrix> dW;

  std::size_t L() const { return dW.size(); }

  static WeightGradients zeros_like(const L2OWeights& w) {
    WeightGradients g;
    for (const auto& m : w.W) g.dW.emplace_back(m.rows(), m.cols());
    return g;
  }

  // Spectral norm of each layer gradient.
  std::vector<double> layer_norms() const {
    std::vector<double> out;
    for (const auto& m : dW) out.push_back(frobenius_norm(m) == 0.0 ? 0.0 : spectral_norm(m, 1e-10));
    return out;
  }
};

namespace detail {

// dW += delta * G^T, delta is n_out x Nd, G is n_in x Nd.
inline void accumulate_outer(Matrix& dW, const Matrix& delta, const Matrix& G) {
  for (std::size_t i = 0; i < delta.rows(); ++i) {
    const auto di = delta.row(i);
    for (std::size_t k = 0; k < G.rows(); ++k) dW(i, k) += dot(di, G.row(k));
  }
}

// W^T delta with the relu mask of the layer below applied.
inline Matrix backprop_layer(const Matrix& W, const Matrix& delta, const std::vector<std::uint8_t>& mask) {
  const std::size_t n = delta.cols();
  Matrix out(W.cols(), n);
  for (std::size_t i = 0; i < W.rows(); ++i) {
    const double* d = delta.data() + i * n;
    for (std::size_t k = 0; k < W.cols(); ++k) {
      const double w = W(i, k);
      if (w == 0.0) continue;
      double* o = out.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += w * d[j];
    }
  }
  auto& v = out.entries();
  for (std::size_t k = 0; k < v.size(); ++k)
    if (!mask[k]) v[k] = 0.0;
  return out;
}

inline void check_trace(const RolloutTrace& tr, const L2OWeights& w, const QuadraticBatch& batch) {
  if (tr.T < 1 || tr.X.size() != tr.T + 1 || tr.Gamma.size() != tr.T + 1 || tr.P.size() != tr.T)
    throw std::invalid_argument("backward: malformed trace");
  if (tr.X.front().size() != batch.dim()) throw std::invalid_argument("backward: trace does not match batch");
  if (tr.has_activations()) {
    const auto& a = tr.acts.front();
    if (a.G.size() != w.L()) throw std::invalid_argument("backward: trace does not match weights");
    for (std::size_t l = 0; l < w.L(); ++l)
      if (a.G[l].rows() != w.dims[l]) throw std::invalid_argument("backward: trace does not match weights");
  }
}

}  // namespace detail

inline WeightGradients backward(const RolloutTrace& tr, const L2OWeights& w, const QuadraticBatch& batch) {
  w.validate();
  detail::check_trace(tr, w, batch);
  const std::size_t L = w.L();
  const double inv_beta = 1.0 / batch.beta();
  const std::size_t n = batch.dim();
  WeightGradients g = WeightGradients::zeros_like(w);

  Vector a = tr.Gamma.back();  // dF/dX_T
  Vector pa(n);
  for (std::size_t t = tr.T; t >= 1; --t) {
    NetActivations recomputed;
    const NetActivations* act = nullptr;
    if (tr.has_activations()) {
      act = &tr.acts[t - 1];
    } else {
      recomputed = nn_forward(w, tr.X[t - 1], tr.Gamma[t - 1]);
      act = &recomputed;
    }
    const Vector& P = tr.P[t - 1];
    const Vector& gam = tr.Gamma[t - 1];

    Matrix delta(1, n);
    for (std::size_t j = 0; j < n; ++j)
      delta(0, j) = -inv_beta * a[j] * gam[j] * P[j] * (1.0 - 0.5 * P[j]);
    for (std::size_t l = L; l >= 1; --l) {
      detail::accumulate_outer(g.dW[l - 1], delta, act->G[l - 1]);
      if (l > 1) delta = detail::backprop_layer(w.W[l - 1], delta, act->mask[l - 1]);
    }

    for (std::size_t j = 0; j < n; ++j) pa[j] = P[j] * a[j];
    const Vector hpa = batch.apply_hessian(pa);
    for (std::size_t j = 0; j < n; ++j) a[j] -= inv_beta * hpa[j];
  }
  return g;
}

enum class FdMode {
  // Network inputs held at the unperturbed trajectory; the derivative of
  // this loss is what backward() computes.
  Detached,
  // The plain unrolled loss, network inputs included.
  Full,
};

struct FiniteDiffResult {
  WeightGradients grad;
  // False if any +-h perturbation flipped a relu mask somewhere in the unroll.
  bool mask_stable = true;
};

namespace detail {

struct PerturbedEval {
  double loss = 0.0;
  std::vector<std::vector<std::uint8_t>> masks;  // flattened per (step, layer)
};

inline PerturbedEval eval_loss(const L2OWeights& w, const QuadraticBatch& batch, const BatchPoint& X0,
                               std::size_t T, FdMode mode, const RolloutTrace* base) {
  PerturbedEval out;
  BatchPoint X = X0;
  BatchPoint g = gradient(batch, X);
  for (std::size_t t = 1; t <= T; ++t) {
    const bool frozen = mode == FdMode::Detached;
    NetActivations act = frozen ? nn_forward(w, base->X[t - 1], base->Gamma[t - 1]) : nn_forward(w, X, g);
    apply_step(batch, act.P, g, X);
    g = gradient(batch, X);
    for (std::size_t l = 1; l < act.mask.size(); ++l) out.masks.push_back(std::move(act.mask[l]));
  }
  out.loss = objective(batch, X);
  return out;
}

}  // namespace detail

inline FiniteDiffResult finite_diff(const L2OWeights& w, const QuadraticBatch& batch, const BatchPoint& X0,
                                    std::size_t T, double h, FdMode mode = FdMode::Detached) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
  w.validate();
  const RolloutTrace base = rollout(w, batch, X0, T, {.keep_activations = false});
  const auto ref = detail::eval_loss(w, batch, X0, T, mode, &base);
  FiniteDiffResult res{WeightGradients::zeros_like(w), true};
  L2OWeights wp = w;
  for (std::size_t l = 0; l < w.L(); ++l) {
    auto& entries = wp.W[l].entries();
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const double orig = entries[k];
      entries[k] = orig + h;
      const auto fp = detail::eval_loss(wp, batch, X0, T, mode, &base);
      entries[k] = orig - h;
      const auto fm = detail::eval_loss(wp, batch, X0, T, mode, &base);
      entries[k] = orig;
      res.grad.dW[l].entries()[k] = (fp.loss - fm.loss) / (2.0 * h);
      if (fp.masks != ref.masks || fm.masks != ref.masks) res.mask_stable = false;
    }
  }
  return res;
}

inline WeightGradients finite_diff_grad(const L2OWeights& w, const QuadraticBatch& batch, const BatchPoint& X0,
                                        std::size_t T, double h, FdMode mode = FdMode::Detached) {
  return finite_diff(w, batch, X0, T, h, mode).grad;
}

// Largest entrywise relative discrepancy; pairs closer than abs_floor count as equal.
inline double max_relative_error(const WeightGradients& a, const WeightGradients& b, double abs_floor = 1e-9) {
  if (a.L() != b.L()) throw std::invalid_argument("max_relative_error: layer counts differ");
  double worst = 0.0;
  for (std::size_t l = 0; l < a.L(); ++l) {
    const auto& x = a.dW[l].entries();
    const auto& y = b.dW[l].entries();
    if (x.size() != y.size()) throw std::invalid_argument("max_relative_error: layer shapes differ");
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double diff = std::abs(x[k] - y[k]);
      if (diff <= abs_floor) continue;
      worst = std::max(worst, diff / std::max(std::abs(x[k]), std::abs(y[k])));
    }
  }
  return worst;
}

}  // namespace l2o
