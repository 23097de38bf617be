#pragma once

// Full-batch SGD on the unrolled loss F(X_T), plus the GD and Adam baselines
// used for comparison.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2o/grad.hpp"
#include "l2o/init.hpp"
#include "l2o/model.hpp"
#include "l2o/problem.hpp"
#include "l2o/theory.hpp"

namespace l2o {

inline constexpr double kDivergenceLoss = 1e12;
inline constexpr double kInstabilityFactor = 10.0;

struct TrainConfig {
  std::size_t T = 20;
  std::size_t epochs = 400;
  double eta = 1e-4;
  InitConfig init;
  std::size_t log_every = 1;
  bool record_bound_checks = false;
  // Evaluates the condition report at initialization (costs one sigma_min).
  bool compute_theory = true;
  std::optional<BatchPoint> X0;  // origin when unset

  void validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("TrainConfig: eta must be finite and >= 0");
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be at least 1");
    if (T < 1) throw std::invalid_argument("TrainConfig: T must be at least 1");
    if (log_every < 1) throw std::invalid_argument("TrainConfig: log_every must be at least 1");
    init.validate();
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based; loss is F(X_T) after this epoch's update
  double loss = 0.0;
  std::vector<double> grad_norms;  // spectral norms of the gradient applied this epoch
  bool unstable = false;
  int bound_violations = -1;  // -1 when not recorded
  double wall_ms = 0.0;
};

enum class TrainStatus { Ok, Unstable, Diverged };

inline const char* to_string(TrainStatus s) {
  switch (s) {
    case TrainStatus::Ok: return "ok";
    case TrainStatus::Unstable: return "unstable";
    case TrainStatus::Diverged: return "diverged";
  }
  return "?";
}

struct TrainLog {
  std::vector<EpochRecord> rows;
  double beta = 0.0, beta0 = 0.0;
  double initial_loss = 0.0;  // F(W^0), equals the GD reference
  double gd_loss = 0.0;       // GD objective after T steps from the same X0
  std::optional<TheoryQuantities> quantities;
  std::optional<ConditionReport> conditions;
  TrainStatus status = TrainStatus::Ok;
  std::optional<std::size_t> first_unstable_epoch;
  std::optional<std::size_t> diverged_epoch;
  std::string divergence_reason;

  double final_loss() const { return rows.empty() ? initial_loss : rows.back().loss; }
};

inline double improvement_ratio(double obj_gd, double obj_l2o) {
  if (!(obj_gd > 0.0)) throw std::domain_error("improvement_ratio: GD objective must be positive");
  return (obj_gd - obj_l2o) / obj_gd;
}

struct TrainResult {
  L2OWeights weights;
  TrainLog log;
};

// Called after every epoch with the updated weights; used for periodic checkpoints.
using EpochCallback = std::function<void(const L2OWeights&, const EpochRecord&)>;

inline TrainResult train(const TrainConfig& cfg, const QuadraticBatch& batch, const EpochCallback& on_epoch = {}) {
  using Clock = std::chrono::steady_clock;
  cfg.validate();
  const BatchPoint X0 = cfg.X0 ? *cfg.X0 : batch.zero_point();
  detail::check_point(batch, X0, "train");

  TrainResult res{init_weights(cfg.init), {}};
  L2OWeights& w = res.weights;
  TrainLog& log = res.log;
  log.beta = batch.beta();
  log.beta0 = batch.beta0();
  log.gd_loss = objective(batch, gd_rollout(batch, X0, cfg.T).back());

  if (cfg.compute_theory) {
    log.quantities = quantities(w, batch, X0, cfg.T, cfg.init.slack());
    log.conditions = check_conditions(*log.quantities, cfg.eta > 0.0 ? std::optional<double>(cfg.eta) : std::nullopt);
  }

  // Large problems recompute activations in the backward pass instead of caching them.
  std::size_t act_bytes = 0;
  for (std::size_t l = 0; l + 1 < w.dims.size(); ++l) act_bytes += w.dims[l] * batch.dim() * 9;
  const bool cache = act_bytes * cfg.T < (std::size_t{1} << 30);

  RolloutTrace tr = rollout(w, batch, X0, cfg.T, {.keep_activations = cache});
  log.initial_loss = final_objective(batch, tr);
  double running_min = log.initial_loss;

  for (std::size_t k = 1; k <= cfg.epochs; ++k) {
    const auto t0 = Clock::now();
    EpochRecord row;
    row.epoch = k;
    const WeightGradients g = backward(tr, w, batch);
    row.grad_norms = g.layer_norms();
    for (std::size_t l = 0; l < w.L(); ++l) {
      auto& W = w.W[l].entries();
      const auto& dW = g.dW[l].entries();
      for (std::size_t i = 0; i < W.size(); ++i) W[i] -= cfg.eta * dW[i];
    }

    bool diverged = false;
    try {
      if (!std::all_of(w.W.begin(), w.W.end(), [](const Matrix& m) { return m.all_finite(); }))
        throw NonFiniteError(0, "weights overflowed");
      tr = rollout(w, batch, X0, cfg.T, {.keep_activations = cache});
      row.loss = final_objective(batch, tr);
      if (!std::isfinite(row.loss)) throw NonFiniteError(cfg.T, "loss overflowed");
      if (row.loss > kDivergenceLoss) {
        diverged = true;
        log.divergence_reason = "loss exceeded 1e12";
      }
    } catch (const NonFiniteError& e) {
      diverged = true;
      row.loss = std::numeric_limits<double>::infinity();
      log.divergence_reason = e.what();
    }

    if (!diverged) running_min = std::min(running_min, row.loss);
    row.unstable = diverged || row.loss > kInstabilityFactor * running_min;
    if (row.unstable && !log.first_unstable_epoch) log.first_unstable_epoch = k;

    if (!diverged && cfg.record_bound_checks && log.quantities && (k % cfg.log_every == 0 || k == cfg.epochs)) {
      const WeightGradients gk = backward(tr, w, batch);
      row.bound_violations = static_cast<int>(verify_bounds(tr, gk, w, batch, *log.quantities, 10).violations());
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (on_epoch) on_epoch(w, row);
    log.rows.push_back(std::move(row));

    if (diverged) {
      log.status = TrainStatus::Diverged;
      log.diverged_epoch = k;
      break;
    }
  }
  if (log.status == TrainStatus::Ok && log.first_unstable_epoch) log.status = TrainStatus::Unstable;
  return res;
}

struct AdamParams {
  double eta = 1e-2;
  double b1 = 0.9, b2 = 0.999, eps = 1e-8;
};

// Adam on X (not on the network); returns X_0..X_steps.
inline std::vector<BatchPoint> adam_infer(const QuadraticBatch& batch, const BatchPoint& X0, std::size_t steps,
                                          double eta, double b1, double b2, double eps) {
  if (!(b1 >= 0.0 && b1 < 1.0) || !(b2 >= 0.0 && b2 < 1.0))
    throw std::invalid_argument("adam_infer: moment coefficients must lie in [0, 1)");
  detail::check_point(batch, X0, "adam_infer");
  std::vector<BatchPoint> traj{X0};
  traj.reserve(steps + 1);
  BatchPoint X = X0;
  Vector m(X.size(), 0.0), v(X.size(), 0.0);
  double b1t = 1.0, b2t = 1.0;
  for (std::size_t t = 1; t <= steps; ++t) {
    const BatchPoint g = gradient(batch, X);
    b1t *= b1;
    b2t *= b2;
    for (std::size_t i = 0; i < X.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mh = m[i] / (1.0 - b1t);
      const double vh = v[i] / (1.0 - b2t);
      X[i] -= eta * mh / (std::sqrt(vh) + eps);
    }
    traj.push_back(X);
  }
  return traj;
}

// Objective after every learned step, F(X_0)..F(X_steps), without storing the trajectory.
inline std::vector<double> infer(const L2OWeights& w, const QuadraticBatch& batch, const BatchPoint& X0,
                                 std::size_t steps) {
  if (steps < 1) throw std::invalid_argument("infer: steps must be at least 1");
  w.validate();
  detail::check_point(batch, X0, "infer");
  std::vector<double> out{objective(batch, X0)};
  BatchPoint X = X0;
  BatchPoint g = gradient(batch, X);
  for (std::size_t t = 1; t <= steps; ++t) {
    const NetActivations act = nn_forward(w, X, g);
    apply_step(batch, act.P, g, X);
    g = gradient(batch, X);
    const double f = objective(batch, X);
    if (!all_finite(X) || !std::isfinite(f)) throw NonFiniteError(t, "inference iterate overflowed");
    out.push_back(f);
  }
  return out;
}

inline std::vector<double> gd_objectives(const QuadraticBatch& batch, const BatchPoint& X0, std::size_t steps) {
  detail::check_point(batch, X0, "gd_objectives");
  std::vector<double> out{objective(batch, X0)};
  BatchPoint X = X0;
  const double inv_beta = 1.0 / batch.beta();
  for (std::size_t t = 1; t <= steps; ++t) {
    const BatchPoint g = gradient(batch, X);
    for (std::size_t i = 0; i < X.size(); ++i) X[i] -= inv_beta * g[i];
    out.push_back(objective(batch, X));
  }
  return out;
}

}  // namespace l2o
