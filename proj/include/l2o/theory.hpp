#pragma once

// Convergence constants, initialization conditions, learning-rate ceilings,
// the linear training rate and runtime checks of the supporting inequalities.
//
// Most constants grow like e^{LT}; every product is therefore carried both as a
// plain double (inf on overflow, with overflow flagged) and as a natural log,
// and all comparisons are made on the logs.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2o/grad.hpp"
#include "l2o/linalg.hpp"
#include "l2o/model.hpp"
#include "l2o/problem.hpp"

namespace l2o {

struct TheoryQuantities {
  std::size_t T = 0, L = 0;
  double beta = 0.0, beta0 = 0.0;
  double x0_norm = 0.0, mty_norm = 0.0, y_norm = 0.0;

  std::vector<double> C;
  std::vector<double> lambda_bar;
  double Theta_L = 0.0, Theta_Lm1 = 0.0;
  double log_Theta_L = 0.0, log_Theta_Lm1 = 0.0;

  Vector Phi;     // Phi[j-1] = Phi_j, j = 1..T
  Vector Lambda;  // Lambda[j-1] = Lambda_j
  double S_Lambda_T = 0.0, S_Lambda_Tm1 = 0.0, S_lambda_L = 0.0;
  double zeta1 = 0.0, zeta2 = 0.0;

  Vector delta1, log_delta1;  // index t-1, t = 1..T
  double delta2 = 0.0, log_delta2 = 0.0;
  double delta3 = 0.0;
  double delta4 = 0.0, log_delta4 = 0.0;
  double alpha0 = 0.0;

  // Some plain value overflowed; the log fields remain exact.
  bool overflow = false;
};

namespace detail {

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

inline double safe_log(double x) {
  return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

// Scalar core: everything except alpha0 depends on the data only through these
// norms and constants.
inline TheoryQuantities make_quantities(const std::vector<double>& layer_norms, std::vector<double> C,
                                        double beta, double beta0, double x0_norm, double mty_norm,
                                        double y_norm, std::size_t T, double alpha0) {
  if (T < 1) throw std::invalid_argument("quantities: T must be at least 1");
  if (layer_norms.empty()) throw std::invalid_argument("quantities: no layers");
  if (!(beta > 0.0) || !(beta0 > 0.0)) throw std::invalid_argument("quantities: beta and beta0 must be positive");
  if (C.empty()) C.assign(layer_norms.size(), 1.0);
  if (C.size() != layer_norms.size()) throw std::invalid_argument("quantities: C needs one entry per layer");

  TheoryQuantities q;
  q.T = T;
  q.L = layer_norms.size();
  q.beta = beta;
  q.beta0 = beta0;
  q.x0_norm = x0_norm;
  q.mty_norm = mty_norm;
  q.y_norm = y_norm;
  q.alpha0 = alpha0;
  q.C = C;

  q.Theta_L = 1.0;
  q.log_Theta_L = 0.0;
  for (std::size_t l = 0; l < q.L; ++l) {
    const double lb = layer_norms[l] + C[l];
    if (!(lb > 0.0)) throw std::invalid_argument("quantities: lambda_bar must be positive");
    q.lambda_bar.push_back(lb);
    if (l + 1 == q.L) {
      q.Theta_Lm1 = q.Theta_L;
      q.log_Theta_Lm1 = q.log_Theta_L;
    }
    q.Theta_L *= lb;
    q.log_Theta_L += std::log(lb);
    q.S_lambda_L += 1.0 / (lb * lb);
  }

  const double b = beta, x = x0_norm, g = mty_norm;
  for (std::size_t jj = 1; jj <= T; ++jj) {
    const double j = static_cast<double>(jj);
    q.Phi.push_back(x + (2.0 * j - 1.0) / b * g);
    q.Lambda.push_back((1.0 + b) * x * x + ((4.0 * j - 3.0) * (1.0 + b) + b) / b * x * g +
                       (2.0 * j - 1.0) * (b * (2.0 * j - 1.0) + (2.0 * j - 2.0)) / (b * b) * g * g);
  }
  for (std::size_t t = 0; t < T; ++t) {
    q.S_Lambda_T += q.Lambda[t];
    if (t + 1 < T) q.S_Lambda_Tm1 += q.Lambda[t];
  }
  const double Tn = static_cast<double>(T);
  q.zeta1 = std::sqrt(b) * x + (2.0 * Tn + 1.0) * y_norm;
  q.zeta2 = x + (2.0 * Tn - 2.0) / b * g;

  // delta1^t = (1 + c Phi_t) delta1^{t-1} + Lambda_t, c = (1+beta)/2 Theta_L.
  const double c = 0.5 * (1.0 + b) * q.Theta_L;
  const double log_c = std::log(0.5 * (1.0 + b)) + q.log_Theta_L;
  double d = 0.0, ld = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < T; ++t) {
    d = (1.0 + c * q.Phi[t]) * d + q.Lambda[t];
    ld = detail::log_add(detail::log_add(0.0, log_c + detail::safe_log(q.Phi[t])) + ld,
                         detail::safe_log(q.Lambda[t]));
    q.delta1.push_back(d);
    q.log_delta1.push_back(ld);
  }
  q.delta2 = T >= 2 ? q.delta1[T - 2] : 0.0;
  q.log_delta2 = T >= 2 ? q.log_delta1[T - 2] : -std::numeric_limits<double>::infinity();

  q.delta3 = (1.0 + b) * x + (2.0 * Tn - 1.0 + (2.0 * Tn - 2.0) / b) * g;
  // log(sigma(z)(1 - sigma(z))) = -z - 2 log(1 + e^{-z}) for z >= 0.
  const double z = q.delta3 * q.Theta_L;
  const double log_z = detail::safe_log(q.delta3) + q.log_Theta_L;
  const double zz = std::isfinite(z) ? z : std::exp(log_z);
  q.log_delta4 = -zz - 2.0 * std::log1p(std::exp(-zz));
  q.delta4 = std::exp(q.log_delta4);

  q.overflow = !std::isfinite(q.Theta_L) || !std::isfinite(d) || !std::isfinite(z);
  return q;
}

// alpha0 = sigma_min of the last hidden activation at the final unroll step.
inline double initial_alpha0(const L2OWeights& w0, const QuadraticBatch& batch, const BatchPoint& X0,
                             std::size_t T) {
  const RolloutTrace tr = rollout(w0, batch, X0, T, {.keep_activations = false});
  const NetActivations act = nn_forward(w0, tr.X[T - 1], tr.Gamma[T - 1]);
  return smallest_singular_value(act.G.back(), 1e-12);
}

inline TheoryQuantities quantities(const L2OWeights& w0, const QuadraticBatch& batch, const BatchPoint& X0,
                                   std::size_t T, std::vector<double> C = {}) {
  w0.validate();
  detail::check_point(batch, X0, "quantities");
  std::vector<double> norms;
  for (const auto& W : w0.W) norms.push_back(spectral_norm(W, 1e-12));
  return make_quantities(norms, std::move(C), batch.beta(), batch.beta0(), norm2(X0), norm2(batch.mty()),
                         batch.y_norm(), T, initial_alpha0(w0, batch, X0, T));
}

struct ConditionCheck {
  double lhs = 0.0, rhs = 0.0;  // plain values, may be 0 or inf after over/underflow
  double log_lhs = 0.0, log_rhs = 0.0;
  bool pass = false;
  // Right-hand side is non-positive; the condition holds trivially.
  bool vacuous = false;
};

struct ConditionReport {
  ConditionCheck c11a, c11b, c11c, c11d;
  double eta_max_12a = 0.0, eta_max_12b = 0.0, eta_admissible = 0.0;
  double log_eta_max_12a = 0.0, log_eta_max_12b = 0.0, log_eta_admissible = 0.0;
  std::optional<double> eta;
  std::optional<double> rate_base;

  bool all_pass() const { return c11a.pass && c11b.pass && c11c.pass && c11d.pass; }
};

namespace detail {

inline ConditionCheck make_check(double log_lhs, double log_rhs) {
  ConditionCheck c;
  c.log_lhs = log_lhs;
  c.log_rhs = log_rhs;
  c.lhs = std::exp(log_lhs);
  c.rhs = std::exp(log_rhs);
  c.pass = log_lhs >= log_rhs;
  return c;
}

}  // namespace detail

// log of 4 eta (beta0/beta)^2 delta4^2 alpha0^2, so that rate base = 1 - exp(.)
inline double log_rate_decrement(const TheoryQuantities& q, double eta) {
  return std::log(4.0 * eta) + 2.0 * std::log(q.beta0 / q.beta) + 2.0 * q.log_delta4 +
         2.0 * detail::safe_log(q.alpha0);
}

inline ConditionReport check_conditions(const TheoryQuantities& q, std::optional<double> eta = {}) {
  using detail::safe_log;
  const double b = q.beta, b0 = q.beta0;
  const double la = safe_log(q.alpha0);
  const double l_d4inv2 = -2.0 * q.log_delta4;
  const double l_SL = safe_log(q.S_Lambda_T), l_Sl = safe_log(q.S_lambda_L);
  const double l_LT = safe_log(q.Lambda[q.T - 1]);
  ConditionReport r;

  r.c11a = detail::make_check(la, std::log(8.0 * (1.0 + b)) + safe_log(q.zeta2));

  // Bracket is B - A with A the negative term; evaluated as a signed log.
  {
    const double A = std::log(0.5) + 2.0 * q.log_Theta_Lm1 + l_LT + safe_log(q.S_Lambda_Tm1);
    const double B = 2.0 * q.log_Theta_L + detail::log_add(l_LT, q.log_delta2) + l_Sl + l_SL;
    const double pre = std::log(b * b * b / (4.0 * b0 * b0)) + l_d4inv2;
    if (B > A) {
      const double diff = A == -std::numeric_limits<double>::infinity() ? B : B + std::log1p(-std::exp(A - B));
      r.c11b = detail::make_check(2.0 * la, pre + diff);
    } else {
      r.c11b = detail::make_check(2.0 * la, -std::numeric_limits<double>::infinity());
      r.c11b.rhs = B == A ? 0.0 : -std::exp(pre + A + std::log1p(-std::exp(B - A)));
      r.c11b.pass = true;
      r.c11b.vacuous = true;
    }
  }

  {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < q.L; ++l)
      worst = std::max(worst, q.log_Theta_L - std::log(q.C[l]) - std::log(q.lambda_bar[l]));
    const double rhs = worst + std::log(b * b * std::sqrt(b) / (8.0 * b0 * b0)) + l_d4inv2 +
                       safe_log(q.zeta1) + l_SL;
    r.c11c = detail::make_check(2.0 * la, rhs);
  }

  {
    const double rhs = std::log((1.0 + b) * b * b * std::sqrt(b) / (2.0 * b0 * b0)) + l_d4inv2 + q.log_Theta_L +
                       q.log_Theta_Lm1 + safe_log(q.zeta1) + safe_log(q.zeta2) + l_Sl + l_SL;
    r.c11d = detail::make_check(3.0 * la, rhs);
  }

  {
    const double num = detail::log_add(q.log_delta2, l_LT);
    const double den = detail::log_add(q.log_delta2, q.log_Theta_L + l_SL + l_Sl);
    r.log_eta_max_12a = std::log(8.0 / b) + num - den - 2.0 * l_SL;
  }
  r.log_eta_max_12b = std::log(0.25 * b * b / (b0 * b0)) + l_d4inv2 - 2.0 * la;
  r.log_eta_admissible = std::min(r.log_eta_max_12a, r.log_eta_max_12b);
  r.eta_max_12a = std::exp(r.log_eta_max_12a);
  r.eta_max_12b = std::exp(r.log_eta_max_12b);
  r.eta_admissible = std::exp(r.log_eta_admissible);

  if (eta) {
    r.eta = eta;
    if (*eta > 0.0 && std::log(*eta) < r.log_eta_max_12b)
      r.rate_base = -std::expm1(log_rate_decrement(q, *eta));
  }
  return r;
}

class RateError : public std::domain_error {
 public:
  RateError(const std::string& what, double base) : std::domain_error(what), base_(base) {}
  double base() const { return base_; }

 private:
  double base_;
};

// 1 - 4 eta (beta0/beta)^2 delta4^2 alpha0^2; equals 0 exactly at the 12b ceiling.
inline double rate_base(const TheoryQuantities& q, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("predicted_rate: eta must be positive");
  const double u = log_rate_decrement(q, eta);
  const double base = -std::expm1(u);
  const double log_ceiling = std::log(0.25 * q.beta * q.beta / (q.beta0 * q.beta0)) - 2.0 * q.log_delta4 -
                             2.0 * detail::safe_log(q.alpha0);
  if (std::log(eta) >= log_ceiling || !(base > 0.0))
    throw RateError("predicted_rate: rate base " + std::to_string(base) + " is outside (0, 1]; eta too large",
                    base);
  return base;
}

inline double predicted_rate(const TheoryQuantities& q, double eta, std::size_t k) {
  rate_base(q, eta);
  if (k == 0) return 1.0;
  return std::exp(static_cast<double>(k) * std::log1p(-std::exp(log_rate_decrement(q, eta))));
}

inline double aligned_bound(const TheoryQuantities& q, double eta, std::size_t k, std::size_t T,
                            std::span<const double> X0, std::span<const double> Xstar) {
  if (T < 1) throw std::invalid_argument("aligned_bound: T must be at least 1");
  if (X0.size() != Xstar.size()) throw std::invalid_argument("aligned_bound: X0 and X* lengths differ");
  double dist2 = 0.0;
  for (std::size_t i = 0; i < X0.size(); ++i) dist2 += (X0[i] - Xstar[i]) * (X0[i] - Xstar[i]);
  return predicted_rate(q, eta, k) * (q.beta / static_cast<double>(T)) * dist2;
}

struct BoundCheck {
  std::string name;
  double lhs = 0.0, rhs = 0.0;
  bool pass = true;
  // Hypothesis of the inequality not met (e.g. weights outside the lambda-bar ball).
  bool applicable = true;
};

struct BoundReport {
  std::vector<BoundCheck> checks;
  // Operator norm of the worst step map, reported for information only.
  double contraction_operator_norm = 0.0;

  bool all_pass() const {
    for (const auto& c : checks)
      if (c.applicable && !c.pass) return false;
    return true;
  }
  std::size_t violations() const {
    std::size_t n = 0;
    for (const auto& c : checks) n += c.applicable && !c.pass;
    return n;
  }
};

namespace detail {

inline Vector step_map(const QuadraticBatch& batch, std::span<const double> P, std::span<const double> v) {
  Vector dv(v.begin(), v.end());
  const Vector h = batch.apply_hessian(v);
  const double inv_beta = 1.0 / batch.beta();
  for (std::size_t i = 0; i < dv.size(); ++i) dv[i] -= inv_beta * P[i] * h[i];
  return dv;
}

inline Vector step_map_t(const QuadraticBatch& batch, std::span<const double> P, std::span<const double> v) {
  Vector pv(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) pv[i] = P[i] * v[i];
  const Vector h = batch.apply_hessian(pv);
  Vector out(v.begin(), v.end());
  const double inv_beta = 1.0 / batch.beta();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= inv_beta * h[i];
  return out;
}

// ||I - (1/beta) D(P) H||_2 by power iteration on A^T A.
inline double step_map_norm(const QuadraticBatch& batch, std::span<const double> P, int iters = 200) {
  Vector v(P.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
  double s = 0.0;
  for (int it = 0; it < iters; ++it) {
    const double nv = norm2(v);
    for (auto& x : v) x /= nv;
    Vector w = step_map_t(batch, P, step_map(batch, P, v));
    s = std::sqrt(norm2(w));
    v = std::move(w);
  }
  return s;
}

inline bool weights_norm_ok(const L2OWeights& w, const TheoryQuantities& q) {
  for (std::size_t l = 0; l < w.L(); ++l)
    if (spectral_norm(w.W[l], 1e-12) > q.lambda_bar[l] * (1.0 + 1e-12)) return false;
  return true;
}

}  // namespace detail

// Runtime checks along one rollout: P range, contraction on random probes,
// iterate bound, hidden-output bound, and the layer gradient bound.
inline BoundReport verify_bounds(const RolloutTrace& tr, const WeightGradients& grads, const L2OWeights& w,
                                 const QuadraticBatch& batch, const TheoryQuantities& q, std::size_t probes = 100,
                                 std::uint64_t probe_seed = 1, bool operator_norm = false) {
  BoundReport rep;
  const double b = batch.beta();
  const double x0 = norm2(tr.X.front());
  const double g = norm2(batch.mty());

  {
    BoundCheck c{"p_range", 0.0, 2.0};
    double lo = 2.0, hi = 0.0;
    for (const auto& P : tr.P)
      for (double p : P) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
    c.lhs = hi;
    c.pass = lo > 0.0 && hi < 2.0;
    rep.checks.push_back(c);
  }

  {
    SeededRng rng(probe_seed);
    BoundCheck c{"contraction", 0.0, 1.0};
    for (std::size_t t = 0; t < tr.T; ++t) {
      for (std::size_t k = 0; k < probes; ++k) {
        const Vector v = gaussian_vector(rng, batch.dim());
        c.lhs = std::max(c.lhs, norm2(detail::step_map(batch, tr.P[t], v)) / norm2(v));
      }
      if (operator_norm)
        rep.contraction_operator_norm = std::max(rep.contraction_operator_norm, detail::step_map_norm(batch, tr.P[t]));
    }
    c.pass = c.lhs <= 1.0 + 1e-12;
    rep.checks.push_back(c);
  }

  for (std::size_t t = 0; t <= tr.T; ++t) {
    const double lhs = norm2(tr.X[t]);
    const double rhs = x0 + 2.0 * static_cast<double>(t) / b * g;
    rep.checks.push_back({"x_bound_t" + std::to_string(t), lhs, rhs, lhs <= rhs * (1.0 + 1e-12) + 1e-300});
  }

  std::vector<double> wnorm;
  for (const auto& W : w.W) wnorm.push_back(spectral_norm(W, 1e-12));
  for (std::size_t t = 1; t <= tr.T; ++t) {
    NetActivations recomputed;
    const NetActivations* act = nullptr;
    if (tr.has_activations()) {
      act = &tr.acts[t - 1];
    } else {
      recomputed = nn_forward(w, tr.X[t - 1], tr.Gamma[t - 1]);
      act = &recomputed;
    }
    const double tt = static_cast<double>(t);
    double rhs = (1.0 + b) * x0 + (2.0 * tt - 1.0 + (2.0 * tt - 2.0) / b) * g;
    for (std::size_t l = 0; l < w.L(); ++l) {
      if (l > 0) rhs *= wnorm[l - 1];
      const Matrix& G = act->G[l];
      const double lhs = frobenius_norm(G) == 0.0 ? 0.0 : spectral_norm(G, 1e-10);
      rep.checks.push_back({"g_bound_t" + std::to_string(t) + "_l" + std::to_string(l), lhs, rhs,
                            lhs <= rhs * (1.0 + 1e-9)});
    }
  }

  {
    const bool inside = detail::weights_norm_ok(w, q);
    const double res = std::sqrt(2.0 * objective(batch, tr.X.back()));
    const auto norms = grads.layer_norms();
    for (std::size_t l = 0; l < grads.L(); ++l) {
      BoundCheck c{"grad_bound_l" + std::to_string(l + 1), norms[l], 0.0};
      c.rhs = std::exp(0.5 * std::log(b) + q.log_Theta_L + std::log(q.S_Lambda_T) -
                       std::log(2.0 * q.lambda_bar[l])) * res;
      c.pass = c.lhs <= c.rhs * (1.0 + 1e-9);
      c.applicable = inside;
      rep.checks.push_back(c);
    }
  }
  return rep;
}

// Sum over layers of ||W^a_l - W^b_l||_2 / lambda_bar_l.
inline double weighted_distance(const L2OWeights& a, const L2OWeights& b, const TheoryQuantities& q) {
  if (a.L() != b.L() || a.L() != q.L) throw std::invalid_argument("weighted_distance: layer counts differ");
  double s = 0.0;
  for (std::size_t l = 0; l < a.L(); ++l) {
    const Matrix d = a.W[l] - b.W[l];
    if (frobenius_norm(d) > 0.0) s += spectral_norm(d, 1e-12) / q.lambda_bar[l];
  }
  return s;
}

// Response of the iterates to a weight change, per step t = 1..T:
//   ||X_t^a - X_t^b|| <= 1/2 delta1^t Theta_L sum_l ||W^a_l - W^b_l|| / lambda_bar_l.
// Needs both weight sets inside the lambda-bar balls.
inline std::vector<BoundCheck> check_semi_smoothness(const L2OWeights& wa, const L2OWeights& wb,
                                                     const QuadraticBatch& batch, const BatchPoint& X0,
                                                     const TheoryQuantities& q) {
  const RolloutTrace ta = rollout(wa, batch, X0, q.T, {.keep_activations = false});
  const RolloutTrace tb = rollout(wb, batch, X0, q.T, {.keep_activations = false});
  const bool inside = detail::weights_norm_ok(wa, q) && detail::weights_norm_ok(wb, q);
  const double log_dist = detail::safe_log(weighted_distance(wa, wb, q));
  std::vector<BoundCheck> out;
  for (std::size_t t = 1; t <= q.T; ++t) {
    Vector diff = ta.X[t];
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= tb.X[t][i];
    BoundCheck c{"semi_smooth_t" + std::to_string(t), norm2(diff), 0.0};
    c.rhs = std::exp(std::log(0.5) + q.log_delta1[t - 1] + q.log_Theta_L + log_dist);
    c.pass = c.lhs <= c.rhs * (1.0 + 1e-9);
    c.applicable = inside;
    out.push_back(c);
  }
  return out;
}

}  // namespace l2o
