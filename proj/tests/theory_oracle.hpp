#pragma once

// Direct evaluation of the convergence constants: double sums and explicit
// products, no recurrences and no log space. Only usable for small T and
// moderate magnitudes.

#include <cmath>
#include <vector>

namespace l2o::test {

struct NaiveQuantities {
  std::vector<double> lambda_bar, Phi, Lambda, delta1;
  double Theta_L = 1, Theta_Lm1 = 1, S_Lambda_T = 0, S_Lambda_Tm1 = 0, S_lambda_L = 0;
  double zeta1 = 0, zeta2 = 0, delta2 = 0, delta3 = 0, delta4 = 0;
};

inline NaiveQuantities naive_quantities(const std::vector<double>& norms, const std::vector<double>& C, double beta,
                                        double x, double g, double y, int T) {
  NaiveQuantities o;
  const int L = static_cast<int>(norms.size());
  for (int l = 0; l < L; ++l) {
    o.lambda_bar.push_back(norms[l] + C[l]);
    o.Theta_L *= o.lambda_bar[l];
    if (l < L - 1) o.Theta_Lm1 *= o.lambda_bar[l];
    o.S_lambda_L += std::pow(o.lambda_bar[l], -2.0);
  }
  const double b = beta;
  for (int j = 1; j <= T; ++j) {
    o.Phi.push_back(x + (2.0 * j - 1) / b * g);
    o.Lambda.push_back((1 + b) * x * x + ((4.0 * j - 3) * (1 + b) + b) / b * x * g +
                       (2.0 * j - 1) * (b * (2.0 * j - 1) + (2.0 * j - 2)) / (b * b) * g * g);
  }
  for (int t = 1; t <= T; ++t) o.S_Lambda_T += o.Lambda[t - 1];
  for (int t = 1; t <= T - 1; ++t) o.S_Lambda_Tm1 += o.Lambda[t - 1];
  o.zeta1 = std::sqrt(b) * x + (2.0 * T + 1) * y;
  o.zeta2 = x + (2.0 * T - 2) / b * g;
  auto factor = [&](int j) { return 1 + (1 + b) / 2 * o.Theta_L * o.Phi[j - 1]; };
  auto delta = [&](int t) {
    double sum = 0;
    for (int s = 1; s <= t; ++s) {
      double prod = 1;
      for (int j = s + 1; j <= t; ++j) prod *= factor(j);
      sum += prod * o.Lambda[s - 1];
    }
    return sum;
  };
  for (int t = 1; t <= T; ++t) o.delta1.push_back(delta(t));
  o.delta2 = delta(T - 1);
  o.delta3 = (1 + b) * x + (2.0 * T - 1 + (2.0 * T - 2) / b) * g;
  const double z = o.delta3 * o.Theta_L;
  const double s = 1 / (1 + std::exp(-z));
  o.delta4 = s * (1 / (1 + std::exp(z)));
  return o;
}

}  // namespace l2o::test
