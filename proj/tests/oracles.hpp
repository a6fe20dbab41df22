#ifndef FDRELAY_TEST_ORACLES_HPP
#define FDRELAY_TEST_ORACLES_HPP

// Independent reference computations used only by the tests. Nothing here
// calls the library's closed forms.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "fdrelay/drift_kernel.hpp"
#include "fdrelay/params.hpp"

namespace oracle {

// Received power factor written out by hand.
inline double gain(double p_tx, double r, double alpha) { return p_tx / std::pow(r, alpha); }

// Rayleigh outage complement: own link (v, h), interferers (v_k, h_k), noise
// eta, threshold gamma, plus the residual self-interference factor when the
// receiver transmits (r_alpha_g = r^alpha * g, zero otherwise).
inline double rayleigh_success(double v, double h, double gamma, double eta,
                               const std::vector<std::pair<double, double>>& interferers, double r_alpha_g) {
  double p = std::exp(-gamma * eta / (v * h)) / (1.0 + gamma * r_alpha_g);
  for (const auto& [vk, hk] : interferers) p /= 1.0 + gamma * vk * hk / (v * h);
  return p;
}

inline double binomial_pmf(int n, int k, double p) {
  const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(logc + k * std::log(p) + (n - k) * std::log1p(-p));
}

// No-relay delay with the numerical-section geometry: identical users at
// 130 m, 1 mW, alpha 4, eta 1e-11.
inline double baseline_delay(int n, double q, double gamma) {
  const double h = gain(1e-3, 130.0, 4.0);
  double t = 0.0;
  for (int k = 0; k <= n - 1; ++k) {
    const double p = std::exp(-gamma * 1e-11 / h) * std::pow(1.0 + gamma, -k);
    t += q * binomial_pmf(n - 1, k, q) * p;
  }
  return 1.0 / t;
}

// Root of lambda1(q0) = mu(q0) by bisection on the enumerated drift.
inline double q0_min_bisection(fdrelay::NetworkParams p, double tol = 1e-13) {
  auto surplus = [&](double q0) {
    p.q0 = q0;
    const fdrelay::DriftDistribution d = fdrelay::enumerate_drift(p);
    double mean_change = -d.p_minus1;
    for (int k = 1; k <= d.n; ++k) mean_change += k * d.p1(k);
    return mean_change;  // lambda1 - mu
  };
  double lo = 0.0, hi = 1.0;
  if (surplus(hi) >= 0.0) return 1.0;
  if (surplus(lo) < 0.0) return 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (surplus(mid) >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Stationary law of a small chain by plain power iteration.
inline std::vector<double> power_iteration(const std::vector<std::vector<double>>& p, int iterations) {
  const std::size_t m = p.size();
  std::vector<double> pi(m, 1.0 / static_cast<double>(m)), next(m);
  for (int it = 0; it < iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) next[j] += pi[i] * p[i][j];
    pi.swap(next);
  }
  return pi;
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

// Random geometry, powers, thresholds and access probabilities.
inline fdrelay::NetworkParams random_params(std::mt19937_64& rng, int n, bool symmetric) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  fdrelay::NetworkParams p = fdrelay::NetworkParams::symmetric(n, 0.1, 0.99, 0.6, 1e-8);
  fdrelay::UserLink shared{u(0.02, 0.5), u(80.0, 180.0), u(30.0, 90.0), log_uniform(rng, 3e-4, 3e-3), 1.0, 1.0};
  for (fdrelay::UserLink& link : p.users) {
    link = symmetric ? shared
                     : fdrelay::UserLink{u(0.02, 0.5), u(80.0, 180.0), u(30.0, 90.0), log_uniform(rng, 3e-4, 3e-3),
                                         u(0.5, 2.0), u(0.5, 2.0)};
  }
  p.q0 = u(0.3, 1.0);
  p.r_0d = u(50.0, 110.0);
  p.p_tx_relay = log_uniform(rng, 3e-3, 3e-2);
  p.gamma_0 = u(0.1, 2.5);
  p.gamma_d = symmetric ? p.gamma_0 : u(0.1, 2.5);
  p.g = std::bernoulli_distribution(0.1)(rng) ? 0.0 : log_uniform(rng, 1e-10, 1.0);
  return p;
}

inline double max_gap(const fdrelay::DriftDistribution& a, const fdrelay::DriftDistribution& b) {
  double gap = std::max({std::fabs(a.p_minus1 - b.p_minus1), std::fabs(a.lambda0 - b.lambda0),
                         std::fabs(a.lambda1 - b.lambda1)});
  gap = std::max(gap, (a.r0 - b.r0).cwiseAbs().maxCoeff());
  gap = std::max(gap, (a.r1 - b.r1).cwiseAbs().maxCoeff());
  gap = std::max(gap, (a.p0 - b.p0).cwiseAbs().maxCoeff());
  gap = std::max(gap, (a.p1 - b.p1).cwiseAbs().maxCoeff());
  return gap;
}

}  // namespace oracle

#endif  // FDRELAY_TEST_ORACLES_HPP
