#ifndef FDRELAY_RELAY_QUEUE_HPP
#define FDRELAY_RELAY_QUEUE_HPP

#include <cstddef>

#include <Eigen/Core>

#include "fdrelay/drift_kernel.hpp"
#include "fdrelay/params.hpp"
#include "fdrelay/phy_channel.hpp"

namespace fdrelay {

// Minimum relay transmit probability for a stable queue. The queue is stable
// iff q0 > value. value >= 1 means no q0 stabilizes the queue.
struct StabilityThreshold {
  double value = 0.0;
  bool stabilizable() const { return value < 1.0; }
};

struct RelayQueueMetrics {
  double mu = 0.0;
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  double lambda = 0.0;   // lambda1 when unstable (the queue never drains)
  double p_empty = 0.0;  // 0 when unstable
  double q_bar = 0.0;    // +inf when unstable
  double q0_min = 0.0;
  bool stable = false;

  double drift_surplus() const { return lambda1 - mu; }
};

// mu = q0 * sum over user activity patterns of the relay -> destination
// success probability.
double service_rate(const SuccessTable& table, const NetworkParams& params);

// lambda1 < mu, strictly.
bool is_stable(const DriftDistribution& d);

double empty_probability(const DriftDistribution& d);
double mean_arrival_rate(const DriftDistribution& d);
double mean_queue_length(const DriftDistribution& d);

// The two-user printed forms with their explicit coefficients (1, 2) and
// (4, 10); equal to the generic ones at n = 2.
double empty_probability_two_user(const DriftDistribution& d);
double mean_queue_length_two_user(const DriftDistribution& d);

StabilityThreshold q0_min(const NetworkParams& params, const SuccessTable& table);

// Same threshold recovered from a drift law: lambda1 and mu are affine in
// q0, so one operating point with q0 > 0 determines the crossing. NaN when
// q0 = 0.
double q0_min_from_drift(const DriftDistribution& d);

RelayQueueMetrics analyze_relay_queue(const DriftDistribution& d);

// Closed-form drift, service rate and threshold from the table.
RelayQueueMetrics analyze_relay_queue(const NetworkParams& params, const SuccessTable& table);

// Stationary law of the queue-length chain truncated at `truncation` states.
struct DtmcSolution {
  Eigen::VectorXd distribution;
  double p_empty = 0.0;
  double mean = 0.0;
  double tail_mass = 0.0;  // estimated stationary mass beyond the truncation
  std::size_t truncation = 0;
};

inline constexpr double kDtmcTailTolerance = 1e-12;
inline constexpr std::size_t kDefaultTruncation = 10000;

// Level-crossing recursion over the lower Hessenberg chain. Throws
// ResolutionError when the tail mass exceeds kDtmcTailTolerance and
// InstabilityError for an unstable drift.
DtmcSolution dtmc_steady_state(const DriftDistribution& d, std::size_t truncation = kDefaultTruncation);

// Doubles the truncation until the tail test passes (up to max_truncation).
DtmcSolution dtmc_steady_state_adaptive(const DriftDistribution& d,
                                        std::size_t initial = kDefaultTruncation,
                                        std::size_t max_truncation = std::size_t{1} << 24);

// Dense transition matrix with overflow folded into the last state, solved
// with an LU factorization. Used to cross-check the recursion on small
// truncations.
DtmcSolution dtmc_dense_solve(const DriftDistribution& d, std::size_t truncation);

// Row-stochastic transition matrix of the truncated chain.
Eigen::MatrixXd transition_matrix(const DriftDistribution& d, std::size_t truncation);

}  // namespace fdrelay

#endif  // FDRELAY_RELAY_QUEUE_HPP
