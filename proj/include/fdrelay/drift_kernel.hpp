#ifndef FDRELAY_DRIFT_KERNEL_HPP
#define FDRELAY_DRIFT_KERNEL_HPP

#include <Eigen/Core>

#include "fdrelay/params.hpp"
#include "fdrelay/phy_channel.hpp"

namespace fdrelay {

// Per-slot law of the relay queue change.
//
// All vectors have length n+1 and are indexed by packet count k = 0..n:
//   r0[k]  P(k arrivals | queue empty)
//   r1[k]  P(k arrivals | queue nonempty)
//   p0[k]  P(queue grows by k | empty)       (identical to r0)
//   p1[k]  P(queue grows by k | nonempty); p1[0] is the no-change probability
// p_minus1 is P(queue shrinks by one | nonempty).
struct DriftDistribution {
  int n = 0;
  double q0 = 0.0;
  Eigen::VectorXd r0;
  Eigen::VectorXd r1;
  Eigen::VectorXd p0;
  Eigen::VectorXd p1;
  double p_minus1 = 0.0;
  double lambda0 = 0.0;
  double lambda1 = 0.0;

  double p1_zero() const { return p1(0); }

  // sum_k k p1[k] - p_minus1: mean queue change while nonempty.
  double drift_nonempty() const;

  // Departure probability given a nonempty queue, lambda1 minus the mean change.
  double departure_rate() const;
};

DriftDistribution two_user_drift(const SuccessTable& table, const NetworkParams& params);

DriftDistribution n_user_drift(const SuccessTable& table, const NetworkParams& params);

// Closed-form drift for whatever the parameters support: the binomial sums
// for symmetric users, the explicit two-user expressions otherwise.
DriftDistribution closed_form_drift(const SuccessTable& table, const NetworkParams& params);

enum class QueueState { empty, nonempty };

// Exhaustive law conditioned on one queue state.
struct ConditionalDrift {
  Eigen::VectorXd arrivals;  // [k] = P(k arrivals), k = 0..n
  Eigen::VectorXd change;    // [c+1] = P(net change c), c = -1..n
  double departure = 0.0;    // P(one relay packet delivered)
};

inline constexpr int kMaxEnumerationUsers = 12;

ConditionalDrift enumerate_drift(const NetworkParams& params, QueueState state);

// Both conditionings assembled into a DriftDistribution.
DriftDistribution enumerate_drift(const NetworkParams& params);

}  // namespace fdrelay

#endif  // FDRELAY_DRIFT_KERNEL_HPP
