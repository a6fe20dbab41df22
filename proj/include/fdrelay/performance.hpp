#ifndef FDRELAY_PERFORMANCE_HPP
#define FDRELAY_PERFORMANCE_HPP

#include <limits>
#include <optional>
#include <vector>

#include "fdrelay/drift_kernel.hpp"
#include "fdrelay/params.hpp"
#include "fdrelay/phy_channel.hpp"
#include "fdrelay/relay_queue.hpp"

namespace fdrelay {

// A mean delay in slots, or the reason there is none.
struct Delay {
  enum class Kind { finite, unbounded, undefined };

  Kind kind = Kind::undefined;
  double slots = std::numeric_limits<double>::quiet_NaN();

  static Delay finite(double slots) { return {Kind::finite, slots}; }
  static Delay unbounded() { return {Kind::unbounded, std::numeric_limits<double>::infinity()}; }
  static Delay undefined() { return {}; }

  bool is_finite() const { return kind == Kind::finite; }
};

struct UserPerformance {
  double t_direct = 0.0;   // packets/slot delivered straight to the destination
  double t_relayed = 0.0;  // packets/slot handed to the relay queue
  double t_total = 0.0;
  Delay delay;
  Delay delay_sojourn;
};

struct PerformanceReport {
  std::vector<UserPerformance> users;
  double t_aggr = 0.0;
  bool stable = true;
  double drift_surplus = 0.0;  // lambda1 - mu
  Delay d_queue;               // mean relay queueing delay
  Delay d_relay;               // queueing plus relay transmission delay

  const UserPerformance& user(int i) const { return users.at(static_cast<std::size_t>(i - 1)); }
};

// Per-user throughput with the relay active (transmitting) in a fraction
// `relay_active` of slots. Dispatches to the symmetric or two-user forms.
struct ThroughputSplit {
  std::vector<double> direct;
  std::vector<double> relayed;  // arrival rate of each user's packets at the relay
};
ThroughputSplit throughput_split(const SuccessTable& table, const NetworkParams& params,
                                 double relay_active);

// Throughput fields for a stable queue; unstable metrics raise
// InstabilityError (use aggregate_throughput_unstable instead).
PerformanceReport throughput_two_user(const RelayQueueMetrics& metrics, const SuccessTable& table,
                                      const NetworkParams& params);
PerformanceReport throughput_n_user(const RelayQueueMetrics& metrics, const SuccessTable& table,
                                    const NetworkParams& params);

// Saturated relay: direct throughput with the relay transmitting in a
// fraction q0 of slots, plus the relay service rate. ContractError when the
// queue is stable.
double aggregate_throughput_unstable(const SuccessTable& table, const NetworkParams& params, double mu);

// T_R / T; empty when the user delivers nothing.
std::optional<double> relayed_fraction(const UserPerformance& user);

struct DelayReport {
  std::vector<Delay> per_user;
  // (1 + T_R,i Qbar/lambda) / T_i: Little's law over the whole relay sojourn,
  // which already includes the relay's own transmission slot.
  std::vector<Delay> per_user_sojourn;
  Delay d_queue;
  Delay d_relay;
};

// D_i = (1 + T_R,i (Qbar/lambda + 1/mu)) / T_i with D_Q = Qbar/lambda and
// D_R = D_Q + 1/mu.
DelayReport average_delay(const PerformanceReport& report, const RelayQueueMetrics& metrics);

struct BaselineReport {
  std::vector<double> throughput;
  std::vector<Delay> delay;
};

// The same users with no relay: every slot is a fresh attempt at the
// destination, D_i = 1 / T_i.
BaselineReport no_relay_baseline(const NetworkParams& params);

// End-to-end closed-form evaluation.
struct Evaluation {
  SuccessTable table;
  DriftDistribution drift;
  RelayQueueMetrics queue;
  PerformanceReport report;
};

// Stable queues get the full throughput and delay report; unstable ones get
// the saturated-relay throughput split and unbounded delays.
Evaluation evaluate(const NetworkParams& params, TableMode mode = TableMode::eq1_derived);

}  // namespace fdrelay

#endif  // FDRELAY_PERFORMANCE_HPP
