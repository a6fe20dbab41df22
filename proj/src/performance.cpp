#include "fdrelay/performance.hpp"

#include <cmath>
#include <numeric>

#include "fdrelay/binomial.hpp"
#include "fdrelay/errors.hpp"

namespace fdrelay {

namespace {

ThroughputSplit symmetric_split(const SuccessTable& table, const NetworkParams& params, double a) {
  const int n = params.n();
  const double q = params.user(1).q;
  const Binomial binom(n);
  double direct_busy = 0.0, direct_idle = 0.0, relayed_busy = 0.0, relayed_idle = 0.0;
  for (int k = 0; k <= n - 1; ++k) {
    const double w = q * binom.pmf(n - 1, k, q);
    direct_busy += w * table.pd(k + 1, 1);
    direct_idle += w * table.pd(k + 1, 0);
    relayed_busy += w * (1.0 - table.pd(k + 1, 1)) * table.p0(k + 1, 1);
    relayed_idle += w * (1.0 - table.pd(k + 1, 0)) * table.p0(k + 1, 0);
  }
  ThroughputSplit s;
  s.direct.assign(static_cast<std::size_t>(n), a * direct_busy + (1.0 - a) * direct_idle);
  s.relayed.assign(static_cast<std::size_t>(n), a * relayed_busy + (1.0 - a) * relayed_idle);
  return s;
}

ThroughputSplit two_user_split(const SuccessTable& table, const NetworkParams& params, double a) {
  const Node relay = Node::relay();
  const Node dest = Node::destination();
  ThroughputSplit s;
  for (int i = 1; i <= 2; ++i) {
    const int j = 3 - i;
    const Node ui = Node::user(i);
    const Node uj = Node::user(j);
    const double qi = params.user(i).q;
    const double qj = params.user(j).q;
    const TransmitSet alone = TransmitSet::of({ui});
    const TransmitSet pair = TransmitSet::of({ui, uj});
    const TransmitSet alone_r = alone.with(relay);
    const TransmitSet pair_r = pair.with(relay);
    auto pd = [&](TransmitSet set) { return table.link(ui, set, dest); };
    auto p0 = [&](TransmitSet set) { return table.link(ui, set, relay); };

    s.direct.push_back(a * qi * ((1 - qj) * pd(alone_r) + qj * pd(pair_r)) +
                       (1 - a) * qi * ((1 - qj) * pd(alone) + qj * pd(pair)));
    s.relayed.push_back(
        a * qi * ((1 - qj) * (1 - pd(alone_r)) * p0(alone_r) + qj * (1 - pd(pair_r)) * p0(pair_r)) +
        (1 - a) * qi * ((1 - qj) * (1 - pd(alone)) * p0(alone) + qj * (1 - pd(pair)) * p0(pair)));
  }
  return s;
}

PerformanceReport stable_report(const RelayQueueMetrics& metrics, const ThroughputSplit& split) {
  if (!metrics.stable) {
    throw InstabilityError("throughput mixtures need a stable relay queue", metrics.q0_min,
                           metrics.lambda1, metrics.mu);
  }
  PerformanceReport r;
  r.stable = true;
  r.drift_surplus = metrics.drift_surplus();
  for (std::size_t i = 0; i < split.direct.size(); ++i) {
    UserPerformance u;
    u.t_direct = split.direct[i];
    u.t_relayed = split.relayed[i];
    u.t_total = u.t_direct + u.t_relayed;
    r.users.push_back(u);
    r.t_aggr += u.t_total;
  }
  return r;
}

double relay_active_fraction(const RelayQueueMetrics& metrics, double q0) {
  return q0 * (1.0 - metrics.p_empty);
}

}  // namespace

ThroughputSplit throughput_split(const SuccessTable& table, const NetworkParams& params,
                                 double relay_active) {
  if (table.symmetric && params.is_symmetric()) return symmetric_split(table, params, relay_active);
  if (params.n() == 2) return two_user_split(table, params, relay_active);
  throw WrongModelError("throughput covers symmetric users or n = 2 only");
}

PerformanceReport throughput_two_user(const RelayQueueMetrics& metrics, const SuccessTable& table,
                                      const NetworkParams& params) {
  if (params.n() != 2) throw WrongModelError("two-user throughput requires n = 2");
  return stable_report(metrics,
                       two_user_split(table, params, relay_active_fraction(metrics, params.q0)));
}

PerformanceReport throughput_n_user(const RelayQueueMetrics& metrics, const SuccessTable& table,
                                    const NetworkParams& params) {
  if (!table.symmetric || !params.is_symmetric()) {
    throw WrongModelError("n-user throughput requires symmetric users");
  }
  return stable_report(metrics,
                       symmetric_split(table, params, relay_active_fraction(metrics, params.q0)));
}

double aggregate_throughput_unstable(const SuccessTable& table, const NetworkParams& params, double mu) {
  const RelayQueueMetrics metrics = analyze_relay_queue(params, table);
  if (metrics.stable) {
    throw ContractError("saturated-relay aggregate requested for a stable queue (q0 = " +
                        std::to_string(params.q0) + " > q0_min = " + std::to_string(metrics.q0_min) + ")");
  }
  const ThroughputSplit split = throughput_split(table, params, params.q0);
  return std::accumulate(split.direct.begin(), split.direct.end(), 0.0) + mu;
}

std::optional<double> relayed_fraction(const UserPerformance& user) {
  if (!(user.t_total > 0.0)) return std::nullopt;
  return user.t_relayed / user.t_total;
}

DelayReport average_delay(const PerformanceReport& report, const RelayQueueMetrics& metrics) {
  DelayReport out;
  if (!metrics.stable) {
    out.d_queue = Delay::unbounded();
    out.d_relay = Delay::unbounded();
  } else if (metrics.lambda > 0.0 && metrics.mu > 0.0) {
    out.d_queue = Delay::finite(metrics.q_bar / metrics.lambda);
    out.d_relay = Delay::finite(out.d_queue.slots + 1.0 / metrics.mu);
  }
  for (const UserPerformance& u : report.users) {
    if (!(u.t_total > 0.0)) {
      out.per_user.push_back(Delay::undefined());
      out.per_user_sojourn.push_back(Delay::undefined());
    } else if (u.t_relayed == 0.0) {
      out.per_user.push_back(Delay::finite(1.0 / u.t_total));
      out.per_user_sojourn.push_back(Delay::finite(1.0 / u.t_total));
    } else if (out.d_relay.kind == Delay::Kind::finite) {
      out.per_user.push_back(Delay::finite((1.0 + u.t_relayed * out.d_relay.slots) / u.t_total));
      out.per_user_sojourn.push_back(Delay::finite((1.0 + u.t_relayed * out.d_queue.slots) / u.t_total));
    } else {
      out.per_user.push_back(out.d_relay);
      out.per_user_sojourn.push_back(out.d_relay);
    }
  }
  return out;
}

BaselineReport no_relay_baseline(const NetworkParams& params) {
  params.validate();
  const int n = params.n();
  BaselineReport out;
  if (params.is_symmetric()) {
    const SuccessTable table = build_success_table(params);
    const double q = params.user(1).q;
    const Binomial binom(n);
    double t = 0.0;
    for (int k = 0; k <= n - 1; ++k) t += q * binom.pmf(n - 1, k, q) * table.pd(k + 1, 0);
    out.throughput.assign(static_cast<std::size_t>(n), t);
  } else {
    if (n > 20) throw ResourceError("asymmetric baseline limited to n <= 20");
    for (int i = 1; i <= n; ++i) {
      double t = 0.0;
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        if (((mask >> (i - 1)) & 1u) == 0) continue;
        TransmitSet set;
        double w = 1.0;
        for (int k = 1; k <= n; ++k) {
          const bool on = (mask >> (k - 1)) & 1u;
          w *= on ? params.user(k).q : 1.0 - params.user(k).q;
          if (on) set = set.with(Node::user(k));
        }
        if (w > 0.0) t += w * success_probability(Node::user(i), Node::destination(), set, params);
      }
      out.throughput.push_back(t);
    }
  }
  for (double t : out.throughput) out.delay.push_back(t > 0.0 ? Delay::finite(1.0 / t) : Delay::undefined());
  return out;
}

Evaluation evaluate(const NetworkParams& params, TableMode mode) {
  Evaluation e;
  e.table = build_success_table(params, mode);
  e.drift = closed_form_drift(e.table, params);
  e.queue = analyze_relay_queue(params, e.table);
  if (e.queue.stable) {
    e.report = stable_report(e.queue, throughput_split(e.table, params, relay_active_fraction(e.queue, params.q0)));
  } else {
    // Saturated relay: it transmits in a fraction q0 of slots and its
    // deliveries split across users in proportion to their arrival rates.
    const ThroughputSplit split = throughput_split(e.table, params, params.q0);
    const double arrivals = std::accumulate(split.relayed.begin(), split.relayed.end(), 0.0);
    e.report.stable = false;
    e.report.drift_surplus = e.queue.drift_surplus();
    for (std::size_t i = 0; i < split.direct.size(); ++i) {
      UserPerformance u;
      u.t_direct = split.direct[i];
      u.t_relayed = arrivals > 0.0 ? e.queue.mu * split.relayed[i] / arrivals : 0.0;
      u.t_total = u.t_direct + u.t_relayed;
      e.report.users.push_back(u);
      e.report.t_aggr += u.t_total;
    }
  }
  const DelayReport delays = average_delay(e.report, e.queue);
  e.report.d_queue = delays.d_queue;
  e.report.d_relay = delays.d_relay;
  for (std::size_t i = 0; i < delays.per_user.size(); ++i) {
    e.report.users[i].delay = delays.per_user[i];
    e.report.users[i].delay_sojourn = delays.per_user_sojourn[i];
  }
  return e;
}

}  // namespace fdrelay
