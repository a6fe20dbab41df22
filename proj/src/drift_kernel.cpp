#include "fdrelay/drift_kernel.hpp"

#include <cmath>
#include <vector>

#include "fdrelay/binomial.hpp"
#include "fdrelay/errors.hpp"

namespace fdrelay {

double DriftDistribution::drift_nonempty() const {
  double up = 0.0;
  for (int k = 1; k <= n; ++k) up += k * p1(k);
  return up - p_minus1;
}

double DriftDistribution::departure_rate() const { return lambda1 - drift_nonempty(); }

namespace {

double mean_count(const Eigen::VectorXd& law) {
  double m = 0.0;
  for (Eigen::Index k = 1; k < law.size(); ++k) m += static_cast<double>(k) * law(k);
  return m;
}

void finish(DriftDistribution& d) {
  d.r0(0) = 1.0 - d.r0.tail(d.n).sum();
  d.r1(0) = 1.0 - d.r1.tail(d.n).sum();
  d.p0 = d.r0;
  d.p1(0) = 1.0 - d.p_minus1 - d.p1.tail(d.n).sum();
  d.lambda0 = mean_count(d.r0);
  d.lambda1 = mean_count(d.r1);
}

DriftDistribution blank(int n, double q0) {
  DriftDistribution d;
  d.n = n;
  d.q0 = q0;
  d.r0 = Eigen::VectorXd::Zero(n + 1);
  d.r1 = Eigen::VectorXd::Zero(n + 1);
  d.p0 = Eigen::VectorXd::Zero(n + 1);
  d.p1 = Eigen::VectorXd::Zero(n + 1);
  return d;
}

}  // namespace

DriftDistribution two_user_drift(const SuccessTable& table, const NetworkParams& params) {
  if (params.n() != 2) {
    throw WrongModelError("two-user drift requires n = 2, got n = " + std::to_string(params.n()));
  }
  const Node u1 = Node::user(1);
  const Node u2 = Node::user(2);
  const Node relay = Node::relay();
  const Node dest = Node::destination();
  const TransmitSet s1 = TransmitSet::of({u1});
  const TransmitSet s2 = TransmitSet::of({u2});
  const TransmitSet s12 = TransmitSet::of({u1, u2});
  const TransmitSet s0 = TransmitSet::of({relay});
  const TransmitSet s01 = TransmitSet::of({relay, u1});
  const TransmitSet s02 = TransmitSet::of({relay, u2});
  const TransmitSet s012 = TransmitSet::of({relay, u1, u2});

  // Names follow P^{rx}_{tx/set}: d1_12 is user 1 at the destination while
  // users 1 and 2 transmit; r2_012 is user 2 at the relay with the relay on.
  const double d1_1 = table.link(u1, s1, dest), r1_1 = table.link(u1, s1, relay);
  const double d2_2 = table.link(u2, s2, dest), r2_2 = table.link(u2, s2, relay);
  const double d1_12 = table.link(u1, s12, dest), r1_12 = table.link(u1, s12, relay);
  const double d2_12 = table.link(u2, s12, dest), r2_12 = table.link(u2, s12, relay);
  const double d1_01 = table.link(u1, s01, dest), r1_01 = table.link(u1, s01, relay);
  const double d2_02 = table.link(u2, s02, dest), r2_02 = table.link(u2, s02, relay);
  const double d1_012 = table.link(u1, s012, dest), r1_012 = table.link(u1, s012, relay);
  const double d2_012 = table.link(u2, s012, dest), r2_012 = table.link(u2, s012, relay);
  const double d0_0 = table.link(relay, s0, dest);
  const double d0_01 = table.link(relay, s01, dest);
  const double d0_02 = table.link(relay, s02, dest);
  const double d0_012 = table.link(relay, s012, dest);

  const double q1 = params.user(1).q;
  const double q2 = params.user(2).q;
  const double q0 = params.q0;

  DriftDistribution d = blank(2, q0);

  d.r0(1) = q1 * (1 - q2) * (1 - d1_1) * r1_1 + q2 * (1 - q1) * (1 - d2_2) * r2_2 +
            q1 * q2 * (1 - d1_12) * r1_12 * d2_12 + q1 * q2 * (1 - d2_12) * r2_12 * d1_12 +
            q1 * q2 * (1 - d1_12) * r1_12 * (1 - d2_12) * (1 - r2_12) +
            q1 * q2 * (1 - d2_12) * r2_12 * (1 - d1_12) * (1 - r1_12);
  d.r0(2) = q1 * q2 * (1 - d1_12) * (1 - d2_12) * r1_12 * r2_12;

  // Same terms grouped by relay state, so q0 = 0 reproduces r0 bit for bit.
  d.r1(1) = (1 - q0) * d.r0(1) +
            q0 * (q1 * (1 - q2) * (1 - d1_01) * r1_01 + q2 * (1 - q1) * (1 - d2_02) * r2_02 +
                  q1 * q2 * (1 - d1_012) * r1_012 * d2_012 + q1 * q2 * (1 - d2_012) * r2_012 * d1_012 +
                  q1 * q2 * (1 - d1_012) * r1_012 * (1 - d2_012) * (1 - r2_012) +
                  q1 * q2 * (1 - d2_012) * r2_012 * (1 - d1_012) * (1 - r1_012));
  d.r1(2) = (1 - q0) * d.r0(2) + q0 * q1 * q2 * (1 - d1_012) * r1_012 * (1 - d2_012) * r2_012;

  d.p_minus1 = q0 * (1 - q1) * (1 - q2) * d0_0 + q0 * (1 - q1) * q2 * d0_02 * d2_02 +
               q0 * (1 - q1) * q2 * d0_02 * (1 - d2_02) * (1 - r2_02) +
               q0 * q1 * (1 - q2) * d0_01 * d1_01 +
               q0 * q1 * (1 - q2) * d0_01 * (1 - d1_01) * (1 - r1_01) +
               q0 * q1 * q2 * d0_012 * d1_012 * d2_012 +
               q0 * q1 * q2 * d0_012 * (1 - d1_012) * (1 - r1_012) * (1 - d2_012) * (1 - r2_012) +
               q0 * q1 * q2 * d0_012 * d1_012 * (1 - d2_012) * (1 - r2_012) +
               q0 * q1 * q2 * d0_012 * (1 - d1_012) * (1 - r1_012) * d2_012;

  d.p1(1) = (1 - q0) * q1 * (1 - q2) * (1 - d1_1) * r1_1 +
            (1 - q0) * q1 * q2 * (1 - d1_12) * r1_12 * d2_12 +
            (1 - q0) * q1 * q2 * (1 - d1_12) * r1_12 * (1 - d2_12) * (1 - r2_12) +
            (1 - q0) * (1 - q1) * q2 * (1 - d2_2) * r2_2 +
            (1 - q0) * q1 * q2 * (1 - d2_12) * r2_12 * d1_12 +
            (1 - q0) * q1 * q2 * (1 - d2_12) * r2_12 * (1 - d1_12) * (1 - r1_12) +
            q0 * q1 * q2 * d0_012 * (1 - d1_012) * r1_012 * (1 - d2_012) * r2_012 +
            q0 * q1 * (1 - q2) * (1 - d0_01) * (1 - d1_01) * r1_01 +
            q0 * q1 * q2 * (1 - d0_012) * (1 - d1_012) * r1_012 * d2_012 +
            q0 * q1 * q2 * (1 - d0_012) * (1 - d1_012) * r1_012 * (1 - d2_012) * (1 - r2_012) +
            q0 * q2 * (1 - q1) * (1 - d0_02) * (1 - d2_02) * r2_02 +
            q0 * q1 * q2 * (1 - d0_012) * (1 - d2_012) * r2_012 * d1_012 +
            q0 * q1 * q2 * (1 - d0_012) * (1 - d2_012) * r2_012 * (1 - d1_012) * (1 - r1_012);
  d.p1(2) = (1 - q0) * q1 * q2 * (1 - d1_12) * r1_12 * (1 - d2_12) * r2_12 +
            q0 * q1 * q2 * (1 - d0_012) * (1 - d1_012) * r1_012 * (1 - d2_012) * r2_012;

  finish(d);
  return d;
}

DriftDistribution n_user_drift(const SuccessTable& table, const NetworkParams& params) {
  if (!table.symmetric || !params.is_symmetric()) {
    throw WrongModelError("n-user drift requires symmetric users");
  }
  const int n = params.n();
  const double q = params.user(1).q;
  const double q0 = params.q0;
  const Binomial binom(n);

  // Probability that exactly k of i active users land in the relay queue,
  // times P(i of n active); relay silent (j = 0) or transmitting (j = 1).
  auto received = [&](int i, int k, int j) {
    const double to_relay = table.p0(i, j) * (1.0 - table.pd(i, j));
    return binom.pmf(n, i, q) * binom.choose(i, k) * std::pow(to_relay, k) *
           std::pow(1.0 - to_relay, i - k);
  };

  DriftDistribution d = blank(n, q0);
  for (int k = 1; k <= n; ++k) {
    double silent = 0.0, busy_fail = 0.0, busy = 0.0, busy_serve = 0.0;
    for (int i = k; i <= n; ++i) {
      silent += received(i, k, 0);
      busy += received(i, k, 1);
      busy_fail += (1.0 - table.p0d(i)) * received(i, k, 1);
    }
    for (int i = k + 1; i <= n; ++i) busy_serve += table.p0d(i) * received(i, k + 1, 1);
    d.r0(k) = silent;
    d.r1(k) = (1.0 - q0) * silent + q0 * busy;
    d.p1(k) = (1.0 - q0) * silent + q0 * busy_fail + q0 * busy_serve;
  }
  double served_empty_handed = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double to_relay = k == 0 ? 0.0 : table.p0(k, 1) * (1.0 - table.pd(k, 1));
    served_empty_handed += binom.pmf(n, k, q) * table.p0d(k) * std::pow(1.0 - to_relay, k);
  }
  d.p_minus1 = q0 * served_empty_handed;

  finish(d);
  return d;
}

DriftDistribution closed_form_drift(const SuccessTable& table, const NetworkParams& params) {
  if (table.symmetric && params.is_symmetric()) return n_user_drift(table, params);
  if (params.n() == 2) return two_user_drift(table, params);
  throw WrongModelError("closed-form drift covers symmetric users or n = 2 only");
}

namespace {

// Neumaier-compensated running sums; the walk adds up to 4^n small terms.
class CompensatedSums {
public:
  explicit CompensatedSums(Eigen::Index size) : sum_(Eigen::VectorXd::Zero(size)), carry_(Eigen::VectorXd::Zero(size)) {}

  void add(Eigen::Index i, double x) {
    const double s = sum_(i);
    const double t = s + x;
    carry_(i) += std::fabs(s) >= std::fabs(x) ? (s - t) + x : (x - t) + s;
    sum_(i) = t;
  }
  Eigen::VectorXd total() const { return sum_ + carry_; }

private:
  Eigen::VectorXd sum_, carry_;
};

}  // namespace

ConditionalDrift enumerate_drift(const NetworkParams& params, QueueState state) {
  params.validate();
  const int n = params.n();
  if (n > kMaxEnumerationUsers) {
    throw ResourceError("enumeration limited to n <= " + std::to_string(kMaxEnumerationUsers) +
                        ", got n = " + std::to_string(n));
  }
  CompensatedSums arrivals_sum(n + 1), change_sum(n + 2), departure_sum(1);

  const bool relay_may_send = state == QueueState::nonempty;
  std::vector<int> active;
  std::vector<double> outcome_prob;  // per active user: [dest ok, relay only, lost]
  for (int relay_on = 0; relay_on <= (relay_may_send ? 1 : 0); ++relay_on) {
    const double relay_prob = relay_may_send ? (relay_on ? params.q0 : 1.0 - params.q0) : 1.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      TransmitSet set = relay_on ? TransmitSet::of({Node::relay()}) : TransmitSet{};
      double set_prob = relay_prob;
      active.clear();
      for (int i = 1; i <= n; ++i) {
        const double q = params.user(i).q;
        if ((mask >> (i - 1)) & 1u) {
          set = set.with(Node::user(i));
          set_prob *= q;
          active.push_back(i);
        } else {
          set_prob *= 1.0 - q;
        }
      }
      if (set_prob == 0.0) continue;

      outcome_prob.assign(3 * active.size(), 0.0);
      for (std::size_t a = 0; a < active.size(); ++a) {
        const Node u = Node::user(active[a]);
        const double pd = success_probability(u, Node::destination(), set, params);
        const double p0 = success_probability(u, Node::relay(), set, params);
        outcome_prob[3 * a + 0] = pd;
        outcome_prob[3 * a + 1] = (1.0 - pd) * p0;
        outcome_prob[3 * a + 2] = (1.0 - pd) * (1.0 - p0);
      }
      const double served =
          relay_on ? success_probability(Node::relay(), Node::destination(), set, params) : 0.0;

      // Walk all 3^m joint reception outcomes in base-3 order.
      std::vector<int> digit(active.size(), 0);
      while (true) {
        double p = set_prob;
        int arrivals = 0;
        for (std::size_t a = 0; a < active.size(); ++a) {
          p *= outcome_prob[3 * a + static_cast<std::size_t>(digit[a])];
          if (digit[a] == 1) ++arrivals;
        }
        arrivals_sum.add(arrivals, p);
        if (relay_on) {
          change_sum.add(arrivals, p * served);  // one departure: change = arrivals - 1
          change_sum.add(arrivals + 1, p * (1.0 - served));
          departure_sum.add(0, p * served);
        } else {
          change_sum.add(arrivals + 1, p);
        }
        std::size_t a = 0;
        while (a < digit.size() && digit[a] == 2) digit[a++] = 0;
        if (a == digit.size()) break;
        ++digit[a];
      }
    }
  }
  ConditionalDrift out;
  out.arrivals = arrivals_sum.total();
  out.change = change_sum.total();
  out.departure = departure_sum.total()(0);
  return out;
}

DriftDistribution enumerate_drift(const NetworkParams& params) {
  const ConditionalDrift empty = enumerate_drift(params, QueueState::empty);
  const ConditionalDrift busy = enumerate_drift(params, QueueState::nonempty);
  const int n = params.n();
  DriftDistribution d = blank(n, params.q0);
  d.r0 = empty.arrivals;
  d.r1 = busy.arrivals;
  d.p0 = empty.change.tail(n + 1);
  d.p_minus1 = busy.change(0);
  d.p1 = busy.change.tail(n + 1);
  d.lambda0 = mean_count(d.r0);
  d.lambda1 = mean_count(d.r1);
  return d;
}

}  // namespace fdrelay
