#include "fdrelay/relay_queue.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/LU>

#include "fdrelay/binomial.hpp"
#include "fdrelay/errors.hpp"

namespace fdrelay {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Average relay -> destination success over user activity, i.e. mu / q0.
double relay_success_average(const SuccessTable& table, const NetworkParams& params) {
  if (table.symmetric && params.is_symmetric()) {
    const int n = params.n();
    const double q = params.user(1).q;
    const Binomial binom(n);
    double a = 0.0;
    for (int k = 0; k <= n; ++k) a += binom.pmf(n, k, q) * table.p0d(k);
    return a;
  }
  if (params.n() == 2) {
    const double q1 = params.user(1).q;
    const double q2 = params.user(2).q;
    const Node relay = Node::relay();
    const Node dest = Node::destination();
    const Node u1 = Node::user(1);
    const Node u2 = Node::user(2);
    return (1 - q1) * (1 - q2) * table.link(relay, TransmitSet::of({relay}), dest) +
           q1 * (1 - q2) * table.link(relay, TransmitSet::of({relay, u1}), dest) +
           q2 * (1 - q1) * table.link(relay, TransmitSet::of({relay, u2}), dest) +
           q1 * q2 * table.link(relay, TransmitSet::of({relay, u1, u2}), dest);
  }
  throw WrongModelError("service rate covers symmetric users or n = 2 only");
}

double sum_weighted(const Eigen::VectorXd& law, auto weight) {
  double s = 0.0;
  for (Eigen::Index i = 1; i < law.size(); ++i) s += weight(static_cast<double>(i)) * law(i);
  return s;
}

[[noreturn]] void throw_unstable(const DriftDistribution& d) {
  throw InstabilityError("relay queue is unstable: lambda1 = " + std::to_string(d.lambda1) +
                             " >= mu = " + std::to_string(d.departure_rate()),
                         q0_min_from_drift(d), d.lambda1, d.departure_rate());
}

}  // namespace

double service_rate(const SuccessTable& table, const NetworkParams& params) {
  return params.q0 * relay_success_average(table, params);
}

bool is_stable(const DriftDistribution& d) { return d.drift_nonempty() < 0.0; }

double empty_probability(const DriftDistribution& d) {
  if (d.lambda0 == 0.0) return 1.0;
  if (!is_stable(d)) throw_unstable(d);
  const double down = d.p_minus1 - sum_weighted(d.p1, [](double i) { return i; });
  return down / (down + d.lambda0);
}

double empty_probability_two_user(const DriftDistribution& d) {
  if (d.n != 2) throw WrongModelError("two-user form requires n = 2");
  if (d.lambda0 == 0.0) return 1.0;
  if (!is_stable(d)) throw_unstable(d);
  const double num = d.p_minus1 - d.p1(1) - 2 * d.p1(2);
  return num / (num + d.lambda0);
}

double mean_arrival_rate(const DriftDistribution& d) {
  const double p_empty = empty_probability(d);
  return p_empty * d.lambda0 + (1.0 - p_empty) * d.lambda1;
}

double mean_queue_length(const DriftDistribution& d) {
  if (d.lambda0 == 0.0) return 0.0;
  if (!is_stable(d)) throw_unstable(d);
  const double up = sum_weighted(d.p1, [](double i) { return i; }) - d.p_minus1;
  const double m0 = sum_weighted(d.p0, [](double i) { return i * (i + 3); });
  const double m1 = sum_weighted(d.p1, [](double i) { return i * (i + 3); });
  return (up * m0 + d.lambda0 * (2 * d.p_minus1 - m1)) / (2 * up * (d.lambda0 - up));
}

double mean_queue_length_two_user(const DriftDistribution& d) {
  if (d.n != 2) throw WrongModelError("two-user form requires n = 2");
  if (d.lambda0 == 0.0) return 0.0;
  if (!is_stable(d)) throw_unstable(d);
  const double up = d.p1(1) + 2 * d.p1(2) - d.p_minus1;
  const double num = up * (4 * d.p0(1) + 10 * d.p0(2)) +
                     d.lambda0 * (2 * d.p_minus1 - 4 * d.p1(1) - 10 * d.p1(2));
  return num / (2 * up * (d.p_minus1 - d.p1(1) - 2 * d.p1(2) + d.lambda0));
}

StabilityThreshold q0_min(const NetworkParams& params, const SuccessTable& table) {
  const double a = relay_success_average(table, params);
  double sum_ka = 0.0;  // mean arrivals, relay silent
  double sum_kb = 0.0;  // mean arrivals, relay transmitting
  if (table.symmetric && params.is_symmetric()) {
    const int n = params.n();
    const double q = params.user(1).q;
    const Binomial binom(n);
    for (int k = 1; k <= n; ++k) {
      double ak = 0.0, bk = 0.0;
      for (int i = k; i <= n; ++i) {
        const double w = binom.pmf(n, i, q) * binom.choose(i, k);
        const double silent = table.p0(i, 0) * (1.0 - table.pd(i, 0));
        const double busy = table.p0(i, 1) * (1.0 - table.pd(i, 1));
        ak += w * std::pow(silent, k) * std::pow(1.0 - silent, i - k);
        bk += w * std::pow(busy, k) * std::pow(1.0 - busy, i - k);
      }
      sum_ka += k * ak;
      sum_kb += k * bk;
    }
  } else {
    const Node u1 = Node::user(1);
    const Node u2 = Node::user(2);
    const Node relay = Node::relay();
    const Node dest = Node::destination();
    const double q1 = params.user(1).q;
    const double q2 = params.user(2).q;
    const TransmitSet s1 = TransmitSet::of({u1});
    const TransmitSet s2 = TransmitSet::of({u2});
    const TransmitSet s12 = TransmitSet::of({u1, u2});
    const TransmitSet s01 = TransmitSet::of({relay, u1});
    const TransmitSet s02 = TransmitSet::of({relay, u2});
    const TransmitSet s012 = TransmitSet::of({relay, u1, u2});
    const double d1_1 = table.link(u1, s1, dest), r1_1 = table.link(u1, s1, relay);
    const double d2_2 = table.link(u2, s2, dest), r2_2 = table.link(u2, s2, relay);
    const double d1_12 = table.link(u1, s12, dest), r1_12 = table.link(u1, s12, relay);
    const double d2_12 = table.link(u2, s12, dest), r2_12 = table.link(u2, s12, relay);
    const double d1_01 = table.link(u1, s01, dest), r1_01 = table.link(u1, s01, relay);
    const double d2_02 = table.link(u2, s02, dest), r2_02 = table.link(u2, s02, relay);
    const double d1_012 = table.link(u1, s012, dest), r1_012 = table.link(u1, s012, relay);
    const double d2_012 = table.link(u2, s012, dest), r2_012 = table.link(u2, s012, relay);

    const double a1 = q1 * (1 - q2) * (1 - d1_1) * r1_1 + q2 * (1 - q1) * (1 - d2_2) * r2_2 +
                      q1 * q2 * (1 - d1_12) * r1_12 * (1 - d2_12) * (1 - r2_12) +
                      q1 * q2 * (1 - d1_12) * r1_12 * d2_12 +
                      q1 * q2 * (1 - d2_12) * r2_12 * (1 - d1_12) * (1 - r1_12) +
                      q1 * q2 * (1 - d2_12) * r2_12 * d1_12;
    const double b1 = q1 * (1 - q2) * (1 - d1_01) * r1_01 + q2 * (1 - q1) * (1 - d2_02) * r2_02 +
                      q1 * q2 * (1 - d1_012) * r1_012 * (1 - d2_012) * (1 - r2_012) +
                      q1 * q2 * (1 - d1_012) * r1_012 * d2_012 +
                      q1 * q2 * (1 - d2_012) * r2_012 * (1 - d1_012) * (1 - r1_012) +
                      q1 * q2 * (1 - d2_012) * r2_012 * d1_012;
    const double a2 = q1 * q2 * (1 - d1_12) * r1_12 * (1 - d2_12) * r2_12;
    const double b2 = q1 * q2 * (1 - d1_012) * r1_012 * (1 - d2_012) * r2_012;
    sum_ka = a1 + 2 * a2;
    sum_kb = b1 + 2 * b2;
  }
  const double denom = a + sum_ka - sum_kb;
  if (sum_ka == 0.0) return {0.0};
  if (!(denom > 0.0)) return {kInf};
  return {sum_ka / denom};
}

double q0_min_from_drift(const DriftDistribution& d) {
  if (d.q0 <= 0.0) return kNaN;
  if (d.lambda0 == 0.0) return 0.0;
  const double a = d.departure_rate() / d.q0;
  const double sum_kb = (d.lambda1 - (1.0 - d.q0) * d.lambda0) / d.q0;
  const double denom = a + d.lambda0 - sum_kb;
  return denom > 0.0 ? d.lambda0 / denom : kInf;
}

RelayQueueMetrics analyze_relay_queue(const DriftDistribution& d) {
  RelayQueueMetrics m;
  m.mu = d.departure_rate();
  m.lambda0 = d.lambda0;
  m.lambda1 = d.lambda1;
  m.q0_min = q0_min_from_drift(d);
  m.stable = d.lambda0 == 0.0 || is_stable(d);
  if (m.stable) {
    m.p_empty = empty_probability(d);
    m.lambda = m.p_empty * d.lambda0 + (1.0 - m.p_empty) * d.lambda1;
    m.q_bar = mean_queue_length(d);
  } else {
    m.p_empty = 0.0;
    m.lambda = d.lambda1;
    m.q_bar = kInf;
  }
  return m;
}

RelayQueueMetrics analyze_relay_queue(const NetworkParams& params, const SuccessTable& table) {
  const DriftDistribution d = closed_form_drift(table, params);
  RelayQueueMetrics m = analyze_relay_queue(d);
  m.mu = service_rate(table, params);
  m.q0_min = q0_min(params, table).value;
  return m;
}

namespace {

struct Tail {
  double mass = 0.0;
  double mean = 0.0;
};

// Geometric extrapolation from the ratio of the last two blocks of states.
Tail extrapolate_tail(const std::vector<double>& s, std::size_t block) {
  const std::size_t last = s.size() - 1;
  if (last < 2 * block) return {kInf, kInf};
  double newer = 0.0, older = 0.0;
  for (std::size_t i = 0; i < block; ++i) {
    newer += s[last - i];
    older += s[last - block - i];
  }
  if (newer == 0.0) return {};
  if (older == 0.0 || newer >= older) return {kInf, kInf};
  const double ratio = newer / older;
  const double per_state = std::pow(ratio, 1.0 / static_cast<double>(block));
  Tail t;
  t.mass = newer * ratio / (1.0 - ratio);
  t.mean = t.mass * (static_cast<double>(last) + 1.0 / (1.0 - per_state));
  return t;
}

}  // namespace

DtmcSolution dtmc_steady_state(const DriftDistribution& d, std::size_t truncation) {
  if (d.lambda0 == 0.0) {
    DtmcSolution sol;
    sol.distribution = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(truncation) + 1);
    sol.distribution(0) = 1.0;
    sol.p_empty = 1.0;
    sol.truncation = truncation;
    return sol;
  }
  if (!is_stable(d)) throw_unstable(d);
  const int n = d.n;
  // up0[m] = P(jump > m | empty), up1[m] = P(jump > m | nonempty), m = 0..n-1.
  std::vector<double> up0(static_cast<std::size_t>(n), 0.0), up1(static_cast<std::size_t>(n), 0.0);
  for (int m = 0; m < n; ++m) {
    for (int k = m + 1; k <= n; ++k) {
      up0[static_cast<std::size_t>(m)] += d.p0(k);
      up1[static_cast<std::size_t>(m)] += d.p1(k);
    }
  }
  // Flow across the cut between levels i and i+1 balances: the only way
  // down is a single departure from level i+1.
  std::vector<double> s(truncation + 1, 0.0);
  s[0] = 1.0;
  for (std::size_t i = 0; i < truncation; ++i) {
    double flow_up = i < static_cast<std::size_t>(n) ? s[0] * up0[i] : 0.0;
    const std::size_t lo = i + 1 > static_cast<std::size_t>(n) ? i + 1 - static_cast<std::size_t>(n) : 1;
    for (std::size_t j = std::max<std::size_t>(lo, 1); j <= i; ++j) flow_up += s[j] * up1[i - j];
    s[i + 1] = flow_up / d.p_minus1;
    // Past this the recursion only produces subnormal noise.
    if (s[i + 1] < 1e-250) {
      std::fill(s.begin() + static_cast<std::ptrdiff_t>(i) + 1, s.end(), 0.0);
      break;
    }
  }

  double total = 0.0, first_moment = 0.0;
  for (std::size_t i = 0; i <= truncation; ++i) {
    total += s[i];
    first_moment += static_cast<double>(i) * s[i];
  }
  const Tail tail = extrapolate_tail(s, std::max<std::size_t>(8 * static_cast<std::size_t>(n), 16));

  DtmcSolution sol;
  sol.truncation = truncation;
  sol.tail_mass = tail.mass / total;
  if (!(sol.tail_mass < kDtmcTailTolerance)) {
    throw ResolutionError("truncation at " + std::to_string(truncation) +
                              " states leaves tail mass " + std::to_string(sol.tail_mass),
                          sol.tail_mass);
  }
  sol.distribution = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size())) / total;
  sol.p_empty = s[0] / total;
  sol.mean = first_moment / total;
  return sol;
}

DtmcSolution dtmc_steady_state_adaptive(const DriftDistribution& d, std::size_t initial,
                                        std::size_t max_truncation) {
  std::size_t truncation = std::max<std::size_t>(initial, 64);
  while (true) {
    try {
      return dtmc_steady_state(d, truncation);
    } catch (const ResolutionError&) {
      if (truncation >= max_truncation) throw;
      truncation = std::min(2 * truncation, max_truncation);
    }
  }
}

Eigen::MatrixXd transition_matrix(const DriftDistribution& d, std::size_t truncation) {
  const auto size = static_cast<Eigen::Index>(truncation) + 1;
  const Eigen::Index top = size - 1;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(size, size);
  for (int k = 0; k <= d.n; ++k) p(0, std::min<Eigen::Index>(k, top)) += d.p0(k);
  for (Eigen::Index i = 1; i < size; ++i) {
    p(i, i - 1) += d.p_minus1;
    for (int k = 0; k <= d.n; ++k) p(i, std::min<Eigen::Index>(i + k, top)) += d.p1(k);
  }
  return p;
}

DtmcSolution dtmc_dense_solve(const DriftDistribution& d, std::size_t truncation) {
  const Eigen::MatrixXd p = transition_matrix(d, truncation);
  const Eigen::Index size = p.rows();
  // pi (P - I) = 0 with the last balance equation swapped for sum(pi) = 1.
  Eigen::MatrixXd system = p.transpose() - Eigen::MatrixXd::Identity(size, size);
  system.row(size - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
  rhs(size - 1) = 1.0;
  DtmcSolution sol;
  sol.distribution = system.partialPivLu().solve(rhs);
  sol.truncation = truncation;
  sol.p_empty = sol.distribution(0);
  sol.mean = (Eigen::VectorXd::LinSpaced(size, 0.0, static_cast<double>(size - 1)).array() *
              sol.distribution.array())
                 .sum();
  sol.tail_mass = sol.distribution(size - 1);
  return sol;
}

}  // namespace fdrelay
