#include "fdrelay/phy_channel.hpp"

#include <cmath>

#include "fdrelay/errors.hpp"

namespace fdrelay {

double link_gain(double p_tx, double r, double alpha) {
  if (!(p_tx > 0.0)) throw ParameterError("p_tx", "transmit power must be positive");
  if (!(r > 0.0)) throw ParameterError("r", "distance must be positive");
  if (!(alpha >= 0.0)) throw ParameterError("alpha", "path-loss exponent must be non-negative");
  return p_tx * std::pow(r, -alpha);
}

LinkBudget link_budget(Node tx, Node rx, const NetworkParams& params) {
  LinkBudget b;
  if (rx.is_relay()) {
    if (!tx.is_user()) throw ContractError("only users transmit to the relay");
    const UserLink& u = params.user(tx.index());
    b.h = params.h_user_relay(tx.index());
    b.v = u.v_0;
    b.r = u.r_0;
    b.gamma = params.gamma_0;
    b.eta = params.eta_0;
  } else if (rx.is_destination()) {
    if (tx.is_user()) {
      const UserLink& u = params.user(tx.index());
      b.h = params.h_user_dest(tx.index());
      b.v = u.v_d;
      b.r = u.r_d;
    } else if (tx.is_relay()) {
      b.h = params.h_relay_dest();
      b.v = params.v_0d;
      b.r = params.r_0d;
    } else {
      throw ContractError("the destination never transmits");
    }
    b.gamma = params.gamma_d;
    b.eta = params.eta_d;
  } else {
    throw ContractError("users do not receive");
  }
  return b;
}

double success_probability(Node tx, Node rx, TransmitSet transmit_set, const NetworkParams& params) {
  if (!transmit_set.contains(tx)) {
    throw ContractError(tx.name() + " is not in transmit set " + transmit_set.name());
  }
  if (transmit_set.contains(rx) && !rx.is_relay()) {
    throw ContractError(rx.name() + " cannot receive while transmitting");
  }
  const LinkBudget own = link_budget(tx, rx, params);
  const double own_power = own.v * own.h;

  double p = std::exp(-own.gamma * own.eta / own_power);
  if (transmit_set.contains(rx)) {
    p /= 1.0 + own.gamma * std::pow(own.r, params.alpha) * params.g;
  }
  for (int bit = 0; bit <= params.n(); ++bit) {
    const Node k = bit == 0 ? Node::relay() : Node::user(bit);
    if (k == tx || k == rx || !transmit_set.contains(k)) continue;
    const LinkBudget other = link_budget(k, rx, params);
    p /= 1.0 + own.gamma * other.v * other.h / own_power;
  }
  return p;
}

std::string to_string(TableMode mode) {
  return mode == TableMode::eq1_derived ? "eq1-derived" : "literal-paper";
}

TableMode table_mode_from_string(const std::string& text) {
  if (text == "eq1-derived") return TableMode::eq1_derived;
  if (text == "literal-paper") return TableMode::literal_paper;
  throw ParameterError("mode", "expected eq1-derived or literal-paper, got '" + text + "'");
}

double SuccessTable::link(Node tx, TransmitSet transmit_set, Node rx) const {
  const auto it = links.find({tx, transmit_set, rx});
  if (it == links.end()) {
    throw ContractError("no tabulated entry for " + tx.name() + " -> " + rx.name() + " under " +
                        transmit_set.name());
  }
  return it->second;
}

namespace {

// Transmit set with users 1..count active, plus the relay when requested.
TransmitSet first_users(int count, bool relay) {
  TransmitSet s;
  for (int i = 1; i <= count; ++i) s = s.with(Node::user(i));
  return relay ? s.with(Node::relay()) : s;
}

void fill_symmetric_eq1(SuccessTable& t, const NetworkParams& p) {
  const int n = p.n();
  t.user_relay.resize(n, 2);
  t.user_dest.resize(n, 2);
  t.relay_dest.resize(n + 1);
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j <= 1; ++j) {
      const TransmitSet s = first_users(i, j == 1);
      t.user_relay(i - 1, j) = success_probability(Node::user(1), Node::relay(), s, p);
      t.user_dest(i - 1, j) = success_probability(Node::user(1), Node::destination(), s, p);
    }
  }
  for (int k = 0; k <= n; ++k) {
    t.relay_dest(k) = success_probability(Node::relay(), Node::destination(), first_users(k, true), p);
  }
}

// The symmetric closed forms exactly as printed, threshold placements included.
void fill_symmetric_literal(SuccessTable& t, const NetworkParams& p) {
  const int n = p.n();
  const UserLink& u = p.user(1);
  const double beta = p.beta();
  const double p_0 = std::exp(-p.gamma_0 * p.eta_0 / (u.v_0 * p.h_user_relay(1)));
  const double p_d = std::exp(-p.gamma_d * p.eta_d / (u.v_d * p.h_user_dest(1)));
  const double p_0d = std::exp(-p.gamma_0 * p.eta_0 / (u.v_0 * p.h_user_relay(1)));
  const double si = 1.0 / (1.0 + p.gamma_0 * std::pow(u.r_0, p.alpha) * p.g);

  t.user_relay.resize(n, 2);
  t.user_dest.resize(n, 2);
  t.relay_dest.resize(n + 1);
  for (int i = 1; i <= n; ++i) {
    const double relay_crowd = std::pow(1.0 / (1.0 + p.gamma_0), i - 1);
    const double dest_crowd = std::pow(1.0 / (1.0 + p.gamma_d), i - 1);
    t.user_relay(i - 1, 0) = p_0 * relay_crowd;
    t.user_relay(i - 1, 1) = p_0 * si * relay_crowd;
    t.user_dest(i - 1, 0) = p_d * dest_crowd;
    t.user_dest(i - 1, 1) = p_d * dest_crowd / (1.0 + beta * p.gamma_0);
  }
  for (int k = 0; k <= n; ++k) {
    t.relay_dest(k) = p_0d * std::pow(1.0 / (1.0 + p.gamma_d / beta), k);
  }
}

void fill_links(SuccessTable& t, const NetworkParams& p) {
  const int n = p.n();
  const std::uint64_t subsets = std::uint64_t{1} << (n + 1);
  for (std::uint64_t bits = 0; bits < subsets; ++bits) {
    const TransmitSet s = TransmitSet::from_bits(bits);
    for (int i = 1; i <= n; ++i) {
      const Node user = Node::user(i);
      if (!s.contains(user)) continue;
      if (t.mode == TableMode::eq1_derived) {
        t.links[{user, s, Node::relay()}] = success_probability(user, Node::relay(), s, p);
        t.links[{user, s, Node::destination()}] = success_probability(user, Node::destination(), s, p);
      } else {
        const int j = s.has_relay() ? 1 : 0;
        t.links[{user, s, Node::relay()}] = t.p0(s.user_count(), j);
        t.links[{user, s, Node::destination()}] = t.pd(s.user_count(), j);
      }
    }
    if (s.has_relay()) {
      t.links[{Node::relay(), s, Node::destination()}] =
          t.mode == TableMode::eq1_derived
              ? success_probability(Node::relay(), Node::destination(), s, p)
              : t.p0d(s.user_count());
    }
  }
}

}  // namespace

SuccessTable build_success_table(const NetworkParams& params, TableMode mode) {
  params.validate();
  SuccessTable t;
  t.mode = mode;
  t.n = params.n();
  t.symmetric = params.is_symmetric();
  if (mode == TableMode::literal_paper && !t.symmetric) {
    throw ParameterError("mode", "literal-paper forms exist only for symmetric users");
  }
  if (t.symmetric) {
    if (mode == TableMode::eq1_derived) {
      fill_symmetric_eq1(t, params);
    } else {
      fill_symmetric_literal(t, params);
    }
  }
  if (t.n <= SuccessTable::kMaxExplicitUsers) fill_links(t, params);
  return t;
}

double ModeDiscrepancy::abs_diff() const { return std::abs(eq1 - literal); }

std::vector<ModeDiscrepancy> compare_table_modes(const NetworkParams& params, double tolerance) {
  const SuccessTable a = build_success_table(params, TableMode::eq1_derived);
  const SuccessTable b = build_success_table(params, TableMode::literal_paper);
  std::vector<ModeDiscrepancy> out;
  auto check = [&](std::string name, double x, double y) {
    if (std::abs(x - y) > tolerance) out.push_back({std::move(name), x, y});
  };
  for (int i = 1; i <= params.n(); ++i) {
    for (int j = 0; j <= 1; ++j) {
      const std::string idx = std::to_string(i) + "," + std::to_string(j);
      check("P_0[" + idx + "]", a.p0(i, j), b.p0(i, j));
      check("P_d[" + idx + "]", a.pd(i, j), b.pd(i, j));
    }
  }
  for (int k = 0; k <= params.n(); ++k) {
    check("P_0d[" + std::to_string(k) + "]", a.p0d(k), b.p0d(k));
  }
  return out;
}

}  // namespace fdrelay
