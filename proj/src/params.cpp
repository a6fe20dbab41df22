#include "fdrelay/params.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include "fdrelay/errors.hpp"
#include "fdrelay/phy_channel.hpp"

namespace fdrelay {

std::string Node::name() const {
  switch (kind_) {
    case Kind::relay: return "relay";
    case Kind::destination: return "destination";
    case Kind::user: return "user" + std::to_string(index_);
  }
  return "?";
}

namespace {

int node_bit(Node node) {
  if (node.is_relay()) return 0;
  if (node.is_user() && node.index() >= 1 && node.index() <= TransmitSet::kMaxUsers) {
    return node.index();
  }
  throw ContractError("node " + node.name() + " cannot be part of a transmit set");
}

}  // namespace

TransmitSet TransmitSet::of(std::initializer_list<Node> nodes) {
  TransmitSet s;
  for (Node node : nodes) s = s.with(node);
  return s;
}

bool TransmitSet::contains(Node node) const {
  if (node.is_destination()) return false;
  return (bits_ >> node_bit(node)) & 1u;
}

TransmitSet TransmitSet::with(Node node) const {
  return from_bits(bits_ | (std::uint64_t{1} << node_bit(node)));
}

TransmitSet TransmitSet::without(Node node) const {
  return from_bits(bits_ & ~(std::uint64_t{1} << node_bit(node)));
}

int TransmitSet::user_count() const { return std::popcount(bits_ >> 1); }

std::string TransmitSet::name() const {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (int bit = 0; bit < 64; ++bit) {
    if (((bits_ >> bit) & 1u) == 0) continue;
    if (!first) out << ',';
    out << bit;
    first = false;
  }
  out << '}';
  return out.str();
}

NetworkParams NetworkParams::symmetric(int n, double q, double q0, double gamma, double g) {
  NetworkParams p;
  p.users.assign(static_cast<std::size_t>(n < 0 ? 0 : n), UserLink{});
  p.set_q(q);
  p.q0 = q0;
  p.set_gamma(gamma);
  p.g = g;
  return p;
}

bool NetworkParams::is_symmetric() const {
  for (const UserLink& u : users) {
    const UserLink& f = users.front();
    if (u.q != f.q || u.r_d != f.r_d || u.r_0 != f.r_0 || u.p_tx != f.p_tx || u.v_d != f.v_d ||
        u.v_0 != f.v_0) {
      return false;
    }
  }
  return true;
}

double NetworkParams::h_user_dest(int i) const { return link_gain(user(i).p_tx, user(i).r_d, alpha); }

double NetworkParams::h_user_relay(int i) const { return link_gain(user(i).p_tx, user(i).r_0, alpha); }

double NetworkParams::h_relay_dest() const { return link_gain(p_tx_relay, r_0d, alpha); }

double NetworkParams::beta() const { return v_0d * h_relay_dest() / (user(1).v_d * h_user_dest(1)); }

void NetworkParams::set_q(double q) {
  for (UserLink& u : users) u.q = q;
}

namespace {

void require_probability(const std::string& field, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ParameterError(field, "must lie in [0,1], got " + std::to_string(value));
  }
}

void require_positive(const std::string& field, double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ParameterError(field, "must be positive and finite, got " + std::to_string(value));
  }
}

void require_nonnegative(const std::string& field, double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ParameterError(field, "must be non-negative and finite, got " + std::to_string(value));
  }
}

}  // namespace

std::vector<std::string> NetworkParams::validate() const {
  if (users.empty()) throw ParameterError("n", "at least one user is required");
  if (n() > TransmitSet::kMaxUsers) {
    throw ParameterError("n", "at most " + std::to_string(TransmitSet::kMaxUsers) + " users supported");
  }
  for (int i = 1; i <= n(); ++i) {
    const UserLink& u = user(i);
    const std::string prefix = "user" + std::to_string(i) + ".";
    require_probability(prefix + "q", u.q);
    require_positive(prefix + "r_d", u.r_d);
    require_positive(prefix + "r_0", u.r_0);
    require_positive(prefix + "p_tx", u.p_tx);
    require_positive(prefix + "v_d", u.v_d);
    require_positive(prefix + "v_0", u.v_0);
  }
  require_probability("q0", q0);
  require_positive("r_0d", r_0d);
  require_positive("p_tx_relay", p_tx_relay);
  require_positive("v_0d", v_0d);
  if (!(alpha >= 2.0) || !std::isfinite(alpha)) {
    throw ParameterError("alpha", "must be at least 2, got " + std::to_string(alpha));
  }
  require_positive("eta_0", eta_0);
  require_positive("eta_d", eta_d);
  require_nonnegative("gamma_0", gamma_0);
  require_nonnegative("gamma_d", gamma_d);
  require_probability("g", g);

  std::vector<std::string> warnings;
  if (!(beta() > 1.0)) {
    warnings.push_back("beta = " + std::to_string(beta()) +
                       " <= 1; the symmetric printed success forms assume beta > 1");
  }
  return warnings;
}

}  // namespace fdrelay
