#ifndef FDRELAY_PARAMS_HPP
#define FDRELAY_PARAMS_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace fdrelay {

// Network nodes. Users are numbered 1..n; the relay is node 0.
class Node {
public:
  enum class Kind : std::uint8_t { relay, user, destination };

  static constexpr Node relay() { return Node(Kind::relay, 0); }
  static constexpr Node destination() { return Node(Kind::destination, -1); }
  static constexpr Node user(int index) { return Node(Kind::user, index); }

  constexpr Kind kind() const { return kind_; }
  constexpr int index() const { return index_; }
  constexpr bool is_relay() const { return kind_ == Kind::relay; }
  constexpr bool is_user() const { return kind_ == Kind::user; }
  constexpr bool is_destination() const { return kind_ == Kind::destination; }

  constexpr auto operator<=>(const Node&) const = default;

  std::string name() const;

private:
  constexpr Node(Kind kind, int index) : kind_(kind), index_(index) {}
  Kind kind_;
  int index_;
};

// Set of nodes transmitting in a slot. Bit 0 is the relay, bit i is user i.
class TransmitSet {
public:
  static constexpr int kMaxUsers = 63;

  constexpr TransmitSet() = default;
  static constexpr TransmitSet from_bits(std::uint64_t bits) {
    TransmitSet s;
    s.bits_ = bits;
    return s;
  }
  static TransmitSet of(std::initializer_list<Node> nodes);

  bool contains(Node node) const;
  TransmitSet with(Node node) const;
  TransmitSet without(Node node) const;
  bool has_relay() const { return (bits_ & 1u) != 0; }
  int user_count() const;
  constexpr std::uint64_t bits() const { return bits_; }

  constexpr auto operator<=>(const TransmitSet&) const = default;

  std::string name() const;

private:
  std::uint64_t bits_ = 0;
};

// Geometry, power and access parameters of one source user.
struct UserLink {
  double q = 0.1;            // transmit probability per slot
  double r_d = 130.0;        // distance to destination, m
  double r_0 = 60.0;         // distance to relay, m
  double p_tx = 1e-3;        // transmit power, W
  double v_d = 1.0;          // fading mean, user -> destination
  double v_0 = 1.0;          // fading mean, user -> relay
};

// Full parameterization of the relay-assisted random-access network.
// Powers and noise are in watts, distances in meters.
struct NetworkParams {
  std::vector<UserLink> users;
  double q0 = 0.99;          // relay transmit probability given a nonempty queue
  double r_0d = 80.0;
  double p_tx_relay = 1e-2;
  double v_0d = 1.0;
  double alpha = 4.0;
  double eta_0 = 1e-11;
  double eta_d = 1e-11;
  double gamma_0 = 0.6;
  double gamma_d = 0.6;
  double g = 1e-8;           // self-interference coefficient

  // n identical users with the given access probability; everything else at
  // the numerical-section defaults.
  static NetworkParams symmetric(int n, double q, double q0, double gamma, double g);

  int n() const { return static_cast<int>(users.size()); }
  const UserLink& user(int i) const { return users.at(static_cast<std::size_t>(i - 1)); }
  UserLink& user(int i) { return users.at(static_cast<std::size_t>(i - 1)); }

  // All users share the same link parameters.
  bool is_symmetric() const;

  // Received power factor P_tx * r^-alpha for each link.
  double h_user_dest(int i) const;
  double h_user_relay(int i) const;
  double h_relay_dest() const;

  // v_0d h_0d / (v_d h_d) measured against user 1.
  double beta() const;

  void set_gamma(double gamma) { gamma_0 = gamma_d = gamma; }
  void set_eta(double eta) { eta_0 = eta_d = eta; }
  void set_q(double q);

  // Throws ParameterError on a domain violation; returns soft warnings.
  std::vector<std::string> validate() const;
};

}  // namespace fdrelay

#endif  // FDRELAY_PARAMS_HPP
