#ifndef FDRELAY_PHY_CHANNEL_HPP
#define FDRELAY_PHY_CHANNEL_HPP

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "fdrelay/params.hpp"

namespace fdrelay {

// P_tx * r^-alpha.
double link_gain(double p_tx, double r, double alpha);

// Power budget of a single (transmitter, receiver) link.
struct LinkBudget {
  double h = 0.0;      // received power factor
  double v = 1.0;      // Rayleigh fading mean
  double gamma = 0.0;  // receiver SINR threshold
  double eta = 0.0;    // receiver noise power
  double r = 0.0;      // link distance (enters the self-interference term)
};

LinkBudget link_budget(Node tx, Node rx, const NetworkParams& params);

// Probability that tx's packet is decoded at rx while every node of
// transmit_set is on the air. Rayleigh fading on every link, noise eta at
// the receiver, and when the receiver is itself transmitting (full-duplex
// relay) an extra residual self-interference factor (1 + gamma r^alpha g)^-1.
double success_probability(Node tx, Node rx, TransmitSet transmit_set, const NetworkParams& params);

enum class TableMode { eq1_derived, literal_paper };

std::string to_string(TableMode mode);
TableMode table_mode_from_string(const std::string& text);

// Success probabilities consumed by the queue model.
//
// Symmetric rows are indexed by the number of concurrently transmitting
// users i = 1..n (row i-1) and the relay state j = 0 (silent) / 1
// (transmitting). relay_dest(k) is the relay -> destination probability with
// k concurrent users, k = 0..n. For small n the table also carries every
// (tx, transmit set, rx) entry explicitly so the two-user formulas can read
// the asymmetric probabilities directly.
struct SuccessTable {
  static constexpr int kMaxExplicitUsers = 4;

  TableMode mode = TableMode::eq1_derived;
  int n = 0;
  bool symmetric = false;
  Eigen::ArrayXXd user_relay;  // P_{0,i,j}
  Eigen::ArrayXXd user_dest;   // P_{d,i,j}
  Eigen::ArrayXd relay_dest;   // P_{0d,k}

  using LinkKey = std::tuple<Node, TransmitSet, Node>;
  std::map<LinkKey, double> links;

  double p0(int i, int j) const { return user_relay(i - 1, j); }
  double pd(int i, int j) const { return user_dest(i - 1, j); }
  double p0d(int k) const { return relay_dest(k); }

  // Explicit entry; throws ContractError when it was not tabulated.
  double link(Node tx, TransmitSet transmit_set, Node rx) const;
  bool has_links() const { return !links.empty(); }
};

SuccessTable build_success_table(const NetworkParams& params,
                                 TableMode mode = TableMode::eq1_derived);

// One entry where the printed symmetric forms and the per-link formula differ.
struct ModeDiscrepancy {
  std::string entry;
  double eq1 = 0.0;
  double literal = 0.0;
  double abs_diff() const;
};

// Entry-wise comparison of the two table modes; returns entries differing by
// more than tolerance. Requires symmetric parameters.
std::vector<ModeDiscrepancy> compare_table_modes(const NetworkParams& params,
                                                 double tolerance = 1e-12);

}  // namespace fdrelay

#endif  // FDRELAY_PHY_CHANNEL_HPP
