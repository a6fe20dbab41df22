#ifndef FDRELAY_SIMULATION_HPP
#define FDRELAY_SIMULATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fdrelay/params.hpp"

namespace fdrelay {

enum class SimMode { sinr_sampling, probability_sampling };

std::string to_string(SimMode mode);
SimMode sim_mode_from_string(const std::string& text);

struct SimConfig {
  std::uint64_t slots = 1'000'000;
  std::uint64_t warmup = 100'000;
  std::uint64_t seed = 1;
  SimMode mode = SimMode::probability_sampling;
  bool stability_probe = true;
  int batches = 50;

  // 10% of the run, at least 1e4 slots, never more than half the run.
  static std::uint64_t default_warmup(std::uint64_t slots);
  static SimConfig with_slots(std::uint64_t slots, std::uint64_t seed,
                              SimMode mode = SimMode::probability_sampling);

  void validate() const;
};

// Counter-based generator: every (seed, slot) pair owns an independent
// stream, so a slot's draws do not depend on how many draws earlier slots
// consumed.
class SlotRng {
public:
  SlotRng(std::uint64_t seed, std::uint64_t slot);

  std::uint64_t next();
  double uniform();                    // [0, 1)
  bool bernoulli(double p) { return uniform() < p; }
  double exponential(double mean);

private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

// Batch-means estimate of a long-run mean.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

struct QueueTrajectory {
  std::uint64_t max_length = 0;
  std::uint64_t final_length = 0;
  double growth_slope = 0.0;  // packets per slot, least squares over batch means
  double slope_se = 0.0;
  std::uint64_t batch_length = 0;
  std::vector<double> batch_means;
  std::uint64_t empty_slots_last_quarter = 0;
};

struct SimResult {
  std::uint64_t measured_slots = 0;
  Estimate lambda0, lambda1, lambda, mu, p_empty, q_bar;
  // Per user, then averaged over users.
  std::vector<Estimate> t_direct, t_relayed, t_total, delay;
  Estimate t_direct_avg, t_relayed_avg, t_total_avg, delay_avg;
  Estimate delivered_rate;  // all packets reaching the destination per slot

  std::uint64_t attempted = 0;          // user transmissions
  std::uint64_t delivered_direct = 0;
  std::uint64_t delivered_relay = 0;
  std::uint64_t relay_arrivals = 0;
  std::uint64_t relay_departures = 0;
  std::uint64_t delay_samples = 0;

  QueueTrajectory trajectory;
};

// Slot-level simulation of saturated users, the full-duplex relay queue and
// the destination. Counts cover whole run; estimates cover post-warmup slots.
SimResult run_simulation(const NetworkParams& params, const SimConfig& sim);

enum class StabilityVerdict { stable, unstable, inconclusive };
std::string to_string(StabilityVerdict verdict);

StabilityVerdict stability_probe(const SimResult& result);

// Direct SINR test of one link: draws exponential received powers for the
// transmitter and every interferer (plus residual self-interference when the
// receiver is transmitting) and counts SINR >= threshold.
struct LinkSample {
  std::uint64_t successes = 0;
  std::uint64_t samples = 0;
  double estimate() const { return samples ? static_cast<double>(successes) / static_cast<double>(samples) : 0.0; }
};

LinkSample sample_link_sinr(const NetworkParams& params, Node tx, Node rx, TransmitSet transmit_set,
                            std::uint64_t samples, std::uint64_t seed);

// Mean of the residual self-interference power seen by the relay while
// decoding tx: g * v * h * r^alpha of the tested user link. With an
// exponential residual this reproduces the (1 + gamma r^alpha g)^-1 factor.
double residual_self_interference_mean(const NetworkParams& params, Node tx);

}  // namespace fdrelay

#endif  // FDRELAY_SIMULATION_HPP
