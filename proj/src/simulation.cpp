#include "fdrelay/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fdrelay/errors.hpp"
#include "fdrelay/phy_channel.hpp"

namespace fdrelay {

std::string to_string(SimMode mode) {
  return mode == SimMode::sinr_sampling ? "sinr-sampling" : "probability-sampling";
}

SimMode sim_mode_from_string(const std::string& text) {
  if (text == "sinr-sampling") return SimMode::sinr_sampling;
  if (text == "probability-sampling") return SimMode::probability_sampling;
  throw ParameterError("sim.mode", "expected sinr-sampling or probability-sampling, got '" + text + "'");
}

std::uint64_t SimConfig::default_warmup(std::uint64_t slots) {
  return std::min(std::max<std::uint64_t>(slots / 10, 10'000), slots / 2);
}

SimConfig SimConfig::with_slots(std::uint64_t slots, std::uint64_t seed, SimMode mode) {
  SimConfig c;
  c.slots = slots;
  c.warmup = default_warmup(slots);
  c.seed = seed;
  c.mode = mode;
  return c;
}

void SimConfig::validate() const {
  if (!(slots > warmup)) throw ParameterError("sim.slots", "must exceed sim.warmup");
  if (batches < 2) throw ParameterError("sim.batches", "need at least two batches");
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SlotRng::SlotRng(std::uint64_t seed, std::uint64_t slot) : base_(splitmix(seed ^ splitmix(slot))) {}

std::uint64_t SlotRng::next() { return splitmix(base_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

double SlotRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SlotRng::exponential(double mean) { return -mean * std::log1p(-uniform()); }

double residual_self_interference_mean(const NetworkParams& params, Node tx) {
  const LinkBudget b = link_budget(tx, Node::relay(), params);
  return params.g * b.v * b.h * std::pow(b.r, params.alpha);
}

namespace {

// One SINR trial of tx -> rx with every member of `set` on the air.
bool sinr_trial(const NetworkParams& params, Node tx, Node rx, TransmitSet set, SlotRng& rng) {
  const LinkBudget own = link_budget(tx, rx, params);
  const double signal = rng.exponential(own.v * own.h);
  double interference = 0.0;
  for (int bit = 0; bit <= params.n(); ++bit) {
    const Node k = bit == 0 ? Node::relay() : Node::user(bit);
    if (k == tx || k == rx || !set.contains(k)) continue;
    const LinkBudget other = link_budget(k, rx, params);
    interference += rng.exponential(other.v * other.h);
  }
  if (set.contains(rx)) interference += rng.exponential(residual_self_interference_mean(params, tx));
  return signal >= own.gamma * (own.eta + interference);
}

struct Packet {
  int user;
  std::uint64_t hol_start;
};

struct Batch {
  double slots = 0, empty = 0, nonempty = 0;
  double arrivals_empty = 0, arrivals_nonempty = 0, departures = 0, queue_sum = 0;
  std::vector<double> direct, relayed, delay_sum, delay_count;

  explicit Batch(int n)
      : direct(static_cast<std::size_t>(n), 0.0),
        relayed(static_cast<std::size_t>(n), 0.0),
        delay_sum(static_cast<std::size_t>(n), 0.0),
        delay_count(static_cast<std::size_t>(n), 0.0) {}
};

// Ratio-of-totals estimate with a delta-method batch-means standard error.
template <typename Num, typename Den>
Estimate ratio_estimate(const std::vector<Batch>& batches, Num num, Den den) {
  double ys = 0.0, xs = 0.0;
  for (const Batch& b : batches) {
    ys += num(b);
    xs += den(b);
  }
  Estimate e;
  if (xs <= 0.0) return e;
  e.mean = ys / xs;
  const double count = static_cast<double>(batches.size());
  const double x_bar = xs / count;
  double ss = 0.0;
  for (const Batch& b : batches) {
    const double r = num(b) - e.mean * den(b);
    ss += r * r;
  }
  e.se = std::sqrt(ss / (count * (count - 1.0))) / x_bar;
  return e;
}

}  // namespace

SimResult run_simulation(const NetworkParams& params, const SimConfig& sim) {
  params.validate();
  sim.validate();
  const int n = params.n();
  const std::uint64_t measured = sim.slots - sim.warmup;
  const auto batch_count = static_cast<std::uint64_t>(sim.batches);

  std::vector<Batch> batches(batch_count, Batch(n));
  std::deque<Packet> queue;
  std::vector<std::uint64_t> hol_start(static_cast<std::size_t>(n), 0);
  std::vector<int> active;
  active.reserve(static_cast<std::size_t>(n));

  SimResult res;
  res.measured_slots = measured;
  const std::uint64_t quarter_start = sim.slots - measured / 4;

  for (std::uint64_t t = 0; t < sim.slots; ++t) {
    SlotRng rng(sim.seed, t);
    const bool measuring = t >= sim.warmup;
    Batch* batch = measuring ? &batches[(t - sim.warmup) * batch_count / measured] : nullptr;
    const std::uint64_t q_len = queue.size();

    const bool relay_on = q_len > 0 && rng.bernoulli(params.q0);
    TransmitSet set = relay_on ? TransmitSet::of({Node::relay()}) : TransmitSet{};
    active.clear();
    for (int i = 1; i <= n; ++i) {
      if (rng.bernoulli(params.user(i).q)) {
        active.push_back(i);
        set = set.with(Node::user(i));
      }
    }
    auto decoded = [&](Node tx, Node rx) {
      if (sim.mode == SimMode::sinr_sampling) return sinr_trial(params, tx, rx, set, rng);
      return rng.bernoulli(success_probability(tx, rx, set, params));
    };

    auto record_delivery = [&](int user) {
      const std::uint64_t start = hol_start[static_cast<std::size_t>(user - 1)];
      if (batch && start >= sim.warmup) {
        batch->delay_sum[static_cast<std::size_t>(user - 1)] += static_cast<double>(t - start + 1);
        batch->delay_count[static_cast<std::size_t>(user - 1)] += 1.0;
        ++res.delay_samples;
      }
    };

    // The head-of-line relay packet leaves before this slot's arrivals join.
    bool departed = false;
    if (relay_on && decoded(Node::relay(), Node::destination())) {
      const Packet p = queue.front();
      queue.pop_front();
      departed = true;
      ++res.relay_departures;
      ++res.delivered_relay;
      if (batch && p.hol_start >= sim.warmup) {
        batch->delay_sum[static_cast<std::size_t>(p.user - 1)] += static_cast<double>(t - p.hol_start + 1);
        batch->delay_count[static_cast<std::size_t>(p.user - 1)] += 1.0;
        ++res.delay_samples;
      }
    }

    int arrivals = 0;
    for (int i : active) {
      ++res.attempted;
      const bool at_dest = decoded(Node::user(i), Node::destination());
      const bool at_relay = decoded(Node::user(i), Node::relay());
      const auto idx = static_cast<std::size_t>(i - 1);
      if (at_dest) {
        ++res.delivered_direct;
        record_delivery(i);
        hol_start[idx] = t + 1;
        if (batch) batch->direct[idx] += 1.0;
      } else if (at_relay) {
        ++arrivals;
        ++res.relay_arrivals;
        queue.push_back({i, hol_start[idx]});
        hol_start[idx] = t + 1;
        if (batch) batch->relayed[idx] += 1.0;
      }
    }

    if (batch) {
      batch->slots += 1.0;
      batch->queue_sum += static_cast<double>(q_len);
      if (q_len == 0) {
        batch->empty += 1.0;
        batch->arrivals_empty += arrivals;
        if (t >= quarter_start) ++res.trajectory.empty_slots_last_quarter;
      } else {
        batch->nonempty += 1.0;
        batch->arrivals_nonempty += arrivals;
        if (departed) batch->departures += 1.0;
      }
    }
    res.trajectory.max_length = std::max<std::uint64_t>(res.trajectory.max_length, queue.size());
  }
  res.trajectory.final_length = queue.size();

  auto slots = [](const Batch& b) { return b.slots; };
  res.lambda0 = ratio_estimate(batches, [](const Batch& b) { return b.arrivals_empty; },
                               [](const Batch& b) { return b.empty; });
  res.lambda1 = ratio_estimate(batches, [](const Batch& b) { return b.arrivals_nonempty; },
                               [](const Batch& b) { return b.nonempty; });
  res.lambda = ratio_estimate(batches, [](const Batch& b) { return b.arrivals_empty + b.arrivals_nonempty; },
                              slots);
  res.mu = ratio_estimate(batches, [](const Batch& b) { return b.departures; },
                          [](const Batch& b) { return b.nonempty; });
  res.p_empty = ratio_estimate(batches, [](const Batch& b) { return b.empty; }, slots);
  res.q_bar = ratio_estimate(batches, [](const Batch& b) { return b.queue_sum; }, slots);

  auto sum_users = [n](const std::vector<double>& v) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += v[static_cast<std::size_t>(i)];
    return s;
  };
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    res.t_direct.push_back(ratio_estimate(batches, [k](const Batch& b) { return b.direct[k]; }, slots));
    res.t_relayed.push_back(ratio_estimate(batches, [k](const Batch& b) { return b.relayed[k]; }, slots));
    res.t_total.push_back(
        ratio_estimate(batches, [k](const Batch& b) { return b.direct[k] + b.relayed[k]; }, slots));
    res.delay.push_back(ratio_estimate(batches, [k](const Batch& b) { return b.delay_sum[k]; },
                                       [k](const Batch& b) { return b.delay_count[k]; }));
  }
  const double users = static_cast<double>(n);
  res.t_direct_avg = ratio_estimate(batches, [&](const Batch& b) { return sum_users(b.direct); },
                                    [users](const Batch& b) { return users * b.slots; });
  res.t_relayed_avg = ratio_estimate(batches, [&](const Batch& b) { return sum_users(b.relayed); },
                                     [users](const Batch& b) { return users * b.slots; });
  res.t_total_avg = ratio_estimate(
      batches, [&](const Batch& b) { return sum_users(b.direct) + sum_users(b.relayed); },
      [users](const Batch& b) { return users * b.slots; });
  res.delay_avg = ratio_estimate(batches, [&](const Batch& b) { return sum_users(b.delay_sum); },
                                 [&](const Batch& b) { return sum_users(b.delay_count); });
  res.delivered_rate = ratio_estimate(
      batches, [&](const Batch& b) { return sum_users(b.direct) + b.departures; }, slots);

  QueueTrajectory& tr = res.trajectory;
  tr.batch_length = measured / batch_count;
  for (const Batch& b : batches) tr.batch_means.push_back(b.slots > 0 ? b.queue_sum / b.slots : 0.0);
  const double count = static_cast<double>(tr.batch_means.size());
  const double x_bar = (count - 1.0) / 2.0;
  double y_bar = 0.0;
  for (double y : tr.batch_means) y_bar += y / count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t b = 0; b < tr.batch_means.size(); ++b) {
    const double dx = static_cast<double>(b) - x_bar;
    sxx += dx * dx;
    sxy += dx * (tr.batch_means[b] - y_bar);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double ss = 0.0;
  for (std::size_t b = 0; b < tr.batch_means.size(); ++b) {
    const double r = tr.batch_means[b] - (y_bar + slope * (static_cast<double>(b) - x_bar));
    ss += r * r;
  }
  const double slope_se = count > 2.0 && sxx > 0.0 ? std::sqrt(ss / (count - 2.0) / sxx) : 0.0;
  const double per_batch = tr.batch_length > 0 ? static_cast<double>(tr.batch_length) : 1.0;
  tr.growth_slope = slope / per_batch;
  tr.slope_se = slope_se / per_batch;
  return res;
}

std::string to_string(StabilityVerdict verdict) {
  switch (verdict) {
    case StabilityVerdict::stable: return "stable";
    case StabilityVerdict::unstable: return "unstable";
    case StabilityVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

StabilityVerdict stability_probe(const SimResult& result) {
  constexpr std::uint64_t kMinSlots = 1000;
  const QueueTrajectory& tr = result.trajectory;
  if (result.measured_slots < kMinSlots || tr.batch_means.size() < 10) return StabilityVerdict::inconclusive;

  const double slope = tr.growth_slope;
  const double t_stat = tr.slope_se > 0.0 ? slope / tr.slope_se : (slope > 0.0 ? INFINITY : 0.0);
  if (t_stat > 4.0 && slope > 1e-5 && tr.empty_slots_last_quarter == 0) return StabilityVerdict::unstable;
  if (t_stat < 2.5 && tr.empty_slots_last_quarter > 0) return StabilityVerdict::stable;
  return StabilityVerdict::inconclusive;
}

LinkSample sample_link_sinr(const NetworkParams& params, Node tx, Node rx, TransmitSet transmit_set,
                            std::uint64_t samples, std::uint64_t seed) {
  params.validate();
  if (!transmit_set.contains(tx)) throw ContractError(tx.name() + " is not in the transmit set");
  LinkSample s;
  s.samples = samples;
  for (std::uint64_t k = 0; k < samples; ++k) {
    SlotRng rng(seed, k);
    if (sinr_trial(params, tx, rx, transmit_set, rng)) ++s.successes;
  }
  return s;
}

}  // namespace fdrelay
