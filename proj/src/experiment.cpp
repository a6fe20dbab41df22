#include "fdrelay/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "fdrelay/drift_kernel.hpp"
#include "fdrelay/errors.hpp"
#include "fdrelay/performance.hpp"
#include "fdrelay/relay_queue.hpp"

namespace fdrelay {

std::string to_string(Engine engine) {
  switch (engine) {
    case Engine::analytical: return "analytical";
    case Engine::dtmc: return "dtmc";
    case Engine::enumeration: return "enumeration";
    case Engine::simulation: return "simulation";
  }
  return "?";
}

Engine engine_from_string(const std::string& text) {
  if (text == "analytical") return Engine::analytical;
  if (text == "dtmc") return Engine::dtmc;
  if (text == "enumeration") return Engine::enumeration;
  if (text == "simulation") return Engine::simulation;
  throw ParameterError("engines", "unknown engine '" + text + "'");
}

// ---------------------------------------------------------------- spec

std::vector<SweepPoint> ExperimentSpec::points() const {
  auto sorted = [](auto v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto ns = sorted(axes.n);
  const auto qs = sorted(axes.q);
  const auto q0s = sorted(axes.q0);
  const auto gammas = sorted(axes.gamma);
  const auto gs = sorted(axes.g);
  std::vector<SweepPoint> out;
  out.reserve(ns.size() * qs.size() * q0s.size() * gammas.size() * gs.size());
  for (int n : ns)
    for (double q : qs)
      for (double q0 : q0s)
        for (double gamma : gammas)
          for (double g : gs) out.push_back({n, q, q0, gamma, g});
  return out;
}

NetworkParams ExperimentSpec::params_at(const SweepPoint& point) const {
  NetworkParams p = base;
  const UserLink link = base.users.empty() ? UserLink{} : base.users.front();
  p.users.assign(static_cast<std::size_t>(std::max(point.n, 0)), link);
  p.set_q(point.q);
  p.q0 = point.q0;
  p.set_gamma(point.gamma);
  p.g = point.g;
  return p;
}

void ExperimentSpec::validate() const {
  if (engines.empty()) throw ParameterError("engines", "at least one engine is required");
  if (axes.n.empty() || axes.q.empty() || axes.q0.empty() || axes.gamma.empty() || axes.g.empty()) {
    throw ParameterError("axes", "every sweep axis needs at least one value");
  }
  for (int n : axes.n) {
    if (n < 1 || n > TransmitSet::kMaxUsers) {
      throw ParameterError("n", "must lie in [1, " + std::to_string(TransmitSet::kMaxUsers) + "], got " +
                                    std::to_string(n));
    }
  }
  auto probability = [](const std::string& field, const std::vector<double>& values) {
    for (double v : values) {
      if (!(v >= 0.0 && v <= 1.0)) throw ParameterError(field, "must lie in [0,1], got " + std::to_string(v));
    }
  };
  probability("q", axes.q);
  probability("q0", axes.q0);
  probability("g", axes.g);
  for (double v : axes.gamma) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ParameterError("gamma", "must be non-negative and finite, got " + std::to_string(v));
    }
  }
  if (max_points == 0) throw ParameterError("max_points", "must be positive");
  if (axes.size() > max_points) {
    throw ParameterError("max_points", "sweep has " + std::to_string(axes.size()) + " points, cap is " +
                                           std::to_string(max_points));
  }
  sim.validate();
  params_at(points().front()).validate();
  if (mode == TableMode::literal_paper && !base.is_symmetric()) {
    throw ParameterError("mode", "literal-paper forms exist only for symmetric users");
  }
}

// ---------------------------------------------------------------- parser

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct RawValue {
  bool list = false;
  std::vector<std::string> items;  // ranges stay as "a..b"
};

RawValue split_value(const std::string& text, int line) {
  RawValue v;
  if (text.empty()) throw ConfigSyntaxError(line, "missing value");
  if (text.front() == '[') {
    if (text.back() != ']') throw ConfigSyntaxError(line, "unterminated list");
    v.list = true;
    const std::string body = trim(std::string_view(text).substr(1, text.size() - 2));
    if (body.empty()) throw ConfigSyntaxError(line, "empty list");
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) throw ConfigSyntaxError(line, "empty list item");
      v.items.push_back(item);
    }
    return v;
  }
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') throw ConfigSyntaxError(line, "unterminated string");
    v.items.push_back(text.substr(1, text.size() - 2));
    return v;
  }
  if (text.find_first_of("[],") != std::string::npos) throw ConfigSyntaxError(line, "stray list delimiter");
  v.items.push_back(text);
  return v;
}

double parse_double(const std::string& s, int line) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigSyntaxError(line, "not a number: '" + s + "'");
  return out;
}

long long parse_integer(const std::string& s, int line) {
  const double d = parse_double(s, line);
  if (d != std::floor(d) || std::fabs(d) > 9.0e15) throw ConfigSyntaxError(line, "not an integer: '" + s + "'");
  return static_cast<long long>(d);
}

std::vector<double> numbers(const RawValue& v, int line) {
  std::vector<double> out;
  for (const std::string& item : v.items) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_double(item, line));
      continue;
    }
    const long long lo = parse_integer(trim(item.substr(0, dots)), line);
    const long long hi = parse_integer(trim(item.substr(dots + 2)), line);
    if (hi < lo) throw ConfigSyntaxError(line, "descending range '" + item + "'");
    if (hi - lo > 1'000'000) throw ConfigSyntaxError(line, "range too long '" + item + "'");
    for (long long k = lo; k <= hi; ++k) out.push_back(static_cast<double>(k));
  }
  return out;
}

double scalar(const RawValue& v, int line, const std::string& key) {
  if (v.list || v.items.size() != 1) throw ConfigSyntaxError(line, key + " takes a single value");
  return numbers(v, line).front();
}

std::uint64_t count(const RawValue& v, int line, const std::string& key) {
  if (v.list || v.items.size() != 1) throw ConfigSyntaxError(line, key + " takes a single value");
  const long long k = parse_integer(v.items.front(), line);
  if (k < 0) throw ParameterError(key, "must be non-negative");
  return static_cast<std::uint64_t>(k);
}

std::string word(const RawValue& v, int line, const std::string& key) {
  if (v.list || v.items.size() != 1) throw ConfigSyntaxError(line, key + " takes a single value");
  return v.items.front();
}

bool boolean(const RawValue& v, int line, const std::string& key) {
  const std::string w = word(v, line, key);
  if (w == "true" || w == "1") return true;
  if (w == "false" || w == "0") return false;
  throw ConfigSyntaxError(line, key + " expects true or false");
}

std::string strip_comment(const std::string& raw) {
  bool quoted = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '"') quoted = !quoted;
    if (raw[i] == '#' && !quoted) return raw.substr(0, i);
  }
  return raw;
}

}  // namespace

ExperimentSpec parse_config(const std::string& text) {
  ExperimentSpec spec;
  bool warmup_set = false;
  std::set<std::string> seen;
  std::string section;

  using Setter = std::function<void(const RawValue&, int)>;
  auto channel = [&](double NetworkParams::*field) -> Setter {
    return [&spec, field](const RawValue& v, int line) { spec.base.*field = scalar(v, line, "channel"); };
  };
  auto user_field = [&](double UserLink::*field) -> Setter {
    return [&spec, field](const RawValue& v, int line) {
      const double x = scalar(v, line, "channel");
      for (UserLink& u : spec.base.users) u.*field = x;
    };
  };
  auto doubles = [](std::vector<double>& axis) -> Setter {
    return [&axis](const RawValue& v, int line) { axis = numbers(v, line); };
  };

  const std::map<std::string, Setter> setters = {
      {"n",
       [&](const RawValue& v, int line) {
         spec.axes.n.clear();
         for (double x : numbers(v, line)) {
           if (x != std::floor(x)) throw ParameterError("n", "must be an integer");
           spec.axes.n.push_back(static_cast<int>(x));
         }
       }},
      {"q", doubles(spec.axes.q)},
      {"q0", doubles(spec.axes.q0)},
      {"gamma", doubles(spec.axes.gamma)},
      {"g", doubles(spec.axes.g)},
      {"engines",
       [&](const RawValue& v, int) {
         spec.engines.clear();
         for (const std::string& e : v.items) {
           const Engine engine = engine_from_string(e);
           if (std::find(spec.engines.begin(), spec.engines.end(), engine) == spec.engines.end()) {
             spec.engines.push_back(engine);
           }
         }
         std::sort(spec.engines.begin(), spec.engines.end());
       }},
      {"mode", [&](const RawValue& v, int line) { spec.mode = table_mode_from_string(word(v, line, "mode")); }},
      {"out", [&](const RawValue& v, int line) { spec.output_prefix = word(v, line, "out"); }},
      {"max_points", [&](const RawValue& v, int line) { spec.max_points = count(v, line, "max_points"); }},
      {"channel.r_d", user_field(&UserLink::r_d)},
      {"channel.r_0", user_field(&UserLink::r_0)},
      {"channel.p_tx_user", user_field(&UserLink::p_tx)},
      {"channel.v_d", user_field(&UserLink::v_d)},
      {"channel.v_0", user_field(&UserLink::v_0)},
      {"channel.r_0d", channel(&NetworkParams::r_0d)},
      {"channel.p_tx_relay", channel(&NetworkParams::p_tx_relay)},
      {"channel.v_0d", channel(&NetworkParams::v_0d)},
      {"channel.alpha", channel(&NetworkParams::alpha)},
      {"channel.eta", [&](const RawValue& v, int line) { spec.base.set_eta(scalar(v, line, "channel.eta")); }},
      {"channel.eta_0", channel(&NetworkParams::eta_0)},
      {"channel.eta_d", channel(&NetworkParams::eta_d)},
      {"sim.slots", [&](const RawValue& v, int line) { spec.sim.slots = count(v, line, "sim.slots"); }},
      {"sim.warmup",
       [&](const RawValue& v, int line) {
         spec.sim.warmup = count(v, line, "sim.warmup");
         warmup_set = true;
       }},
      {"sim.seed", [&](const RawValue& v, int line) { spec.sim.seed = count(v, line, "sim.seed"); }},
      {"sim.mode", [&](const RawValue& v, int line) { spec.sim.mode = sim_mode_from_string(word(v, line, "sim.mode")); }},
      {"sim.stability_probe",
       [&](const RawValue& v, int line) { spec.sim.stability_probe = boolean(v, line, "sim.stability_probe"); }},
      {"sim.batches",
       [&](const RawValue& v, int line) { spec.sim.batches = static_cast<int>(count(v, line, "sim.batches")); }},
  };

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string body = trim(strip_comment(raw));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      if (body.front() == '[' && body.back() == ']') {
        section = trim(std::string_view(body).substr(1, body.size() - 2));
        if (section.empty() || section.find_first_of(" \t[]") != std::string::npos) {
          throw ConfigSyntaxError(line, "bad section header");
        }
        continue;
      }
      throw ConfigSyntaxError(line, "expected 'key = value'");
    }
    const std::string bare = trim(std::string_view(body).substr(0, eq));
    if (bare.empty() || bare.find_first_of(" \t") != std::string::npos) throw ConfigSyntaxError(line, "bad key");
    const std::string key = section.empty() ? bare : section + "." + bare;
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigSyntaxError(line, "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigSyntaxError(line, "duplicate key '" + key + "'");
    it->second(split_value(trim(std::string_view(body).substr(eq + 1)), line), line);
  }
  if (!warmup_set) spec.sim.warmup = SimConfig::default_warmup(spec.sim.slots);
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------- engines

namespace {

struct Task {
  ResultRow row;
  std::vector<std::string> disagreements;
  std::vector<std::string> notes;
};

double mean_of(const std::vector<UserPerformance>& users, double UserPerformance::*field) {
  double s = 0.0;
  for (const UserPerformance& u : users) s += u.*field;
  return users.empty() ? 0.0 : s / static_cast<double>(users.size());
}

std::optional<double> mean_delay(const std::vector<UserPerformance>& users, Delay UserPerformance::*field) {
  double s = 0.0;
  for (const UserPerformance& u : users) {
    if (!(u.*field).is_finite()) return std::nullopt;
    s += (u.*field).slots;
  }
  return users.empty() ? std::nullopt : std::optional<double>(s / static_cast<double>(users.size()));
}

std::optional<double> finite(const Delay& d) { return d.is_finite() ? std::optional<double>(d.slots) : std::nullopt; }

std::optional<double> baseline_delay(const NetworkParams& params) {
  const BaselineReport b = no_relay_baseline(params);
  double s = 0.0;
  for (const Delay& d : b.delay) {
    if (!d.is_finite()) return std::nullopt;
    s += d.slots;
  }
  return s / static_cast<double>(b.delay.size());
}

void fill_report(ResultRow& row, const RelayQueueMetrics& m, const PerformanceReport& r) {
  row.mu = m.mu;
  row.lambda = m.lambda;
  row.q0_min = m.q0_min;
  row.stable = m.stable;
  row.p_empty = m.p_empty;
  row.t_direct = mean_of(r.users, &UserPerformance::t_direct);
  row.t_relayed = mean_of(r.users, &UserPerformance::t_relayed);
  row.t_total = mean_of(r.users, &UserPerformance::t_total);
  row.t_aggr = r.t_aggr;
  if (*row.t_total > 0.0) row.relayed_fraction = *row.t_relayed / *row.t_total;
  if (m.stable) {
    row.q_bar = m.q_bar;
    row.d_queue = finite(r.d_queue);
    row.d_relay = finite(r.d_relay);
    row.delay = mean_delay(r.users, &UserPerformance::delay);
    row.delay_sojourn = mean_delay(r.users, &UserPerformance::delay_sojourn);
  } else {
    row.status = "UNSTABLE";
  }
}

// Throughput and delay from a queue law produced by any engine.
PerformanceReport report_from_metrics(const RelayQueueMetrics& m, const SuccessTable& table,
                                      const NetworkParams& params) {
  PerformanceReport r;
  if (m.stable) {
    r = params.n() == 2 && !params.is_symmetric() ? throughput_two_user(m, table, params)
                                                  : throughput_n_user(m, table, params);
  } else {
    return evaluate(params).report;
  }
  const DelayReport delays = average_delay(r, m);
  r.d_queue = delays.d_queue;
  r.d_relay = delays.d_relay;
  for (std::size_t i = 0; i < r.users.size(); ++i) {
    r.users[i].delay = delays.per_user[i];
    r.users[i].delay_sojourn = delays.per_user_sojourn[i];
  }
  return r;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string point_name(const SweepPoint& p) {
  return "n=" + std::to_string(p.n) + " q=" + fmt(p.q) + " q0=" + fmt(p.q0) + " gamma=" + fmt(p.gamma) +
         " g=" + fmt(p.g);
}

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::max(1.0, std::fabs(a)); }

constexpr double kDriftTolerance = 1e-12;
constexpr double kDtmcTolerance = 1e-8;
constexpr double kSimTolerance = 3.0;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double max_drift_gap(const DriftDistribution& a, const DriftDistribution& b) {
  double gap = std::max(std::fabs(a.p_minus1 - b.p_minus1),
                        std::max(std::fabs(a.lambda0 - b.lambda0), std::fabs(a.lambda1 - b.lambda1)));
  gap = std::max(gap, (a.p0 - b.p0).cwiseAbs().maxCoeff());
  gap = std::max(gap, (a.p1 - b.p1).cwiseAbs().maxCoeff());
  return gap;
}

Task run_analytical(const SweepPoint& point, const NetworkParams& params, TableMode mode) {
  Task t;
  t.row.point = point;
  t.row.engine = Engine::analytical;
  const Evaluation e = evaluate(params, mode);
  fill_report(t.row, e.queue, e.report);
  t.row.baseline_delay = baseline_delay(params);
  return t;
}

Task run_dtmc(const SweepPoint& point, const NetworkParams& params, TableMode mode) {
  Task t;
  t.row.point = point;
  t.row.engine = Engine::dtmc;
  const SuccessTable table = build_success_table(params, mode);
  const DriftDistribution d = closed_form_drift(table, params);
  RelayQueueMetrics m = analyze_relay_queue(params, table);
  if (!m.stable) {
    fill_report(t.row, m, evaluate(params, mode).report);
    return t;
  }
  const RelayQueueMetrics closed = m;
  const DtmcSolution sol = dtmc_steady_state_adaptive(d);
  m.p_empty = sol.p_empty;
  m.q_bar = sol.mean;
  m.lambda = sol.p_empty * d.lambda0 + (1.0 - sol.p_empty) * d.lambda1;
  fill_report(t.row, m, report_from_metrics(m, table, params));
  const std::string where = point_name(point);
  if (!close(closed.p_empty, sol.p_empty, kDtmcTolerance)) {
    t.disagreements.push_back(where + ": dtmc P(Q=0) " + fmt(sol.p_empty) + " vs closed form " + fmt(closed.p_empty));
  }
  if (!close(closed.q_bar, sol.mean, kDtmcTolerance)) {
    t.disagreements.push_back(where + ": dtmc Qbar " + fmt(sol.mean) + " vs closed form " + fmt(closed.q_bar));
  }
  if (!close(closed.lambda, m.lambda, kDtmcTolerance)) {
    t.disagreements.push_back(where + ": dtmc lambda " + fmt(m.lambda) + " vs closed form " + fmt(closed.lambda));
  }
  return t;
}

Task run_enumeration(const SweepPoint& point, const NetworkParams& params, TableMode mode) {
  Task t;
  t.row.point = point;
  t.row.engine = Engine::enumeration;
  const SuccessTable table = build_success_table(params, mode);
  const DriftDistribution d = enumerate_drift(params);
  const RelayQueueMetrics m = analyze_relay_queue(d);
  fill_report(t.row, m, report_from_metrics(m, table, params));
  if (mode == TableMode::eq1_derived) {
    const double gap = max_drift_gap(d, closed_form_drift(table, params));
    if (gap > kDriftTolerance) {
      t.disagreements.push_back(point_name(point) + ": enumerated drift differs from closed form by " + fmt(gap));
    }
  }
  return t;
}

Task run_sim(const SweepPoint& point, const NetworkParams& params, TableMode mode, SimConfig sim,
             std::uint64_t index) {
  Task t;
  t.row.point = point;
  t.row.engine = Engine::simulation;
  sim.seed = derive_seed(sim.seed, index);
  const SimResult s = run_simulation(params, sim);
  ResultRow& r = t.row;
  r.mu = s.mu.mean;
  r.lambda = s.lambda.mean;
  r.p_empty = s.p_empty.mean;
  r.q_bar = s.q_bar.mean;
  r.t_direct = s.t_direct_avg.mean;
  r.t_relayed = s.t_relayed_avg.mean;
  r.t_total = s.t_total_avg.mean;
  r.t_aggr = s.t_total_avg.mean * params.n();
  if (*r.t_total > 0.0) r.relayed_fraction = *r.t_relayed / *r.t_total;
  r.se_mu = s.mu.se;
  r.se_lambda = s.lambda.se;
  r.se_p_empty = s.p_empty.se;
  r.se_q_bar = s.q_bar.se;
  r.se_t_direct = s.t_direct_avg.se;
  r.se_t_relayed = s.t_relayed_avg.se;
  r.se_t_total = s.t_total_avg.se;
  StabilityVerdict verdict = StabilityVerdict::inconclusive;
  if (sim.stability_probe) {
    verdict = stability_probe(s);
    r.stability_probe = to_string(verdict);
  }
  const Evaluation e = evaluate(params, mode);
  r.q0_min = e.queue.q0_min;
  r.baseline_delay = baseline_delay(params);
  const bool unstable = sim.stability_probe ? verdict == StabilityVerdict::unstable : !e.queue.stable;
  if (unstable) {
    r.status = "UNSTABLE";
    r.stable = false;
  } else {
    r.stable = true;
    if (s.delay_samples > 0) {
      r.delay = s.delay_avg.mean;
      r.se_delay = s.delay_avg.se;
    }
  }

  const std::string where = point_name(point);
  if (sim.stability_probe) {
    if (e.queue.stable && verdict == StabilityVerdict::unstable) {
      t.disagreements.push_back(where + ": stability probe says unstable, analysis says stable");
    } else if (!e.queue.stable && verdict == StabilityVerdict::stable) {
      t.disagreements.push_back(where + ": stability probe says stable, analysis says unstable");
    }
  }
  if (!e.queue.stable || unstable) return t;

  auto check = [&](const char* name, double analytic, double empirical, double se) {
    const double z = std::fabs(empirical - analytic) / std::max(se, 1e-300);
    if (!(z <= kSimTolerance)) {
      t.disagreements.push_back(where + ": simulated " + name + " " + fmt(empirical) + " +- " + fmt(se) +
                                " vs analytical " + fmt(analytic) + " (" + fmt(z) + " SE)");
    }
  };
  const PerformanceReport& rep = e.report;
  check("mu", e.queue.mu, s.mu.mean, s.mu.se);
  check("lambda", e.queue.lambda, s.lambda.mean, s.lambda.se);
  check("P(Q=0)", e.queue.p_empty, s.p_empty.mean, s.p_empty.se);
  check("Qbar", e.queue.q_bar, s.q_bar.mean, s.q_bar.se);
  check("T_D", mean_of(rep.users, &UserPerformance::t_direct), s.t_direct_avg.mean, s.t_direct_avg.se);
  check("T_R", mean_of(rep.users, &UserPerformance::t_relayed), s.t_relayed_avg.mean, s.t_relayed_avg.se);
  check("T", mean_of(rep.users, &UserPerformance::t_total), s.t_total_avg.mean, s.t_total_avg.se);
  if (const auto d = mean_delay(rep.users, &UserPerformance::delay); d && r.delay) {
    check("D", *d, *r.delay, *r.se_delay);
  }
  if (const auto d = mean_delay(rep.users, &UserPerformance::delay_sojourn); d && r.delay) {
    t.notes.push_back(where + ": simulated D " + fmt(*r.delay) + " vs sojourn form " + fmt(*d) + " (" +
                      fmt(std::fabs(*r.delay - *d) / std::max(*r.se_delay, 1e-300)) + " SE)");
  }
  return t;
}

Task run_task(const SweepPoint& point, const NetworkParams& params, Engine engine, TableMode mode,
              const SimConfig& sim, std::uint64_t index) {
  try {
    switch (engine) {
      case Engine::analytical: return run_analytical(point, params, mode);
      case Engine::dtmc: return run_dtmc(point, params, mode);
      case Engine::enumeration: return run_enumeration(point, params, mode);
      case Engine::simulation: return run_sim(point, params, mode, sim, index);
    }
  } catch (const std::exception& ex) {
    Task t;
    t.row = ResultRow{};
    t.row.point = point;
    t.row.engine = engine;
    std::string msg = ex.what();
    std::replace_if(msg.begin(), msg.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
    t.row.status = "ERROR: " + msg;
    return t;
  }
  return {};
}

unsigned worker_count(unsigned requested, std::size_t tasks) {
  unsigned w = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(tasks, 1)));
}

// Results land in slots keyed by task index, so output order never depends
// on scheduling.
template <class Fn>
std::vector<Task> run_pool(std::size_t count, unsigned workers, Fn fn) {
  std::vector<Task> out(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) out[i] = fn(i);
  };
  const unsigned w = worker_count(workers, count);
  std::vector<std::thread> threads;
  for (unsigned k = 1; k < w; ++k) threads.emplace_back(worker);
  worker();
  for (std::thread& t : threads) t.join();
  return out;
}

ExperimentResult run_points(const std::vector<SweepPoint>& points, const ExperimentSpec& spec, unsigned workers) {
  std::vector<Engine> engines = spec.engines;
  std::sort(engines.begin(), engines.end());
  engines.erase(std::unique(engines.begin(), engines.end()), engines.end());
  const std::size_t per = engines.size();
  std::vector<Task> tasks = run_pool(points.size() * per, workers, [&](std::size_t i) {
    const SweepPoint& p = points[i / per];
    return run_task(p, spec.params_at(p), engines[i % per], spec.mode, spec.sim, i / per);
  });
  ExperimentResult result;
  for (Task& t : tasks) {
    result.rows.push_back(std::move(t.row));
    for (std::string& d : t.disagreements) result.disagreements.push_back(std::move(d));
    for (std::string& n : t.notes) result.notes.push_back(std::move(n));
  }
  return result;
}

// ---------------------------------------------------------------- csv

using Getter = std::function<std::string(const ResultRow&)>;

Getter opt(std::optional<double> ResultRow::*field) {
  return [field](const ResultRow& r) {
    const auto& v = r.*field;
    return v && std::isfinite(*v) ? fmt(*v) : std::string();
  };
}

const std::vector<std::pair<std::string, Getter>>& columns_table() {
  static const std::vector<std::pair<std::string, Getter>> table = {
      {"engine", [](const ResultRow& r) { return to_string(r.engine); }},
      {"n", [](const ResultRow& r) { return std::to_string(r.point.n); }},
      {"q", [](const ResultRow& r) { return fmt(r.point.q); }},
      {"q0", [](const ResultRow& r) { return fmt(r.point.q0); }},
      {"gamma", [](const ResultRow& r) { return fmt(r.point.gamma); }},
      {"g", [](const ResultRow& r) { return fmt(r.point.g); }},
      {"status", [](const ResultRow& r) { return r.status; }},
      {"mu", opt(&ResultRow::mu)},
      {"lambda", opt(&ResultRow::lambda)},
      {"p_empty", opt(&ResultRow::p_empty)},
      {"q_bar", opt(&ResultRow::q_bar)},
      {"q0_min", opt(&ResultRow::q0_min)},
      {"stable", [](const ResultRow& r) { return r.stable ? std::string(*r.stable ? "true" : "false") : ""; }},
      {"t_direct", opt(&ResultRow::t_direct)},
      {"t_relayed", opt(&ResultRow::t_relayed)},
      {"t_total", opt(&ResultRow::t_total)},
      {"t_aggr", opt(&ResultRow::t_aggr)},
      {"relayed_fraction", opt(&ResultRow::relayed_fraction)},
      {"d_queue", opt(&ResultRow::d_queue)},
      {"d_relay", opt(&ResultRow::d_relay)},
      {"delay", opt(&ResultRow::delay)},
      {"delay_sojourn", opt(&ResultRow::delay_sojourn)},
      {"baseline_delay", opt(&ResultRow::baseline_delay)},
      {"se_mu", opt(&ResultRow::se_mu)},
      {"se_lambda", opt(&ResultRow::se_lambda)},
      {"se_p_empty", opt(&ResultRow::se_p_empty)},
      {"se_q_bar", opt(&ResultRow::se_q_bar)},
      {"se_t_direct", opt(&ResultRow::se_t_direct)},
      {"se_t_relayed", opt(&ResultRow::se_t_relayed)},
      {"se_t_total", opt(&ResultRow::se_t_total)},
      {"se_delay", opt(&ResultRow::se_delay)},
      {"stability_probe", [](const ResultRow& r) { return r.stability_probe; }},
  };
  return table;
}

const std::vector<std::string> kKeyColumns = {"engine", "n", "q", "q0", "gamma", "g", "status", "stable"};

}  // namespace

std::vector<std::string> csv_columns() {
  std::vector<std::string> out;
  for (const auto& [name, get] : columns_table()) out.push_back(name);
  return out;
}

std::string ExperimentResult::csv(const std::vector<std::string>& columns) const {
  std::vector<const Getter*> getters;
  std::string header;
  for (const auto& [name, get] : columns_table()) {
    const bool wanted = columns.empty() ||
                        std::find(kKeyColumns.begin(), kKeyColumns.end(), name) != kKeyColumns.end() ||
                        std::find(columns.begin(), columns.end(), name) != columns.end();
    if (!wanted) continue;
    header += (getters.empty() ? "" : ",") + name;
    getters.push_back(&get);
  }
  for (const std::string& c : columns) {
    const auto all = csv_columns();
    if (std::find(all.begin(), all.end(), c) == all.end()) throw ParameterError("columns", "unknown column " + c);
  }
  std::string out = header + "\n";
  for (const ResultRow& row : rows) {
    for (std::size_t i = 0; i < getters.size(); ++i) {
      if (i) out += ',';
      out += (*getters[i])(row);
    }
    out += '\n';
  }
  return out;
}

std::string ExperimentResult::summary() const {
  std::ostringstream out;
  std::map<std::string, int> status;
  for (const ResultRow& r : rows) ++status[r.status.rfind("ERROR", 0) == 0 ? "ERROR" : r.status];
  out << "rows: " << rows.size() << "\n";
  for (const auto& [s, c] : status) out << "  " << s << ": " << c << "\n";
  for (const std::string& n : notes) out << n << "\n";
  out << "disagreements beyond tolerance: " << disagreements.size() << "\n";
  for (const std::string& d : disagreements) out << "  " << d << "\n";
  return out.str();
}

ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned workers) {
  spec.validate();
  return run_points(spec.points(), spec, workers);
}

// ---------------------------------------------------------------- presets

const std::vector<FigurePreset>& figure_presets() {
  static const std::vector<FigurePreset> presets = {
      {"thr-vs-n", {"t_direct", "t_relayed", "t_total", "q0_min"}},
      {"aggr-vs-n", {"t_aggr", "q0_min"}},
      {"relayed-vs-n", {"relayed_fraction", "t_relayed", "t_total"}},
      {"qlen-vs-n", {"p_empty", "q_bar", "q0_min"}},
      {"delay-vs-n", {"d_queue", "d_relay", "delay", "delay_sojourn", "baseline_delay"}},
  };
  return presets;
}

ExperimentSpec figure_spec(const std::string& preset, double gamma) {
  const auto& presets = figure_presets();
  if (std::none_of(presets.begin(), presets.end(), [&](const FigurePreset& p) { return p.name == preset; })) {
    throw ParameterError("preset", "unknown figure preset '" + preset + "'");
  }
  ExperimentSpec spec;
  spec.axes.n.clear();
  for (int n = 1; n <= 50; ++n) spec.axes.n.push_back(n);
  spec.axes.q = {0.1};
  spec.axes.q0 = {gamma == 0.2 ? 0.95 : 0.99};
  spec.axes.gamma = {gamma};
  spec.axes.g = {1e-10, 1e-8, 1.0};
  spec.engines = {Engine::analytical};
  spec.validate();
  return spec;
}

std::vector<NetworkParams> reference_configurations() {
  std::vector<NetworkParams> out;
  for (double gamma : {0.6, 1.2, 2.5})
    for (double g : {1e-10, 1e-8, 1.0}) out.push_back(NetworkParams::symmetric(10, 0.1, 0.99, gamma, g));
  out.push_back(NetworkParams::symmetric(5, 0.1, 0.99, 0.6, 1e-8));
  return out;
}

// ---------------------------------------------------------------- validate

namespace {

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
}

NetworkParams random_params(std::mt19937_64& rng, int n, bool symmetric) {
  auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  NetworkParams p = NetworkParams::symmetric(n, 0.1, 0.99, 0.6, 1e-8);
  UserLink base;
  base.q = u(0.02, 0.5);
  base.r_d = u(80.0, 180.0);
  base.r_0 = u(30.0, 90.0);
  base.p_tx = log_uniform(rng, 3e-4, 3e-3);
  for (UserLink& link : p.users) {
    link = base;
    if (!symmetric) {
      link.q = u(0.02, 0.5);
      link.r_d = u(80.0, 180.0);
      link.r_0 = u(30.0, 90.0);
      link.p_tx = log_uniform(rng, 3e-4, 3e-3);
      link.v_d = u(0.5, 2.0);
      link.v_0 = u(0.5, 2.0);
    }
  }
  p.q0 = u(0.3, 1.0);
  p.r_0d = u(50.0, 110.0);
  p.p_tx_relay = log_uniform(rng, 3e-3, 3e-2);
  p.gamma_0 = u(0.1, 2.5);
  p.gamma_d = symmetric ? p.gamma_0 : u(0.1, 2.5);
  p.g = std::bernoulli_distribution(0.1)(rng) ? 0.0 : log_uniform(rng, 1e-10, 1.0);
  return p;
}

}  // namespace

ExperimentResult run_validation(const ValidationOptions& options) {
  ExperimentResult result;
  std::mt19937_64 rng(options.seed);

  // Closed-form drift against exhaustive enumeration.
  double worst_two = 0.0, worst_n = 0.0;
  for (int k = 0; k < options.drift_draws; ++k) {
    const NetworkParams p = random_params(rng, 2, false);
    const double gap = max_drift_gap(two_user_drift(build_success_table(p), p), enumerate_drift(p));
    worst_two = std::max(worst_two, gap);
    if (gap > kDriftTolerance) result.disagreements.push_back("two-user drift draw " + std::to_string(k) + ": gap " + fmt(gap));
  }
  for (int k = 0; k < options.drift_draws; ++k) {
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    const NetworkParams p = random_params(rng, n, true);
    const double gap = max_drift_gap(n_user_drift(build_success_table(p), p), enumerate_drift(p));
    worst_n = std::max(worst_n, gap);
    if (gap > kDriftTolerance) result.disagreements.push_back("n-user drift draw " + std::to_string(k) + ": gap " + fmt(gap));
  }
  result.notes.push_back("drift vs enumeration: " + std::to_string(2 * options.drift_draws) +
                         " draws, worst two-user gap " + fmt(worst_two) + ", worst n-user gap " + fmt(worst_n));

  // Queue closed forms against the truncated chain.
  double worst_chain = 0.0, worst_tail = 0.0;
  int accepted = 0;
  for (int attempts = 0; accepted < options.dtmc_draws; ++attempts) {
    if (attempts > 100 * options.dtmc_draws) throw ContractError("could not draw stable configurations");
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    const NetworkParams p = random_params(rng, n, true);
    const SuccessTable table = build_success_table(p);
    const RelayQueueMetrics m = analyze_relay_queue(p, table);
    if (!m.stable || m.lambda1 > 0.95 * m.mu || m.lambda0 <= 0.0) continue;
    ++accepted;
    const DtmcSolution sol = dtmc_steady_state_adaptive(closed_form_drift(table, p));
    const double gap = std::max(std::fabs(sol.p_empty - m.p_empty) / std::max(1.0, m.p_empty),
                                std::fabs(sol.mean - m.q_bar) / std::max(1.0, m.q_bar));
    worst_chain = std::max(worst_chain, gap);
    worst_tail = std::max(worst_tail, sol.tail_mass);
    if (gap > kDtmcTolerance) {
      result.disagreements.push_back("dtmc draw " + std::to_string(accepted) + ": gap " + fmt(gap));
    }
  }
  result.notes.push_back("queue closed forms vs chain: " + std::to_string(options.dtmc_draws) +
                         " stable draws, worst gap " + fmt(worst_chain) + ", worst tail mass " + fmt(worst_tail));

  // Reference configurations through every engine.
  ExperimentSpec spec;
  spec.engines = {Engine::analytical, Engine::dtmc, Engine::enumeration, Engine::simulation};
  spec.sim = SimConfig::with_slots(options.slots, options.seed);
  std::vector<SweepPoint> points;
  for (const NetworkParams& p : reference_configurations()) {
    points.push_back({p.n(), p.user(1).q, p.q0, p.gamma_0, p.g});
  }
  spec.validate();
  ExperimentResult sweep = run_points(points, spec, 0);
  result.rows = std::move(sweep.rows);
  for (std::string& d : sweep.disagreements) result.disagreements.push_back(std::move(d));
  for (std::string& n : sweep.notes) result.notes.push_back(std::move(n));
  result.notes.push_back("simulation cross-check: " + std::to_string(points.size()) + " configurations at " +
                         std::to_string(options.slots) + " slots");
  return result;
}

void write_artifacts(const ExperimentResult& result, const std::string& prefix,
                     const std::vector<std::string>& columns) {
  const std::filesystem::path base(prefix);
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw ResourceError("write failed for " + path.string());
  };
  write(prefix + ".csv", result.csv(columns));
  write(prefix + "_summary.txt", result.summary());
}

std::string default_output_dir() {
  const char* env = std::getenv("FDRELAY_OUT_DIR");
  return env && *env ? std::string(env) : std::string(".");
}

}  // namespace fdrelay
