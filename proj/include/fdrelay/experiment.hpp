#ifndef FDRELAY_EXPERIMENT_HPP
#define FDRELAY_EXPERIMENT_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fdrelay/params.hpp"
#include "fdrelay/phy_channel.hpp"
#include "fdrelay/simulation.hpp"

namespace fdrelay {

// Malformed configuration text; line() is 1-based.
class ConfigSyntaxError : public std::runtime_error {
public:
  ConfigSyntaxError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

enum class Engine { analytical, dtmc, enumeration, simulation };

std::string to_string(Engine engine);
Engine engine_from_string(const std::string& text);

struct SweepAxes {
  std::vector<int> n{2};
  std::vector<double> q{0.1};
  std::vector<double> q0{0.99};
  std::vector<double> gamma{0.6};
  std::vector<double> g{1e-8};

  std::size_t size() const { return n.size() * q.size() * q0.size() * gamma.size() * g.size(); }
};

struct SweepPoint {
  int n = 2;
  double q = 0.1;
  double q0 = 0.99;
  double gamma = 0.6;
  double g = 1e-8;
};

struct ExperimentSpec {
  NetworkParams base = NetworkParams::symmetric(2, 0.1, 0.99, 0.6, 1e-8);
  SweepAxes axes;
  std::vector<Engine> engines{Engine::analytical};
  SimConfig sim = SimConfig::with_slots(200'000, 1);
  TableMode mode = TableMode::eq1_derived;
  std::string output_prefix;
  std::size_t max_points = 10'000;

  // Cartesian product, sorted by (n, q, q0, gamma, g).
  std::vector<SweepPoint> points() const;
  NetworkParams params_at(const SweepPoint& point) const;

  void validate() const;
};

// Grammar: one `key = value` per line, `#` comments, optional `[section]`
// headers that prefix later keys (`[sim]` then `slots = 1e5` is `sim.slots`),
// lists in brackets with integer ranges: `n = [1..10, 20]`. Unknown keys are
// rejected. Defaults: n = 2, q = 0.1, q0 = 0.99, gamma = 0.6, g = 1e-8.
ExperimentSpec parse_config(const std::string& text);

// One CSV row: a sweep point evaluated by one engine. Empty optionals become
// empty cells.
struct ResultRow {
  SweepPoint point;
  Engine engine = Engine::analytical;
  std::string status = "OK";
  std::optional<double> mu, lambda, p_empty, q_bar, q0_min;
  std::optional<bool> stable;
  std::optional<double> t_direct, t_relayed, t_total, t_aggr, relayed_fraction;
  std::optional<double> d_queue, d_relay, delay, delay_sojourn, baseline_delay;
  std::optional<double> se_mu, se_lambda, se_p_empty, se_q_bar, se_t_direct, se_t_relayed,
      se_t_total, se_delay;
  std::string stability_probe;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<std::string> disagreements;
  std::vector<std::string> notes;

  // columns empty: every column. Otherwise the key columns plus the listed ones.
  std::string csv(const std::vector<std::string>& columns = {}) const;
  std::string summary() const;
};

std::vector<std::string> csv_columns();

// Runs every engine at every point. Per-point failures land in the row's
// status; the sweep never aborts. Simulation seeds derive from the sweep
// index, and rows come back in sweep order regardless of worker count.
ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned workers = 0);

// Named figure sweeps: n = 1..50 over g in {1e-10, 1e-8, 1} at a fixed gamma.
struct FigurePreset {
  std::string name;
  std::vector<std::string> columns;
};
const std::vector<FigurePreset>& figure_presets();
ExperimentSpec figure_spec(const std::string& preset, double gamma);

// Stable reference configurations used by the simulation
// cross-checks (n = 10, q = 0.1, q0 = 0.99, gamma in {0.6, 1.2, 2.5},
// g in {1e-10, 1e-8, 1}, plus n = 5 at gamma 0.6).
std::vector<NetworkParams> reference_configurations();

struct ValidationOptions {
  std::uint64_t seed = 1;
  std::uint64_t slots = 1'000'000;
  int drift_draws = 100;
  int dtmc_draws = 50;
  double sim_tolerance_se = 3.0;
};

// Oracle-agreement suite: closed-form drift vs enumeration on random draws,
// queue closed forms vs the truncated chain, and simulation vs analysis on
// the reference configurations.
ExperimentResult run_validation(const ValidationOptions& options);

// Writes <prefix>.csv and <prefix>_summary.txt.
void write_artifacts(const ExperimentResult& result, const std::string& prefix,
                     const std::vector<std::string>& columns = {});

// Output directory from FDRELAY_OUT_DIR, else the working directory.
std::string default_output_dir();

}  // namespace fdrelay

#endif  // FDRELAY_EXPERIMENT_HPP
