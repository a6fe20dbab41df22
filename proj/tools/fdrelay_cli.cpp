#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdrelay/errors.hpp"
#include "fdrelay/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kValidation = 2;

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> slots;
  std::string engines;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool engines) {
  cmd->add_option("--seed", c.seed, "base seed for simulation runs");
  cmd->add_option("--slots", c.slots, "simulated slots per run");
  if (engines) cmd->add_option("--engines", c.engines, "comma list of analytical,dtmc,enumeration,simulation");
  cmd->add_option("--out", c.out, "output prefix (writes <prefix>.csv and <prefix>_summary.txt)");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void apply_common(fdrelay::ExperimentSpec& spec, const Common& c) {
  if (c.seed) spec.sim.seed = *c.seed;
  if (c.slots) {
    spec.sim.slots = *c.slots;
    spec.sim.warmup = fdrelay::SimConfig::default_warmup(*c.slots);
  }
  if (!c.engines.empty()) {
    spec.engines.clear();
    std::stringstream ss(c.engines);
    std::string item;
    while (std::getline(ss, item, ',')) spec.engines.push_back(fdrelay::engine_from_string(item));
  }
  spec.validate();
}

std::string prefix_for(const Common& c, const std::string& configured, const std::string& name) {
  if (!c.out.empty()) return c.out;
  if (!configured.empty()) return configured;
  return fdrelay::default_output_dir() + "/" + name;
}

void print_rows(const fdrelay::ExperimentResult& result) {
  for (const fdrelay::ResultRow& r : result.rows) {
    auto show = [](const std::optional<double>& v) {
      char buf[32];
      if (!v) return std::string("-");
      std::snprintf(buf, sizeof buf, "%.6g", *v);
      return std::string(buf);
    };
    std::cout << fdrelay::to_string(r.engine) << " n=" << r.point.n << " q=" << r.point.q << " q0=" << r.point.q0
              << " gamma=" << r.point.gamma << " g=" << r.point.g << " [" << r.status << "]"
              << " mu=" << show(r.mu) << " lambda=" << show(r.lambda) << " P(Q=0)=" << show(r.p_empty)
              << " Qbar=" << show(r.q_bar) << " q0_min=" << show(r.q0_min) << " T=" << show(r.t_total)
              << " T_aggr=" << show(r.t_aggr) << " D=" << show(r.delay) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-duplex relay random-access analysis and simulation"};
  app.require_subcommand(1);

  Common run_opts, sweep_opts, figure_opts, validate_opts;
  std::string run_config, sweep_config, preset;
  double gamma = 0.6;

  CLI::App* run = app.add_subcommand("run", "evaluate a configuration and print the results");
  run->add_option("config", run_config, "configuration file")->required();
  add_common(run, run_opts, true);

  CLI::App* sweep = app.add_subcommand("sweep", "run a configured sweep and write CSV plus summary");
  sweep->add_option("config", sweep_config, "configuration file")->required();
  add_common(sweep, sweep_opts, true);

  CLI::App* figure = app.add_subcommand("figure", "write the CSV behind a figure family");
  std::vector<std::string> names;
  for (const auto& p : fdrelay::figure_presets()) names.push_back(p.name);
  figure->add_option("preset", preset, "figure preset")->required()->check(CLI::IsMember(names));
  figure->add_option("--gamma", gamma, "SINR threshold")->required();
  add_common(figure, figure_opts, false);

  CLI::App* validate = app.add_subcommand("validate", "run the oracle-agreement suite");
  add_common(validate, validate_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run || *sweep) {
      const bool is_run = run->parsed();
      const Common& opts = is_run ? run_opts : sweep_opts;
      fdrelay::ExperimentSpec spec = fdrelay::parse_config(read_file(is_run ? run_config : sweep_config));
      apply_common(spec, opts);
      const fdrelay::ExperimentResult result = fdrelay::run_experiment(spec);
      const std::string prefix = prefix_for(opts, spec.output_prefix, is_run ? "run" : "sweep");
      fdrelay::write_artifacts(result, prefix);
      if (is_run) print_rows(result);
      std::cout << result.summary() << "wrote " << prefix << ".csv\n";
      return kOk;
    }
    if (*figure) {
      fdrelay::ExperimentSpec spec = fdrelay::figure_spec(preset, gamma);
      apply_common(spec, figure_opts);
      const fdrelay::ExperimentResult result = fdrelay::run_experiment(spec);
      char name[64];
      std::snprintf(name, sizeof name, "%s_gamma%g", preset.c_str(), gamma);
      const std::string prefix = prefix_for(figure_opts, "", name);
      for (const auto& p : fdrelay::figure_presets()) {
        if (p.name == preset) fdrelay::write_artifacts(result, prefix, p.columns);
      }
      std::cout << result.summary() << "wrote " << prefix << ".csv\n";
      return kOk;
    }
    fdrelay::ValidationOptions options;
    if (validate_opts.seed) options.seed = *validate_opts.seed;
    if (validate_opts.slots) options.slots = *validate_opts.slots;
    const fdrelay::ExperimentResult result = fdrelay::run_validation(options);
    const std::string prefix = prefix_for(validate_opts, "", "validate");
    fdrelay::write_artifacts(result, prefix);
    std::cout << result.summary() << "wrote " << prefix << ".csv\n";
    return result.disagreements.empty() ? kOk : kValidation;
  } catch (const fdrelay::ConfigSyntaxError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const fdrelay::ParameterError& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kUsage;
}
