#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fdrelay/errors.hpp"
#include "fdrelay/experiment.hpp"
#include "fdrelay/performance.hpp"

using namespace fdrelay;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::out_of_range(name);
  }
};

Table parse_csv(const std::string& text) {
  Table t;
  std::stringstream ss(text);
  std::string line;
  std::getline(ss, line);
  t.header = split(line, ',');
  while (std::getline(ss, line)) t.rows.push_back(split(line, ','));
  return t;
}

}  // namespace

TEST_CASE("empty config gives the numerical-section defaults") {
  const ExperimentSpec s = parse_config("");
  REQUIRE(s.points().size() == 1);
  const SweepPoint p = s.points().front();
  CHECK(p.n == 2);
  CHECK(p.gamma == 0.6);
  CHECK(p.q == 0.1);
  CHECK(p.q0 == 0.99);
  CHECK(p.g == 1e-8);
  const NetworkParams params = s.params_at(p);
  CHECK(params.user(1).r_d == 130.0);
  CHECK(params.user(1).r_0 == 60.0);
  CHECK(params.r_0d == 80.0);
  CHECK(params.alpha == 4.0);
  CHECK(params.eta_0 == 1e-11);
  CHECK(params.p_tx_relay == 1e-2);
  CHECK(params.user(1).p_tx == 1e-3);
  CHECK(s.engines == std::vector<Engine>{Engine::analytical});
}

TEST_CASE("lists and ranges") {
  const ExperimentSpec s = parse_config("gamma = [0.2, 0.6]\nn = [1..50]\n");
  CHECK(s.points().size() == 100);
  CHECK(parse_config("n = [1..3, 7, 9..10]").axes.n == std::vector<int>{1, 2, 3, 7, 9, 10});
}

TEST_CASE("sections, comments and dotted keys") {
  const ExperimentSpec s = parse_config(
      "# sweep\n"
      "engines = [analytical, simulation]   # two engines\n"
      "channel.r_0 = 50\n"
      "[sim]\n"
      "slots = 3e5\n"
      "seed = 7\n"
      "mode = sinr-sampling\n"
      "[channel]\n"
      "eta = 2e-11\n");
  CHECK(s.engines.size() == 2);
  CHECK(s.sim.slots == 300'000);
  CHECK(s.sim.warmup == 30'000);
  CHECK(s.sim.seed == 7);
  CHECK(s.sim.mode == SimMode::sinr_sampling);
  const NetworkParams p = s.params_at(s.points().front());
  CHECK(p.user(1).r_0 == 50.0);
  CHECK(p.eta_0 == 2e-11);
  CHECK(p.eta_d == 2e-11);
}

TEST_CASE("config errors") {
  CHECK_THROWS_WITH_AS(parse_config("q0 = 1.5"), doctest::Contains("q0"), ParameterError);
  try {
    parse_config("n = 2\n\nbogus = 3\n");
    FAIL("expected an error");
  } catch (const ConfigSyntaxError& e) {
    CHECK(e.line() == 3);
  }
  try {
    parse_config("n = 2\nq = [0.1, 0.2\n");
    FAIL("expected an error");
  } catch (const ConfigSyntaxError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_config("n 2"), ConfigSyntaxError);
  CHECK_THROWS_AS(parse_config("n = 2\nn = 3"), ConfigSyntaxError);
  CHECK_THROWS_AS(parse_config("q = abc"), ConfigSyntaxError);
  CHECK_THROWS_AS(parse_config("engines = [warp]"), ParameterError);
  CHECK_THROWS_WITH_AS(parse_config("q = [0.1, 0.2]\nn = [1..60]\nmax_points = 100"), doctest::Contains("max_points"),
                       ParameterError);
  CHECK_THROWS_WITH_AS(parse_config("n = 0"), doctest::Contains("n"), ParameterError);
}

TEST_CASE("sweep output") {
  ExperimentSpec s = parse_config("n = [12, 13, 1]\ngamma = 0.2\nq0 = 0.95\ng = [1, 1e-10]\n"
                                  "engines = [analytical, dtmc, enumeration]");
  const ExperimentResult r = run_experiment(s, 1);
  const std::string csv = r.csv();
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.back() == '\n');
  const Table t = parse_csv(csv);
  REQUIRE(t.rows.size() == 18);
  for (const auto& row : t.rows) REQUIRE(row.size() == t.header.size());

  SUBCASE("rows sorted by coordinates then engine") {
    CHECK(t.rows[0][t.col("n")] == "1");
    CHECK(t.rows[0][t.col("g")] == "1e-10");
    CHECK(t.rows[0][t.col("engine")] == "analytical");
    CHECK(t.rows[1][t.col("engine")] == "dtmc");
    CHECK(t.rows[17][t.col("n")] == "13");
  }
  SUBCASE("unstable rows carry empty delay cells") {
    int unstable = 0;
    for (const auto& row : t.rows) {
      if (row[t.col("status")] != "UNSTABLE") continue;
      ++unstable;
      CHECK(row[t.col("delay")].empty());
      CHECK(row[t.col("d_queue")].empty());
      CHECK(row[t.col("d_relay")].empty());
      CHECK(row[t.col("stable")] == "false");
    }
    CHECK(unstable == 2);
    CHECK(t.rows[17][t.col("status")].rfind("ERROR", 0) == 0);
  }
  SUBCASE("engines agree") { CHECK(r.disagreements.empty()); }
  SUBCASE("worker count does not change the output") { CHECK(run_experiment(s, 4).csv() == csv); }
}

TEST_CASE("per-point failures stay in the row") {
  const ExperimentSpec s = parse_config("n = [2, 13]\nengines = [enumeration]");
  const ExperimentResult r = run_experiment(s, 2);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].status == "OK");
  CHECK(r.rows[1].status.rfind("ERROR", 0) == 0);
}

TEST_CASE("analytical rows round-trip through the library") {
  const ExperimentSpec s = parse_config("n = [1, 4, 9]\ngamma = [0.6, 2.5]\ng = [1e-8, 1]");
  const Table t = parse_csv(run_experiment(s).csv());
  for (const auto& row : t.rows) {
    const NetworkParams p = NetworkParams::symmetric(std::stoi(row[t.col("n")]), std::stod(row[t.col("q")]),
                                                     std::stod(row[t.col("q0")]), std::stod(row[t.col("gamma")]),
                                                     std::stod(row[t.col("g")]));
    const Evaluation e = evaluate(p);
    CHECK(std::stod(row[t.col("mu")]) == doctest::Approx(e.queue.mu).epsilon(1e-11));
    CHECK(std::stod(row[t.col("t_total")]) == doctest::Approx(e.report.user(1).t_total).epsilon(1e-11));
    CHECK(std::stod(row[t.col("q0_min")]) == doctest::Approx(e.queue.q0_min).epsilon(1e-11));
    if (e.queue.stable) {
      CHECK(std::stod(row[t.col("delay")]) == doctest::Approx(e.report.user(1).delay.slots).epsilon(1e-11));
    }
  }
}

TEST_CASE("figure presets") {
  SUBCASE("baseline delay at gamma 2.5 exceeds 10000 slots everywhere") {
    const ExperimentResult r = run_experiment(figure_spec("delay-vs-n", 2.5));
    CHECK(r.rows.size() == 150);
    for (const ResultRow& row : r.rows) CHECK(*row.baseline_delay > 10000.0);
    const Table t = parse_csv(r.csv(figure_presets().back().columns));
    CHECK(t.header.size() == 8 + 5);
  }
  SUBCASE("throughput ordering across g at gamma 0.6") {
    const ExperimentResult r = run_experiment(figure_spec("thr-vs-n", 0.6));
    for (std::size_t i = 0; i + 2 < r.rows.size(); i += 3) {
      const ResultRow &fine = r.rows[i], &mid = r.rows[i + 1], &coarse = r.rows[i + 2];
      REQUIRE(fine.point.g < mid.point.g);
      if (!(*fine.stable && *mid.stable && *coarse.stable)) continue;
      CHECK(*fine.t_total >= *mid.t_total);
      CHECK(*mid.t_total >= *coarse.t_total);
    }
  }
  CHECK_THROWS_AS(figure_spec("pie-chart", 0.6), ParameterError);
  CHECK(figure_spec("qlen-vs-n", 0.2).axes.q0 == std::vector<double>{0.95});
}
