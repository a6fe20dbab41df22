#include <doctest.h>

#include "fdrelay/drift_kernel.hpp"
#include "fdrelay/errors.hpp"
#include "oracles.hpp"

using namespace fdrelay;

namespace {

NetworkParams section6(int n, double gamma, double g) { return NetworkParams::symmetric(n, 0.1, 0.99, gamma, g); }

double total(const Eigen::VectorXd& v) { return v.sum(); }

}  // namespace

TEST_CASE("two-user drift with silent users") {
  NetworkParams p = section6(2, 0.6, 1e-8);
  p.set_q(0.0);
  const SuccessTable t = build_success_table(p);
  const DriftDistribution d = two_user_drift(t, p);
  CHECK(d.r0.tail(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.r1.tail(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.p_minus1 == doctest::Approx(0.99 * t.p0d(0)).epsilon(1e-14));
  CHECK(d.lambda0 == 0.0);
  CHECK(d.lambda1 == 0.0);
}

TEST_CASE("relay that never transmits") {
  NetworkParams p = section6(2, 0.6, 1e-8);
  p.q0 = 0.0;
  const SuccessTable t = build_success_table(p);
  for (const DriftDistribution& d : {two_user_drift(t, p), n_user_drift(t, p)}) {
    CHECK(d.p_minus1 == 0.0);
    CHECK((d.r1 - d.r0).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("n-user drift with silent users") {
  NetworkParams p = section6(5, 0.6, 1e-8);
  p.set_q(0.0);
  const SuccessTable t = build_success_table(p);
  const DriftDistribution d = n_user_drift(t, p);
  CHECK(d.r0.tail(5).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.p_minus1 == doctest::Approx(0.99 * t.p0d(0)).epsilon(1e-14));
}

TEST_CASE("closed forms match enumeration") {
  SUBCASE("two users, numerical-section parameters") {
    const NetworkParams p = section6(2, 0.6, 1e-8);
    CHECK(oracle::max_gap(two_user_drift(build_success_table(p), p), enumerate_drift(p)) <= 1e-12);
  }
  SUBCASE("five symmetric users") {
    const NetworkParams p = section6(5, 0.6, 1e-8);
    CHECK(oracle::max_gap(n_user_drift(build_success_table(p), p), enumerate_drift(p)) <= 1e-12);
  }
  SUBCASE("random asymmetric pairs") {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 100; ++k) {
      const NetworkParams p = oracle::random_params(rng, 2, false);
      CHECK(oracle::max_gap(two_user_drift(build_success_table(p), p), enumerate_drift(p)) <= 1e-12);
    }
  }
  SUBCASE("random symmetric n = 1..8") {
    std::mt19937_64 rng(22);
    for (int n = 1; n <= 8; ++n) {
      for (int k = 0; k < 20; ++k) {
        const NetworkParams p = oracle::random_params(rng, n, true);
        CHECK(oracle::max_gap(n_user_drift(build_success_table(p), p), enumerate_drift(p)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("symmetric n = 2 agrees with the two-user forms") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const NetworkParams p = oracle::random_params(rng, 2, true);
    const SuccessTable t = build_success_table(p);
    CHECK(oracle::max_gap(n_user_drift(t, p), two_user_drift(t, p)) <= 1e-12);
  }
}

TEST_CASE("single forced transmitter") {
  NetworkParams p = section6(1, 0.6, 1e-8);
  p.set_q(1.0);
  p.q0 = 0.0;
  const SuccessTable t = build_success_table(p);
  const ConditionalDrift empty = enumerate_drift(p, QueueState::empty);
  CHECK(empty.arrivals(1) == doctest::Approx((1 - t.pd(1, 0)) * t.p0(1, 0)).epsilon(1e-14));
}

TEST_CASE("distribution completeness and invariants") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 40; ++k) {
    const int n = 1 + k % 6;
    const NetworkParams p = oracle::random_params(rng, n, true);
    const DriftDistribution d = n_user_drift(build_success_table(p), p);
    CHECK(total(d.r0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(total(d.r1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.p_minus1 + total(d.p1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((d.p0 - d.r0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.r0.minCoeff() >= 0.0);
    CHECK(d.p1.minCoeff() >= 0.0);
    double l0 = 0.0, l1 = 0.0;
    for (int i = 0; i <= n; ++i) {
      l0 += i * d.r0(i);
      l1 += i * d.r1(i);
    }
    CHECK(d.lambda0 == doctest::Approx(l0).epsilon(1e-13));
    CHECK(d.lambda1 == doctest::Approx(l1).epsilon(1e-13));
    for (QueueState s : {QueueState::empty, QueueState::nonempty}) {
      const ConditionalDrift c = enumerate_drift(p, s);
      CHECK(c.change.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(c.arrivals.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("self-interference lowers arrivals while the relay transmits") {
  double prev = 2.0;
  for (double g : {0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2, 1.0}) {
    const NetworkParams p = section6(6, 0.6, g);
    const double l1 = n_user_drift(build_success_table(p), p).lambda1;
    CHECK(l1 <= prev);
    prev = l1;
  }
  const NetworkParams p0 = section6(6, 0.6, 0.0), p1 = section6(6, 0.6, 1.0);
  CHECK(n_user_drift(build_success_table(p0), p0).lambda1 >= n_user_drift(build_success_table(p1), p1).lambda1);
}

TEST_CASE("with perfect cancelation the relay's own signal at the destination raises arrivals") {
  const NetworkParams p = section6(4, 0.6, 0.0);
  const DriftDistribution d = n_user_drift(build_success_table(p), p);
  CHECK(d.lambda1 > d.lambda0);
}

TEST_CASE("drift model errors") {
  const NetworkParams p3 = section6(3, 0.6, 1e-8);
  CHECK_THROWS_AS(two_user_drift(build_success_table(p3), p3), WrongModelError);
  const NetworkParams big = section6(kMaxEnumerationUsers + 1, 0.6, 1e-8);
  CHECK_THROWS_AS(enumerate_drift(big), ResourceError);
}
