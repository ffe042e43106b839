#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "qnlearn/fluid.hpp"
#include "qnlearn/model.hpp"

using namespace qnlearn;
using qnlearn::test::load_balancer;
using qnlearn::test::vec;

TEST_CASE("validate_model accepts the load balancer") {
  CHECK(validate_model(load_balancer()).empty());
}

TEST_CASE("validate_model reports each failed invariant") {
  auto m = load_balancer();
  m.routing(0, 0) = 0.5;
  m.routing(0, 1) = 0.4;
  m.routing(0, 2) = 0.0;
  auto v = validate_model(m);
  // row 1 sums to 0.9 and carries a self loop
  REQUIRE(v.size() == 2);
  CHECK(v[0].message == "row 1 sums to 0.9");
  CHECK(v[0].station == 0);
  CHECK(v[1].kind == "self_loop");

  m = load_balancer();
  m.rates = vec({-1.0, 2.0, 3.0});
  v = validate_model(m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].message == "mu[1] negative");

  m = load_balancer();
  m.servers[2] = 0;
  v = validate_model(m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == "servers");

  m = load_balancer();
  m.routing(1, 0) = 1.5;
  m.routing(1, 2) = -0.5;
  v = validate_model(m);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == "negative");

  m = load_balancer();
  m.rates = vec({1.0, 2.0});
  CHECK_FALSE(validate_model(m).empty());
  CHECK_THROWS_AS(require_valid(m), std::invalid_argument);
}

TEST_CASE("validate_model row-sum tolerance is 1e-9") {
  auto m = load_balancer();
  m.routing(0, 1) += 5e-10;
  CHECK(validate_model(m).empty());
  m.routing(0, 1) += 1e-9;
  CHECK_FALSE(validate_model(m).empty());
}

TEST_CASE("random_model draws within the configured ranges") {
  RandomQnConfig cfg;
  cfg.stations = 5;
  cfg.rate_range = {4.0, 30.0};
  cfg.server_range = {15, 30};
  cfg.seed = 7;
  const auto m = random_model(cfg);
  CHECK(validate_model(m).empty());
  for (int i = 0; i < 5; ++i) {
    CHECK(m.rates[i] >= 4.0);
    CHECK(m.rates[i] <= 30.0);
    CHECK(m.servers[i] >= 15);
    CHECK(m.servers[i] <= 30);
    CHECK(m.routing(i, i) == 0.0);
    for (int j = 0; j < 5; ++j) {
      if (j != i) CHECK(m.routing(i, j) > 0.0);
    }
  }

  const auto again = random_model(cfg);
  CHECK(again.servers == m.servers);
  CHECK(again.rates == m.rates);
  CHECK(again.routing == m.routing);

  cfg.seed = 8;
  CHECK(random_model(cfg).rates != m.rates);
}

TEST_CASE("random_model rejects degenerate configs") {
  RandomQnConfig cfg;
  cfg.stations = 1;
  CHECK_THROWS_AS(random_model(cfg), std::invalid_argument);
  cfg.stations = 3;
  cfg.rate_range = {0.0, 1.0};
  CHECK_THROWS_AS(random_model(cfg), std::invalid_argument);
  cfg.rate_range = {1.0, 2.0};
  cfg.server_range = {0, 3};
  CHECK_THROWS_AS(random_model(cfg), std::invalid_argument);
}

TEST_CASE("random_model output always validates") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RandomQnConfig cfg;
    cfg.stations = 2 + static_cast<int>(seed % 9);
    cfg.seed = seed;
    CHECK(validate_model(random_model(cfg)).empty());
  }
}

TEST_CASE("selfloop_transform with zero loops and pi = 0 is the identity") {
  const auto m = load_balancer();
  const auto r = selfloop_transform(m.routing, m.rates, {Vector::Zero(3)});
  CHECK(r.routing == m.routing);
  CHECK(r.rates == m.rates);
}

TEST_CASE("selfloop_transform removes a half self loop") {
  Matrix P(2, 2);
  P << 0.5, 0.5,
       1.0, 0.0;
  const Vector mu = vec({2.0, 3.0});
  const auto r = selfloop_transform(P, mu, {Vector::Zero(2)});
  CHECK(r.routing(0, 0) == 0.0);
  CHECK(r.routing(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.routing(1, 0) == 1.0);
  CHECK(r.rates[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.rates[1] == 3.0);
  // rate products are preserved
  CHECK(r.routing(0, 1) * r.rates[0] == doctest::Approx(P(0, 1) * mu[0]));
  CHECK((r.routing(0, 0) - 1.0) * r.rates[0] == doctest::Approx((P(0, 0) - 1.0) * mu[0]));
}

TEST_CASE("selfloop_transform on an absorbing row spreads 1 - pi evenly") {
  Matrix P(2, 2);
  P << 1.0, 0.0,
       1.0, 0.0;
  const auto r = selfloop_transform(P, vec({4.0, 3.0}), {vec({0.5, 0.0})});
  CHECK(r.routing(0, 0) == 0.5);
  CHECK(r.routing(0, 1) == 0.5);
  CHECK(r.rates[0] == 0.0);
}

TEST_CASE("selfloop_transform rejects bad input") {
  Matrix P(2, 2);
  P << 0.2, 0.7,
       1.0, 0.0;
  CHECK_THROWS_AS(selfloop_transform(P, vec({1.0, 1.0}), {Vector::Zero(2)}), std::invalid_argument);
  P(0, 1) = 0.8;
  CHECK_THROWS_AS(selfloop_transform(P, vec({1.0, 1.0}), {vec({1.0, 0.0})}), std::invalid_argument);
  CHECK_THROWS_AS(selfloop_transform(P, vec({-1.0, 1.0}), {Vector::Zero(2)}), std::invalid_argument);
  CHECK_THROWS_AS(selfloop_transform(P, vec({1.0}), {Vector::Zero(2)}), std::invalid_argument);
}

namespace {

// Random row-stochastic matrix with a nonzero diagonal; some rows fully absorbing.
Matrix random_looped(int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix P(m, m);
  for (int i = 0; i < m; ++i) {
    if (u(rng) < 0.1) {
      P.row(i).setZero();
      P(i, i) = 1.0;
      continue;
    }
    for (int j = 0; j < m; ++j) P(i, j) = u(rng);
    P.row(i) /= P.row(i).sum();
  }
  return P;
}

}  // namespace

TEST_CASE("property: selfloop_transform output satisfies the target invariants") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 2 + trial % 6;
    const Matrix P = random_looped(m, rng);
    Vector mu(m), pi(m);
    for (int i = 0; i < m; ++i) mu[i] = 30.0 * u(rng);
    for (int i = 0; i < m; ++i) pi[i] = 0.999 * u(rng);
    const auto r = selfloop_transform(P, mu, {pi});
    for (int k = 0; k < m; ++k) {
      CHECK(r.routing(k, k) == pi[k]);
      CHECK(std::abs(r.routing.row(k).sum() - 1.0) <= 1e-12);
      CHECK((r.routing.row(k).array() >= 0.0).all());
      CHECK(r.rates[k] >= 0.0);
    }
  }
}

TEST_CASE("property: transformed model has the same fluid trajectory") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + trial % 5;
    const Matrix P = random_looped(m, rng);
    Vector mu(m);
    std::vector<int> s(m);
    std::vector<double> x0(m);
    for (int i = 0; i < m; ++i) {
      mu[i] = 1.0 + 20.0 * u(rng);
      s[i] = 1 + static_cast<int>(20 * u(rng));
      x0[i] = std::floor(40.0 * u(rng));
    }
    const double dt = 0.002;

    // pi = 0 lands on a canonical model that forward_trajectory accepts.
    const auto canonical = selfloop_transform(P, mu, {Vector::Zero(m)});
    QnModel qn{s, canonical.rates, canonical.routing};
    REQUIRE(validate_model(qn).empty());
    const auto lib = forward_trajectory(qn, Eigen::Map<const Vector>(x0.data(), m), {dt, 200});
    const auto ref = oracle::general_euler(P, mu, s, x0, dt, 200);
    for (int h = 0; h < 200; ++h) {
      for (int k = 0; k < m; ++k) CHECK(std::abs(lib.samples(h, k) - ref[h][k]) <= 1e-10);
    }
  }
}
