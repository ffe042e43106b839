#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"
#include "qnlearn/ctmc.hpp"
#include "qnlearn/trace.hpp"

using namespace qnlearn;
using qnlearn::test::load_balancer;
using qnlearn::test::vec;

namespace {

QnModel two_station(double mu0, double mu1, int s0 = 1, int s1 = 1) {
  QnModel m;
  m.servers = {s0, s1};
  m.rates = vec({mu0, mu1});
  m.routing = Matrix(2, 2);
  m.routing << 0.0, 1.0,
               1.0, 0.0;
  return m;
}

int total(const std::vector<int>& x) { return std::accumulate(x.begin(), x.end(), 0); }

}  // namespace

TEST_CASE("GridSpec from_horizon and validate") {
  const auto g = GridSpec::from_horizon(10.0, 0.01);
  CHECK(g.points == 1001);
  CHECK(g.horizon() == doctest::Approx(10.0));
  CHECK_THROWS_AS(GridSpec::from_horizon(0.015, 0.01), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{0.0, 10}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{0.01, 1}.validate()), std::invalid_argument);
}

TEST_CASE("misplaced_pct counts one misplaced client out of ten as 10%") {
  RowMatrix a(2, 2), b(2, 2);
  a << 5, 5,
       5, 5;
  b << 5, 5,
       4, 6;
  CHECK(misplaced_pct(a, b, 10.0) == doctest::Approx(10.0));
  // row 0 is ignored
  b(0, 0) = 0;
  CHECK(misplaced_pct(a, b, 10.0) == doctest::Approx(10.0));
}

TEST_CASE("misplaced_pct propagates NaN") {
  RowMatrix a = RowMatrix::Constant(4, 2, 1.0);
  RowMatrix b = a;
  b(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(std::isnan(misplaced_pct(a, b, 2.0)));
}

TEST_CASE("make_trace and conservation_violations") {
  RowMatrix s(3, 2);
  s << 3, 1,
       2, 2,
       1, 2;
  const auto t = make_trace(0.1, s);
  CHECK(t.population == 4.0);
  CHECK(t.points() == 3);
  CHECK(t.stations() == 2);
  CHECK(conservation_violations(t, 1e-9) == std::vector<int>{2});
  CHECK(conservation_violations(t, 1.5).empty());
}

TEST_CASE("Dataset::validate rejects mismatched traces") {
  Dataset d;
  d.servers = {1, 1};
  d.dt = 0.1;
  d.points = 3;
  d.traces.push_back(make_trace(0.1, RowMatrix::Constant(3, 2, 1.0)));
  d.names.push_back("a.csv");
  CHECK_NOTHROW(d.validate());
  d.traces.push_back(make_trace(0.1, RowMatrix::Constant(4, 2, 1.0)));
  d.names.push_back("b.csv");
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d.traces.back() = make_trace(0.1, RowMatrix::Constant(3, 3, 1.0));
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
}

TEST_CASE("transition_rates on the load balancer") {
  const auto m = load_balancer();
  std::vector<int> x{1, 0, 0};
  auto r = transition_rates(m, x);
  REQUIRE(r.size() == 2);
  CHECK(r[0].event == JumpEvent{0, 1});
  CHECK(r[0].rate == doctest::Approx(0.5));
  CHECK(r[1].event == JumpEvent{0, 2});
  CHECK(r[1].rate == doctest::Approx(0.5));

  // 31 clients on 30 servers: only 30 in service
  x = {0, 31, 0};
  r = transition_rates(m, x);
  REQUIRE(r.size() == 1);
  CHECK(r[0].event == JumpEvent{1, 0});
  CHECK(r[0].rate == doctest::Approx(330.0));

  x = {0, 0, 0};
  CHECK(transition_rates(m, x).empty());
}

TEST_CASE("SamplePath::at and left-continuous grid sampling") {
  SamplePath p;
  p.times = {0.0, 0.015, 0.02};
  p.states = {{2, 0}, {1, 1}, {0, 2}};
  p.horizon = 0.05;
  CHECK(p.at(0.0) == std::vector<int>{2, 0});
  CHECK(p.at(0.0149) == std::vector<int>{2, 0});
  CHECK(p.at(0.015) == std::vector<int>{1, 1});
  CHECK(p.at(0.05) == std::vector<int>{0, 2});

  const auto g = sample_on_grid(p, {0.01, 4});
  REQUIRE(g.rows() == 4);
  CHECK(g(0, 0) == 2);
  CHECK(g(1, 0) == 2);
  // an event exactly on a grid time is already applied there
  CHECK(g(2, 0) == 0);
  CHECK(g(3, 0) == 0);
}

TEST_CASE("simulate_ssa is reproducible and conserves clients") {
  const auto m = load_balancer();
  const std::vector<int> x0{20, 10, 5};
  const auto a = simulate_ssa(m, x0, 5.0, 99);
  const auto b = simulate_ssa(m, x0, 5.0, 99);
  CHECK(a.times == b.times);
  CHECK(a.states == b.states);
  CHECK(simulate_ssa(m, x0, 5.0, 100).times != a.times);

  REQUIRE(a.times.size() > 10);
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(total(a.states[k]) == 35);
    for (int v : a.states[k]) CHECK(v >= 0);
    if (k > 0) {
      CHECK(a.times[k] > a.times[k - 1]);
      CHECK(a.times[k] <= 5.0);
      // exactly one client moves per event
      int moved = 0;
      for (std::size_t i = 0; i < 3; ++i) moved += std::abs(a.states[k][i] - a.states[k - 1][i]);
      CHECK(moved == 2);
    }
  }
}

TEST_CASE("simulate_ssa with no enabled events stays put") {
  auto m = two_station(1.0, 1.0);
  m.rates[0] = 0.0;
  const std::vector<int> x0{3, 0};
  const auto p = simulate_ssa(m, x0, 10.0, 1);
  CHECK(p.times.size() == 1);
  CHECK(p.at(10.0) == x0);
}

TEST_CASE("simulate_ssa time average matches the product-form stationary mean") {
  // Two stations, one server each, N = 2. Stationary weights of x0 = 0, 1, 2
  // are (1/mu1)^(2-x0) (1/mu0)^x0 up to a constant.
  const auto m = two_station(1.0, 2.0);
  const std::vector<int> x0{2, 0};
  const double w0 = 0.25, w1 = 0.5, w2 = 1.0;
  const double expected = (w1 + 2.0 * w2) / (w0 + w1 + w2);

  const double horizon = 20000.0;
  const auto p = simulate_ssa(m, x0, horizon, 5);
  double area = 0.0;
  for (std::size_t k = 0; k < p.times.size(); ++k) {
    const double end = k + 1 < p.times.size() ? p.times[k + 1] : horizon;
    area += p.states[k][0] * (end - p.times[k]);
  }
  CHECK(std::abs(area / horizon - expected) < 0.03);
}

TEST_CASE("ensemble_average single replication equals one SSA path on the grid") {
  const auto m = load_balancer();
  const std::vector<int> x0{12, 3, 4};
  const GridSpec grid{0.01, 301};
  const auto avg = ensemble_average(m, x0, {1, grid, 42, 1});
  const auto path = simulate_ssa(m, x0, grid.horizon(), replication_seed(42, 0));
  CHECK(avg.samples == sample_on_grid(path, grid));
  CHECK(avg.population == 19.0);
}

TEST_CASE("ensemble_average does not depend on the thread count") {
  const auto m = load_balancer();
  const std::vector<int> x0{30, 10, 0};
  const GridSpec grid{0.01, 201};
  const auto one = ensemble_average(m, x0, {37, grid, 7, 1});
  const auto three = ensemble_average(m, x0, {37, grid, 7, 3});
  CHECK(one.samples == three.samples);
  CHECK(replication_seed(7, 0) != replication_seed(7, 1));
}

TEST_CASE("ensemble_average conserves the population at every grid point") {
  const auto m = load_balancer();
  const std::vector<int> x0{25, 0, 15};
  const auto t = ensemble_average(m, x0, {50, {0.02, 101}, 3, 1});
  CHECK(conservation_violations(t, 1e-9).empty());
  CHECK(t.samples.row(0) == t.samples.row(0));
  CHECK(t.samples(0, 0) == 25.0);
}

TEST_CASE("ensemble_average of the alternating pair mixes to one half") {
  const auto m = two_station(1.0, 1.0);
  const std::vector<int> x0{1, 0};
  const auto t = ensemble_average(m, x0, {10000, GridSpec::from_horizon(20.0, 0.1), 8, 1});
  CHECK(std::abs(t.samples(t.points() - 1, 0) - 0.5) < 0.03);
}

TEST_CASE("ensemble_average rejects bad input") {
  const auto m = load_balancer();
  std::vector<int> bad{-1, 2, 0};
  CHECK_THROWS_AS(ensemble_average(m, bad, {1, {0.01, 10}, 0, 1}), std::invalid_argument);
  std::vector<int> short_x{1, 2};
  CHECK_THROWS_AS(ensemble_average(m, short_x, {1, {0.01, 10}, 0, 1}), std::invalid_argument);
  std::vector<int> ok{1, 2, 0};
  CHECK_THROWS_AS(ensemble_average(m, ok, {0, {0.01, 10}, 0, 1}), std::invalid_argument);
}
