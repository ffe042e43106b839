#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "qnlearn/fluid.hpp"
#include "qnlearn/io.hpp"

using namespace qnlearn;
using qnlearn::test::load_balancer;
using qnlearn::test::scratch_dir;
using qnlearn::test::vec;

TEST_CASE("model JSON has a fixed key order and round-trips byte for byte") {
  RandomQnConfig cfg;
  cfg.stations = 4;
  cfg.seed = 3;
  const auto m = random_model(cfg);
  const auto text = io::model_to_json(m);
  CHECK(text.find("\"M\": 4") < text.find("\"s\""));
  CHECK(text.find("\"s\"") < text.find("\"mu\""));
  CHECK(text.find("\"mu\"") < text.find("\"P\""));

  const auto back = io::model_from_json(text);
  CHECK(back.servers == m.servers);
  CHECK(back.rates == m.rates);
  CHECK(back.routing == m.routing);
  CHECK(io::model_to_json(back) == text);
}

TEST_CASE("model_from_json checks shape") {
  CHECK_THROWS_AS(io::model_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(io::model_from_json(R"({"M": 2, "s": [1], "mu": [1, 1], "P": [[0,1],[1,0]]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(io::model_from_json(R"({"M": 2, "s": [1, 1], "mu": [1, 1], "P": [[0,1]]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(io::model_from_json(R"({"M": 2, "s": [1, 1], "mu": [1, 1]})"),
                  std::invalid_argument);
  // invariants beyond shape are left to validate_model
  const auto m = io::model_from_json(R"({"M": 2, "s": [1, 1], "mu": [1, 1], "P": [[0.5,0.4],[1,0]]})");
  CHECK_FALSE(validate_model(m).empty());
}

TEST_CASE("format_real keeps full precision and refuses non-finite values") {
  const double x = 0.1 + 0.2;
  CHECK(std::stod(io::format_real(x)) == x);
  CHECK(io::format_real(2.0) == "2");
  CHECK_THROWS_AS(io::format_real(std::numeric_limits<double>::infinity()), std::invalid_argument);
}

TEST_CASE("trace CSV round-trips and reads dt from the time column") {
  const auto t = forward_trajectory(load_balancer(), vec({13.0, 4.0, 1.0}), {0.01, 40});
  const auto csv = io::trace_to_csv(t);
  CHECK(csv.rfind("t,x1,x2,x3\n", 0) == 0);
  const auto back = io::trace_from_csv(csv);
  CHECK(back.dt == doctest::Approx(0.01));
  CHECK(back.samples == t.samples);
  CHECK(back.population == 18.0);
  CHECK(io::trace_to_csv(back) == csv);
}

TEST_CASE("trace_from_csv rejects malformed files") {
  CHECK_THROWS_AS(io::trace_from_csv(""), std::invalid_argument);
  CHECK_THROWS_AS(io::trace_from_csv("time,a,b\n0,1,1\n0.1,1,1\n"), std::invalid_argument);
  CHECK_THROWS_AS(io::trace_from_csv("t,x1,x2\n0,1,1\n"), std::invalid_argument);
  CHECK_THROWS_AS(io::trace_from_csv("t,x1,x2\n0,1,1\n0.1,1\n"), std::invalid_argument);
  CHECK_THROWS_AS(io::trace_from_csv("t,x1,x2\n0,1,1\n0.1,1,1\n0.3,1,1\n"), std::invalid_argument);
  CHECK_THROWS_AS(io::trace_from_csv("t,x1,x2\n0,1,1\n0.1,1,abc\n"), std::invalid_argument);
  // an explicit dt must agree with the time column
  CHECK_THROWS_AS(io::trace_from_csv("t,x1,x2\n0,1,1\n7,2,0\n", 0.5), std::invalid_argument);
  const auto t = io::trace_from_csv("t,x1,x2\n0,1,1\n0.5,2,0\n", 0.5);
  CHECK(t.dt == 0.5);
}

TEST_CASE("dataset save and load") {
  const auto dir = scratch_dir("dataset");
  Dataset d;
  d.servers = {1000, 30, 25};
  d.dt = 0.01;
  d.points = 30;
  d.traces.push_back(forward_trajectory(load_balancer(), vec({10.0, 0.0, 0.0}), {0.01, 30}));
  d.traces.push_back(forward_trajectory(load_balancer(), vec({20.0, 5.0, 0.0}), {0.01, 30}));
  d.names = {"a.csv", "b.csv"};
  io::save_dataset(d, dir);
  CHECK(std::filesystem::exists(dir / "a.csv"));
  const auto back = io::load_dataset(dir / "manifest.json");
  CHECK(back.servers == d.servers);
  CHECK(back.points == 30);
  CHECK(back.names == d.names);
  REQUIRE(back.traces.size() == 2);
  CHECK(back.traces[1].samples == d.traces[1].samples);
  CHECK(back.traces[1].population == 25.0);
}

TEST_CASE("scenario_from_json reads overrides and grid") {
  const auto base = load_balancer();
  auto sf = io::scenario_from_json(R"({"x0": [49, 47, 0], "s": [1000, 6, 1], "dt": 0.01, "H": 11})", base);
  CHECK(sf.scenario.initial == vec({49.0, 47.0, 0.0}));
  CHECK(*sf.scenario.servers == std::vector<int>{1000, 6, 1});
  REQUIRE(sf.grid);
  CHECK(sf.grid->points == 11);

  sf = io::scenario_from_json(R"({"x0": [1, 0, 0], "k": 3})", base);
  CHECK(sf.scenario.population_scale == 3.0);
  CHECK_FALSE(sf.grid);
  CHECK_FALSE(sf.scenario.routing);
  CHECK_THROWS_AS(io::scenario_from_json(R"({"s": [1, 1, 1]})", base), std::invalid_argument);
}

TEST_CASE("report JSON carries the history and nulls non-finite values") {
  TrainReport r;
  r.learned_model = load_balancer();
  r.history = {{0, 5.0, 6.0, 6.0}, {1, 4.0, std::numeric_limits<double>::quiet_NaN(), 6.0}};
  r.iterations = 1;
  r.final_validation_err_pct = 6.0;
  const auto text = io::report_to_json(r);
  CHECK(text.find("\"stop_reason\": \"max_iters\"") != std::string::npos);
  CHECK(text.find("null") != std::string::npos);
  CHECK(text.find("\"loss_history\"") != std::string::npos);
}

TEST_CASE("comparison and scatter CSV layouts") {
  const auto t = forward_trajectory(load_balancer(), vec({2.0, 0.0, 0.0}), {0.5, 2});
  const auto c = io::comparison_csv(t, t);
  CHECK(c.rfind("t,measured_1,measured_2,measured_3,predicted_1,predicted_2,predicted_3\n", 0) == 0);
  CHECK(io::scatter_csv({{10.0, 1.5, 3}}) == "N,err_pct,M\n10,1.5,3\n");
}

namespace {

void write(const std::filesystem::path& p, const std::string& s) { io::write_file(p, s); }

}  // namespace

TEST_CASE("ingest accepts conserving traces") {
  const auto dir = scratch_dir("ingest_ok");
  write(dir / "a.csv", "t,x1,x2\n0,3,1\n0.1,2,2\n0.2,1.9995,2.0\n");
  write(dir / "b.csv", "t,x1,x2\n0,0,5\n0.1,1,4\n0.2,2,3\n");
  const auto d = io::ingest_external_traces({dir / "a.csv", dir / "b.csv"}, {2, 2}, 0.1, 3);
  CHECK(d.traces.size() == 2);
  CHECK(d.traces[1].population == 5.0);
  CHECK(d.names[0] == "a.csv");
}

TEST_CASE("ingest rejects conservation breaks and names the rows") {
  const auto dir = scratch_dir("ingest_bad");
  write(dir / "a.csv", "t,x1,x2\n0,3,1\n0.1,2,2\n0.2,3,2\n0.3,2,2\n0.4,-1,5\n");
  try {
    io::ingest_external_traces({dir / "a.csv"}, {2, 2}, 0.1, 5);
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("a.csv") != std::string::npos);
    CHECK(msg.find("rows violate conservation: 3, 5") != std::string::npos);
  }
}

TEST_CASE("ingest rejects shape mismatches and empty input") {
  const auto dir = scratch_dir("ingest_shape");
  write(dir / "a.csv", "t,x1,x2\n0,3,1\n0.1,2,2\n");
  CHECK_THROWS_AS(io::ingest_external_traces({dir / "a.csv"}, {2, 2, 2}, 0.1, 2), std::invalid_argument);
  CHECK_THROWS_AS(io::ingest_external_traces({dir / "a.csv"}, {2, 2}, 0.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(io::ingest_external_traces({}, {2, 2}, 0.1, 2), std::invalid_argument);
  CHECK_THROWS_AS(io::ingest_external_traces({dir / "missing.csv"}, {2, 2}, 0.1, 2), std::runtime_error);
}
