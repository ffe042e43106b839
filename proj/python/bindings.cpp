#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qnlearn/analysis.hpp"
#include "qnlearn/ctmc.hpp"
#include "qnlearn/experiment.hpp"
#include "qnlearn/fluid.hpp"
#include "qnlearn/io.hpp"
#include "qnlearn/learner.hpp"
#include "qnlearn/model.hpp"

namespace py = pybind11;
using namespace qnlearn;

namespace {

Trace trace_from_array(const RowMatrix& samples, double dt) { return make_trace(dt, samples); }

}  // namespace

PYBIND11_MODULE(_qnlearn, m) {
  m.doc() = "Learn closed queuing-network models from queue-length traces";

  py::class_<QnModel>(m, "QnModel")
      .def(py::init([](std::vector<int> servers, Vector rates, Matrix routing) {
             return QnModel{std::move(servers), std::move(rates), std::move(routing)};
           }),
           py::arg("servers"), py::arg("rates"), py::arg("routing"))
      .def_readwrite("servers", &QnModel::servers)
      .def_readwrite("rates", &QnModel::rates)
      .def_readwrite("routing", &QnModel::routing)
      .def_property_readonly("stations", &QnModel::stations)
      .def("to_json", [](const QnModel& q) { return io::model_to_json(q); })
      .def_static("from_json", &io::model_from_json, py::arg("text"))
      .def("__repr__", [](const QnModel& q) {
        return "<QnModel M=" + std::to_string(q.stations()) + ">";
      });

  py::class_<Violation>(m, "Violation")
      .def_readonly("kind", &Violation::kind)
      .def_readonly("station", &Violation::station)
      .def_readonly("message", &Violation::message)
      .def("__repr__", [](const Violation& v) { return "<Violation " + v.message + ">"; });

  m.def("validate_model", &validate_model, py::arg("model"), py::arg("allow_self_loops") = false);

  m.def(
      "random_model",
      [](int stations, std::pair<double, double> rate_range, std::pair<int, int> server_range,
         std::uint64_t seed) {
        return random_model({stations, rate_range, server_range, seed});
      },
      py::arg("stations") = 5, py::arg("rate_range") = std::pair{4.0, 30.0},
      py::arg("server_range") = std::pair{15, 30}, py::arg("seed") = 0);

  m.def(
      "selfloop_transform",
      [](const Matrix& routing, const Vector& rates, const Vector& pi) {
        const auto r = selfloop_transform(routing, rates, {pi});
        return py::make_tuple(r.routing, r.rates);
      },
      py::arg("routing"), py::arg("rates"), py::arg("pi"),
      "Returns (routing, rates) with the requested self-loop probabilities.");

  py::class_<Trace>(m, "Trace")
      .def(py::init(&trace_from_array), py::arg("samples"), py::arg("dt"))
      .def_readonly("dt", &Trace::dt)
      .def_readonly("samples", &Trace::samples)
      .def_readonly("population", &Trace::population)
      .def_property_readonly("points", &Trace::points)
      .def_property_readonly("stations", &Trace::stations)
      .def("to_csv", [](const Trace& t) { return io::trace_to_csv(t); })
      .def_static("from_csv", &io::trace_from_csv, py::arg("text"), py::arg("dt") = py::none());

  m.def(
      "simulate",
      [](const QnModel& model, std::vector<int> initial, double dt, int points, int replications,
         std::uint64_t seed, int threads) {
        py::gil_scoped_release release;
        return ensemble_average(model, initial, {replications, {dt, points}, seed, threads});
      },
      py::arg("model"), py::arg("initial"), py::arg("dt") = 0.01, py::arg("points") = 1001,
      py::arg("replications") = 500, py::arg("seed") = 0, py::arg("threads") = 1,
      "Ensemble-averaged stochastic simulation on a uniform grid.");

  m.def(
      "predict",
      [](const QnModel& model, const Vector& initial, double dt, int points) {
        return forward_trajectory(model, initial, {dt, points});
      },
      py::arg("model"), py::arg("initial"), py::arg("dt") = 0.01, py::arg("points") = 1001,
      "Fluid trajectory from an initial population.");

  m.def("loss", &loss, py::arg("model"), py::arg("trace"));
  m.def("prediction_error", &prediction_error, py::arg("predicted"), py::arg("ground_truth"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("adam_beta1", &TrainConfig::adam_beta1)
      .def_readwrite("adam_beta2", &TrainConfig::adam_beta2)
      .def_readwrite("adam_epsilon", &TrainConfig::adam_epsilon)
      .def_readwrite("patience_iters", &TrainConfig::patience_iters)
      .def_readwrite("min_improvement_pct", &TrainConfig::min_improvement_pct)
      .def_readwrite("max_iters", &TrainConfig::max_iters)
      .def_readwrite("init_seed", &TrainConfig::init_seed)
      .def_readwrite("train_fraction", &TrainConfig::train_fraction)
      .def_readwrite("threads", &TrainConfig::threads);

  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("learned_model", &TrainReport::learned_model)
      .def_readonly("iterations", &TrainReport::iterations)
      .def_readonly("best_iteration", &TrainReport::best_iteration)
      .def_readonly("final_validation_err_pct", &TrainReport::final_validation_err_pct)
      .def_readonly("train_indices", &TrainReport::train_indices)
      .def_readonly("validation_indices", &TrainReport::validation_indices)
      .def_readonly("validation_errors", &TrainReport::validation_errors)
      .def_property_readonly("stop_reason", [](const TrainReport& r) { return to_string(r.stop_reason); })
      .def_property_readonly("history", [](const TrainReport& r) {
        py::list out;
        for (const auto& h : r.history) {
          out.append(py::make_tuple(h.iteration, h.train_loss, h.validation_err, h.best_validation_err));
        }
        return out;
      })
      .def("to_json", [](const TrainReport& r) { return io::report_to_json(r); });

  m.def(
      "train",
      [](const std::vector<Trace>& traces, const std::vector<int>& servers, const TrainConfig& cfg) {
        if (traces.empty()) throw std::invalid_argument("train: no traces");
        Dataset d;
        d.servers = servers;
        d.dt = traces.front().dt;
        d.points = traces.front().points();
        d.traces = traces;
        for (std::size_t i = 0; i < traces.size(); ++i) d.names.push_back(std::to_string(i));
        py::gil_scoped_release release;
        return train(d, servers, cfg);
      },
      py::arg("traces"), py::arg("servers"), py::arg("config") = TrainConfig{},
      "Learns routing and service rates from traces sharing one grid.");

  m.def(
      "whatif",
      [](const QnModel& model, const Vector& initial, std::optional<std::vector<int>> servers,
         std::optional<Matrix> routing, std::optional<double> population_scale, double dt,
         int points) {
        return whatif({model, initial, std::move(servers), std::move(routing), population_scale},
                      {dt, points});
      },
      py::arg("model"), py::arg("initial"), py::arg("servers") = py::none(),
      py::arg("routing") = py::none(), py::arg("population_scale") = py::none(),
      py::arg("dt") = 0.01, py::arg("points") = 1001);

  m.def(
      "find_bottleneck",
      [](const QnModel& model, const Vector& initial, double dt) {
        return find_bottleneck(model, initial, dt);
      },
      py::arg("model"), py::arg("initial"), py::arg("dt") = 0.01,
      "0-based station with the largest steady-state queue per server.");

  m.def(
      "steady_state",
      [](const QnModel& model, const Vector& initial, double dt) {
        const auto s = steady_state(model, initial, dt);
        return py::make_tuple(s.queue_lengths, s.converged);
      },
      py::arg("model"), py::arg("initial"), py::arg("dt") = 0.01);

  m.def(
      "load_dataset",
      [](const std::filesystem::path& manifest) {
        const auto d = io::load_dataset(manifest);
        return py::make_tuple(d.traces, d.servers);
      },
      py::arg("manifest"), "Returns (traces, servers).");
}
