#include "qnlearn/experiment.hpp"

#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qnlearn/ctmc.hpp"
#include "qnlearn/fluid.hpp"
#include "qnlearn/random.hpp"

namespace qnlearn {
namespace {

Vector to_vector(const std::vector<int>& v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

Trace truth_trace(const QnModel& model, const std::vector<int>& initial, int replications,
                  const GridSpec& grid, std::uint64_t seed, int threads) {
  return ensemble_average(model, initial, {replications, grid, seed, threads});
}

}  // namespace

std::vector<std::vector<int>> sample_populations(int count, int stations,
                                                 std::pair<int, int> range, std::uint64_t seed) {
  if (count < 0 || stations < 1) throw std::invalid_argument("sample_populations: bad sizes");
  if (range.first < 0 || range.second < range.first || range.second == 0) {
    throw std::invalid_argument("sample_populations: range must satisfy 0 <= lo <= hi, hi > 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(range.first, range.second);
  std::vector<std::vector<int>> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    std::vector<int> x(stations);
    for (auto& v : x) v = dist(rng);
    if (std::accumulate(x.begin(), x.end(), 0) > 0) out.push_back(std::move(x));
  }
  return out;
}

Dataset generate_dataset(const GenerateSpec& spec) {
  require_valid(spec.model);
  spec.grid.validate();
  if (spec.trace_count < 1) throw std::invalid_argument("generate: need at least one trace");
  if (spec.replications < 1) throw std::invalid_argument("generate: need R >= 1");

  Dataset d;
  d.servers = spec.model.servers;
  d.dt = spec.grid.dt;
  d.points = spec.grid.points;
  const auto populations = sample_populations(spec.trace_count, spec.model.stations(),
                                              spec.population_range,
                                              derive_seed(spec.seed, "populations"));
  for (int i = 0; i < spec.trace_count; ++i) {
    d.traces.push_back(truth_trace(spec.model, populations[i], spec.replications, spec.grid,
                                   derive_seed(spec.seed, "generation", i), spec.threads));
    char name[32];
    std::snprintf(name, sizeof name, "trace_%03d.csv", i);
    d.names.emplace_back(name);
  }
  return d;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed, const Logger& log) {
  if (cfg.models < 1) throw std::invalid_argument("benchmark: need at least one model");
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };

  BenchmarkResult result;
  for (int k = 0; k < cfg.models; ++k) {
    BenchmarkModel bm;
    RandomQnConfig shape = cfg.model_shape;
    shape.seed = derive_seed(seed, "model", k);
    bm.truth = random_model(shape);

    GenerateSpec gen;
    gen.model = bm.truth;
    gen.trace_count = cfg.train_traces;
    gen.population_range = cfg.population_range;
    gen.replications = cfg.replications;
    gen.grid = cfg.grid;
    gen.seed = derive_seed(seed, "dataset", k);
    gen.threads = cfg.threads;
    say("model " + std::to_string(k + 1) + ": generating " + std::to_string(cfg.train_traces) +
        " traces");
    const Dataset data = generate_dataset(gen);

    TrainConfig tc = cfg.train;
    tc.init_seed = derive_seed(seed, "init", k);
    bm.report = train(data, bm.truth.servers, tc);
    say("model " + std::to_string(k + 1) + ": trained in " +
        std::to_string(bm.report.iterations) + " iterations, validation err " +
        std::to_string(bm.report.final_validation_err_pct) + "%");
    const QnModel& learned = bm.report.learned_model;

    const std::uint64_t truth_seed = derive_seed(seed, "truth", k);
    const auto unseen = sample_populations(cfg.population_whatifs, shape.stations,
                                           cfg.whatif_population_range,
                                           derive_seed(seed, "whatif-population", k));
    for (int i = 0; i < cfg.population_whatifs; ++i) {
      const Trace truth = truth_trace(bm.truth, unseen[i], cfg.replications, cfg.grid,
                                      derive_seed(truth_seed, "population", i), cfg.threads);
      const Trace pred = forward_trajectory(learned, to_vector(unseen[i]), cfg.grid);
      bm.population.push_back({unseen[i], truth.population, prediction_error(pred, truth)});
    }
    say("model " + std::to_string(k + 1) + ": population what-ifs done");

    const auto probes = sample_populations(cfg.concurrency_whatifs, shape.stations,
                                           cfg.population_range,
                                           derive_seed(seed, "whatif-concurrency", k));
    for (int i = 0; i < cfg.concurrency_whatifs; ++i) {
      ConcurrencyWhatIf w;
      w.initial = probes[i];
      const Vector x0 = to_vector(probes[i]);
      w.shift = shift_bottleneck(bm.truth, x0, cfg.grid.dt, cfg.server_increment);

      const Trace before = truth_trace(bm.truth, probes[i], cfg.replications, cfg.grid,
                                       derive_seed(truth_seed, "concurrency-before", i),
                                       cfg.threads);
      w.population = before.population;
      w.original_err_pct = prediction_error(forward_trajectory(learned, x0, cfg.grid), before);

      QnModel truth_after = bm.truth;
      truth_after.servers = w.shift.servers;
      QnModel learned_after = learned;
      learned_after.servers = w.shift.servers;
      const Trace after = truth_trace(truth_after, probes[i], cfg.replications, cfg.grid,
                                      derive_seed(truth_seed, "concurrency-after", i),
                                      cfg.threads);
      w.err_pct = prediction_error(forward_trajectory(learned_after, x0, cfg.grid), after);
      bm.concurrency.push_back(std::move(w));
    }
    say("model " + std::to_string(k + 1) + ": concurrency what-ifs done");
    result.models.push_back(std::move(bm));
  }
  return result;
}

}  // namespace qnlearn
