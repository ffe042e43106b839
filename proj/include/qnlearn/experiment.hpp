#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qnlearn/analysis.hpp"
#include "qnlearn/learner.hpp"
#include "qnlearn/model.hpp"
#include "qnlearn/trace.hpp"

namespace qnlearn {

using Logger = std::function<void(const std::string&)>;

/// `count` initial population vectors, each station uniform in `range`.
/// All-zero vectors are redrawn.
std::vector<std::vector<int>> sample_populations(int count, int stations,
                                                 std::pair<int, int> range, std::uint64_t seed);

struct GenerateSpec {
  QnModel model;
  int trace_count = 100;
  std::pair<int, int> population_range{0, 40};
  int replications = 500;
  GridSpec grid{0.01, 1001};
  std::uint64_t seed = 0;
  int threads = 1;
};

/// One ensemble-averaged trace per sampled initial population.
Dataset generate_dataset(const GenerateSpec& spec);

struct BenchmarkConfig {
  int models = 5;
  RandomQnConfig model_shape;  // seed ignored, derived per model
  int train_traces = 100;
  std::pair<int, int> population_range{0, 40};
  int replications = 500;
  GridSpec grid{0.01, 1001};
  TrainConfig train;  // init_seed ignored, derived per model
  int population_whatifs = 100;
  std::pair<int, int> whatif_population_range{0, 40};
  int concurrency_whatifs = 5;
  int server_increment = 20;
  int threads = 1;
};

struct PopulationWhatIf {
  std::vector<int> initial;
  double population = 0.0;
  double err_pct = 0.0;
};

struct ConcurrencyWhatIf {
  std::vector<int> initial;
  double population = 0.0;
  BottleneckShift shift;
  double original_err_pct = 0.0;  // learned vs truth under the original servers
  double err_pct = 0.0;           // learned vs truth under the new servers
};

struct BenchmarkModel {
  QnModel truth;
  TrainReport report;
  std::vector<PopulationWhatIf> population;
  std::vector<ConcurrencyWhatIf> concurrency;
};

struct BenchmarkResult {
  std::vector<BenchmarkModel> models;
};

/// Synthetic protocol: random models, averaged SSA training traces,
/// training, then what-if over unseen populations and over server counts
/// that move the bottleneck. Deterministic given `seed`.
BenchmarkResult run_benchmark(const BenchmarkConfig& cfg, std::uint64_t seed,
                              const Logger& log = {});

}  // namespace qnlearn
