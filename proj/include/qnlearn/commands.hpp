#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qnlearn/experiment.hpp"
#include "qnlearn/io.hpp"
#include "qnlearn/learner.hpp"
#include "qnlearn/trace.hpp"

// Disk-facing verbs behind the qnlearn CLI. Every verb writes into
// `out_dir`; verbs that draw random numbers also write provenance.json
// with the seed and configuration they ran with.
namespace qnlearn::commands {

namespace fs = std::filesystem;

struct Common {
  std::uint64_t seed = 0;
  fs::path out_dir = ".";
};

/// Parses a training config; unknown keys are rejected. init_seed = `seed`.
TrainConfig train_config_from_json(const std::string& text, std::uint64_t seed);

/// Generation config:
/// `{"model": "path" | "random_model": {"M", "rate_range", "server_range"},
///   "traces", "population_range", "replications", "dt", "T" | "H", "threads"}`.
/// Relative model paths resolve against `base_dir`.
GenerateSpec generate_spec_from_json(const std::string& text, std::uint64_t seed,
                                     const fs::path& base_dir = ".");

BenchmarkConfig benchmark_config_from_json(const std::string& text);

/// Writes manifest.json, trace CSVs, model.json (ground truth) and
/// provenance.json. Returns the manifest path.
fs::path generate(const fs::path& config_path, const Common& common);

/// Ensemble-averaged SSA trace from x0 written to `simulated.csv`.
fs::path simulate(const fs::path& model_path, const std::vector<int>& initial, int replications,
                  const GridSpec& grid, const Common& common, int threads = 1);

struct TrainOutcome {
  TrainReport report;
  fs::path report_path;
  fs::path model_path;
};

/// Validates everything before writing; on error nothing is written.
TrainOutcome train(const fs::path& manifest_path, std::optional<std::vector<int>> servers,
                   const std::optional<fs::path>& config_path, const Common& common);

fs::path predict(const fs::path& model_path, const std::vector<double>& initial,
                 const GridSpec& grid, const Common& common);

struct WhatIfOutcome {
  fs::path prediction_path;
  std::optional<double> err_pct;
  std::optional<fs::path> comparison_path;
};

/// Grid comes from the scenario file, else from the ground truth trace.
WhatIfOutcome whatif(const fs::path& model_path, const fs::path& scenario_path,
                     const std::optional<fs::path>& ground_truth, const Common& common);

struct EvalOutcome {
  std::vector<io::ScatterPoint> points;
  ErrorSummary summary;
};

/// Scores a model on every trace of a dataset: scatter.csv (N,err_pct,M),
/// summary.json and one comparison CSV per trace under comparisons/.
EvalOutcome eval(const fs::path& model_path, const fs::path& manifest_path, const Common& common);

/// Writes the self-loop transformed model as model_selfloop.json.
fs::path transform_selfloop(const fs::path& model_path, const std::vector<double>& pi,
                            const Common& common);

/// Runs the synthetic protocol; writes per-model learned/true models,
/// population and concurrency scatter CSVs and summaries.
BenchmarkResult benchmark(const fs::path& config_path, const Common& common, const Logger& log = {});

/// Validates measured trace CSVs and writes a manifest next to copies of them.
fs::path ingest(const std::vector<fs::path>& files, const std::vector<int>& servers, double dt,
                int points, const Common& common);

}  // namespace qnlearn::commands
