#include "qnlearn/commands.hpp"

#include <cstdio>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "qnlearn/analysis.hpp"
#include "qnlearn/ctmc.hpp"
#include "qnlearn/fluid.hpp"
#include "qnlearn/io.hpp"
#include "qnlearn/random.hpp"

namespace qnlearn::commands {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string(what) + ": malformed JSON: " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw std::invalid_argument(std::string(what) + ": unknown key \"" + key + "\"");
    }
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& into, const char* what) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": bad \"" + key + "\": " + e.what());
  }
}

GridSpec grid_from(const json& j, const GridSpec& fallback, const char* what) {
  GridSpec g = fallback;
  read_opt(j, "dt", g.dt, what);
  if (j.contains("H") && j.contains("T")) {
    throw std::invalid_argument(std::string(what) + ": give either \"H\" or \"T\", not both");
  }
  if (j.contains("H")) {
    read_opt(j, "H", g.points, what);
  } else if (j.contains("T")) {
    double horizon = 0.0;
    read_opt(j, "T", horizon, what);
    g = GridSpec::from_horizon(horizon, g.dt);
  }
  g.validate();
  return g;
}

void write_provenance(const fs::path& dir, const std::string& verb, const Common& common,
                      const json& config) {
  ordered_json j;
  j["verb"] = verb;
  j["seed"] = common.seed;
  j["config"] = config;
  io::write_file(dir / "provenance.json", j.dump(2) + "\n");
}

json config_or_empty(const std::optional<fs::path>& path) {
  return path ? parse(io::read_file(*path), "config") : json::object();
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TrainConfig train_config_from_json(const std::string& text, std::uint64_t seed) {
  const json j = parse(text, "train config");
  reject_unknown(j,
                 {"learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon", "patience_iters",
                  "min_improvement_pct", "max_iters", "train_fraction", "threads"},
                 "train config");
  TrainConfig cfg;
  read_opt(j, "learning_rate", cfg.learning_rate, "train config");
  read_opt(j, "adam_beta1", cfg.adam_beta1, "train config");
  read_opt(j, "adam_beta2", cfg.adam_beta2, "train config");
  read_opt(j, "adam_epsilon", cfg.adam_epsilon, "train config");
  read_opt(j, "patience_iters", cfg.patience_iters, "train config");
  read_opt(j, "min_improvement_pct", cfg.min_improvement_pct, "train config");
  read_opt(j, "max_iters", cfg.max_iters, "train config");
  read_opt(j, "train_fraction", cfg.train_fraction, "train config");
  read_opt(j, "threads", cfg.threads, "train config");
  cfg.init_seed = seed;
  cfg.validate();
  return cfg;
}

GenerateSpec generate_spec_from_json(const std::string& text, std::uint64_t seed,
                                     const fs::path& base_dir) {
  const char* what = "generate config";
  const json j = parse(text, what);
  reject_unknown(j,
                 {"model", "random_model", "traces", "population_range", "replications", "dt",
                  "T", "H", "threads"},
                 what);
  GenerateSpec spec;
  spec.seed = seed;
  if (j.contains("model") == j.contains("random_model")) {
    throw std::invalid_argument("generate config: give exactly one of \"model\" or \"random_model\"");
  }
  if (j.contains("model")) {
    fs::path p = j.at("model").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    spec.model = io::load_model(p);
  } else {
    const json& r = j.at("random_model");
    reject_unknown(r, {"M", "rate_range", "server_range"}, "random_model");
    RandomQnConfig rc;
    read_opt(r, "M", rc.stations, what);
    read_opt(r, "rate_range", rc.rate_range, what);
    read_opt(r, "server_range", rc.server_range, what);
    rc.seed = derive_seed(seed, "model");
    spec.model = random_model(rc);
  }
  require_valid(spec.model);
  read_opt(j, "traces", spec.trace_count, what);
  read_opt(j, "population_range", spec.population_range, what);
  read_opt(j, "replications", spec.replications, what);
  read_opt(j, "threads", spec.threads, what);
  spec.grid = grid_from(j, spec.grid, what);
  if (spec.trace_count < 1) throw std::invalid_argument("generate config: traces must be >= 1");
  if (spec.replications < 1) throw std::invalid_argument("generate config: replications must be >= 1");
  return spec;
}

BenchmarkConfig benchmark_config_from_json(const std::string& text) {
  const char* what = "benchmark config";
  const json j = parse(text, what);
  reject_unknown(j,
                 {"models", "M", "rate_range", "server_range", "train_traces", "population_range",
                  "replications", "dt", "T", "H", "train", "population_whatifs",
                  "whatif_population_range", "concurrency_whatifs", "server_increment",
                  "threads"},
                 what);
  BenchmarkConfig cfg;
  read_opt(j, "models", cfg.models, what);
  read_opt(j, "M", cfg.model_shape.stations, what);
  read_opt(j, "rate_range", cfg.model_shape.rate_range, what);
  read_opt(j, "server_range", cfg.model_shape.server_range, what);
  read_opt(j, "train_traces", cfg.train_traces, what);
  read_opt(j, "population_range", cfg.population_range, what);
  read_opt(j, "replications", cfg.replications, what);
  read_opt(j, "population_whatifs", cfg.population_whatifs, what);
  read_opt(j, "whatif_population_range", cfg.whatif_population_range, what);
  read_opt(j, "concurrency_whatifs", cfg.concurrency_whatifs, what);
  read_opt(j, "server_increment", cfg.server_increment, what);
  read_opt(j, "threads", cfg.threads, what);
  cfg.grid = grid_from(j, cfg.grid, what);
  if (j.contains("train")) cfg.train = train_config_from_json(j.at("train").dump(), 0);
  cfg.train.threads = cfg.threads;
  return cfg;
}

fs::path generate(const fs::path& config_path, const Common& common) {
  const std::string text = io::read_file(config_path);
  const GenerateSpec spec = generate_spec_from_json(text, common.seed, config_path.parent_path());
  const Dataset data = generate_dataset(spec);
  io::save_dataset(data, common.out_dir);
  io::save_model(spec.model, common.out_dir / "model.json");
  write_provenance(common.out_dir, "generate", common, parse(text, "generate config"));
  return common.out_dir / "manifest.json";
}

fs::path simulate(const fs::path& model_path, const std::vector<int>& initial, int replications,
                  const GridSpec& grid, const Common& common, int threads) {
  const QnModel model = io::load_model(model_path);
  const Trace t = ensemble_average(model, initial, {replications, grid, common.seed, threads});
  const fs::path out = common.out_dir / "simulated.csv";
  io::save_trace(t, out);
  write_provenance(common.out_dir, "simulate", common,
                   {{"model", model_path.string()},
                    {"x0", initial},
                    {"replications", replications},
                    {"dt", grid.dt},
                    {"H", grid.points}});
  return out;
}

TrainOutcome train(const fs::path& manifest_path, std::optional<std::vector<int>> servers,
                   const std::optional<fs::path>& config_path, const Common& common) {
  const Dataset data = io::load_dataset(manifest_path);
  const json cfg_json = config_or_empty(config_path);
  const TrainConfig cfg = train_config_from_json(cfg_json.dump(), common.seed);
  const std::vector<int> s = servers.value_or(data.servers);

  TrainOutcome out;
  out.report = qnlearn::train(data, s, cfg);
  require_valid(out.report.learned_model);
  out.report_path = common.out_dir / "report.json";
  out.model_path = common.out_dir / "model.json";
  io::save_report(out.report, out.report_path);
  io::save_model(out.report.learned_model, out.model_path);
  write_provenance(common.out_dir, "train", common,
                   {{"dataset", manifest_path.string()}, {"servers", s}, {"train", cfg_json}});
  return out;
}

fs::path predict(const fs::path& model_path, const std::vector<double>& initial,
                 const GridSpec& grid, const Common& common) {
  const QnModel model = io::load_model(model_path);
  const Trace t = forward_trajectory(model, to_vector(initial), grid);
  const fs::path out = common.out_dir / "prediction.csv";
  io::save_trace(t, out);
  return out;
}

WhatIfOutcome whatif(const fs::path& model_path, const fs::path& scenario_path,
                     const std::optional<fs::path>& ground_truth, const Common& common) {
  const QnModel model = io::load_model(model_path);
  const io::ScenarioFile sf = io::scenario_from_json(io::read_file(scenario_path), model);
  std::optional<Trace> truth;
  if (ground_truth) truth = io::load_trace(*ground_truth);

  GridSpec grid;
  if (sf.grid) {
    grid = *sf.grid;
  } else if (truth) {
    grid = truth->grid();
  } else {
    throw std::invalid_argument("whatif: scenario has no dt/H and no ground truth was given");
  }
  const Trace pred = qnlearn::whatif(sf.scenario, grid);

  WhatIfOutcome out;
  if (truth) out.err_pct = prediction_error(pred, *truth);  // throws on grid mismatch
  out.prediction_path = common.out_dir / "whatif_prediction.csv";
  io::save_trace(pred, out.prediction_path);
  if (truth) {
    out.comparison_path = common.out_dir / "whatif_comparison.csv";
    io::write_file(*out.comparison_path, io::comparison_csv(*truth, pred));
    ordered_json rep;
    rep["err_pct"] = *out.err_pct;
    rep["N"] = truth->population;
    io::write_file(common.out_dir / "whatif_report.json", rep.dump(2) + "\n");
  }
  return out;
}

EvalOutcome eval(const fs::path& model_path, const fs::path& manifest_path, const Common& common) {
  const QnModel model = io::load_model(model_path);
  require_valid(model);
  const Dataset data = io::load_dataset(manifest_path);
  EvalOutcome out;
  std::vector<double> errs;
  for (std::size_t i = 0; i < data.traces.size(); ++i) {
    const Trace& t = data.traces[i];
    const Trace pred = forward_trajectory(model, t.initial(), t.grid());
    const double e = prediction_error(pred, t);
    out.points.push_back({t.population, e, model.stations()});
    errs.push_back(e);
    io::write_file(common.out_dir / "comparisons" / data.names[i], io::comparison_csv(t, pred));
  }
  out.summary = summarize_errors(errs);
  io::write_file(common.out_dir / "scatter.csv", io::scatter_csv(out.points));
  io::write_file(common.out_dir / "summary.json", io::summary_json(out.summary));
  return out;
}

fs::path transform_selfloop(const fs::path& model_path, const std::vector<double>& pi,
                            const Common& common) {
  const QnModel model = io::load_model(model_path);
  require_valid(model, /*allow_self_loops=*/true);
  const SelfLoopResult r = selfloop_transform(model.routing, model.rates, {to_vector(pi)});
  QnModel out = model;
  out.routing = r.routing;
  out.rates = r.rates;
  const fs::path path = common.out_dir / "model_selfloop.json";
  io::save_model(out, path);
  return path;
}

BenchmarkResult benchmark(const fs::path& config_path, const Common& common, const Logger& log) {
  const std::string text = io::read_file(config_path);
  const BenchmarkConfig cfg = benchmark_config_from_json(text);
  BenchmarkResult result = run_benchmark(cfg, common.seed, log);

  std::vector<io::ScatterPoint> population_points, concurrency_points;
  std::vector<double> population_errs, concurrency_errs;
  for (std::size_t k = 0; k < result.models.size(); ++k) {
    const auto& bm = result.models[k];
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "model_%02zu", k);
    io::save_model(bm.truth, common.out_dir / (std::string(prefix) + "_truth.json"));
    io::save_model(bm.report.learned_model, common.out_dir / (std::string(prefix) + "_learned.json"));
    io::save_report(bm.report, common.out_dir / (std::string(prefix) + "_report.json"));
    for (const auto& p : bm.population) {
      population_points.push_back({p.population, p.err_pct, bm.truth.stations()});
      population_errs.push_back(p.err_pct);
    }
    for (const auto& c : bm.concurrency) {
      concurrency_points.push_back({c.population, c.err_pct, bm.truth.stations()});
      concurrency_errs.push_back(c.err_pct);
    }
  }
  io::write_file(common.out_dir / "population_scatter.csv", io::scatter_csv(population_points));
  io::write_file(common.out_dir / "concurrency_scatter.csv", io::scatter_csv(concurrency_points));
  if (!population_errs.empty()) {
    io::write_file(common.out_dir / "population_summary.json",
                   io::summary_json(summarize_errors(population_errs)));
  }
  if (!concurrency_errs.empty()) {
    io::write_file(common.out_dir / "concurrency_summary.json",
                   io::summary_json(summarize_errors(concurrency_errs)));
  }
  write_provenance(common.out_dir, "benchmark", common, parse(text, "benchmark config"));
  return result;
}

fs::path ingest(const std::vector<fs::path>& files, const std::vector<int>& servers, double dt,
                int points, const Common& common) {
  const Dataset d = io::ingest_external_traces(files, servers, dt, points);
  io::save_dataset(d, common.out_dir);
  return common.out_dir / "manifest.json";
}

}  // namespace qnlearn::commands
