// qnlearn: learn closed queuing networks from queue-length traces.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qnlearn/commands.hpp"

namespace fs = std::filesystem;
using namespace qnlearn;

namespace {

struct CommonFlags {
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  void attach(CLI::App* app) {
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
    app->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  }
  [[nodiscard]] commands::Common get() const { return {seed, out_dir}; }
};

struct GridFlags {
  double dt = 0.01;
  int points = 1001;
  std::optional<double> horizon;

  void attach(CLI::App* app) {
    app->add_option("--dt", dt, "Sampling step")->capture_default_str();
    auto* h = app->add_option("--H", points, "Number of grid points")->capture_default_str();
    app->add_option("--T", horizon, "Horizon; sets H = T/dt + 1")->excludes(h);
  }
  [[nodiscard]] GridSpec get() const {
    if (horizon) return GridSpec::from_horizon(*horizon, dt);
    GridSpec g{dt, points};
    g.validate();
    return g;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn queuing-network models from queue-length traces"};
  app.require_subcommand(1);

  // generate
  CommonFlags gen_common;
  std::string gen_config;
  auto* gen = app.add_subcommand("generate", "Simulate a training dataset from a model");
  gen->add_option("--config", gen_config, "Generation config JSON")->required()->check(CLI::ExistingFile);
  gen_common.attach(gen);

  // simulate
  CommonFlags sim_common;
  GridFlags sim_grid;
  std::string sim_model;
  std::vector<int> sim_x0;
  int sim_reps = 500;
  int sim_threads = 1;
  auto* sim = app.add_subcommand("simulate", "Ensemble-averaged SSA trace of a model");
  sim->add_option("--model", sim_model, "Model JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--x0", sim_x0, "Initial population, comma separated")->required()->delimiter(',');
  sim->add_option("--replications,-R", sim_reps, "Independent replications")->capture_default_str();
  sim->add_option("--threads", sim_threads, "Worker threads (0 = all cores)")->capture_default_str();
  sim_grid.attach(sim);
  sim_common.attach(sim);

  // train
  CommonFlags train_common;
  std::string train_dataset;
  std::optional<std::string> train_config;
  std::vector<int> train_servers;
  auto* tr = app.add_subcommand("train", "Learn routing and service rates from a dataset");
  tr->add_option("--dataset", train_dataset, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--config", train_config, "Training config JSON")->check(CLI::ExistingFile);
  tr->add_option("--servers", train_servers, "Concurrency levels (default: manifest s)")->delimiter(',');
  train_common.attach(tr);

  // predict
  CommonFlags pred_common;
  GridFlags pred_grid;
  std::string pred_model;
  std::vector<double> pred_x0;
  auto* pred = app.add_subcommand("predict", "Fluid prediction from an initial population");
  pred->add_option("--model", pred_model, "Model JSON")->required()->check(CLI::ExistingFile);
  pred->add_option("--x0", pred_x0, "Initial population, comma separated")->required()->delimiter(',');
  pred_grid.attach(pred);
  pred_common.attach(pred);

  // whatif
  CommonFlags wi_common;
  std::string wi_model, wi_scenario;
  std::optional<std::string> wi_truth;
  auto* wi = app.add_subcommand("whatif", "Predict under changed servers, routing or population");
  wi->add_option("--model", wi_model, "Model JSON")->required()->check(CLI::ExistingFile);
  wi->add_option("--scenario", wi_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  wi->add_option("--ground-truth", wi_truth, "Measured trace CSV to score against")->check(CLI::ExistingFile);
  wi_common.attach(wi);

  // eval
  CommonFlags ev_common;
  std::string ev_model, ev_dataset;
  auto* ev = app.add_subcommand("eval", "Score a model on every trace of a dataset");
  ev->add_option("--model", ev_model, "Model JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--dataset", ev_dataset, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);
  ev_common.attach(ev);

  // transform-selfloop
  CommonFlags tf_common;
  std::string tf_model;
  std::vector<double> tf_pi;
  auto* tf = app.add_subcommand("transform-selfloop", "Move self-loop probabilities without changing the fluid dynamics");
  tf->add_option("--model", tf_model, "Model JSON (diagonal allowed)")->required()->check(CLI::ExistingFile);
  tf->add_option("--pi", tf_pi, "Target self-loop probabilities, comma separated")->required()->delimiter(',');
  tf_common.attach(tf);

  // benchmark
  CommonFlags bm_common;
  std::string bm_config;
  auto* bm = app.add_subcommand("benchmark", "Run the synthetic learning and what-if protocol");
  bm->add_option("--config", bm_config, "Benchmark config JSON")->required()->check(CLI::ExistingFile);
  bm_common.attach(bm);

  // ingest
  CommonFlags in_common;
  std::vector<std::string> in_files;
  std::vector<int> in_servers;
  double in_dt = 0.01;
  int in_points = 0;
  auto* in = app.add_subcommand("ingest", "Build a dataset from measured trace CSVs");
  in->add_option("traces", in_files, "Trace CSV files")->required()->check(CLI::ExistingFile);
  in->add_option("--servers", in_servers, "Concurrency levels")->required()->delimiter(',');
  in->add_option("--dt", in_dt, "Sampling step")->required();
  in->add_option("--H", in_points, "Rows per trace")->required();
  in_common.attach(in);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto manifest = commands::generate(gen_config, gen_common.get());
      std::cout << "wrote " << manifest.string() << "\n";
    } else if (*sim) {
      const auto out = commands::simulate(sim_model, sim_x0, sim_reps, sim_grid.get(),
                                          sim_common.get(), sim_threads);
      std::cout << "wrote " << out.string() << "\n";
    } else if (*tr) {
      std::optional<std::vector<int>> servers;
      if (!train_servers.empty()) servers = train_servers;
      std::optional<fs::path> cfg;
      if (train_config) cfg = *train_config;
      const auto out = commands::train(train_dataset, servers, cfg, train_common.get());
      std::cout << "stopped (" << to_string(out.report.stop_reason) << ") after "
                << out.report.iterations << " iterations\n"
                << "validation error: " << out.report.final_validation_err_pct << "%\n"
                << "wrote " << out.model_path.string() << "\n";
    } else if (*pred) {
      const auto out = commands::predict(pred_model, pred_x0, pred_grid.get(), pred_common.get());
      std::cout << "wrote " << out.string() << "\n";
    } else if (*wi) {
      std::optional<fs::path> truth;
      if (wi_truth) truth = *wi_truth;
      const auto out = commands::whatif(wi_model, wi_scenario, truth, wi_common.get());
      if (out.err_pct) std::cout << "err: " << *out.err_pct << "%\n";
      std::cout << "wrote " << out.prediction_path.string() << "\n";
    } else if (*ev) {
      const auto out = commands::eval(ev_model, ev_dataset, ev_common.get());
      std::cout << "traces: " << out.points.size() << "  median err: " << out.summary.median
                << "%  max err: " << out.summary.max << "%\n";
    } else if (*tf) {
      const auto out = commands::transform_selfloop(tf_model, tf_pi, tf_common.get());
      std::cout << "wrote " << out.string() << "\n";
    } else if (*bm) {
      const auto result = commands::benchmark(bm_config, bm_common.get(),
                                              [](const std::string& s) { std::cerr << s << "\n"; });
      for (std::size_t k = 0; k < result.models.size(); ++k) {
        const auto& m = result.models[k];
        double worst_pop = 0.0, worst_conc = 0.0;
        for (const auto& p : m.population) worst_pop = std::max(worst_pop, p.err_pct);
        for (const auto& c : m.concurrency) worst_conc = std::max(worst_conc, c.err_pct);
        std::cout << "model " << k + 1 << ": validation " << m.report.final_validation_err_pct
                  << "%, worst population what-if " << worst_pop
                  << "%, worst concurrency what-if " << worst_conc << "%\n";
      }
    } else if (*in) {
      std::vector<fs::path> files(in_files.begin(), in_files.end());
      const auto out = commands::ingest(files, in_servers, in_dt, in_points, in_common.get());
      std::cout << "wrote " << out.string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
