#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qnlearn/analysis.hpp"
#include "qnlearn/learner.hpp"
#include "qnlearn/model.hpp"
#include "qnlearn/trace.hpp"

namespace qnlearn::io {

namespace fs = std::filesystem;

/// Canonical model JSON: keys in the order M, s, mu, P; reals printed with
/// 17 significant digits so that load -> save is byte-identical.
std::string model_to_json(const QnModel& model);
/// Parses model JSON. Only shape is checked; call validate_model for the rest.
QnModel model_from_json(const std::string& text);
void save_model(const QnModel& model, const fs::path& path);
QnModel load_model(const fs::path& path);

/// Trace CSV: header `t,x1,...,xM`, one row per grid point.
std::string trace_to_csv(const Trace& trace);
/// Parses a trace CSV. dt is taken from `dt` when given, otherwise from the
/// t column; either way the t column must sit on the uniform grid.
Trace trace_from_csv(const std::string& text, std::optional<double> dt = std::nullopt);
void save_trace(const Trace& trace, const fs::path& path);
Trace load_trace(const fs::path& path, std::optional<double> dt = std::nullopt);

/// Dataset manifest `{"M", "s", "dt", "H", "N", "traces": [...]}` with trace
/// paths relative to the manifest's directory.
void save_dataset(const Dataset& dataset, const fs::path& dir,
                  const std::string& manifest_name = "manifest.json");
Dataset load_dataset(const fs::path& manifest_path);

/// Report JSON: the learned model's fields followed by iterations,
/// stop_reason, validation_err_pct and loss_history ([iter, train, val]).
std::string report_to_json(const TrainReport& report);
void save_report(const TrainReport& report, const fs::path& path);

/// Scenario JSON: `{"x0": [...], "s": [...]?, "P": [[...]]?, "k": float?,
/// "dt": float?, "H": int?}`; base model supplied separately.
struct ScenarioFile {
  Scenario scenario;
  std::optional<GridSpec> grid;
};
ScenarioFile scenario_from_json(const std::string& text, const QnModel& base);

/// `t,measured_1..M,predicted_1..M`
std::string comparison_csv(const Trace& measured, const Trace& predicted);

struct ScatterPoint {
  double population = 0.0;
  double err_pct = 0.0;
  int stations = 0;
};
/// `N,err_pct,M`
std::string scatter_csv(const std::vector<ScatterPoint>& points);
std::string summary_json(const ErrorSummary& summary);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& contents);

/// printf("%.17g"); parses back to the same double.
std::string format_real(double v);

/// Validates externally measured traces and assembles them into a dataset.
/// Rows off by more than `tolerance_frac` * N are rejected with their
/// (1-based) data-row numbers.
Dataset ingest_external_traces(const std::vector<fs::path>& files, std::vector<int> servers,
                               double dt, int points, double tolerance_frac = 1e-3);

}  // namespace qnlearn::io
