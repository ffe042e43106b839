#include "qnlearn/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qnlearn::io {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string(what) + ": malformed JSON: " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw std::invalid_argument(std::string(what) + ": missing \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string(what) + ": bad \"" + key + "\": " + e.what());
  }
}

Matrix matrix_from(const std::vector<std::vector<double>>& rows, int m, const char* what) {
  if (static_cast<int>(rows.size()) != m) {
    throw std::invalid_argument(std::string(what) + ": P must have " + std::to_string(m) + " rows");
  }
  Matrix out(m, m);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(rows[i].size()) != m) {
      throw std::invalid_argument(std::string(what) + ": P row " + std::to_string(i + 1) +
                                  " must have " + std::to_string(m) + " entries");
    }
    for (int j = 0; j < m; ++j) out(i, j) = rows[i][j];
  }
  return out;
}

Vector vector_from(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_real(const std::string& s, int row, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + ": row " + std::to_string(row) +
                                ": not a number: '" + s + "'");
  }
  return v;
}

ordered_json model_fields(const QnModel& model) {
  ordered_json j;
  j["M"] = model.stations();
  j["s"] = model.servers;
  j["mu"] = std::vector<double>(model.rates.data(), model.rates.data() + model.rates.size());
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < model.routing.rows(); ++i) {
    std::vector<double> row(model.routing.cols());
    for (int k = 0; k < model.routing.cols(); ++k) row[k] = model.routing(i, k);
    rows.push_back(std::move(row));
  }
  j["P"] = rows;
  return j;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_real(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("cannot serialize a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string model_to_json(const QnModel& model) {
  const int m = model.stations();
  std::string out = "{\n  \"M\": " + std::to_string(m) + ",\n  \"s\": [";
  for (int i = 0; i < m; ++i) out += (i ? ", " : "") + std::to_string(model.servers[i]);
  out += "],\n  \"mu\": [";
  for (int i = 0; i < model.rates.size(); ++i) out += (i ? ", " : "") + format_real(model.rates[i]);
  out += "],\n  \"P\": [";
  for (int i = 0; i < model.routing.rows(); ++i) {
    out += i ? ",\n    [" : "\n    [";
    for (int j = 0; j < model.routing.cols(); ++j) {
      out += (j ? ", " : "") + format_real(model.routing(i, j));
    }
    out += "]";
  }
  out += "\n  ]\n}\n";
  return out;
}

QnModel model_from_json(const std::string& text) {
  const json j = parse_json(text, "model");
  const int m = field<int>(j, "M", "model");
  if (m < 1) throw std::invalid_argument("model: M must be >= 1");
  QnModel model;
  model.servers = field<std::vector<int>>(j, "s", "model");
  const auto mu = field<std::vector<double>>(j, "mu", "model");
  if (static_cast<int>(model.servers.size()) != m || static_cast<int>(mu.size()) != m) {
    throw std::invalid_argument("model: s and mu must have M entries");
  }
  model.rates = vector_from(mu);
  model.routing = matrix_from(field<std::vector<std::vector<double>>>(j, "P", "model"), m, "model");
  return model;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void save_model(const QnModel& model, const fs::path& path) { write_file(path, model_to_json(model)); }

QnModel load_model(const fs::path& path) { return model_from_json(read_file(path)); }

std::string trace_to_csv(const Trace& trace) {
  std::string out = "t";
  for (int i = 0; i < trace.stations(); ++i) out += ",x" + std::to_string(i + 1);
  out += '\n';
  for (int h = 0; h < trace.points(); ++h) {
    out += format_real(h * trace.dt);
    for (int i = 0; i < trace.stations(); ++i) out += "," + format_real(trace.samples(h, i));
    out += '\n';
  }
  return out;
}

Trace trace_from_csv(const std::string& text, std::optional<double> dt) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("trace: empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "t") {
    throw std::invalid_argument("trace: header must be t,x1,...,xM");
  }
  const int m = static_cast<int>(header.size()) - 1;
  for (int i = 0; i < m; ++i) {
    if (header[i + 1] != "x" + std::to_string(i + 1)) {
      throw std::invalid_argument("trace: header column " + std::to_string(i + 2) +
                                  " must be x" + std::to_string(i + 1));
    }
  }
  std::vector<double> times;
  std::vector<double> values;
  int row = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != m + 1) {
      throw std::invalid_argument("trace: row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " columns, expected " +
                                  std::to_string(m + 1));
    }
    times.push_back(parse_real(cells[0], row, "trace"));
    for (int i = 0; i < m; ++i) values.push_back(parse_real(cells[i + 1], row, "trace"));
  }
  if (row < 2) throw std::invalid_argument("trace: need at least 2 rows");

  const double step = dt.value_or(times[1] - times[0]);
  if (!(step > 0.0)) throw std::invalid_argument("trace: dt must be positive");
  for (int h = 0; h < row; ++h) {
    if (std::abs(times[h] - h * step) > 1e-6 * std::max(1.0, std::abs(h * step))) {
      throw std::invalid_argument("trace: row " + std::to_string(h + 1) +
                                  " is off the uniform grid");
    }
  }
  RowMatrix samples = Eigen::Map<RowMatrix>(values.data(), row, m);
  return make_trace(step, std::move(samples));
}

void save_trace(const Trace& trace, const fs::path& path) { write_file(path, trace_to_csv(trace)); }

Trace load_trace(const fs::path& path, std::optional<double> dt) {
  try {
    return trace_from_csv(read_file(path), dt);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.filename().string() + ": " + e.what());
  }
}

void save_dataset(const Dataset& dataset, const fs::path& dir, const std::string& manifest_name) {
  dataset.validate();
  std::vector<std::string> names = dataset.names;
  if (names.size() != dataset.traces.size()) {
    names.clear();
    for (std::size_t i = 0; i < dataset.traces.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "trace_%03zu.csv", i);
      names.emplace_back(buf);
    }
  }
  double total = 0.0;
  for (const auto& t : dataset.traces) total += t.population;

  ordered_json j;
  j["M"] = dataset.stations();
  j["s"] = dataset.servers;
  j["dt"] = dataset.dt;
  j["H"] = dataset.points;
  j["N"] = total / static_cast<double>(dataset.traces.size());
  j["traces"] = names;

  fs::create_directories(dir);
  for (std::size_t i = 0; i < dataset.traces.size(); ++i) save_trace(dataset.traces[i], dir / names[i]);
  write_file(dir / manifest_name, j.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& manifest_path) {
  const json j = parse_json(read_file(manifest_path), "manifest");
  Dataset d;
  const int m = field<int>(j, "M", "manifest");
  d.servers = field<std::vector<int>>(j, "s", "manifest");
  if (static_cast<int>(d.servers.size()) != m) {
    throw std::invalid_argument("manifest: s must have M entries");
  }
  d.dt = field<double>(j, "dt", "manifest");
  d.points = field<int>(j, "H", "manifest");
  d.names = field<std::vector<std::string>>(j, "traces", "manifest");
  const fs::path base = manifest_path.parent_path();
  for (const auto& name : d.names) d.traces.push_back(load_trace(base / name, d.dt));
  d.validate();
  return d;
}

std::string report_to_json(const TrainReport& report) {
  ordered_json j = model_fields(report.learned_model);
  j["iterations"] = report.iterations;
  j["stop_reason"] = to_string(report.stop_reason);
  j["validation_err_pct"] = finite_or_null(report.final_validation_err_pct);
  json history = json::array();
  for (const auto& h : report.history) {
    history.push_back({h.iteration, finite_or_null(h.train_loss), finite_or_null(h.validation_err)});
  }
  j["loss_history"] = std::move(history);
  j["best_iteration"] = report.best_iteration;
  j["train_traces"] = report.train_indices;
  j["validation_traces"] = report.validation_indices;
  json per_trace = json::array();
  for (double e : report.validation_errors) per_trace.push_back(finite_or_null(e));
  j["validation_errors"] = std::move(per_trace);
  return j.dump(2) + "\n";
}

void save_report(const TrainReport& report, const fs::path& path) {
  write_file(path, report_to_json(report));
}

ScenarioFile scenario_from_json(const std::string& text, const QnModel& base) {
  const json j = parse_json(text, "scenario");
  const int m = base.stations();
  ScenarioFile out;
  out.scenario.base_model = base;
  const auto x0 = field<std::vector<double>>(j, "x0", "scenario");
  out.scenario.initial = vector_from(x0);
  if (j.contains("s")) out.scenario.servers = field<std::vector<int>>(j, "s", "scenario");
  if (j.contains("P")) {
    out.scenario.routing =
        matrix_from(field<std::vector<std::vector<double>>>(j, "P", "scenario"), m, "scenario");
  }
  if (j.contains("k")) out.scenario.population_scale = field<double>(j, "k", "scenario");
  if (j.contains("dt") || j.contains("H")) {
    out.grid = GridSpec{field<double>(j, "dt", "scenario"), field<int>(j, "H", "scenario")};
    out.grid->validate();
  }
  out.scenario.validate();
  return out;
}

std::string comparison_csv(const Trace& measured, const Trace& predicted) {
  if (measured.points() != predicted.points() || measured.stations() != predicted.stations()) {
    throw std::invalid_argument("comparison: traces have different shapes");
  }
  const int m = measured.stations();
  std::string out = "t";
  for (int i = 0; i < m; ++i) out += ",measured_" + std::to_string(i + 1);
  for (int i = 0; i < m; ++i) out += ",predicted_" + std::to_string(i + 1);
  out += '\n';
  for (int h = 0; h < measured.points(); ++h) {
    out += format_real(h * measured.dt);
    for (int i = 0; i < m; ++i) out += "," + format_real(measured.samples(h, i));
    for (int i = 0; i < m; ++i) out += "," + format_real(predicted.samples(h, i));
    out += '\n';
  }
  return out;
}

std::string scatter_csv(const std::vector<ScatterPoint>& points) {
  std::string out = "N,err_pct,M\n";
  for (const auto& p : points) {
    out += format_real(p.population) + "," + format_real(p.err_pct) + "," +
           std::to_string(p.stations) + "\n";
  }
  return out;
}

std::string summary_json(const ErrorSummary& s) {
  ordered_json j;
  j["count"] = s.values.size();
  j["median"] = s.median;
  j["p25"] = s.p25;
  j["p75"] = s.p75;
  j["whisker_low"] = s.whisker_low;
  j["whisker_high"] = s.whisker_high;
  j["min"] = s.min;
  j["max"] = s.max;
  j["outliers"] = s.outliers;
  return j.dump(2) + "\n";
}

Dataset ingest_external_traces(const std::vector<fs::path>& files, std::vector<int> servers,
                               double dt, int points, double tolerance_frac) {
  if (files.empty()) throw std::invalid_argument("ingest: no trace files given");
  GridSpec{dt, points}.validate();
  Dataset d;
  d.servers = std::move(servers);
  d.dt = dt;
  d.points = points;
  for (const auto& f : files) {
    Trace t = load_trace(f, dt);
    const std::string name = f.filename().string();
    if (t.stations() != d.stations()) {
      throw std::invalid_argument("ingest: " + name + " has " + std::to_string(t.stations()) +
                                  " stations, expected " + std::to_string(d.stations()));
    }
    if (t.points() != points) {
      throw std::invalid_argument("ingest: " + name + " has " + std::to_string(t.points()) +
                                  " rows, expected " + std::to_string(points));
    }
    const auto bad = conservation_violations(t, tolerance_frac * t.population);
    if (!bad.empty()) {
      std::string rows;
      for (std::size_t k = 0; k < bad.size() && k < 20; ++k) {
        rows += (k ? ", " : "") + std::to_string(bad[k] + 1);
      }
      if (bad.size() > 20) rows += ", ...";
      throw std::invalid_argument("ingest: " + name + ": rows violate conservation: " + rows);
    }
    d.traces.push_back(std::move(t));
    d.names.push_back(name);
  }
  d.validate();
  return d;
}

}  // namespace qnlearn::io
