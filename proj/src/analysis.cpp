#include "qnlearn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qnlearn/fluid.hpp"

namespace qnlearn {

void Scenario::validate() const {
  require_valid(base_model);
  const int m = base_model.stations();
  if (initial.size() != m) throw std::invalid_argument("scenario: x0 has the wrong length");
  if ((initial.array() < 0.0).any()) throw std::invalid_argument("scenario: negative x0");
  if (servers) {
    if (static_cast<int>(servers->size()) != m) {
      throw std::invalid_argument("scenario: servers override has the wrong length");
    }
    if (std::any_of(servers->begin(), servers->end(), [](int s) { return s < 1; })) {
      throw std::invalid_argument("scenario: servers override below 1");
    }
  }
  if (routing) {
    if (routing->rows() != m || routing->cols() != m) {
      throw std::invalid_argument("scenario: routing override has the wrong shape");
    }
    QnModel probe = base_model;
    probe.routing = *routing;
    require_valid(probe);
  }
  if (population_scale && !(*population_scale >= 1.0)) {
    throw std::invalid_argument("scenario: population scale must be >= 1");
  }
}

QnModel Scenario::effective_model() const {
  QnModel model = base_model;
  if (servers) model.servers = *servers;
  if (routing) model.routing = *routing;
  return model;
}

Vector Scenario::effective_initial() const {
  return population_scale ? Vector(initial * *population_scale) : initial;
}

Trace whatif(const Scenario& scenario, const GridSpec& grid) {
  scenario.validate();
  return forward_trajectory(scenario.effective_model(), scenario.effective_initial(), grid);
}

double prediction_error(const Trace& predicted, const Trace& ground_truth) {
  if (predicted.points() != ground_truth.points() ||
      predicted.stations() != ground_truth.stations()) {
    throw std::invalid_argument("prediction_error: traces have different shapes");
  }
  if (std::abs(predicted.dt - ground_truth.dt) > 1e-9 * ground_truth.dt) {
    throw std::invalid_argument("prediction_error: traces have different dt");
  }
  const double n = ground_truth.population;
  if (std::abs(predicted.population - n) > 1e-6 * std::max(1.0, n)) {
    throw std::invalid_argument("prediction_error: traces have different populations");
  }
  return misplaced_pct(predicted.samples, ground_truth.samples, n);
}

int bottleneck_of(const Vector& steady, std::span<const int> servers) {
  if (steady.size() != static_cast<Eigen::Index>(servers.size()) || servers.empty()) {
    throw std::invalid_argument("bottleneck_of: dimension mismatch");
  }
  int best = 0;
  double best_ratio = steady[0] / servers[0];
  for (std::size_t i = 1; i < servers.size(); ++i) {
    const double ratio = steady[static_cast<Eigen::Index>(i)] / servers[i];
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = static_cast<int>(i);
    }
  }
  return best;
}

int find_bottleneck(const QnModel& model, const Vector& initial, const GridSpec& grid) {
  const Trace t = forward_trajectory(model, initial, grid);
  return bottleneck_of(t.samples.row(t.points() - 1).transpose(), model.servers);
}

SteadyState steady_state(const QnModel& model, const Vector& initial, double dt, double tolerance,
                         int max_doublings) {
  require_valid(model);
  if (!(dt > 0.0)) throw std::invalid_argument("steady_state: dt must be positive");
  const double population = initial.sum();
  double slowest_service = 0.0;
  double slowest_drain = 0.0;
  for (int i = 0; i < model.stations(); ++i) {
    if (!(model.rates[i] > 0.0)) continue;
    slowest_service = std::max(slowest_service, 1.0 / model.rates[i]);
    slowest_drain = std::max(slowest_drain, population / (model.rates[i] * model.servers[i]));
  }
  double horizon = 10.0 * (slowest_service + slowest_drain);

  SteadyState out;
  for (int round = 0;; ++round) {
    const int points = std::max(2, static_cast<int>(std::ceil(horizon / dt)) + 1);
    out.grid = GridSpec{dt, points};
    const Trace t = forward_trajectory(model, initial, out.grid);
    out.queue_lengths = t.samples.row(points - 1).transpose();
    const double last_move = (t.samples.row(points - 1) - t.samples.row(points - 2)).cwiseAbs().sum();
    out.converged = last_move < tolerance;
    if (out.converged || round >= max_doublings) break;
    horizon *= 2.0;
  }
  return out;
}

int find_bottleneck(const QnModel& model, const Vector& initial, double dt) {
  return bottleneck_of(steady_state(model, initial, dt).queue_lengths, model.servers);
}

BottleneckShift shift_bottleneck(const QnModel& model, const Vector& initial, double dt,
                                 int increment, int max_rounds) {
  if (increment < 1) throw std::invalid_argument("shift_bottleneck: increment must be >= 1");
  BottleneckShift out;
  out.original_station = find_bottleneck(model, initial, dt);
  out.new_station = out.original_station;
  QnModel probe = model;
  for (int round = 0; round < max_rounds; ++round) {
    probe.servers[out.original_station] += increment;
    out.added += increment;
    out.new_station = find_bottleneck(probe, initial, dt);
    if (out.new_station != out.original_station) {
      out.shifted = true;
      break;
    }
  }
  out.servers = probe.servers;
  return out;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ErrorSummary summarize_errors(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize_errors: empty input");
  ErrorSummary s;
  s.values.assign(values.begin(), values.end());
  std::vector<double> sorted = s.values;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.p25 = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.p75 = quantile_sorted(sorted, 0.75);
  const double iqr = s.p75 - s.p25;
  const double fence_low = s.p25 - 1.5 * iqr;
  const double fence_high = s.p75 + 1.5 * iqr;
  s.whisker_low = s.p25;
  s.whisker_high = s.p75;
  for (double v : sorted) {
    if (v < fence_low || v > fence_high) {
      s.outliers.push_back(v);
      continue;
    }
    s.whisker_low = std::min(s.whisker_low, v);
    s.whisker_high = std::max(s.whisker_high, v);
  }
  return s;
}

}  // namespace qnlearn
