#include "qnlearn/trace.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qnlearn {

GridSpec GridSpec::from_horizon(double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon > 0.0)) {
    throw std::invalid_argument("grid: horizon and dt must be positive");
  }
  const double steps = std::round(horizon / dt);
  if (std::abs(steps * dt - horizon) > 1e-9 * horizon) {
    throw std::invalid_argument("grid: horizon is not a multiple of dt");
  }
  GridSpec g{dt, static_cast<int>(steps) + 1};
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("grid: dt must be positive");
  if (points < 2) throw std::invalid_argument("grid: H must be at least 2");
}

Trace make_trace(double dt, RowMatrix samples) {
  Trace t;
  t.dt = dt;
  t.population = samples.rows() > 0 ? samples.row(0).sum() : 0.0;
  t.samples = std::move(samples);
  return t;
}

std::vector<int> conservation_violations(const Trace& trace, double tolerance) {
  std::vector<int> rows;
  for (int h = 0; h < trace.points(); ++h) {
    const auto row = trace.samples.row(h);
    if (std::abs(row.sum() - trace.population) > tolerance || (row.array() < 0.0).any()) {
      rows.push_back(h);
    }
  }
  return rows;
}

void Dataset::validate() const {
  if (traces.empty()) throw std::invalid_argument("dataset has no traces");
  if (servers.empty()) throw std::invalid_argument("dataset has no stations");
  if (points < 2) throw std::invalid_argument("dataset H must be at least 2");
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& t = traces[i];
    const std::string which = names.size() == traces.size() ? names[i] : std::to_string(i);
    if (t.stations() != stations()) {
      throw std::invalid_argument("trace " + which + " has " + std::to_string(t.stations()) +
                                  " stations, dataset has " + std::to_string(stations()));
    }
    if (t.points() != points) {
      throw std::invalid_argument("trace " + which + " has " + std::to_string(t.points()) +
                                  " points, dataset has " + std::to_string(points));
    }
    if (std::abs(t.dt - dt) > 1e-9 * dt) {
      throw std::invalid_argument("trace " + which + " has a different dt");
    }
    if (!(t.population > 0.0)) {
      throw std::invalid_argument("trace " + which + " has no clients");
    }
  }
}

double misplaced_pct(const RowMatrix& a, const RowMatrix& b, double population) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("misplaced_pct: shape mismatch");
  }
  if (a.rows() < 2) throw std::invalid_argument("misplaced_pct: need at least 2 points");
  if (!(population > 0.0)) throw std::invalid_argument("misplaced_pct: population must be positive");
  double worst = 0.0;
  for (Eigen::Index h = 1; h < a.rows(); ++h) {
    const double gap = (a.row(h) - b.row(h)).cwiseAbs().sum();
    if (std::isnan(gap)) return gap;
    worst = std::max(worst, gap);
  }
  return worst / (2.0 * population) * 100.0;
}

}  // namespace qnlearn
