#pragma once

#include <optional>
#include <vector>

#include "qnlearn/model.hpp"
#include "qnlearn/trace.hpp"

namespace qnlearn {

/// A what-if question: the base model run from `initial`, optionally with
/// new server counts, a new routing matrix, or the population scaled by k.
struct Scenario {
  QnModel base_model;
  Vector initial;
  std::optional<std::vector<int>> servers;
  std::optional<Matrix> routing;
  std::optional<double> population_scale;

  void validate() const;

  /// The base model with overrides applied.
  [[nodiscard]] QnModel effective_model() const;
  /// Initial condition with population scaling applied.
  [[nodiscard]] Vector effective_initial() const;
};

Trace whatif(const Scenario& scenario, const GridSpec& grid);

/// Largest misplaced-client percentage between two traces on the same grid.
double prediction_error(const Trace& predicted, const Trace& ground_truth);

/// argmax_i steady[i] / s[i], lowest index on ties.
int bottleneck_of(const Vector& steady, std::span<const int> servers);

/// Station with the highest queue-length-to-servers ratio at the last point
/// of the fluid trajectory on `grid`.
int find_bottleneck(const QnModel& model, const Vector& initial, const GridSpec& grid);

struct SteadyState {
  Vector queue_lengths;
  GridSpec grid;  // horizon actually used
  bool converged = false;
};

/// Fluid steady state: starts from T = 10 (max 1/mu + max N/(mu s)) and
/// doubles T until the last two grid points differ by less than
/// `tolerance` in L1, or `max_doublings` is reached.
SteadyState steady_state(const QnModel& model, const Vector& initial, double dt,
                         double tolerance = 1e-6, int max_doublings = 12);

/// find_bottleneck on the steady-state horizon.
int find_bottleneck(const QnModel& model, const Vector& initial, double dt);

struct BottleneckShift {
  int original_station = 0;
  int new_station = 0;
  std::vector<int> servers;  // updated server counts
  int added = 0;
  bool shifted = false;
};

/// Adds `increment` servers at a time to the bottleneck until a different
/// station becomes the bottleneck (or `max_rounds` is exhausted).
BottleneckShift shift_bottleneck(const QnModel& model, const Vector& initial, double dt,
                                 int increment = 20, int max_rounds = 100);

/// Box-plot statistics (quartiles by linear interpolation, whiskers at
/// 1.5 IQR).
struct ErrorSummary {
  std::vector<double> values;
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::vector<double> outliers;
};

ErrorSummary summarize_errors(std::span<const double> values);

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace qnlearn
