#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qnlearn/model.hpp"
#include "qnlearn/trace.hpp"

namespace qnlearn {

/// One client leaving station `from` for station `to` (0-based, from != to).
struct JumpEvent {
  int from = 0;
  int to = 0;

  friend bool operator==(const JumpEvent&, const JumpEvent&) = default;
};

struct RatedEvent {
  JumpEvent event;
  double rate = 0.0;
};

/// Enabled transitions out of `state`, with rate P[i][j] * mu[i] * min(x[i], s[i]).
/// Zero-rate events are omitted.
std::vector<RatedEvent> transition_rates(const QnModel& model, std::span<const int> state);

/// Piecewise-constant CTMC path: `states[k]` holds on [times[k], times[k+1]).
/// times[0] = 0 and states[0] is the initial state.
struct SamplePath {
  std::vector<double> times;
  std::vector<std::vector<int>> states;
  double horizon = 0.0;

  /// State at time t (last event at or before t).
  [[nodiscard]] const std::vector<int>& at(double t) const;
};

/// Gillespie simulation up to `horizon`.
SamplePath simulate_ssa(const QnModel& model, std::span<const int> initial, double horizon,
                        std::uint64_t seed);

/// Reads `path` on the grid, one row per grid time.
RowMatrix sample_on_grid(const SamplePath& path, const GridSpec& grid);

struct EnsembleConfig {
  int replications = 1;
  GridSpec grid;
  std::uint64_t master_seed = 0;
  int threads = 1;  // 0 selects the hardware concurrency
};

/// Seed used by replication `r` of an ensemble.
std::uint64_t replication_seed(std::uint64_t master_seed, int r);

/// Grid-sampled average of `replications` independent SSA paths. Replication
/// r is exactly simulate_ssa(..., replication_seed(master_seed, r)). The
/// result does not depend on the thread count.
Trace ensemble_average(const QnModel& model, std::span<const int> initial,
                       const EnsembleConfig& cfg);

}  // namespace qnlearn
