#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qnlearn/model.hpp"
#include "qnlearn/trace.hpp"

namespace qnlearn {

/// Unconstrained-looking learner weights. Routing weights are row-normalized
/// into P; rate weights are the service rates themselves.
///
/// Invariants: zero diagonal, all entries >= 0, every routing row has a
/// positive sum.
struct RawParams {
  Matrix routing_weights;
  Vector rate_weights;

  [[nodiscard]] int stations() const noexcept { return static_cast<int>(rate_weights.size()); }
};

/// Row-normalizes the routing weights; servers are known inputs.
QnModel materialize(const RawParams& raw, std::span<const int> servers);

/// Fit error of `model` on `trace`, in percent: the model is unrolled from
/// the trace's first sample and compared point by point.
double loss(const QnModel& model, const Trace& trace);

/// d loss / d (P, mu) for a canonical model. The diagonal of `routing` is 0.
struct ModelGradient {
  Matrix routing;
  Vector rates;
  double loss = 0.0;
};

/// Reverse-mode gradient through the Euler unrolling. Subgradient choices:
/// the max over time picks the earliest maximizing step, sign(0) = 0 and
/// d min(x, s)/dx = 1 for x <= s.
ModelGradient backward_model(const QnModel& model, const Trace& trace);

struct RawGradient {
  Matrix routing_weights;
  Vector rate_weights;
  double loss = 0.0;
};

/// Chains a model gradient through the row normalization of `raw`.
RawGradient chain_to_raw(const RawParams& raw, const ModelGradient& grad);

/// Gradient of the loss with respect to the raw weights.
RawGradient backward(const RawParams& raw, std::span<const int> servers, const Trace& trace);

struct TrainConfig {
  double learning_rate = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int patience_iters = 50;
  double min_improvement_pct = 0.01;  // absolute percentage points
  int max_iters = 5000;
  std::uint64_t init_seed = 0;
  double train_fraction = 0.5;
  int threads = 1;

  void validate() const;
};

struct AdamState {
  Matrix first_routing, second_routing;
  Vector first_rates, second_rates;
  long step = 0;

  static AdamState zeros(int stations);
};

/// One bias-corrected Adam update followed by projection onto the feasible
/// set: entries clamped at 0, diagonal forced to 0, all-zero routing rows
/// reset to 1/(M-1).
void adam_step(RawParams& raw, const RawGradient& grad, AdamState& state, const TrainConfig& cfg);

/// Initial weights: off-diagonal routing uniform(0.5, 1.5), rates uniform(1, 10).
RawParams initial_params(int stations, std::uint64_t seed);

enum class StopReason { patience, max_iters };

std::string to_string(StopReason r);

struct HistoryEntry {
  int iteration = 0;
  double train_loss = 0.0;
  double validation_err = 0.0;
  double best_validation_err = 0.0;
};

struct TrainReport {
  QnModel learned_model;
  std::vector<HistoryEntry> history;
  StopReason stop_reason = StopReason::max_iters;
  int iterations = 0;  // Adam steps taken
  int best_iteration = 0;
  double final_validation_err_pct = 0.0;
  std::vector<int> train_indices;
  std::vector<int> validation_indices;
  std::vector<double> validation_errors;  // per validation trace, best model
};

/// Full-batch training with validation early stopping. Returns the snapshot
/// with the lowest validation error.
TrainReport train(const Dataset& dataset, std::span<const int> servers, const TrainConfig& cfg);

}  // namespace qnlearn
