#include "qnlearn/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "qnlearn/fluid.hpp"
#include "qnlearn/random.hpp"

namespace qnlearn {
namespace {

void check_trace(const QnModel& model, const Trace& trace) {
  if (trace.stations() != model.stations()) {
    throw std::invalid_argument("trace has " + std::to_string(trace.stations()) +
                                " stations, model has " + std::to_string(model.stations()));
  }
  if (trace.points() < 2) throw std::invalid_argument("trace needs H >= 2");
  if (!(trace.population > 0.0)) throw std::invalid_argument("trace has no clients");
}

RowMatrix unroll_from_trace(const QnModel& model, const Trace& trace) {
  RowMatrix pred(trace.points(), trace.stations());
  pred.row(0) = trace.samples.row(0);
  detail::euler_unroll(model, trace.dt, pred);
  return pred;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double unchecked_loss(const QnModel& model, const Trace& trace) {
  return misplaced_pct(trace.samples, unroll_from_trace(model, trace), trace.population);
}

ModelGradient unchecked_backward(const QnModel& model, const Trace& trace) {
  const int m = model.stations();
  const int steps = trace.points();
  const RowMatrix pred = unroll_from_trace(model, trace);

  // Earliest step attaining the max L1 gap.
  int worst_step = 1;
  double worst_gap = -1.0;
  for (int h = 1; h < steps; ++h) {
    const double gap = (trace.samples.row(h) - pred.row(h)).cwiseAbs().sum();
    if (gap > worst_gap) {
      worst_gap = gap;
      worst_step = h;
    }
  }
  const double scale = 100.0 / (2.0 * trace.population);

  ModelGradient grad{Matrix::Zero(m, m), Vector::Zero(m), worst_gap * scale};

  // adjoint[k] = d loss / d x_h[k], walking h from worst_step back to 1
  std::vector<double> adjoint(m), busy(m), flow(m), d_flow(m);
  for (int k = 0; k < m; ++k) {
    adjoint[k] = -scale * sign(trace.samples(worst_step, k) - pred(worst_step, k));
  }
  for (int h = worst_step; h >= 1; --h) {
    const double* prev = pred.data() + static_cast<Eigen::Index>(h - 1) * m;
    for (int i = 0; i < m; ++i) {
      busy[i] = std::min(prev[i], static_cast<double>(model.servers[i]));
      flow[i] = model.rates[i] * busy[i];
    }
    for (int i = 0; i < m; ++i) {
      double routed = 0.0;
      for (int k = 0; k < m; ++k) {
        if (k == i) continue;
        routed += model.routing(i, k) * adjoint[k];
        grad.routing(i, k) += trace.dt * flow[i] * adjoint[k];
      }
      d_flow[i] = trace.dt * (routed - adjoint[i]);
      grad.rates[i] += d_flow[i] * busy[i];
    }
    for (int i = 0; i < m; ++i) {
      const bool unsaturated = prev[i] <= static_cast<double>(model.servers[i]);
      if (unsaturated) adjoint[i] += d_flow[i] * model.rates[i];
    }
  }
  return grad;
}

void check_raw(const RawParams& raw) {
  const int m = raw.stations();
  if (raw.routing_weights.rows() != m || raw.routing_weights.cols() != m) {
    throw std::invalid_argument("raw params: routing weights must be M x M");
  }
}

}  // namespace

QnModel materialize(const RawParams& raw, std::span<const int> servers) {
  check_raw(raw);
  const int m = raw.stations();
  if (static_cast<int>(servers.size()) != m) {
    throw std::invalid_argument("materialize: servers has the wrong length");
  }
  QnModel model;
  model.servers.assign(servers.begin(), servers.end());
  model.rates = raw.rate_weights;
  model.routing = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double w = raw.routing_weights(i, j);
      if (w < 0.0) throw std::invalid_argument("materialize: negative routing weight");
      sum += w;
    }
    if (!(sum > 0.0)) {
      throw std::invalid_argument("degenerate routing row " + std::to_string(i + 1));
    }
    for (int j = 0; j < m; ++j) {
      if (j != i) model.routing(i, j) = raw.routing_weights(i, j) / sum;
    }
  }
  return model;
}

double loss(const QnModel& model, const Trace& trace) {
  require_valid(model);
  check_trace(model, trace);
  return unchecked_loss(model, trace);
}

ModelGradient backward_model(const QnModel& model, const Trace& trace) {
  require_valid(model);
  check_trace(model, trace);
  return unchecked_backward(model, trace);
}

RawGradient chain_to_raw(const RawParams& raw, const ModelGradient& grad) {
  check_raw(raw);
  const int m = raw.stations();
  RawGradient out{Matrix::Zero(m, m), grad.rates, grad.loss};
  // P[i][j] = w[i][j] / S_i  =>  dL/dw[i][j] = (g[i][j] - sum_k P[i][k] g[i][k]) / S_i
  for (int i = 0; i < m; ++i) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j != i) sum += raw.routing_weights(i, j);
    }
    double weighted = 0.0;
    for (int k = 0; k < m; ++k) {
      if (k != i) weighted += raw.routing_weights(i, k) / sum * grad.routing(i, k);
    }
    for (int j = 0; j < m; ++j) {
      if (j != i) out.routing_weights(i, j) = (grad.routing(i, j) - weighted) / sum;
    }
  }
  return out;
}

RawGradient backward(const RawParams& raw, std::span<const int> servers, const Trace& trace) {
  const QnModel model = materialize(raw, servers);
  check_trace(model, trace);
  return chain_to_raw(raw, unchecked_backward(model, trace));
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw std::invalid_argument("train: Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("train: adam_epsilon must be > 0");
  if (patience_iters < 1) throw std::invalid_argument("train: patience_iters must be >= 1");
  if (!(min_improvement_pct >= 0.0)) throw std::invalid_argument("train: min_improvement_pct < 0");
  if (max_iters < 0) throw std::invalid_argument("train: max_iters must be >= 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train: train_fraction must lie in (0, 1)");
  }
}

AdamState AdamState::zeros(int stations) {
  return {Matrix::Zero(stations, stations), Matrix::Zero(stations, stations),
          Vector::Zero(stations), Vector::Zero(stations), 0};
}

void adam_step(RawParams& raw, const RawGradient& grad, AdamState& state, const TrainConfig& cfg) {
  check_raw(raw);
  const int m = raw.stations();
  ++state.step;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double correct1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correct2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  auto update = [&](double& w, double g, double& first, double& second) {
    first = b1 * first + (1.0 - b1) * g;
    second = b2 * second + (1.0 - b2) * g * g;
    const double m_hat = first / correct1;
    const double v_hat = second / correct2;
    w -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    w = std::max(w, 0.0);
  };

  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      update(raw.routing_weights(i, j), grad.routing_weights(i, j), state.first_routing(i, j),
             state.second_routing(i, j));
    }
    raw.routing_weights(i, i) = 0.0;
    update(raw.rate_weights[i], grad.rate_weights[i], state.first_rates[i],
           state.second_rates[i]);
  }
  for (int i = 0; i < m && m > 1; ++i) {
    if (raw.routing_weights.row(i).sum() > 0.0) continue;
    raw.routing_weights.row(i).setConstant(1.0 / (m - 1));
    raw.routing_weights(i, i) = 0.0;
  }
}

RawParams initial_params(int stations, std::uint64_t seed) {
  if (stations < 2) throw std::invalid_argument("initial_params: need M >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> routing(0.5, 1.5);
  std::uniform_real_distribution<double> rates(1.0, 10.0);
  RawParams raw{Matrix::Zero(stations, stations), Vector::Zero(stations)};
  for (int i = 0; i < stations; ++i) {
    for (int j = 0; j < stations; ++j) {
      if (i != j) raw.routing_weights(i, j) = routing(rng);
    }
  }
  for (int i = 0; i < stations; ++i) raw.rate_weights[i] = rates(rng);
  return raw;
}

std::string to_string(StopReason r) {
  return r == StopReason::patience ? "patience" : "max_iters";
}

TrainReport train(const Dataset& dataset, std::span<const int> servers, const TrainConfig& cfg) {
  cfg.validate();
  dataset.validate();
  const int m = dataset.stations();
  if (static_cast<int>(servers.size()) != m) {
    throw std::invalid_argument("train: servers has " + std::to_string(servers.size()) +
                                " entries, dataset has " + std::to_string(m) + " stations");
  }
  const int n = static_cast<int>(dataset.traces.size());
  if (n < 2) throw std::invalid_argument("train: need at least 2 traces to split");

  TrainReport report;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(derive_seed(cfg.init_seed, "split"));
  std::shuffle(order.begin(), order.end(), split_rng);
  const int n_train = std::clamp(static_cast<int>(std::lround(cfg.train_fraction * n)), 1, n - 1);
  report.train_indices.assign(order.begin(), order.begin() + n_train);
  report.validation_indices.assign(order.begin() + n_train, order.end());

  RawParams raw = initial_params(m, derive_seed(cfg.init_seed, "init"));
  AdamState adam = AdamState::zeros(m);
  const int threads = std::max(1, cfg.threads);

  std::vector<ModelGradient> per_trace(n_train);
  auto gradients = [&](const QnModel& model) {
    auto work = [&](int tid) {
      for (int t = tid; t < n_train; t += threads) {
        per_trace[t] = unchecked_backward(model, dataset.traces[report.train_indices[t]]);
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (int tid = 0; tid < threads; ++tid) pool.emplace_back(work, tid);
    }
    // Fixed-order reduction keeps training bit-reproducible.
    ModelGradient total{Matrix::Zero(m, m), Vector::Zero(m), 0.0};
    for (const auto& g : per_trace) {
      total.routing += g.routing;
      total.rates += g.rates;
      total.loss += g.loss;
    }
    total.loss /= n_train;
    return total;
  };
  auto validation_errors = [&](const QnModel& model) {
    std::vector<double> errs;
    errs.reserve(report.validation_indices.size());
    for (int idx : report.validation_indices) {
      errs.push_back(unchecked_loss(model, dataset.traces[idx]));
    }
    return errs;
  };
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };

  double best = std::numeric_limits<double>::infinity();
  double reference = std::numeric_limits<double>::infinity();
  int last_improvement = 0;
  QnModel best_model;
  std::vector<double> best_errors;

  for (int it = 0;; ++it) {
    const QnModel model = materialize(raw, servers);
    const ModelGradient grad = gradients(model);
    auto errs = validation_errors(model);
    const double val = mean(errs);

    if (val < best) {
      best = val;
      best_model = model;
      best_errors = std::move(errs);
      report.best_iteration = it;
    }
    if (it == 0 || val < reference - cfg.min_improvement_pct) {
      reference = std::isnan(val) ? std::numeric_limits<double>::infinity() : val;
      last_improvement = it;
    }
    report.history.push_back({it, grad.loss, val, best});
    report.iterations = it;

    if (it >= cfg.max_iters) {
      report.stop_reason = StopReason::max_iters;
      break;
    }
    if (it - last_improvement >= cfg.patience_iters) {
      report.stop_reason = StopReason::patience;
      break;
    }
    adam_step(raw, chain_to_raw(raw, grad), adam, cfg);
  }

  if (best_errors.empty()) {
    // Every validation error was NaN; fall back to the initial weights.
    best_model = materialize(initial_params(m, derive_seed(cfg.init_seed, "init")), servers);
    best_errors = validation_errors(best_model);
    best = mean(best_errors);
  }
  report.learned_model = std::move(best_model);
  report.validation_errors = std::move(best_errors);
  report.final_validation_err_pct = best;
  return report;
}

}  // namespace qnlearn
