#include "qnlearn/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "qnlearn/random.hpp"

namespace qnlearn {
namespace {

void check_state(const QnModel& model, std::span<const int> state) {
  if (static_cast<int>(state.size()) != model.stations()) {
    throw std::invalid_argument("state has " + std::to_string(state.size()) +
                                " stations, model has " + std::to_string(model.stations()));
  }
  for (int v : state) {
    if (v < 0) throw std::invalid_argument("state has a negative queue length");
  }
}

/// Event kernel shared by path recording and grid averaging, so both consume
/// the random stream identically. `on_event(time, from, to)` is called
/// before the jump is applied to `x`.
class SsaKernel {
 public:
  explicit SsaKernel(const QnModel& model) : model_(model), m_(model.stations()) {
    station_rate_.resize(m_);
    cumulative_.resize(static_cast<std::size_t>(m_) * m_);
    for (int i = 0; i < m_; ++i) {
      double acc = 0.0;
      for (int j = 0; j < m_; ++j) {
        if (j != i) acc += model.routing(i, j);
        cumulative_[i * m_ + j] = acc;
      }
    }
  }

  template <class OnEvent>
  void run(std::vector<int>& x, double horizon, std::mt19937_64& rng, OnEvent&& on_event) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double t = 0.0;
    for (;;) {
      double total = 0.0;
      for (int i = 0; i < m_; ++i) {
        station_rate_[i] = model_.rates[i] * std::min(x[i], model_.servers[i]);
        total += station_rate_[i];
      }
      if (!(total > 0.0)) return;  // frozen until the horizon
      t += -std::log1p(-unit(rng)) / total;
      if (t > horizon) return;

      const int from = pick_station(unit(rng) * total);
      const int to = pick_destination(from, unit(rng));
      on_event(t, from, to);
      --x[from];
      ++x[to];
    }
  }

 private:
  int pick_station(double target) const {
    double acc = 0.0;
    int last = -1;
    for (int i = 0; i < m_; ++i) {
      if (station_rate_[i] <= 0.0) continue;
      acc += station_rate_[i];
      last = i;
      if (target < acc) return i;
    }
    return last;
  }

  int pick_destination(int from, double u) const {
    const double* row = &cumulative_[static_cast<std::size_t>(from) * m_];
    const double target = u * row[m_ - 1];
    int last = -1;
    for (int j = 0; j < m_; ++j) {
      if (j == from || model_.routing(from, j) <= 0.0) continue;
      last = j;
      if (target < row[j]) return j;
    }
    if (last < 0) throw std::logic_error("station with positive rate has no destination");
    return last;
  }

  const QnModel& model_;
  int m_;
  std::vector<double> station_rate_;
  std::vector<double> cumulative_;  // row-wise running sums of off-diagonal P
};

void accumulate_replication(const QnModel& model, std::span<const int> initial,
                            const GridSpec& grid, std::uint64_t seed, SsaKernel& kernel,
                            std::vector<std::int64_t>& sums) {
  const int m = model.stations();
  std::vector<int> x(initial.begin(), initial.end());
  std::mt19937_64 rng(seed);
  int g = 0;
  auto flush_until = [&](double t_event) {
    while (g < grid.points && g * grid.dt < t_event) {
      for (int i = 0; i < m; ++i) sums[static_cast<std::size_t>(g) * m + i] += x[i];
      ++g;
    }
  };
  kernel.run(x, grid.horizon(), rng, [&](double t, int, int) { flush_until(t); });
  while (g < grid.points) {
    for (int i = 0; i < m; ++i) sums[static_cast<std::size_t>(g) * m + i] += x[i];
    ++g;
  }
}

}  // namespace

std::vector<RatedEvent> transition_rates(const QnModel& model, std::span<const int> state) {
  check_state(model, state);
  std::vector<RatedEvent> events;
  const int m = model.stations();
  for (int i = 0; i < m; ++i) {
    if (state[i] <= 0) continue;
    const double busy = std::min(state[i], model.servers[i]);
    for (int j = 0; j < m; ++j) {
      if (j == i || model.routing(i, j) <= 0.0) continue;
      const double rate = model.routing(i, j) * model.rates[i] * busy;
      if (rate > 0.0) events.push_back({{i, j}, rate});
    }
  }
  return events;
}

const std::vector<int>& SamplePath::at(double t) const {
  if (times.empty()) throw std::logic_error("empty sample path");
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const auto idx = it == times.begin() ? 0 : std::distance(times.begin(), it) - 1;
  return states[static_cast<std::size_t>(idx)];
}

SamplePath simulate_ssa(const QnModel& model, std::span<const int> initial, double horizon,
                        std::uint64_t seed) {
  require_valid(model);
  check_state(model, initial);
  if (!(horizon >= 0.0)) throw std::invalid_argument("simulate_ssa: negative horizon");

  SamplePath path;
  path.horizon = horizon;
  std::vector<int> x(initial.begin(), initial.end());
  path.times.push_back(0.0);
  path.states.push_back(x);

  SsaKernel kernel(model);
  std::mt19937_64 rng(seed);
  kernel.run(x, horizon, rng, [&](double t, int from, int to) {
    auto next = path.states.back();
    --next[from];
    ++next[to];
    path.times.push_back(t);
    path.states.push_back(std::move(next));
  });
  return path;
}

RowMatrix sample_on_grid(const SamplePath& path, const GridSpec& grid) {
  grid.validate();
  const auto m = static_cast<Eigen::Index>(path.states.front().size());
  RowMatrix out(grid.points, m);
  std::size_t k = 0;
  for (int g = 0; g < grid.points; ++g) {
    const double t = g * grid.dt;
    while (k + 1 < path.times.size() && !(t < path.times[k + 1])) ++k;
    for (Eigen::Index i = 0; i < m; ++i) out(g, i) = path.states[k][static_cast<std::size_t>(i)];
  }
  return out;
}

std::uint64_t replication_seed(std::uint64_t master_seed, int r) {
  return derive_seed(master_seed, "replication", static_cast<std::uint64_t>(r));
}

Trace ensemble_average(const QnModel& model, std::span<const int> initial,
                       const EnsembleConfig& cfg) {
  require_valid(model);
  check_state(model, initial);
  cfg.grid.validate();
  if (cfg.replications < 1) throw std::invalid_argument("ensemble_average: need R >= 1");

  const int m = model.stations();
  const std::size_t cells = static_cast<std::size_t>(cfg.grid.points) * m;
  int threads = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, cfg.replications);

  // Integer sums are exact, so the reduction order cannot change the result.
  std::vector<std::vector<std::int64_t>> partial(threads, std::vector<std::int64_t>(cells, 0));
  auto worker = [&](int tid) {
    SsaKernel kernel(model);
    for (int r = tid; r < cfg.replications; r += threads) {
      accumulate_replication(model, initial, cfg.grid, replication_seed(cfg.master_seed, r),
                             kernel, partial[tid]);
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (int tid = 0; tid < threads; ++tid) pool.emplace_back(worker, tid);
  }

  RowMatrix avg(cfg.grid.points, m);
  for (std::size_t c = 0; c < cells; ++c) {
    std::int64_t total = 0;
    for (const auto& p : partial) total += p[c];
    avg.data()[c] = static_cast<double>(total) / cfg.replications;
  }
  Trace out = make_trace(cfg.grid.dt, std::move(avg));
  out.population = std::accumulate(initial.begin(), initial.end(), 0.0);
  return out;
}

}  // namespace qnlearn
