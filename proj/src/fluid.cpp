#include "qnlearn/fluid.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace qnlearn {
namespace {

void check_dims(const QnModel& model, Eigen::Index n) {
  if (n != model.stations()) {
    throw std::invalid_argument("state has " + std::to_string(n) + " stations, model has " +
                                std::to_string(model.stations()));
  }
}

// drift[k] = sum_{i != k} P[i][k] flow[i] - flow[k], flow[i] = mu[i] min(x_i, s_i)
template <class In, class Out>
void drift(const QnModel& model, const In& x, std::vector<double>& flow, Out&& out) {
  const int m = model.stations();
  for (int i = 0; i < m; ++i) {
    flow[i] = model.rates[i] * std::min(x[i], static_cast<double>(model.servers[i]));
  }
  for (int k = 0; k < m; ++k) {
    double inflow = 0.0;
    for (int i = 0; i < m; ++i) {
      if (i != k) inflow += model.routing(i, k) * flow[i];
    }
    out[k] = inflow - flow[k];
  }
}

}  // namespace

Vector fluid_rhs(const QnModel& model, const Vector& x) {
  require_valid(model);
  check_dims(model, x.size());
  std::vector<double> flow(model.stations());
  Vector out(model.stations());
  drift(model, x, flow, out);
  return out;
}

Trace forward_trajectory(const QnModel& model, const Vector& initial, const GridSpec& grid) {
  require_valid(model);
  grid.validate();
  check_dims(model, initial.size());
  if ((initial.array() < 0.0).any()) {
    throw std::invalid_argument("forward_trajectory: negative initial queue length");
  }
  RowMatrix out(grid.points, model.stations());
  out.row(0) = initial.transpose();
  detail::euler_unroll(model, grid.dt, out);
  Trace t = make_trace(grid.dt, std::move(out));
  return t;
}

namespace detail {

void euler_unroll(const QnModel& model, double dt, RowMatrix& out) {
  const int m = model.stations();
  std::vector<double> flow(m), step(m);
  for (Eigen::Index h = 1; h < out.rows(); ++h) {
    const double* prev = out.data() + (h - 1) * m;
    double* cur = out.data() + h * m;
    drift(model, prev, flow, step);
    for (int k = 0; k < m; ++k) cur[k] = prev[k] + dt * step[k];
  }
}

}  // namespace detail
}  // namespace qnlearn
