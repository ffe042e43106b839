#pragma once

#include "qnlearn/model.hpp"
#include "qnlearn/trace.hpp"

namespace qnlearn {

/// Fluid (mean-field) drift of a canonical model:
///   dx_k/dt = sum_{i != k} P[i][k] mu[i] min(x_i, s_i) - mu[k] min(x_k, s_k).
Vector fluid_rhs(const QnModel& model, const Vector& x);

/// Forward-Euler unrolling x_h = x_{h-1} + dt * fluid_rhs(x_{h-1}) on `grid`,
/// starting from x0. Transient negative values are left as they are; keep
/// dt * max(mu) well below one.
Trace forward_trajectory(const QnModel& model, const Vector& initial, const GridSpec& grid);

namespace detail {

/// Unchecked Euler recurrence into `out` (H x M, row 0 already holding x0).
/// Shared by forward_trajectory and the learner's forward pass.
void euler_unroll(const QnModel& model, double dt, RowMatrix& out);

}  // namespace detail
}  // namespace qnlearn
