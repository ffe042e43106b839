#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "qnlearn/model.hpp"

namespace qnlearn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Uniform time grid t_h = h * dt, h = 0..points-1.
struct GridSpec {
  double dt = 0.01;
  int points = 2;  // H

  [[nodiscard]] double horizon() const noexcept { return (points - 1) * dt; }

  /// Grid covering [0, horizon]; horizon must be a multiple of dt.
  static GridSpec from_horizon(double horizon, double dt);

  void validate() const;
};

/// Queue-length samples on a uniform grid: row h holds the (possibly
/// averaged) queue length of every station at time h * dt.
struct Trace {
  double dt = 0.0;
  RowMatrix samples;      // H x M
  double population = 0;  // N

  [[nodiscard]] int points() const noexcept { return static_cast<int>(samples.rows()); }
  [[nodiscard]] int stations() const noexcept { return static_cast<int>(samples.cols()); }
  [[nodiscard]] GridSpec grid() const noexcept { return {dt, points()}; }
  [[nodiscard]] Vector initial() const { return samples.row(0).transpose(); }
};

/// Builds a trace whose population is the total of the first row.
Trace make_trace(double dt, RowMatrix samples);

/// Rows whose total departs from the trace population by more than
/// `tolerance` (absolute), or that hold negative entries. 0-based row indices.
std::vector<int> conservation_violations(const Trace& trace, double tolerance);

/// A set of traces of one network, sharing station count, servers and grid.
struct Dataset {
  std::vector<int> servers;
  double dt = 0.0;
  int points = 0;
  std::vector<Trace> traces;
  std::vector<std::string> names;  // file names, parallel to traces

  [[nodiscard]] int stations() const noexcept { return static_cast<int>(servers.size()); }

  /// Throws std::invalid_argument when traces disagree on M, dt or H.
  void validate() const;
};

/// Largest fraction of misplaced clients, in percent:
/// max over h >= 1 of ||a_h - b_h||_1 / (2N) * 100.
double misplaced_pct(const RowMatrix& a, const RowMatrix& b, double population);

}  // namespace qnlearn
