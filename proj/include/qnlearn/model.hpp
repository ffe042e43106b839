#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace qnlearn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Absolute tolerance on routing row sums.
inline constexpr double kRowSumTolerance = 1e-9;

/// A closed queuing network: `M` stations, each with `servers[i]` parallel
/// servers of rate `rates[i]`, and a routing matrix whose row `i` gives the
/// probability of moving to each station after service at `i`.
///
/// Canonical models have a zero diagonal (no self loops).
struct QnModel {
  std::vector<int> servers;  // s
  Vector rates;              // mu, 1/time
  Matrix routing;            // P, row-stochastic

  [[nodiscard]] int stations() const noexcept { return static_cast<int>(servers.size()); }
};

/// One failed invariant. `station` is 0-based, -1 when not station specific.
struct Violation {
  std::string kind;
  int station = -1;
  std::string message;
};

/// Checks every QnModel invariant and returns one record per failure.
/// `allow_self_loops` only relaxes the zero-diagonal requirement.
std::vector<Violation> validate_model(const QnModel& model, bool allow_self_loops = false);

/// Throws std::invalid_argument listing all violations, if any.
void require_valid(const QnModel& model, bool allow_self_loops = false);

struct RandomQnConfig {
  int stations = 5;
  std::pair<double, double> rate_range{4.0, 30.0};
  std::pair<int, int> server_range{15, 30};
  std::uint64_t seed = 0;
};

/// Random fully connected model: rates and server counts uniform in their
/// ranges, each routing row built from uniform(0,1] off-diagonal weights
/// normalized to one.
QnModel random_model(const RandomQnConfig& cfg);

/// Target self-loop probabilities, one per station, each in [0, 1).
struct SelfLoopSpec {
  Vector pi;
};

struct SelfLoopResult {
  Matrix routing;  // P-hat, diagonal equal to pi
  Vector rates;    // mu-hat
};

/// Rewrites (P, mu) into an indistinguishable network (same fluid dynamics)
/// whose self-loop probabilities are the requested ones. Input P may carry
/// any diagonal but must be row-stochastic.
SelfLoopResult selfloop_transform(const Matrix& routing, const Vector& rates,
                                  const SelfLoopSpec& spec);

}  // namespace qnlearn
