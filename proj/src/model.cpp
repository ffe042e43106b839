#include "qnlearn/model.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qnlearn {
namespace {

std::string fmt_number(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

std::vector<Violation> validate_model(const QnModel& model, bool allow_self_loops) {
  std::vector<Violation> out;
  const int m = model.stations();
  if (m < 1) {
    out.push_back({"dimension", -1, "model has no stations"});
    return out;
  }
  if (model.rates.size() != m) {
    out.push_back({"dimension", -1,
                   "mu has " + std::to_string(model.rates.size()) + " entries, expected " +
                       std::to_string(m)});
  }
  if (model.routing.rows() != m || model.routing.cols() != m) {
    out.push_back({"dimension", -1,
                   "P is " + std::to_string(model.routing.rows()) + "x" +
                       std::to_string(model.routing.cols()) + ", expected " + std::to_string(m) +
                       "x" + std::to_string(m)});
  }

  for (int i = 0; i < m; ++i) {
    if (model.servers[i] < 1) {
      out.push_back({"servers", i, "s[" + std::to_string(i + 1) + "] below 1"});
    }
  }
  if (model.rates.size() == m) {
    for (int i = 0; i < m; ++i) {
      const double r = model.rates[i];
      if (!std::isfinite(r)) {
        out.push_back({"rate", i, "mu[" + std::to_string(i + 1) + "] not finite"});
      } else if (r < 0.0) {
        out.push_back({"rate", i, "mu[" + std::to_string(i + 1) + "] negative"});
      }
    }
  }
  if (model.routing.rows() == m && model.routing.cols() == m) {
    for (int i = 0; i < m; ++i) {
      const std::string row = std::to_string(i + 1);
      double sum = 0.0;
      bool finite = true;
      for (int j = 0; j < m; ++j) {
        const double p = model.routing(i, j);
        if (!std::isfinite(p)) {
          finite = false;
          continue;
        }
        sum += p;
        if (p < 0.0) {
          out.push_back({"negative", i,
                         "P[" + row + "][" + std::to_string(j + 1) + "] negative"});
        }
      }
      if (!finite) {
        out.push_back({"finite", i, "row " + row + " has non-finite entries"});
      } else if (std::abs(sum - 1.0) > kRowSumTolerance) {
        out.push_back({"row_sum", i, "row " + row + " sums to " + fmt_number(sum)});
      }
      if (!allow_self_loops && model.routing(i, i) != 0.0) {
        out.push_back({"self_loop", i, "P[" + row + "][" + row + "] nonzero"});
      }
    }
  }
  return out;
}

void require_valid(const QnModel& model, bool allow_self_loops) {
  const auto violations = validate_model(model, allow_self_loops);
  if (violations.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& v : violations) msg += " " + v.message + ";";
  throw std::invalid_argument(msg);
}

QnModel random_model(const RandomQnConfig& cfg) {
  if (cfg.stations < 2) {
    throw std::invalid_argument("random_model: a closed network without self loops needs M >= 2");
  }
  const auto [rate_lo, rate_hi] = cfg.rate_range;
  const auto [srv_lo, srv_hi] = cfg.server_range;
  if (!(rate_lo > 0.0) || rate_hi < rate_lo) {
    throw std::invalid_argument("random_model: rate_range must satisfy 0 < lo <= hi");
  }
  if (srv_lo < 1 || srv_hi < srv_lo) {
    throw std::invalid_argument("random_model: server_range must satisfy 1 <= lo <= hi");
  }

  const int m = cfg.stations;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> rate_dist(rate_lo, rate_hi);
  std::uniform_int_distribution<int> server_dist(srv_lo, srv_hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  QnModel model;
  model.rates.resize(m);
  model.servers.resize(m);
  for (int i = 0; i < m; ++i) model.rates[i] = rate_dist(rng);
  for (int i = 0; i < m; ++i) model.servers[i] = server_dist(rng);

  model.routing = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double w = 1.0 - unit(rng);  // (0, 1]
      model.routing(i, j) = w;
      sum += w;
    }
    model.routing.row(i) /= sum;
  }
  return model;
}

SelfLoopResult selfloop_transform(const Matrix& routing, const Vector& rates,
                                  const SelfLoopSpec& spec) {
  const Eigen::Index m = routing.rows();
  if (m < 1 || routing.cols() != m || rates.size() != m || spec.pi.size() != m) {
    throw std::invalid_argument("selfloop_transform: dimension mismatch");
  }
  for (Eigen::Index k = 0; k < m; ++k) {
    if ((routing.row(k).array() < 0.0).any() ||
        std::abs(routing.row(k).sum() - 1.0) > kRowSumTolerance) {
      throw std::invalid_argument("selfloop_transform: row " + std::to_string(k + 1) +
                                  " of P is not stochastic");
    }
    if (!(rates[k] >= 0.0)) {
      throw std::invalid_argument("selfloop_transform: negative rate");
    }
    if (!(spec.pi[k] >= 0.0 && spec.pi[k] < 1.0)) {
      throw std::invalid_argument("selfloop_transform: pi must lie in [0, 1)");
    }
  }
  if (m == 1) {
    // P = [[1]] and there is no off-diagonal entry to receive 1 - pi.
    throw std::invalid_argument("selfloop_transform: single-station network cannot move its loop");
  }

  SelfLoopResult out{Matrix::Zero(m, m), Vector::Zero(m)};
  for (Eigen::Index k = 0; k < m; ++k) {
    const double loop = routing(k, k);
    const double pi = spec.pi[k];
    if (loop < 1.0) {
      const double scale = (1.0 - pi) / (1.0 - loop);
      for (Eigen::Index i = 0; i < m; ++i) {
        if (i != k) out.routing(k, i) = routing(k, i) * scale;
      }
      out.rates[k] = rates[k] * (loop - 1.0) / (pi - 1.0);
    } else {
      const double spread = (1.0 - pi) / static_cast<double>(m - 1);
      for (Eigen::Index i = 0; i < m; ++i) {
        if (i != k) out.routing(k, i) = spread;
      }
      out.rates[k] = 0.0;
    }
    out.routing(k, k) = pi;
  }
  return out;
}

}  // namespace qnlearn
