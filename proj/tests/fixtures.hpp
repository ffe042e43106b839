#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "qnlearn/model.hpp"

namespace qnlearn::test {

/// Reference station 1 dispatching evenly to two compute stations.
inline QnModel load_balancer() {
  QnModel m;
  m.servers = {1000, 30, 25};
  m.rates = Vector(3);
  m.rates << 1.0, 11.0, 11.0;
  m.routing = Matrix(3, 3);
  m.routing << 0.0, 0.5, 0.5,
               1.0, 0.0, 0.0,
               1.0, 0.0, 0.0;
  return m;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qnlearn_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace qnlearn::test
