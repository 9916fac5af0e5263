#pragma once

#include <random>

#include "jinv/grid.hpp"

namespace fixtures {

/// Random target with v in [-1,1], u in [-0.1,0.1] and u_edge = 0.
inline jinv::JacobiOperator<double> random_target(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> v(-1, 1), u(-0.1, 0.1);
  jinv::Vector<double> pv(n), pu(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) pv[i] = v(rng);
  for (Eigen::Index i = 0; i + 1 < n; ++i) pu[i] = u(rng);
  return jinv::make_operator<double>(n, pv, pu, 0.0);
}

}  // namespace fixtures
