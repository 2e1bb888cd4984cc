#pragma once

#include "progdec/core.hpp"

#include <random>

namespace testing {

using progdec::MatrixXd;
using progdec::VectorXd;

inline constexpr std::uint64_t kSeed = 424242;

struct Rng {
  std::mt19937_64 gen{kSeed};
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> unif{-1.0, 1.0};

  explicit Rng(std::uint64_t seed = kSeed) : gen(seed) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * 0.5 * (unif(gen) + 1.0); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }

  VectorXd vector(Eigen::Index n) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(gen);
    return v;
  }

  MatrixXd matrix(Eigen::Index r, Eigen::Index c) {
    MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(gen);
    return m;
  }
};

/// Orthogonal projector onto range(B) for full-column-rank B: B (B^T B)^{-1} B^T.
inline MatrixXd projector_oracle(const MatrixXd& b) {
  return b * (b.transpose() * b).inverse() * b.transpose();
}

inline double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace testing
