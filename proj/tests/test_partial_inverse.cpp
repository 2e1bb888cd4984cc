#include "progdec/partial_inverse.hpp"
#include "progdec/problems.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace progdec;
using testing::max_abs;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

MatrixXd mat2(double a, double b, double c, double d) { return (MatrixXd(2, 2) << a, b, c, d).finished(); }

const SubspaceXd& axis() {
  static const auto s = SubspaceXd::from_basis({vec({1, 0})});
  return s;
}

}  // namespace

TEST_CASE("spingarn transform examples") {
  const auto diag = SubspaceXd::from_basis({vec({1, 1})});
  // P_X (1,0) = (1/2,1/2), P_Xperp (0,1) = (-1/2,1/2): primal (0,1); dual by symmetry (1,0)
  const auto t = spingarn_transform(diag, {vec({1, 0}), vec({0, 1})});
  CHECK((t.primal - vec({0, 1})).norm() <= 1e-15);
  CHECK((t.dual - vec({1, 0})).norm() <= 1e-15);

  const auto u = spingarn_transform(axis(), {vec({2, 0}), vec({0, 3})});
  CHECK((u.primal - vec({2, 3})).norm() == 0.0);
  CHECK(u.dual.norm() == 0.0);

  CHECK_THROWS_AS(spingarn_transform(axis(), {vec({1, 2, 3}), vec({1, 2})}), DimensionMismatch);
}

TEST_CASE("spingarn transform is an involution") {
  testing::Rng rng;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.integer(1, 7);
    const auto s = SubspaceXd::from_columns(rng.matrix(n, rng.integer(1, n)));
    const GraphPointXd p{rng.vector(n), rng.vector(n)};
    const auto back = spingarn_transform(s, spingarn_transform(s, p));
    CHECK((back.primal - p.primal).norm() <= 1e-12);
    CHECK((back.dual - p.dual).norm() <= 1e-12);
  }
}

TEST_CASE("partial inverse examples") {
  // [[2,1],[1,1]]: P_Xperp + P_X M = [[2,1],[0,1]], (P_X + P_Xperp M)^{-1} = [[1,0],[1,1]]^{-1} = [[1,0],[-1,1]]
  const MatrixXd k = partial_inverse_matrix<double>(mat2(2, 1, 1, 1), axis());
  CHECK(max_abs(k - mat2(2, 1, 0, 1) * mat2(1, 0, -1, 1)) <= 1e-14);
  CHECK(max_abs(k - mat2(1, 1, -1, 1)) <= 1e-14);

  testing::Rng rng;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = rng.integer(1, 6);
    const auto s = SubspaceXd::from_columns(rng.matrix(n, rng.integer(1, n)));
    CHECK(max_abs(partial_inverse_matrix<double>(MatrixXd::Identity(n, n), s) - MatrixXd::Identity(n, n)) <= 1e-12);
  }
}

TEST_CASE("tightness partial inverse for random a") {
  testing::Rng rng;
  for (int trial = 0; trial < 100; ++trial) {
    double a = rng.uniform(-5.0, 5.0);
    if (std::abs(a) < 0.05) a = 0.5;
    const auto p = tightness_problem(a);
    const MatrixXd k = partial_inverse_matrix<double>(p.op.affine_parts().matrix, p.subspace);
    CHECK(max_abs(k - mat2(a, 1, -1, a)) <= 1e-10 * (1 + std::abs(a)));
  }
}

TEST_CASE("partial inverse errors") {
  // P_X + P_Xperp M with M = [[1,0],[0,0]] is diag(1,0)
  CHECK_THROWS_AS(partial_inverse_matrix<double>(mat2(1, 0, 0, 0), axis()), NonInvertiblePartialInverse);
  CHECK_THROWS_AS(partial_inverse_matrix<double>(MatrixXd::Identity(3, 3), axis()), DimensionMismatch);
}

TEST_CASE("partial inverse calculus on random matrices") {
  testing::Rng rng;
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.integer(2, 6);
    const auto s = SubspaceXd::from_columns(rng.matrix(n, rng.integer(1, n - 1)));
    const auto c = s.complement();
    const MatrixXd m = rng.matrix(n, n);
    MatrixXd k, kk, kc;
    try {
      k = partial_inverse_matrix<double>(m, s);
      kk = partial_inverse_matrix<double>(k, s);
      kc = partial_inverse_matrix<double>(m, c);
    } catch (const NonInvertiblePartialInverse&) {
      continue;
    }
    // (S^X)^X = S
    CHECK(max_abs(kk - m) <= 1e-8 * (1 + max_abs(m)));
    // S^X = (S^{Xperp})^{-1}
    CHECK(max_abs(k * kc - MatrixXd::Identity(n, n)) <= 1e-8 * (1 + max_abs(k) * max_abs(kc)));
    // graph of S^X is L_X(graph S)
    const VectorXd x = rng.vector(n);
    const auto g = spingarn_transform(s, {x, m * x});
    CHECK((k * g.primal - g.dual).norm() <= 1e-8 * (1 + g.dual.norm()));
    ++checked;
  }
  CHECK(checked > 90);
}

TEST_CASE("affine partial inverse zeros are linkage solutions") {
  testing::Rng rng;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rng.integer(2, 6);
    const auto s = SubspaceXd::from_columns(rng.matrix(n, rng.integer(1, n - 1)));
    const MatrixXd m = rng.matrix(n, n) + n * MatrixXd::Identity(n, n);
    const auto op = OperatorXd::affine(m, rng.vector(n));
    const auto t = partial_inverse(op, s);
    const auto parts = t.affine_parts();
    const VectorXd z = parts.matrix.partialPivLu().solve(parts.offset);
    CHECK(t(z).norm() <= 1e-9 * (1 + z.norm()));
    CHECK(linkage_residual<double>(op, s, {s.project(z), s.project_complement(z)}) <= 1e-9 * (1 + z.norm()));
  }
}

TEST_CASE("linkage residual") {
  const auto lin = linear_system_problem();
  CHECK(linkage_residual<double>(lin.op, lin.subspace, {vec({1, 1, 1, 1}), vec({1, -3, -1, 3})}) <= 1e-10);

  const auto t = tightness_problem(1.0);
  CHECK(linkage_residual<double>(t.op, t.subspace, {vec({0, 0}), vec({0, 0})}) == 0.0);
  CHECK(linkage_residual<double>(t.op, t.subspace, {vec({0, 1}), vec({0, 0})}) > 0.0);
}
