#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "kmp/gegenbauer.hpp"

using namespace kmp;

TEST(Gegenbauer, DegreeOneIsScaledIdentity) {
  for (const Domain dom : {Domain::sphere(7), Domain::hypercube(7)}) {
    const GegenbauerEvaluator ev(dom, 3);
    for (double t : {-7.0, -3.0, 0.0, 1.0, 5.0, 7.0}) EXPECT_NEAR(ev.eval(1, t), t / 7.0, 1e-15);
  }
}

TEST(Gegenbauer, HypercubeDegreeTwoClosedForm) {
  const GegenbauerEvaluator ev2(Domain::hypercube(2), 2);
  EXPECT_DOUBLE_EQ(ev2.eval(2, -2.0), 1.0);
  EXPECT_DOUBLE_EQ(ev2.eval(2, 0.0), -1.0);
  EXPECT_DOUBLE_EQ(ev2.eval(2, 2.0), 1.0);
  const int d = 11;
  const GegenbauerEvaluator ev(Domain::hypercube(d), 4);
  for (int j = 0; j <= d; ++j) {
    const double t = d - 2.0 * j;
    EXPECT_NEAR(ev.eval(2, t), (t * t - d) / (d * (d - 1.0)), 1e-14);
  }
  // off-atom evaluation uses the recurrence and agrees with the same polynomial
  EXPECT_NEAR(ev.eval(2, 0.5), (0.25 - d) / (d * (d - 1.0)), 1e-14);
}

TEST(Gegenbauer, SphereDegreeTwoClosedForm) {
  const int d = 9;
  const GegenbauerEvaluator ev(Domain::sphere(d), 2);
  for (double t : {-9.0, -4.0, 0.0, 2.5, 9.0}) {
    const double s = t / d;
    EXPECT_NEAR(ev.eval(2, t), (d * s * s - 1.0) / (d - 1.0), 1e-14);
  }
}

TEST(Gegenbauer, NormalizedAtRightEndpoint) {
  for (const Domain dom : {Domain::sphere(5), Domain::sphere(60), Domain::hypercube(9), Domain::hypercube(40)}) {
    const GegenbauerEvaluator ev(dom, kDefaultMaxDegree);
    for (double q : ev.eval(dom.d)) EXPECT_NEAR(q, 1.0, 1e-10);
  }
}

TEST(Gegenbauer, RejectsArgumentsOutsideSupport) {
  const GegenbauerEvaluator ev(Domain::sphere(5), 3);
  EXPECT_THROW(ev.eval(5.1), std::domain_error);
  EXPECT_THROW(ev.eval(-6.0), std::domain_error);
}

TEST(Gegenbauer, BoundedByOneOnSupport) {
  for (const Domain dom : {Domain::sphere(4), Domain::sphere(30), Domain::hypercube(12), Domain::hypercube(30)}) {
    const GegenbauerEvaluator ev(dom, kDefaultMaxDegree);
    const int K = std::min(kDefaultMaxDegree, dom.d);
    for (int i = 0; i < 1000; ++i) {
      const double t = -dom.d + 2.0 * dom.d * i / 999.0;
      const auto q = ev.eval(t);
      for (int k = 0; k <= K; ++k) EXPECT_LE(std::abs(q[k]), 1.0 + 1e-6) << k << " " << t;
    }
  }
}

TEST(Gegenbauer, HypercubeAdditionFormula) {
  const int d = 9;
  const auto ds = sample_dataset(Domain::hypercube(d), 6, 5);
  const GegenbauerEvaluator ev(ds.domain, 3);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      const Eigen::VectorXd p = ds.points.row(a).cwiseProduct(ds.points.row(b)).transpose();
      // elementary symmetric polynomials e_k of the coordinatewise products
      std::vector<double> e(4, 0.0);
      e[0] = 1.0;
      for (int i = 0; i < d; ++i)
        for (int k = 3; k >= 1; --k) e[k] += e[k - 1] * p(i);
      const double t = ds.points.row(a).dot(ds.points.row(b));
      for (int k = 0; k <= 3; ++k) EXPECT_NEAR(ev.eval(k, t), e[k] / binomial(d, k), 1e-10);
    }
}

TEST(GegenbauerMatrix, DiagonalOnesAndConstantDegreeZero) {
  const auto ds = sample_dataset(Domain::sphere(8), 25, 2);
  const auto q0 = gegenbauer_matrix(ds, 0);
  EXPECT_TRUE((q0.array() == 1.0).all());
  const auto q3 = gegenbauer_matrix(ds, 3);
  EXPECT_LT((q3.diagonal().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_LT((q3 - q3.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  const auto qh = gegenbauer_matrix(sample_dataset(Domain::hypercube(10), 25, 2), 2);
  EXPECT_TRUE((qh.diagonal().array() == 1.0).all());
}

TEST(GegenbauerMatrix, PositiveSemidefinite) {
  for (const Domain dom : {Domain::sphere(6), Domain::hypercube(8)}) {
    const auto ds = sample_dataset(dom, 60, 11);
    for (int k = 0; k <= 4; ++k) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gegenbauer_matrix(ds, k), Eigen::EigenvaluesOnly);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8) << k;
    }
  }
}

TEST(GegenbauerMatrix, SinglePassMatchesPerDegree) {
  const auto ds = sample_dataset(Domain::sphere(10), 15, 3);
  const GegenbauerEvaluator ev(ds.domain, 4);
  const auto all = gegenbauer_matrices(ds, 4, ev);
  for (int k = 0; k <= 4; ++k) EXPECT_LT((all[k] - gegenbauer_matrix(ds, k, ev)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GegenbauerMatrix, HypercubeReflectionIdentity) {
  const int d = 10;
  const auto ds = sample_dataset(Domain::hypercube(d), 30, 17);
  const GegenbauerEvaluator ev(ds.domain, d);
  Eigen::VectorXd s(30);
  for (int i = 0; i < 30; ++i) s(i) = ds.points.row(i).prod();
  for (int ell = 0; ell <= 3; ++ell) {
    const Eigen::MatrixXd lhs = gegenbauer_matrix(ds, d - ell, ev);
    const Eigen::MatrixXd rhs = s.asDiagonal() * gegenbauer_matrix(ds, ell, ev) * s.asDiagonal();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10) << ell;
  }
}

TEST(Orthonormality, HypercubeExact) {
  EXPECT_LE(orthonormality_defect(Domain::hypercube(10), 4), 1e-10);
  EXPECT_LE(orthonormality_defect(Domain::hypercube(10), 10), 1e-10);
}

TEST(Orthonormality, SphereQuadrature) {
  const double at200 = orthonormality_defect(Domain::sphere(20), 4, 200);
  const double at400 = orthonormality_defect(Domain::sphere(20), 4, 400);
  EXPECT_LE(at200, 1e-8);
  EXPECT_LE(std::abs(at200 - at400), 1e-8);
}

TEST(Orthonormality, DegreeZeroOnly) {
  EXPECT_LE(orthonormality_defect(Domain::sphere(5), 0), 1e-12);
  EXPECT_LE(orthonormality_defect(Domain::hypercube(5), 0), 1e-12);
}

TEST(HermiteLimit, TrivialDegrees) {
  EXPECT_EQ(hermite_limit_defect(0, 10), 0.0);
  EXPECT_LT(hermite_limit_defect(1, 10), 1e-15);
  EXPECT_LT(hermite_limit_defect(1, 1000), 1e-15);
}

TEST(HermiteLimit, DegreeTwoMatchesClosedForm) {
  // sqrt(B_2) Q_2(sqrt(d) x) = sqrt((d+2)/(2(d-1))) (x^2 - 1)
  double prev = 1e300;
  for (int d : {10, 100, 1000}) {
    const double expected = std::abs(std::sqrt((d + 2.0) / (2.0 * (d - 1.0))) - 1.0 / std::sqrt(2.0));
    const double got = hermite_limit_defect(2, d);
    EXPECT_NEAR(got, expected, 1e-14);
    EXPECT_LT(got, prev);
    prev = got;
  }
}

TEST(HermiteLimit, HigherDegreesDecrease) {
  for (int k = 3; k <= 6; ++k) {
    const double a = hermite_limit_defect(k, 20), b = hermite_limit_defect(k, 200),
                 c = hermite_limit_defect(k, 2000);
    EXPECT_GT(a, b);
    EXPECT_GT(b, c);
  }
  EXPECT_THROW(hermite_limit_defect(7, 10), std::invalid_argument);
}
