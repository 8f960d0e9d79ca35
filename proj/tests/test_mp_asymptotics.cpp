#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kmp/mp_asymptotics.hpp"

using namespace kmp;

namespace {
const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;
}

TEST(Stieltjes, PsiOneZetaOne) {
  const auto p = stieltjes_pair(1.0, 1.0);
  EXPECT_NEAR(p.r, kGolden, 1e-12);
  EXPECT_NEAR(p.r_prime, 1.0 / std::sqrt(5.0), 1e-12);
}

TEST(Stieltjes, MatchesIntegrationAgainstDensity) {
  for (double psi : {0.3, 1.0, 2.0, 7.5}) {
    const MPLaw law(psi);
    for (double zeta : {0.05, 0.5, 1.0, 4.0}) {
      const auto p = stieltjes_pair(psi, zeta);
      EXPECT_NEAR(p.r, law.integrate([&](double x) { return 1.0 / (x + zeta); }), 1e-6 * p.r) << psi << " " << zeta;
      EXPECT_NEAR(p.r_prime, law.integrate([&](double x) { return 1.0 / ((x + zeta) * (x + zeta)); }),
                  1e-6 * p.r_prime);
    }
  }
}

TEST(Stieltjes, QuadraticResidualOnRandomGrid) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lp(std::log(0.1), std::log(10.0)), lz(std::log(0.01), std::log(100.0));
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double psi = std::exp(lp(rng)), zeta = std::exp(lz(rng));
    const auto p = stieltjes_pair(psi, zeta);
    ASSERT_GT(p.r, 0.0);
    ASSERT_GT(p.r_prime, 0.0);
    worst = std::max(worst, std::abs(stieltjes_residual(psi, zeta, p.r)));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Stieltjes, Limits) {
  for (double zeta : {0.1, 1.0, 10.0}) EXPECT_NEAR(stieltjes_pair(1e-9, zeta).r, 1.0 / (1.0 + zeta), 1e-7);
  for (double psi : {0.5, 1.0, 3.0}) EXPECT_NEAR(1e8 * stieltjes_pair(psi, 1e8).r, 1.0, 1e-6);
}

TEST(Stieltjes, ExtremeArgumentsStayAccurate) {
  for (double psi : {1e-8, 1e-3, 1.0, 1e3, 1e8})
    for (double zeta : {1e-10, 1e-4, 1.0, 1e4, 1e10}) {
      const auto p = stieltjes_pair(psi, zeta);
      ASSERT_TRUE(std::isfinite(p.r) && p.r > 0.0) << psi << " " << zeta;
      const double scale = zeta * psi * p.r * p.r + std::abs(psi - 1.0 - zeta) * p.r + 1.0;
      EXPECT_LE(std::abs(stieltjes_residual(psi, zeta, p.r)), 1e-14 * scale);
    }
}

TEST(Stieltjes, RejectsNonPositive) {
  EXPECT_THROW(stieltjes_pair(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(stieltjes_pair(1.0, -1.0), std::invalid_argument);
  EXPECT_THROW(MPLaw(-2.0), std::invalid_argument);
}

TEST(MPLaw, MassAndMean) {
  for (double psi : {0.2, 1.0, 2.0, 5.0}) {
    const MPLaw law(psi);
    EXPECT_NEAR(law.integrate([](double) { return 1.0; }), 1.0, 1e-10);
    EXPECT_NEAR(law.integrate([](double x) { return x; }), 1.0, 1e-8);
    // second moment of MP is 1 + psi
    EXPECT_NEAR(law.integrate([](double x) { return x * x; }), 1.0 + psi, 1e-8);
  }
}

TEST(MPCdf, Examples) {
  EXPECT_EQ(mp_cdf(1.0, 4.0), 1.0);
  EXPECT_EQ(mp_cdf(1.0, 17.0), 1.0);
  EXPECT_DOUBLE_EQ(mp_cdf(2.0, 0.0), 0.5);
  EXPECT_EQ(mp_cdf(0.5, -1.0), 0.0);
  // quarter-circle-type closed form at psi = 1
  EXPECT_NEAR(mp_cdf(1.0, 1.0), 1.0 / 3.0 + std::sqrt(3.0) / (2.0 * M_PI), 1e-9);
  for (double psi : {0.3, 1.0, 2.5}) {
    const MPLaw law(psi);
    EXPECT_NEAR(law.cdf(law.upper_edge() - 1e-14), 1.0, 1e-8);
    EXPECT_NEAR(law.cdf(law.lower_edge()), law.atom(), 1e-12);
  }
}

TEST(MPCdf, MonotoneAndRightContinuous) {
  for (double psi : {0.5, 1.0, 2.0}) {
    const MPLaw law(psi);
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double x = -0.5 + (law.upper_edge() + 1.0) * i / 1000.0;
      const double c = law.cdf(x);
      EXPECT_GE(c, prev - 1e-13);
      EXPECT_NEAR(law.cdf(x + 1e-12), c, 1e-5);
      prev = c;
    }
  }
}

TEST(MPCdf, QuantileInvertsCdf) {
  const MPLaw law(1.7);
  for (double p : {0.45, 0.5, 0.7, 0.95}) EXPECT_NEAR(law.cdf(law.quantile(p)), p, 1e-10);
  EXPECT_EQ(law.quantile(0.2), 0.0);  // inside the atom of mass 1 - 1/1.7
}

TEST(MPCdf, AgreesWithWishartSimulation) {
  // 10^6 eigenvalues of white covariance matrices G G^T / p, n = p = 200
  const int n = 200, reps = 5000;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  long below = 0, total = 0;
  Eigen::MatrixXd g(n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (int r = 0; r < reps; ++r) {
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    w.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0 / n);
    es.compute(w, Eigen::EigenvaluesOnly);
    below += (es.eigenvalues().array() <= 1.0).count();
    total += n;
  }
  EXPECT_NEAR(static_cast<double>(below) / total, mp_cdf(1.0, 1.0), 0.01);
}

TEST(RiskCurves, PsiOneZetaOne) {
  RiskInputs in;
  in.psi = 1.0;
  in.zeta_star = 1.0;
  in.F_ell_sq = 1.0;
  in.F_tail_sq = 0.0;
  in.sigma_eps_sq = 1.0;
  const auto r = risk_curves(in);
  EXPECT_NEAR(r.bias, 1.0 / std::sqrt(5.0), 1e-10);
  EXPECT_NEAR(r.variance, kGolden - 1.0 / std::sqrt(5.0), 1e-10);
  EXPECT_NEAR(r.variance, 0.1708204, 1e-7);
  EXPECT_NEAR(r.r_test, r.bias + r.variance, 1e-14);
}

TEST(RiskCurves, VarianceMatchesFiniteDifference) {
  for (double psi : {0.1, 0.8, 1.0, 1.3, 6.0})
    for (double zeta : {0.01, 0.2, 1.0, 30.0}) {
      const double v = variance_curve(psi, zeta);
      EXPECT_NEAR(variance_curve_fd(psi, zeta), v, 1e-6 * std::max(1.0, v)) << psi << " " << zeta;
    }
}

TEST(RiskCurves, DegenerateLimits) {
  for (double psi : {0.5, 2.0}) {
    EXPECT_NEAR(bias_curve(psi, 1e9), 1.0, 1e-8);
    EXPECT_NEAR(variance_curve(psi, 1e9), 0.0, 1e-8);
  }
  for (double zeta : {0.05, 1.0}) {
    EXPECT_NEAR(bias_curve(1e-9, zeta), 1.0, 1e-7);
    EXPECT_NEAR(variance_curve(1e-9, zeta), 0.0, 1e-7);
  }
}

TEST(RiskCurves, RangeInvariants) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    RiskInputs in;
    in.psi = std::exp(std::log(0.01) + u(rng) * std::log(1e4));
    in.zeta_star = std::exp(std::log(1e-3) + u(rng) * std::log(1e5));
    in.F_ell_sq = u(rng);
    in.F_tail_sq = u(rng);
    in.sigma_eps_sq = u(rng);
    in.mu_ell = 0.1 + u(rng);
    in.lambda = in.zeta_star * in.mu_ell * u(rng);
    const auto r = risk_curves(in);
    EXPECT_GE(r.bias, -1e-12);
    EXPECT_LE(r.bias, 1.0 + 1e-12);
    EXPECT_GE(r.variance, -1e-12);
    EXPECT_GE(r.r_test, in.F_tail_sq - 1e-12);
    EXPECT_GE(r.r_train, 0.0);
  }
}

TEST(RiskCurves, BiasNonincreasingInPsi) {
  for (double zeta : {0.05, 0.5, 5.0}) {
    double prev = 2.0;
    for (int i = 0; i < 200; ++i) {
      const double psi = 0.05 * std::pow(400.0, i / 199.0);
      const double b = bias_curve(psi, zeta);
      EXPECT_LE(b, prev + 1e-12) << zeta << " " << psi;
      prev = b;
    }
  }
}

TEST(RiskCurves, VariancePeaksNearInterpolationThreshold) {
  // 41 log-spaced points on [0.05, 20], psi = 1 included
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(0.05 * std::pow(400.0, i / 40.0));
  auto peak = [&](double zeta) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (variance_curve(grid[i], zeta) > variance_curve(grid[best], zeta)) best = i;
    return best;
  };
  const std::size_t nearest_one =
      std::min_element(grid.begin(), grid.end(), [](double a, double b) { return std::abs(std::log(a)) < std::abs(std::log(b)); }) -
      grid.begin();
  EXPECT_EQ(peak(0.05), nearest_one);
  EXPECT_GT(variance_curve(grid[peak(0.05)], 0.05), variance_curve(grid[peak(0.5)], 0.5));
}

TEST(RiskCurves, VarianceMaximizerSitsAtOnePlusZeta) {
  for (double zeta : {0.01, 0.05, 0.2, 0.5}) {
    const double at = variance_curve(1.0 + zeta, zeta);
    for (double eps : {1e-3, 1e-2, 1e-1}) {
      EXPECT_GT(at, variance_curve(1.0 + zeta + eps, zeta));
      EXPECT_GT(at, variance_curve(1.0 + zeta - eps, zeta));
    }
  }
}

TEST(Resolvent, WishartTraceIdentity) {
  const int n = 2000;
  const double psi = 2.0, zeta = 0.5;
  const int p = static_cast<int>(n / psi);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(n, p);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  w.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0 / p);
  w = w.selfadjointView<Eigen::Lower>();
  Eigen::MatrixXd shifted = w;
  shifted.diagonal().array() += zeta;
  const Eigen::MatrixXd inv = shifted.llt().solve(Eigen::MatrixXd::Identity(n, n));
  const double lhs = (inv * w).trace() / n;
  EXPECT_NEAR(lhs, 1.0 - zeta * stieltjes_pair(psi, zeta).r, 0.01);
}

TEST(Resolvent, AlgebraicIdentity) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(40, 25);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
  const Eigen::MatrixXd w = g * g.transpose() / 25.0;
  const double zeta = 0.3;
  const Eigen::MatrixXd inv = (w + zeta * Eigen::MatrixXd::Identity(40, 40)).inverse();
  const Eigen::MatrixXd diff = inv * w - (Eigen::MatrixXd::Identity(40, 40) - zeta * inv);
  EXPECT_LE(diff.jacobiSvd().singularValues()(0), 1e-10);
}

class StaircaseTest : public ::testing::Test {
 protected:
  EnergyMap F{{1, 1.0}, {2, 1.0}, {3, 1.0}};
  CoefficientProfile profile = compute_profile(KernelSpec::exponential(), Domain::sphere(50), 6);
};

TEST_F(StaircaseTest, Plateaus) {
  EXPECT_EQ(staircase_plateau(F, 0.5), 3.0);
  EXPECT_EQ(staircase_plateau(F, 1.5), 2.0);
  EXPECT_EQ(staircase_plateau(F, 2.5), 1.0);
  EXPECT_EQ(staircase_plateau(F, 3.5), 0.0);
  const auto rows = staircase_curve(F, profile, 0.0, {0.5, 1.5, 2.5});
  EXPECT_EQ(rows[0].r_test, 3.0);
  EXPECT_EQ(rows[1].r_test, 2.0);
  EXPECT_EQ(rows[2].r_test, 1.0);
  EXPECT_EQ(rows[1].level, -1);
}

TEST_F(StaircaseTest, PlateausNonincreasing) {
  std::vector<double> kappas;
  for (int i = 1; i < 400; ++i) kappas.push_back(i * 0.01);
  double prev = 1e300;
  for (const auto& row : staircase_curve(F, profile, 0.0, kappas)) {
    EXPECT_LE(row.plateau, prev);
    prev = row.plateau;
  }
}

TEST_F(StaircaseTest, InsetEndsMatchNeighbouringPlateaus) {
  for (int ell = 1; ell <= 3; ++ell) {
    const double total = staircase_plateau(F, ell - 1);
    const double left = level_risk(F, profile, ell, 0.0, 0.0, 1e-6).r_test;
    const double right = level_risk(F, profile, ell, 0.0, 0.0, 1e6).r_test;
    EXPECT_NEAR(left, staircase_plateau(F, ell - 0.5), 1e-6 * std::max(1.0, total)) << ell;
    EXPECT_NEAR(right, staircase_plateau(F, ell + 0.5), 1e-6 * std::max(1.0, total)) << ell;
  }
  const auto rows = staircase_curve(F, profile, 0.0, {1.0, 2.1});
  EXPECT_EQ(rows[0].level, 1);
  EXPECT_DOUBLE_EQ(rows[0].psi, 1.0);
  EXPECT_NEAR(rows[1].psi, std::pow(50.0, 0.1), 1e-12);
}
