#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "kmp/kernels.hpp"

using namespace kmp;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(Profile, ExponentialHypercubeTwo) {
  const auto p = compute_profile(KernelSpec::exponential(), Domain::hypercube(2), 2);
  EXPECT_NEAR(p.mu[1], std::sinh(1.0), 1e-12);
  EXPECT_NEAR(p.mu[0], (std::cosh(1.0) + 1.0) / 2.0, 1e-12);
  EXPECT_NEAR(p.mu[2], (std::cosh(1.0) - 1.0) / 2.0, 1e-12);
  EXPECT_NEAR(p.mu[0] + p.mu[1] + p.mu[2], std::exp(1.0), 1e-12);
  EXPECT_NEAR(p.tail(2), 0.0, 1e-12);
}

TEST(Profile, LinearKernelHasSingleDegree) {
  for (const Domain dom : {Domain::sphere(12), Domain::hypercube(12)}) {
    const auto p = compute_profile(KernelSpec::linear(), dom, 5);
    for (int k = 0; k <= 5; ++k) EXPECT_NEAR(p.xi[k], k == 1 ? 1.0 / 12 : 0.0, 1e-14) << k;
  }
}

TEST(Profile, ExponentialSphereMassesApproachTaylorCoefficients) {
  // mu_{d,k} -> h^{(k)}(0)/k! for fixed k as d grows
  const int ds[] = {50, 200, 800};
  for (int k = 0; k <= 3; ++k) {
    double prev = 1e300, fact = std::tgamma(k + 1.0);
    for (int d : ds) {
      const auto p = compute_profile(KernelSpec::exponential(), Domain::sphere(d), 4);
      const double gap = std::abs(p.mu[k] - 1.0 / fact);
      EXPECT_LT(gap, prev) << k << " " << d;
      prev = gap;
    }
    EXPECT_LT(prev, 0.01);
  }
}

TEST(Profile, TraceIdentityAllKernels) {
  const KernelSpec kernels[] = {KernelSpec::exponential(), KernelSpec::exponential(0.5),
                                KernelSpec::sphere_rbf(0.7), KernelSpec::polynomial(1.0, 1.0, 3),
                                KernelSpec::linear()};
  for (const auto& h : kernels) {
    for (const Domain dom : {Domain::sphere(15), Domain::hypercube(15)}) {
      const auto p = compute_profile(h, dom, default_profile_cutoff(dom, 2));
      double s = 0.0;
      for (double m : p.mu) s += m;
      EXPECT_NEAR(s + p.tail(p.max_degree()), h(1.0), 1e-8) << h.name();
      EXPECT_LE(s, h(1.0) + 1e-8);
      if (dom.is_hypercube()) EXPECT_NEAR(p.tail(dom.d), 0.0, 1e-10) << h.name();
    }
  }
}

TEST(Profile, HypercubeReconstructionAtAtoms) {
  const int d = 14;
  const Domain dom = Domain::hypercube(d);
  const auto h = KernelSpec::sphere_rbf(0.9);
  const auto p = compute_profile(h, dom, d);
  const GegenbauerEvaluator ev(dom, d);
  for (int j = 0; j <= d; ++j) {
    const double t = d - 2.0 * j;
    const auto q = ev.eval(t);
    double s = 0.0;
    for (int k = 0; k <= d; ++k) s += p.mu[k] * q[k];
    EXPECT_NEAR(s, h(t / d), 1e-8);
  }
}

TEST(Profile, BuiltInKernelsStrictlyPositive) {
  for (const auto& h : {KernelSpec::exponential(), KernelSpec::sphere_rbf(1.0)}) {
    for (const Domain dom : {Domain::sphere(20), Domain::hypercube(20)}) {
      const auto p = compute_profile(h, dom, 6);
      for (double x : p.xi) EXPECT_GT(x, 0.0) << h.name();
      EXPECT_TRUE(p.psd());
    }
  }
}

TEST(Profile, LowDegreeEigenvaluesDominateDPowerEll) {
  for (int ell = 1; ell <= 3; ++ell) {
    double prev = 0.0;
    for (int d : {20, 80, 320}) {
      const auto p = compute_profile(KernelSpec::exponential(), Domain::sphere(d), ell);
      double m = 1e300;
      for (int k = 0; k < ell; ++k) m = std::min(m, p.xi[k]);
      const double scaled = m * std::pow(d, ell);
      EXPECT_GT(scaled, prev);
      prev = scaled;
    }
  }
}

TEST(Profile, TabulatedKernel) {
  const Domain dom = Domain::hypercube(6);
  const auto h = KernelSpec::tabulated(dom, {0.5, 1.0, -0.2});
  const auto p = compute_profile(h, dom, 4);
  EXPECT_DOUBLE_EQ(p.mu[1], 1.0);
  EXPECT_DOUBLE_EQ(p.mu[3], 0.0);
  EXPECT_NEAR(p.h1, 1.3, 1e-14);
  EXPECT_FALSE(p.psd());
  // h agrees with its own quadrature profile
  const auto via_quad = compute_profile(KernelSpec::polynomial(1.0, 0.0, 1), dom, 1);
  EXPECT_NEAR(via_quad.mu[1], 1.0, 1e-14);
  EXPECT_THROW(compute_profile(h, Domain::hypercube(7), 2), std::invalid_argument);
}

TEST(Profile, HighFrequencyMasses) {
  const auto p = compute_profile(KernelSpec::exponential(), Domain::hypercube(10), 10);
  const auto hf = p.high_frequency_masses(2);
  ASSERT_EQ(hf.size(), 3u);
  EXPECT_DOUBLE_EQ(hf[0], p.mu[10]);
  EXPECT_DOUBLE_EQ(hf[2], p.mu[8]);
  EXPECT_THROW(compute_profile(KernelSpec::exponential(), Domain::hypercube(10), 4).high_frequency_masses(2),
               std::logic_error);
}

TEST(Profile, JsonRoundTrip) {
  const auto p = compute_profile(KernelSpec::sphere_rbf(0.3), Domain::sphere(17), 6);
  const auto q = profile_from_json(nlohmann::json::parse(profile_to_json(p).dump()));
  EXPECT_EQ(q.domain, p.domain);
  ASSERT_EQ(q.mu.size(), p.mu.size());
  for (std::size_t k = 0; k < p.mu.size(); ++k) {
    EXPECT_NEAR(q.mu[k], p.mu[k], 1e-15 * std::abs(p.mu[k]));
    EXPECT_NEAR(q.xi[k], p.xi[k], 1e-15 * std::abs(p.xi[k]));
  }
  EXPECT_EQ(q.h1, p.h1);
}

TEST(KernelMatrix, DiagonalLinearAndAntipodal) {
  const auto ds = sample_dataset(Domain::sphere(9), 12, 1);
  const auto h = KernelSpec::exponential();
  const auto H = kernel_matrix(h, ds);
  EXPECT_LT((H.diagonal().array() - std::exp(1.0)).abs().maxCoeff(), 1e-12);
  EXPECT_LT((kernel_matrix(KernelSpec::linear(), ds) - gram(ds) / 9.0).cwiseAbs().maxCoeff(), 1e-14);
  Dataset pair{Domain::hypercube(5), Eigen::MatrixXd(2, 5), 0};
  pair.points.row(0).setOnes();
  pair.points.row(1).setConstant(-1.0);
  EXPECT_DOUBLE_EQ(kernel_matrix(h, pair)(0, 1), std::exp(-1.0));
}

TEST(PolyApprox, PolynomialKernelReconstructsExactly) {
  const int d = 10;
  const auto ds = sample_dataset(Domain::hypercube(d), 40, 3);
  const auto h = KernelSpec::polynomial(1.0, 0.5, 2);
  const auto p = compute_profile(h, ds.domain, d);
  EXPECT_LE(poly_approx_defect(h, ds, 2, p), 1e-8);
}

TEST(PolyApprox, SingletonDatasetHasZeroDefect) {
  const auto ds = sample_dataset(Domain::sphere(6), 1, 3);
  const auto h = KernelSpec::exponential();
  EXPECT_LE(poly_approx_defect(h, ds, 2, compute_profile(h, ds.domain, 4)), 1e-12);
}

TEST(PolyApprox, DefectDecreasesWithDimension) {
  const auto h = KernelSpec::exponential();
  double prev = 1e300;
  for (int d : {12, 18, 24}) {
    const Domain dom = Domain::hypercube(d);
    const auto p = compute_profile(h, dom, d);
    const auto n = static_cast<Eigen::Index>(subspace_dim(dom, 2));
    std::vector<double> defects;
    for (std::uint64_t s = 0; s < 3; ++s)
      defects.push_back(poly_approx_defect(h, sample_dataset(dom, n, derive_seed(5, stream::covariates, s)), 2, p));
    const double m = median(defects);
    EXPECT_LT(m, prev) << d;
    prev = m;
  }
}

TEST(EffectiveRegularization, Examples) {
  CoefficientProfile p;
  p.domain = Domain::hypercube(3);
  p.mu = {0.0, 1.0};
  p.xi = {0.0, 1.0 / 3};
  p.h1 = 1.5;
  EXPECT_DOUBLE_EQ(effective_regularization(p, 1, 0.0).zeta, 0.5);

  const auto quad = compute_profile(KernelSpec::polynomial(1.0, 1.0, 2), Domain::hypercube(8), 8);
  const auto z = effective_regularization(quad, 2, 0.0);
  EXPECT_EQ(z.zeta, 0.0);
  EXPECT_FALSE(z.self_regularized);

  const auto e = compute_profile(KernelSpec::exponential(), Domain::hypercube(2), 2);
  EXPECT_NEAR(effective_regularization(e, 1, 0.0).zeta, (std::cosh(1.0) - 1) / (2 * std::sinh(1.0)), 1e-12);
  EXPECT_NEAR(effective_regularization(e, 1, 0.0).zeta, 0.2310, 1e-4);

  EXPECT_THROW(effective_regularization(compute_profile(KernelSpec::linear(), Domain::sphere(5), 3), 2, 1.0),
               std::domain_error);
}
