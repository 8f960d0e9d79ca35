#pragma once

// Empirical spectra of Gegenbauer kernel matrices, Kolmogorov-Smirnov distance
// to the Marchenko-Pastur law, isometry defects, and the variance of random
// quadratic forms in the degree-l hypercube Fourier features.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "kmp/kernels.hpp"
#include "kmp/mp_asymptotics.hpp"

namespace kmp {

/// Sorted spectrum of a symmetric matrix. With check_residual, the extreme and
/// middle eigenpairs are verified to ||Av - lambda v|| <= 1e-8 ||A||.
inline std::vector<double> esd(const Eigen::MatrixXd& a, bool check_residual = true) {
  if (a.rows() != a.cols()) throw std::invalid_argument("esd: matrix is not square");
  const Eigen::Index n = a.rows();
  if (n == 0) return {};
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("esd: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      a, check_residual ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("esd: eigensolver did not converge");
  const Eigen::VectorXd& ev = es.eigenvalues();
  if (check_residual) {
    const double norm = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
    for (Eigen::Index i : {Eigen::Index{0}, n / 2, n - 1}) {
      const double res = (a * es.eigenvectors().col(i) - ev(i) * es.eigenvectors().col(i)).norm();
      if (res > 1e-8 * std::max(norm, 1e-300))
        throw std::runtime_error("esd: eigenpair residual " + std::to_string(res) + " exceeds tolerance");
    }
  }
  std::vector<double> out(ev.data(), ev.data() + n);
  std::sort(out.begin(), out.end());
  return out;
}

/// sup_x |F_n(x) - F_MP(x)| including left limits at every step. Eigenvalues with
/// |x| <= zero_snap * max|x| are treated as exact zeros (the MP atom).
inline double ks_distance(std::vector<double> eig, double psi, double zero_snap = 1e-9) {
  const MPLaw law(psi);
  if (eig.empty()) return 1.0;
  double big = 0.0;
  for (double x : eig) big = std::max(big, std::abs(x));
  for (double& x : eig)
    if (std::abs(x) <= zero_snap * big) x = 0.0;
  std::sort(eig.begin(), eig.end());
  const double n = static_cast<double>(eig.size());
  double worst = 0.0;
  std::size_t i = 0;
  while (i < eig.size()) {
    std::size_t j = i;
    while (j < eig.size() && eig[j] == eig[i]) ++j;
    const double x = eig[i];
    const double g = law.cdf(x);
    const double g_left = x == 0.0 ? 0.0 : (x > 0.0 ? g : 0.0);
    worst = std::max(worst, std::abs(i / n - g_left));
    worst = std::max(worst, std::abs(j / n - g));
    i = j;
  }
  return worst;
}

struct SpectrumReport {
  std::vector<double> eigenvalues;
  Eigen::Index n = 0;
  double B = 0.0;
  double psi_hat = 0.0;
  double ks = 0.0;
  double trace_mean = 0.0;  // (1/n) Tr(Q_l) from the diagonal
  double eig_mean = 0.0;    // (1/n) sum of eigenvalues
};

/// Spectrum of Q_l(<x_i, x_j>) compared with MP at psi_hat = n / B(d, l).
inline SpectrumReport spectrum_report(const Dataset& ds, int ell) {
  SpectrumReport r;
  const Eigen::MatrixXd q = gegenbauer_matrix(ds, ell);
  r.n = ds.n();
  r.B = subspace_dim(ds.domain, ell);
  r.psi_hat = static_cast<double>(r.n) / r.B;
  r.trace_mean = q.trace() / static_cast<double>(r.n);
  r.eigenvalues = esd(q, false);
  double s = 0.0;
  for (double x : r.eigenvalues) s += x;
  r.eig_mean = s / static_cast<double>(r.n);
  r.ks = ks_distance(r.eigenvalues, r.psi_hat);
  return r;
}

struct IsometryDefects {
  double low = 0.0;   // ||Y_{<l}^T Y_{<l} / n - I||_op
  double high = 0.0;  // ||H_{>l} - mu_{>l} I||_op
  bool low_defined = true;
};

inline IsometryDefects isometry_defects(const KernelSpec& kernel, const Dataset& ds,
                                        const CoefficientProfile& profile, int ell) {
  if (ell < 1) throw std::invalid_argument("isometry defects need l >= 1");
  IsometryDefects out;
  const auto n = ds.n();
  const double b_low = subspace_dim_upto(ds.domain, ell - 1);
  out.high = poly_approx_defect(kernel, ds, ell, profile);
  if (static_cast<double>(n) <= b_low) {
    out.low_defined = false;
    out.low = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  // Y Y^T / n = sum_{k<l} B_k Q_k / n shares its nonzero spectrum with Y^T Y / n.
  const GegenbauerEvaluator ev(ds.domain, ell - 1);
  const auto qs = gegenbauer_matrices(ds, ell - 1, ev);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < ell; ++k) m += ev.dim(k) * qs[k];
  m /= static_cast<double>(n);
  const auto eig = esd(m, false);
  const auto top = static_cast<std::size_t>(std::llround(b_low));
  for (std::size_t i = eig.size() - top; i < eig.size(); ++i) out.low = std::max(out.low, std::abs(eig[i] - 1.0));
  return out;
}

// ---------------------------------------------------------------------------
// Quadratic forms Y_l(x)^T A Y_l(x) / B - Tr(A) / B on the hypercube.

/// All subsets of {0..d-1} of size k as bitmasks, in colexicographic order.
inline std::vector<std::uint64_t> subsets_of_size(int d, int k) {
  if (d > 64 || k < 0 || k > d) throw std::invalid_argument("subsets_of_size: need 0 <= k <= d <= 64");
  std::vector<std::uint64_t> out;
  if (k == 0) return {0};
  std::uint64_t s = (k == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << k) - 1);
  const std::uint64_t limit = d == 64 ? 0 : (std::uint64_t{1} << d);
  while (true) {
    out.push_back(s);
    // Gosper's hack
    const std::uint64_t c = s & (~s + 1);
    const std::uint64_t r = s + c;
    if (r == 0 || (limit != 0 && r >= limit)) break;
    s = (((r ^ s) >> 2) / c) | r;
    if (limit != 0 && s >= limit) break;
  }
  return out;
}

/// Fourier character Y_S(x) = prod_{i in S} x_i for x given as a sign bitmask.
inline double fourier_character(std::uint64_t subset, std::uint64_t x_mask) {
  return (std::popcount(subset & x_mask) & 1) ? -1.0 : 1.0;
}

enum class QuadFormMethod { monte_carlo, exact_hypercube };

struct QuadFormVariance {
  double variance = 0.0;
  double standard_error = 0.0;  // zero for the exact method
  double mean = 0.0;            // Monte Carlo sample mean (exactly 0 in theory)
  std::size_t samples = 0;
};

inline constexpr double kMaxExactQuadFormDim = 4096;

inline QuadFormVariance quadratic_form_variance(const Domain& domain, int ell, const Eigen::MatrixXd& a,
                                                QuadFormMethod method, std::size_t samples = 100000,
                                                std::uint64_t seed = 0) {
  if (!domain.is_hypercube())
    throw std::invalid_argument("quadratic form variance needs an explicit feature basis; only the hypercube is supported");
  const double b = subspace_dim(domain, ell);
  if (a.rows() != a.cols() || static_cast<double>(a.rows()) != b)
    throw std::invalid_argument("quadratic form matrix must be B x B with B = " + std::to_string(b));
  if (b > kMaxExactQuadFormDim) throw std::invalid_argument("subspace dimension too large");
  const auto subsets = subsets_of_size(domain.d, ell);
  const auto bn = static_cast<Eigen::Index>(subsets.size());
  QuadFormVariance out;
  if (method == QuadFormMethod::exact_hypercube) {
    // Y_{S1} Y_{S2} = Y_{S1 xor S2}: group ordered off-diagonal pairs by symmetric difference.
    // The diagonal contributes Tr(A)/B identically, which the centering removes.
    std::unordered_map<std::uint64_t, double> coef;
    coef.reserve(static_cast<std::size_t>(bn * bn / 2));
    for (Eigen::Index i = 0; i < bn; ++i)
      for (Eigen::Index j = 0; j < bn; ++j)
        if (i != j && a(i, j) != 0.0) coef[subsets[i] ^ subsets[j]] += a(i, j);
    long double s = 0.0L;
    for (const auto& [mask, c] : coef) s += static_cast<long double>(c) * c;
    out.variance = static_cast<double>(s / (static_cast<long double>(b) * b));
    return out;
  }
  if (samples < 2) throw std::invalid_argument("Monte Carlo needs at least two samples");
  Rng rng(seed);
  const std::uint64_t full = domain.d == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << domain.d) - 1);
  const double trace = a.trace();
  Eigen::VectorXd y(bn);
  std::vector<double> vals(samples);
  for (std::size_t t = 0; t < samples; ++t) {
    const std::uint64_t x = rng() & full;
    for (Eigen::Index i = 0; i < bn; ++i) y(i) = fourier_character(subsets[i], x);
    vals[t] = (y.dot(a * y) - trace) / b;
  }
  long double mean = 0.0L;
  for (double v : vals) mean += v;
  mean /= samples;
  long double m2 = 0.0L, m4 = 0.0L;
  for (double v : vals) {
    const long double c = v - mean;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  const double ns = static_cast<double>(samples);
  out.mean = static_cast<double>(mean);
  out.variance = static_cast<double>(m2 / (ns - 1.0));
  const double mu4 = static_cast<double>(m4 / ns), s2 = static_cast<double>(m2 / ns);
  out.standard_error = std::sqrt(std::max(mu4 - s2 * s2, 0.0) / ns);
  out.samples = samples;
  return out;
}

/// Orthogonal projection onto a uniformly random rank-r subspace of R^B.
inline Eigen::MatrixXd random_projection(Eigen::Index b, Eigen::Index rank, std::uint64_t seed) {
  if (rank < 0 || rank > b) throw std::invalid_argument("projection rank out of range");
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(b, rank);
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(b, rank);
  return q * q.transpose();
}

}  // namespace kmp
