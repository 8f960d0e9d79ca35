#pragma once

// Targets with exactly known per-degree energies, kernel ridge regression fits,
// and test error both by Monte Carlo and exactly through the harmonic
// decomposition of the kernel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "kmp/kernels.hpp"
#include "kmp/mp_asymptotics.hpp"
#include "kmp/parallel.hpp"
#include "kmp/spectrum_lab.hpp"

namespace kmp {

// ---------------------------------------------------------------------------
// Targets

/// Degree-k hypercube component sum_S coef_S Y_S(x).
struct FourierBlock {
  std::vector<std::uint64_t> subsets;
  std::vector<double> coef;
};

/// Degree-k sphere component sum_j weights_j Q_k(<w_j, x>).
struct FeatureBlock {
  Eigen::MatrixXd centers;  // m x d, rows on the sphere
  Eigen::VectorXd weights;
};

struct FourierTerm {
  std::uint64_t subset;
  double coef;
};

struct TargetFunction {
  Domain domain{DomainKind::hypercube, 1};
  std::map<int, FourierBlock> fourier;
  std::map<int, FeatureBlock> features;
  EnergyMap energies;  // exact ||P_k f||^2
  double sigma_eps = 0.0;

  double total_energy() const {
    double s = 0.0;
    for (const auto& [k, e] : energies) s += e;
    return s;
  }
  double energy(int k) const { return energies.count(k) ? energies.at(k) : 0.0; }
  int max_degree() const { return energies.empty() ? 0 : energies.rbegin()->first; }
};

/// c^T G c / B_k with G_ij = Q_k(<w_i, w_j>), accumulated in row blocks.
inline double feature_energy(const Domain& domain, int k, const FeatureBlock& block) {
  const GegenbauerEvaluator ev(domain, k);
  const Eigen::Index m = block.centers.rows();
  std::vector<double> buf(k + 1);
  long double s = 0.0L;
  constexpr Eigen::Index kRows = 256;
  for (Eigen::Index r0 = 0; r0 < m; r0 += kRows) {
    const Eigen::Index rows = std::min(kRows, m - r0);
    const Eigen::MatrixXd g = block.centers.middleRows(r0, rows) * block.centers.transpose();
    for (Eigen::Index c = 0; c < m; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) {
        const double t = r0 + r == c ? domain.d : std::clamp(g(r, c), -1.0 * domain.d, 1.0 * domain.d);
        ev.eval_into(t, buf);
        s += static_cast<long double>(block.weights(r0 + r)) * block.weights(c) * buf[k];
      }
  }
  return static_cast<double>(s / subspace_dim(domain, k));
}

/// Random target with E ||P_k f||^2 = F_k^2. Hypercube: i.i.d. N(0, F_k^2 / B_k)
/// Fourier coefficients plus the deterministic terms in beta_star. Sphere: 4 B_k
/// random feature centers with Gaussian weights rescaled to energy exactly F_k^2.
inline TargetFunction draw_target(const Domain& domain, const EnergyMap& F, std::uint64_t seed,
                                  double sigma_eps = 0.0, const std::vector<FourierTerm>& beta_star = {}) {
  TargetFunction t;
  t.domain = domain;
  t.sigma_eps = sigma_eps;
  for (const auto& [k, e] : F) {
    if (e < 0.0) throw std::invalid_argument("negative energy for degree " + std::to_string(k));
    if (k < 0) throw std::invalid_argument("negative degree in energy map");
  }
  if (domain.is_hypercube()) {
    for (const auto& [k, e] : F) {
      if (k > domain.d) throw std::out_of_range("target degree " + std::to_string(k) + " exceeds d");
      if (e == 0.0) continue;
      Rng rng(derive_seed(seed, stream::target, static_cast<std::uint64_t>(k)));
      std::normal_distribution<double> normal(0.0, std::sqrt(e / subspace_dim(domain, k)));
      FourierBlock& block = t.fourier[k];
      block.subsets = subsets_of_size(domain.d, k);
      block.coef.resize(block.subsets.size());
      for (double& c : block.coef) c = normal(rng);
    }
    for (const auto& term : beta_star) {
      const int k = std::popcount(term.subset);
      if (domain.d < 64 && (term.subset >> domain.d) != 0)
        throw std::out_of_range("beta_star subset uses coordinates beyond d");
      FourierBlock& block = t.fourier[k];
      const auto it = std::find(block.subsets.begin(), block.subsets.end(), term.subset);
      if (it == block.subsets.end()) {
        block.subsets.push_back(term.subset);
        block.coef.push_back(term.coef);
      } else {
        block.coef[it - block.subsets.begin()] += term.coef;
      }
    }
    for (const auto& [k, block] : t.fourier) {
      double s = 0.0;
      for (double c : block.coef) s += c * c;
      t.energies[k] = s;
    }
    return t;
  }
  if (!beta_star.empty()) throw std::invalid_argument("beta_star terms are hypercube Fourier coefficients");
  for (const auto& [k, e] : F) {
    if (e == 0.0) continue;
    const auto m = static_cast<Eigen::Index>(4.0 * subspace_dim(domain, k));
    FeatureBlock block;
    block.centers = sample_dataset(domain, m, derive_seed(seed, stream::target, static_cast<std::uint64_t>(k))).points;
    block.weights.resize(m);
    Rng rng(derive_seed(seed, stream::target, 1000 + static_cast<std::uint64_t>(k)));
    std::normal_distribution<double> normal;
    for (Eigen::Index j = 0; j < m; ++j) block.weights(j) = normal(rng);
    const double raw = feature_energy(domain, k, block);
    block.weights *= std::sqrt(e / raw);
    t.energies[k] = feature_energy(domain, k, block);
    t.features[k] = std::move(block);
  }
  return t;
}

/// Adds the feature component weight * Q_k(<center, x>) to a sphere target.
inline void add_feature(TargetFunction& t, int k, const Eigen::RowVectorXd& center, double weight) {
  if (!t.domain.is_sphere()) throw std::invalid_argument("feature components are for sphere targets");
  if (center.size() != t.domain.d) throw std::invalid_argument("center dimension mismatch");
  FeatureBlock& block = t.features[k];
  const Eigen::Index m = block.centers.rows();
  block.centers.conservativeResize(m + 1, t.domain.d);
  block.weights.conservativeResize(m + 1);
  block.centers.row(m) = center * (std::sqrt(static_cast<double>(t.domain.d)) / center.norm());
  block.weights(m) = weight;
  t.energies[k] = feature_energy(t.domain, k, block);
}

inline TargetFunction scaled(TargetFunction t, double alpha) {
  for (auto& [k, b] : t.fourier)
    for (double& c : b.coef) c *= alpha;
  for (auto& [k, b] : t.features) b.weights *= alpha;
  for (auto& [k, e] : t.energies) e *= alpha * alpha;
  return t;
}

/// (P_k f)(x_i) for each row of points.
inline Eigen::VectorXd evaluate_degree(const TargetFunction& t, int k, const Eigen::MatrixXd& points) {
  if (points.cols() != t.domain.d) throw std::invalid_argument("points do not lie on the target's domain");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(points.rows());
  if (t.domain.is_hypercube()) {
    const auto it = t.fourier.find(k);
    if (it == t.fourier.end()) return out;
    const auto masks = hypercube_masks(points);
    const auto& b = it->second;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < b.subsets.size(); ++j) s += b.coef[j] * fourier_character(b.subsets[j], masks[i]);
      out(i) = s;
    }
    return out;
  }
  const auto it = t.features.find(k);
  if (it == t.features.end()) return out;
  const auto& b = it->second;
  const GegenbauerEvaluator ev(t.domain, k);
  std::vector<double> buf(k + 1);
  const double d = t.domain.d;
  const Eigen::MatrixXd g = points * b.centers.transpose();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      ev.eval_into(std::clamp(g(i, j), -d, d), buf);
      s += b.weights(j) * buf[k];
    }
    out(i) = s;
  }
  return out;
}

inline Eigen::VectorXd evaluate_target(const TargetFunction& t, const Eigen::MatrixXd& points) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(points.rows());
  if (points.cols() != t.domain.d) throw std::invalid_argument("points do not lie on the target's domain");
  for (const auto& [k, e] : t.energies) out += evaluate_degree(t, k, points);
  return out;
}

/// y = f(X) + eps with eps ~ N(0, sigma_eps^2).
inline Eigen::VectorXd draw_responses(const TargetFunction& t, const Dataset& ds, std::uint64_t seed) {
  Eigen::VectorXd y = evaluate_target(t, ds.points);
  if (t.sigma_eps > 0.0) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, t.sigma_eps);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += normal(rng);
  }
  return y;
}

// ---------------------------------------------------------------------------
// Fitting

/// Stand-in for lambda = 0+.
inline double lambda_floor(const KernelSpec& kernel) { return 1e-8 * kernel(1.0); }

struct KRRFit {
  Dataset data;
  KernelSpec kernel;
  CoefficientProfile profile;
  double lambda = 0.0;
  Eigen::VectorXd y;
  Eigen::VectorXd a;
  Eigen::MatrixXd H;
  double residual = 0.0;        // ||(H + lambda I) a - y|| / ||y||
  double backward_error = 0.0;  // ||(H + lambda I) a - y|| / (||H + lambda I||_inf ||a|| + ||y||)

  Eigen::Index n() const { return data.n(); }

  /// lambda^2 ||a||^2 / n, equal to ||y - H a||^2 / n.
  double train_error() const { return n() ? lambda * lambda * a.squaredNorm() / n() : 0.0; }
  double train_error_direct() const { return n() ? (y - H * a).squaredNorm() / n() : 0.0; }
  double rkhs_norm() const { return a.dot(H * a); }

  Eigen::VectorXd predict(const Eigen::MatrixXd& points) const {
    Eigen::VectorXd out(points.rows());
    constexpr Eigen::Index kChunk = 2048;
    for (Eigen::Index r = 0; r < points.rows(); r += kChunk) {
      const Eigen::Index rows = std::min(kChunk, points.rows() - r);
      out.segment(r, rows) = kernel_cross(kernel, data.domain, points.middleRows(r, rows), data.points) * a;
    }
    return out;
  }
};

inline KRRFit fit_krr(const Dataset& ds, const KernelSpec& kernel, const CoefficientProfile& profile,
                      double lambda, const Eigen::VectorXd& y) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge parameter must be nonnegative");
  if (y.size() != ds.n()) throw std::invalid_argument("response length does not match sample count");
  KRRFit fit{ds, kernel, profile, lambda, y, Eigen::VectorXd::Zero(ds.n()), kernel_matrix(kernel, ds), 0.0, 0.0};
  if (ds.n() == 0) return fit;
  if (!profile.psd()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.H, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    if (lo < 0.0 && lambda <= -lo)
      throw std::domain_error("kernel is not PSD: ridge " + std::to_string(lambda) +
                              " does not exceed |min eigenvalue| " + std::to_string(-lo));
  }
  Eigen::MatrixXd A = fit.H;
  A.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("H + lambda I is not numerically positive definite; increase lambda");
  fit.a = llt.solve(y);
  const double ynorm = y.norm();
  const double anorm = A.cwiseAbs().rowwise().sum().maxCoeff();
  auto measure = [&] {
    const double r = (A * fit.a - y).norm();
    fit.residual = ynorm > 0.0 ? r / ynorm : 0.0;
    fit.backward_error = ynorm > 0.0 ? r / (anorm * fit.a.norm() + ynorm) : 0.0;
  };
  measure();
  for (int it = 0; it < 2 && fit.residual > 1e-12; ++it) {
    fit.a += llt.solve(y - A * fit.a);
    measure();
  }
  // Repeated sample points make H + lambda I nearly singular for tiny lambda;
  // the backward error stays at roundoff level even when the residual cannot.
  if (fit.backward_error > 1e-10)
    throw std::runtime_error("KRR solve backward error " + std::to_string(fit.backward_error) + " exceeds 1e-10");
  return fit;
}

// ---------------------------------------------------------------------------
// Test error

struct MCEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Mean and standard error s / sqrt(N) (the jackknife SE of a sample mean).
inline MCEstimate mean_and_se(const std::vector<double>& v) {
  MCEstimate m;
  m.samples = v.size();
  if (v.empty()) return m;
  long double s = 0.0L;
  for (double x : v) s += x;
  const long double mean = s / v.size();
  long double ss = 0.0L;
  for (double x : v) ss += (x - mean) * (x - mean);
  m.estimate = static_cast<double>(mean);
  m.standard_error = v.size() > 1 ? static_cast<double>(std::sqrt(ss / (v.size() - 1) / v.size()))
                                  : std::numeric_limits<double>::quiet_NaN();
  return m;
}

/// E_x (f(x) - fhat(x))^2 over N fresh uniform test points.
inline MCEstimate test_error_mc(const KRRFit& fit, const TargetFunction& target, std::size_t n_test,
                                std::uint64_t seed) {
  if (n_test < 100) throw std::invalid_argument("Monte Carlo test error needs at least 100 points");
  if (!(target.domain == fit.data.domain)) throw std::invalid_argument("target and fit live on different domains");
  std::vector<double> sq;
  sq.reserve(n_test);
  constexpr std::size_t kChunk = 4096;
  for (std::size_t start = 0, chunk = 0; start < n_test; start += kChunk, ++chunk) {
    const auto rows = static_cast<Eigen::Index>(std::min(kChunk, n_test - start));
    const auto pts = sample_dataset(fit.data.domain, rows, derive_seed(seed, stream::test_points, chunk));
    const Eigen::VectorXd diff = evaluate_target(target, pts.points) - fit.predict(pts.points);
    for (Eigen::Index i = 0; i < rows; ++i) sq.push_back(diff(i) * diff(i));
  }
  return mean_and_se(sq);
}

/// v_k = sum_{i,j} w(i, j) Q_k(<x_i, x_j>) for k = 0..K. Hypercube: via the
/// histogram of pair weights over the d + 1 inner-product atoms.
template <class W>
std::vector<double> degree_forms(const Dataset& ds, int max_k, W&& w) {
  const Eigen::Index n = ds.n();
  const GegenbauerEvaluator ev(ds.domain, max_k);
  std::vector<long double> acc(max_k + 1, 0.0L);
  if (ds.domain.is_hypercube() && ds.d() <= 64) {
    const auto masks = hypercube_masks(ds.points);
    std::vector<long double> hist(ds.d() + 1, 0.0L);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) hist[hypercube_atom(masks[i], masks[j])] += w(i, j);
    for (int a = 0; a <= ds.d(); ++a)
      for (int k = 0; k <= max_k; ++k) acc[k] += hist[a] * ev.atom(a, k);
  } else {
    const Eigen::MatrixXd g = gram(ds);
    std::vector<double> buf(max_k + 1);
    const double d = ds.d();
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j; i < n; ++i) {
        const long double wt = i == j ? w(i, i) : static_cast<long double>(w(i, j)) + w(j, i);
        ev.eval_into(i == j ? d : std::clamp(g(i, j), -d, d), buf);
        for (int k = 0; k <= max_k; ++k) acc[k] += wt * buf[k];
      }
  }
  return std::vector<double>(acc.begin(), acc.end());
}

struct ExactRisk {
  double total = 0.0;
  std::vector<double> per_degree;  // k = 0..K_tail
  int k_tail = 0;
  double tail_bound = 0.0;  // bound on the omitted degrees > K_tail (0 on the hypercube)
};

struct BiasVariance {
  std::vector<double> bias;      // per degree
  std::vector<double> variance;  // per degree
  double bias_total = 0.0;
  double variance_total = 0.0;
  int k_tail = 0;
  double tail_bound = 0.0;
};

namespace detail {

inline constexpr int kMaxSphereTail = 40;

// Sphere bound on sum_{k>K} xi_k^2 B_k a^T Q_k a <= (mu_{>K}^2 / B_{K+1}) n ||a||^2.
inline double sphere_tail_bound(const CoefficientProfile& p, const Dataset& ds, double weight_norm) {
  const int K = p.max_degree();
  const double tail = std::max(p.tail(K), 0.0);
  return tail * tail / subspace_dim(ds.domain, K + 1) * static_cast<double>(ds.n()) * weight_norm;
}

// Profile with enough degrees for an exact (hypercube) or certified (sphere) risk.
inline CoefficientProfile risk_profile(const KernelSpec& kernel, const Dataset& ds, const TargetFunction& target,
                                       const CoefficientProfile& hint, double weight_norm, double risk_scale,
                                       double& bound) {
  bound = 0.0;
  if (ds.domain.is_hypercube())
    return hint.max_degree() == ds.d() ? hint : compute_profile(kernel, ds.domain, ds.d());
  int K = std::max({hint.max_degree(), target.max_degree(), 2});
  CoefficientProfile p = K == hint.max_degree() ? hint : compute_profile(kernel, ds.domain, K);
  bound = sphere_tail_bound(p, ds, weight_norm);
  while (bound >= 1e-10 * risk_scale && bound > 0.0) {
    if (K >= kMaxSphereTail)
      throw std::runtime_error("sphere risk tail bound " + std::to_string(bound) + " stays above tolerance");
    K = std::min(K + 2, kMaxSphereTail);
    p = compute_profile(kernel, ds.domain, K);
    bound = sphere_tail_bound(p, ds, weight_norm);
  }
  return p;
}

// Repeated hypercube points merged into one; group[i] is the merged index of
// sample i. With lambda near 0 the dual weights of repeated points are O(1/lambda)
// with opposite signs, and only their sums enter the predictor.
struct MergedPoints {
  Dataset data;
  std::vector<Eigen::Index> group;
  Eigen::Index size() const { return data.n(); }
};

inline MergedPoints merge_repeated(const Dataset& ds) {
  MergedPoints m{ds, {}};
  m.group.resize(ds.n());
  if (!ds.domain.is_hypercube()) {
    for (Eigen::Index i = 0; i < ds.n(); ++i) m.group[i] = i;
    return m;
  }
  const auto masks = hypercube_masks(ds.points);
  std::unordered_map<std::uint64_t, Eigen::Index> index;
  std::vector<Eigen::Index> first;
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const auto [it, fresh] = index.try_emplace(masks[i], static_cast<Eigen::Index>(first.size()));
    if (fresh) first.push_back(i);
    m.group[i] = it->second;
  }
  if (static_cast<Eigen::Index>(first.size()) == ds.n()) return m;
  m.data.points.resize(static_cast<Eigen::Index>(first.size()), ds.d());
  for (std::size_t g = 0; g < first.size(); ++g) m.data.points.row(g) = ds.points.row(first[g]);
  return m;
}

inline Eigen::VectorXd merge_weights(const MergedPoints& m, const Eigen::VectorXd& a) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out(m.group[i]) += a(i);
  return out;
}

// R_k = E_k - 2 xi_k a.(P_k f)(X) + xi_k mu_k a^T Q_k a for k = 0..K.
inline std::vector<double> per_degree_risk(const Dataset& ds, const CoefficientProfile& p,
                                           const TargetFunction& target, const Eigen::VectorXd& a) {
  const int K = p.max_degree();
  const auto forms = degree_forms(ds, K, [&](Eigen::Index i, Eigen::Index j) { return a(i) * a(j); });
  std::vector<double> r(K + 1);
  for (int k = 0; k <= K; ++k) {
    const double cross = target.energy(k) > 0.0 ? a.dot(evaluate_degree(target, k, ds.points)) : 0.0;
    r[k] = target.energy(k) - 2.0 * p.xi[k] * cross + p.xi[k] * p.mu[k] * forms[k];
  }
  for (const auto& [k, e] : target.energies)
    if (k > K) throw std::logic_error("target degree beyond risk cutoff");
  return r;
}

}  // namespace detail

/// ||f - fhat||^2 by degree. Exact on the hypercube; on the sphere the series
/// is truncated once the certified remainder bound is below 1e-10 of the risk.
inline ExactRisk test_error_exact(const KRRFit& fit, const TargetFunction& target) {
  if (!(target.domain == fit.data.domain)) throw std::invalid_argument("target and fit live on different domains");
  ExactRisk out;
  const auto merged = detail::merge_repeated(fit.data);
  const Eigen::VectorXd a = detail::merge_weights(merged, fit.a);
  const double scale = std::max(target.total_energy(), 1e-300);
  const auto p = detail::risk_profile(fit.kernel, merged.data, target, fit.profile, a.squaredNorm(), scale,
                                      out.tail_bound);
  out.per_degree = detail::per_degree_risk(merged.data, p, target, a);
  out.k_tail = p.max_degree();
  for (double r : out.per_degree) out.total += r;
  return out;
}

/// Per-degree bias and variance of the risk over the noise: bias uses
/// a = (H + lambda I)^{-1} f(X); variance is sigma^2 xi_k^2 B_k Tr(Q_k Xi^2).
inline BiasVariance bias_variance_split(const Dataset& ds, const KernelSpec& kernel,
                                        const CoefficientProfile& profile, double lambda,
                                        const TargetFunction& target) {
  const Eigen::Index n = ds.n();
  Eigen::MatrixXd A = kernel_matrix(kernel, ds);
  A.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw std::runtime_error("H + lambda I is not numerically positive definite");
  const auto merged = detail::merge_repeated(ds);
  // Xi P with P summing the columns of repeated points; the variance weights are (Xi P)^T (Xi P).
  Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(n, merged.size());
  for (Eigen::Index i = 0; i < n; ++i) agg(i, merged.group[i]) += 1.0;
  const Eigen::MatrixXd xp = llt.solve(agg);
  const Eigen::MatrixXd w = xp.transpose() * xp;
  const Eigen::VectorXd a = xp.transpose() * evaluate_target(target, ds.points);
  BiasVariance out;
  const double sigma_sq = target.sigma_eps * target.sigma_eps;
  double bound = 0.0;
  const auto p = detail::risk_profile(kernel, merged.data, target, profile,
                                      std::max(a.squaredNorm(), sigma_sq * w.trace()),
                                      std::max(target.total_energy(), 1e-300), bound);
  out.bias = detail::per_degree_risk(merged.data, p, target, a);
  const auto forms = degree_forms(merged.data, p.max_degree(), [&](Eigen::Index i, Eigen::Index j) { return w(i, j); });
  out.variance.resize(p.max_degree() + 1);
  for (int k = 0; k <= p.max_degree(); ++k) out.variance[k] = sigma_sq * p.xi[k] * p.mu[k] * forms[k];
  for (double b : out.bias) out.bias_total += b;
  for (double v : out.variance) out.variance_total += v;
  out.k_tail = p.max_degree();
  out.tail_bound = bound;
  return out;
}

// ---------------------------------------------------------------------------
// Descent sweep

struct DescentConfig {
  Domain domain = Domain::hypercube(24);
  KernelSpec kernel = KernelSpec::exponential();
  int ell = 2;
  EnergyMap F{{2, 1.0}, {3, 0.1}};
  double sigma_sq = 0.3;
  double lambda = 1e-8;
  std::vector<Eigen::Index> n_grid;
  int trials = 20;
  std::uint64_t seed = 0;
  bool exact_risk = true;      // false: Monte Carlo test error with n_test points
  std::size_t n_test = 20000;
  unsigned threads = 1;
};

struct DescentRow {
  Eigen::Index n = 0;
  double psi_hat = 0.0;
  double test_mean = 0.0, test_se = 0.0;
  double train_mean = 0.0, train_se = 0.0;
  double rkhs_mean = 0.0, rkhs_se = 0.0;  // (1/n) a^T H a
  double theory_test = 0.0, theory_train = 0.0, theory_rkhs = 0.0;
};

/// Seed of stream `s` for grid cell (g, t).
inline std::uint64_t cell_seed(std::uint64_t master, std::uint64_t s, std::size_t grid_index, int trial) {
  return derive_seed(derive_seed(master, s, grid_index), s, static_cast<std::uint64_t>(trial));
}

/// Closed-form risk triple at level l for a given psi.
inline AsymptoticRisk theory_for(const CoefficientProfile& profile, int ell, const EnergyMap& F, double sigma_sq,
                                 double lambda, double psi) {
  RiskInputs in;
  in.psi = psi;
  in.zeta_star = effective_regularization(profile, ell, lambda).zeta;
  in.F_ell_sq = F.count(ell) ? F.at(ell) : 0.0;
  in.F_tail_sq = staircase_plateau(F, ell);
  in.sigma_eps_sq = sigma_sq;
  in.lambda = lambda;
  in.mu_ell = profile.mass(ell);
  return risk_curves(in);
}

inline std::vector<DescentRow> descent_sweep(const DescentConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("need at least one trial");
  const auto profile = compute_profile(cfg.kernel, cfg.domain, default_profile_cutoff(cfg.domain, cfg.ell));
  const double b_ell = subspace_dim(cfg.domain, cfg.ell);
  const std::size_t cells = cfg.n_grid.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<double> test(cells), train(cells), rkhs(cells);
  parallel_for(cells, cfg.threads, [&](std::size_t c) {
    const std::size_t g = c / cfg.trials;
    const int t = static_cast<int>(c % cfg.trials);
    const auto target = draw_target(cfg.domain, cfg.F, cell_seed(cfg.seed, stream::target, g, t), std::sqrt(cfg.sigma_sq));
    const auto ds = sample_dataset(cfg.domain, cfg.n_grid[g], cell_seed(cfg.seed, stream::covariates, g, t));
    const auto y = draw_responses(target, ds, cell_seed(cfg.seed, stream::noise, g, t));
    const auto fit = fit_krr(ds, cfg.kernel, profile, cfg.lambda, y);
    test[c] = cfg.exact_risk ? test_error_exact(fit, target).total
                             : test_error_mc(fit, target, cfg.n_test, cell_seed(cfg.seed, stream::test_points, g, t)).estimate;
    train[c] = fit.train_error();
    rkhs[c] = fit.rkhs_norm() / static_cast<double>(fit.n());
  });
  std::vector<DescentRow> rows;
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    auto slice = [&](const std::vector<double>& v) {
      return mean_and_se(std::vector<double>(v.begin() + g * cfg.trials, v.begin() + (g + 1) * cfg.trials));
    };
    DescentRow row;
    row.n = cfg.n_grid[g];
    row.psi_hat = static_cast<double>(row.n) / b_ell;
    const auto te = slice(test), tr = slice(train), rk = slice(rkhs);
    row.test_mean = te.estimate;
    row.test_se = te.standard_error;
    row.train_mean = tr.estimate;
    row.train_se = tr.standard_error;
    row.rkhs_mean = rk.estimate;
    row.rkhs_se = rk.standard_error;
    const auto th = theory_for(profile, cfg.ell, cfg.F, cfg.sigma_sq, cfg.lambda, row.psi_hat);
    row.theory_test = th.r_test;
    row.theory_train = th.r_train;
    row.theory_rkhs = th.rkhs_density;
    rows.push_back(row);
  }
  return rows;
}

/// Mean exact (or Monte Carlo) test error over independent trials at one n.
inline MCEstimate risk_trials(const Domain& domain, const KernelSpec& kernel, const EnergyMap& F, double sigma_sq,
                              double lambda, Eigen::Index n, int trials, std::uint64_t seed, unsigned threads = 1) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  const auto profile = compute_profile(kernel, domain, default_profile_cutoff(domain, 2));
  std::vector<double> risk(static_cast<std::size_t>(trials));
  parallel_for(risk.size(), threads, [&](std::size_t t) {
    const auto target = draw_target(domain, F, cell_seed(seed, stream::target, 0, static_cast<int>(t)), std::sqrt(sigma_sq));
    const auto ds = sample_dataset(domain, n, cell_seed(seed, stream::covariates, 0, static_cast<int>(t)));
    const auto y = draw_responses(target, ds, cell_seed(seed, stream::noise, 0, static_cast<int>(t)));
    risk[t] = test_error_exact(fit_krr(ds, kernel, profile, lambda, y), target).total;
  });
  return mean_and_se(risk);
}

/// n = round(psi * B(d, l)) for each psi.
inline std::vector<Eigen::Index> n_grid_from_psi(const Domain& domain, int ell, const std::vector<double>& psis) {
  std::vector<Eigen::Index> out;
  for (double psi : psis) out.push_back(static_cast<Eigen::Index>(std::llround(psi * subspace_dim(domain, ell))));
  return out;
}

}  // namespace kmp
