#pragma once

// Ridge regression on Gaussian covariates with the block covariance of the
// kernel's harmonic decomposition, its exact risk, and the paired comparison
// against kernel ridge regression.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "kmp/krr_engine.hpp"

namespace kmp {

enum class TailHandling { fold_into_ridge, explicit_block };

inline std::string to_string(TailHandling t) {
  return t == TailHandling::fold_into_ridge ? "fold_into_ridge" : "explicit_block";
}

/// Diagonal Gaussian design: coordinate 0 is the constant sqrt(mu_0), then
/// B_k coordinates of variance mu_k / B_k for 1 <= k <= K, then (explicit
/// tail only) p_tail coordinates of variance mu_{>K} / p_tail.
struct GaussianDesign {
  int K = 0;
  TailHandling tail = TailHandling::fold_into_ridge;
  Eigen::Index p_tail = 0;
  Eigen::VectorXd second_moment;  // E z_j^2 per coordinate
  std::vector<Eigen::Index> block_start;  // first coordinate of block k; block K+1 is the tail
  double tail_mass = 0.0;    // mu_{>K}
  double folded_mass = 0.0;  // added to the ridge (fold mode)
  Eigen::VectorXd theta_star;
  double folded_energy = 0.0;  // target energy not carried by theta_star
  double sigma_sq = 0.0;

  Eigen::Index dim() const { return second_moment.size(); }
  /// Sum of second moments plus the folded mass; equals h(1).
  double total_variance() const { return second_moment.sum() + folded_mass; }
};

/// Design from a coefficient profile with target coefficients
/// theta_ks = sqrt(B_k / mu_k) beta_ks, beta_ks ~ N(0, F_k^2 / B_k). Energy on
/// degrees the design cannot represent (k > K when folding, or mu_k = 0)
/// behaves as additive noise and is kept in folded_energy.
inline GaussianDesign make_gaussian_design(const CoefficientProfile& profile, int K, const EnergyMap& F,
                                           double sigma_sq, std::uint64_t seed,
                                           TailHandling tail = TailHandling::fold_into_ridge,
                                           Eigen::Index p_tail = 0) {
  if (K < 0 || K > profile.max_degree()) throw std::out_of_range("design cutoff K outside the profile");
  if (sigma_sq < 0.0) throw std::invalid_argument("noise variance must be nonnegative");
  if (!profile.psd()) throw std::invalid_argument("Gaussian design needs nonnegative masses");
  for (const auto& [k, e] : F)
    if (e < 0.0 || k < 0) throw std::invalid_argument("energies must be nonnegative on degrees >= 0");
  const Domain& dom = profile.domain;
  GaussianDesign g;
  g.K = K;
  g.tail = tail;
  g.sigma_sq = sigma_sq;
  g.tail_mass = std::max(profile.tail(K), 0.0);
  std::vector<Eigen::Index> sizes;
  for (int k = 0; k <= K; ++k) sizes.push_back(static_cast<Eigen::Index>(std::llround(subspace_dim(dom, k))));
  if (tail == TailHandling::explicit_block) {
    if (p_tail < 1) throw std::invalid_argument("explicit tail block needs p_tail >= 1");
    g.p_tail = p_tail;
    sizes.push_back(p_tail);
  } else {
    g.folded_mass = g.tail_mass;
  }
  Eigen::Index p = 0;
  for (auto s : sizes) {
    g.block_start.push_back(p);
    p += s;
  }
  g.second_moment.resize(p);
  g.theta_star = Eigen::VectorXd::Zero(p);
  auto energy = [&](int k) { return F.count(k) ? F.at(k) : 0.0; };
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    const bool is_tail = static_cast<int>(b) > K;
    const double mass = is_tail ? g.tail_mass : std::max(profile.mu[b], 0.0);
    double e = 0.0;
    if (is_tail) {
      for (const auto& [k, v] : F)
        if (k > K) e += v;
    } else {
      e = energy(static_cast<int>(b));
    }
    const double var = mass / static_cast<double>(sizes[b]);
    g.second_moment.segment(g.block_start[b], sizes[b]).setConstant(var);
    if (e == 0.0) continue;
    if (!(mass > 0.0)) {
      g.folded_energy += e;
      continue;
    }
    Rng rng(derive_seed(seed, stream::target, b));
    std::normal_distribution<double> normal(0.0, std::sqrt(e / static_cast<double>(sizes[b])));
    const double scale = std::sqrt(static_cast<double>(sizes[b]) / mass);
    for (Eigen::Index j = 0; j < sizes[b]; ++j) g.theta_star(g.block_start[b] + j) = scale * normal(rng);
  }
  if (tail == TailHandling::fold_into_ridge)
    for (const auto& [k, v] : F)
      if (k > K) g.folded_energy += v;
  return g;
}

/// n x p matrix with i.i.d. rows; the constant coordinate is sqrt(mu_0).
inline Eigen::MatrixXd sample_design_features(const GaussianDesign& g, Eigen::Index n, std::uint64_t seed) {
  Eigen::MatrixXd z(n, g.dim());
  Rng rng(derive_seed(seed, stream::gaussian_design, 0));
  std::normal_distribution<double> normal;
  z.col(0).setConstant(std::sqrt(g.second_moment(0)));
  for (Eigen::Index j = 1; j < g.dim(); ++j) {
    const double s = std::sqrt(g.second_moment(j));
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = s * normal(rng);
  }
  return z;
}

/// y = Z theta_* + noise with variance sigma^2 + folded_energy.
inline Eigen::VectorXd gauss_responses(const GaussianDesign& g, const Eigen::MatrixXd& z, std::uint64_t seed) {
  Eigen::VectorXd y = z * g.theta_star;
  const double sd = std::sqrt(g.sigma_sq + g.folded_energy);
  if (sd > 0.0) {
    Rng rng(derive_seed(seed, stream::noise, 0));
    std::normal_distribution<double> normal(0.0, sd);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += normal(rng);
  }
  return y;
}

struct GaussFit {
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd w;  // dual weights, theta_hat = Z^T w
  double residual = 0.0;
};

/// theta_hat = Z^T (Z Z^T + lambda I)^{-1} y.
inline GaussFit ridge_fit_gauss(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge parameter must be nonnegative");
  if (y.size() != z.rows()) throw std::invalid_argument("response length does not match design rows");
  GaussFit fit;
  Eigen::MatrixXd a = z * z.transpose();
  a.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw std::runtime_error("Z Z^T + lambda I is not numerically positive definite");
  fit.w = llt.solve(y);
  const double ynorm = y.norm();
  auto measure = [&] { fit.residual = ynorm > 0.0 ? (a * fit.w - y).norm() / ynorm : 0.0; };
  measure();
  for (int it = 0; it < 2 && fit.residual > 1e-12; ++it) {
    fit.w += llt.solve(y - a * fit.w);
    measure();
  }
  if (fit.residual > 1e-10)
    throw std::runtime_error("Gaussian ridge residual " + std::to_string(fit.residual) + " exceeds 1e-10");
  fit.theta_hat = z.transpose() * fit.w;
  return fit;
}

/// Ridge actually applied for a user ridge lambda (the folded tail adds mu_{>K}).
inline double effective_ridge(const GaussianDesign& g, double lambda) { return lambda + g.folded_mass; }

/// E_z <z, theta_* - theta_hat>^2 plus the folded target energy.
inline double gauss_risk(const Eigen::VectorXd& theta_hat, const GaussianDesign& g) {
  if (theta_hat.size() != g.dim()) throw std::invalid_argument("theta_hat dimension does not match the design");
  const Eigen::VectorXd e = g.theta_star - theta_hat;
  return e.cwiseProduct(e).dot(g.second_moment) + g.folded_energy;
}

// ---------------------------------------------------------------------------
// Equivalence report

struct EquivalenceConfig {
  Domain domain = Domain::hypercube(24);
  KernelSpec kernel = KernelSpec::exponential();
  int ell = 2;
  int K = -1;  // -1 means l + 1
  EnergyMap F{{2, 1.0}, {3, 0.1}};
  double sigma_sq = 0.3;
  double lambda = 1e-8;
  std::vector<Eigen::Index> n_grid;
  int trials = 20;
  std::uint64_t seed = 0;
  TailHandling tail = TailHandling::fold_into_ridge;
  double p_tail_factor = 10.0;  // explicit tail: p_tail = factor * n
  unsigned threads = 1;
};

struct EquivalenceRow {
  Eigen::Index n = 0;
  double psi_hat = 0.0;
  double krr_mean = 0.0, krr_se = 0.0;
  double gauss_mean = 0.0, gauss_se = 0.0;
  double theory = 0.0;

  double combined_se() const { return std::sqrt(krr_se * krr_se + gauss_se * gauss_se); }
};

/// One Gaussian-model trial at sample size n.
inline double gauss_trial(const CoefficientProfile& profile, const EquivalenceConfig& cfg, Eigen::Index n,
                          std::uint64_t seed) {
  const int K = cfg.K < 0 ? cfg.ell + 1 : cfg.K;
  const auto p_tail = static_cast<Eigen::Index>(std::llround(cfg.p_tail_factor * static_cast<double>(n)));
  const auto g = make_gaussian_design(profile, K, cfg.F, cfg.sigma_sq, seed, cfg.tail, p_tail);
  const auto z = sample_design_features(g, n, seed);
  const auto y = gauss_responses(g, z, seed);
  return gauss_risk(ridge_fit_gauss(z, y, effective_ridge(g, cfg.lambda)).theta_hat, g);
}

inline std::vector<EquivalenceRow> equivalence_report(const EquivalenceConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("need at least one trial");
  const int K = cfg.K < 0 ? cfg.ell + 1 : cfg.K;
  const auto profile = compute_profile(cfg.kernel, cfg.domain,
                                       std::max(default_profile_cutoff(cfg.domain, cfg.ell), K));
  const std::size_t cells = cfg.n_grid.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<double> krr(cells), gauss(cells);
  parallel_for(2 * cells, cfg.threads, [&](std::size_t job) {
    const std::size_t c = job / 2;
    const std::size_t gi = c / cfg.trials;
    const int t = static_cast<int>(c % cfg.trials);
    const Eigen::Index n = cfg.n_grid[gi];
    if (job % 2 == 0) {
      const auto target = draw_target(cfg.domain, cfg.F, cell_seed(cfg.seed, stream::target, gi, t),
                                      std::sqrt(cfg.sigma_sq));
      const auto ds = sample_dataset(cfg.domain, n, cell_seed(cfg.seed, stream::covariates, gi, t));
      const auto y = draw_responses(target, ds, cell_seed(cfg.seed, stream::noise, gi, t));
      krr[c] = test_error_exact(fit_krr(ds, cfg.kernel, profile, cfg.lambda, y), target).total;
    } else {
      gauss[c] = gauss_trial(profile, cfg, n, cell_seed(cfg.seed, stream::gaussian_design, gi, t));
    }
  });
  std::vector<EquivalenceRow> rows;
  const double b_ell = subspace_dim(cfg.domain, cfg.ell);
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    auto slice = [&](const std::vector<double>& v) {
      return mean_and_se(std::vector<double>(v.begin() + gi * cfg.trials, v.begin() + (gi + 1) * cfg.trials));
    };
    EquivalenceRow row;
    row.n = cfg.n_grid[gi];
    row.psi_hat = static_cast<double>(row.n) / b_ell;
    const auto k = slice(krr), g = slice(gauss);
    row.krr_mean = k.estimate;
    row.krr_se = k.standard_error;
    row.gauss_mean = g.estimate;
    row.gauss_se = g.standard_error;
    row.theory = theory_for(profile, cfg.ell, cfg.F, cfg.sigma_sq, cfg.lambda, row.psi_hat).r_test;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kmp
