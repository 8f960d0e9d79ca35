#pragma once

// Inner-product kernels h(<x, y>/d), their Gegenbauer coefficient profiles,
// kernel matrices and the degree-l polynomial approximation of H.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kmp/domains.hpp"
#include "kmp/gegenbauer.hpp"

namespace kmp {

enum class KernelKind { exponential, sphere_rbf, polynomial, tabulated };

struct KernelSpec {
  KernelKind kind = KernelKind::exponential;
  double rate = 1.0;   // exponential: h(t) = exp(rate * t)
  double gamma = 1.0;  // sphere_rbf: h(t) = exp(-gamma (2 - 2t))
  double a = 1.0, b = 0.0;
  int power = 1;       // polynomial: h(t) = (a t + b)^power
  std::vector<double> tab_mu;  // tabulated: h(t) = sum_k mu_k Q_k(d t)
  std::shared_ptr<const GegenbauerEvaluator> tab_eval;

  static KernelSpec exponential(double rate = 1.0) {
    KernelSpec k;
    k.kind = KernelKind::exponential;
    k.rate = rate;
    return k;
  }
  static KernelSpec sphere_rbf(double gamma) {
    KernelSpec k;
    k.kind = KernelKind::sphere_rbf;
    k.gamma = gamma;
    return k;
  }
  static KernelSpec polynomial(double a, double b, int power) {
    if (power < 0) throw std::invalid_argument("polynomial kernel power must be >= 0");
    KernelSpec k;
    k.kind = KernelKind::polynomial;
    k.a = a;
    k.b = b;
    k.power = power;
    return k;
  }
  static KernelSpec linear() { return polynomial(1.0, 0.0, 1); }
  /// Kernel defined directly by its masses mu_k on `domain`. May be non-PSD.
  static KernelSpec tabulated(const Domain& domain, std::vector<double> mu) {
    if (mu.empty()) throw std::invalid_argument("tabulated kernel needs at least one mass");
    KernelSpec k;
    k.kind = KernelKind::tabulated;
    k.tab_eval = std::make_shared<GegenbauerEvaluator>(domain, static_cast<int>(mu.size()) - 1);
    k.tab_mu = std::move(mu);
    return k;
  }

  double operator()(double s) const {
    switch (kind) {
      case KernelKind::exponential:
        return std::exp(rate * s);
      case KernelKind::sphere_rbf:
        return std::exp(-gamma * (2.0 - 2.0 * s));
      case KernelKind::polynomial:
        return std::pow(a * s + b, power);
      case KernelKind::tabulated: {
        const auto q = tab_eval->eval(s * tab_eval->domain().d);
        double h = 0.0;
        for (std::size_t k = 0; k < tab_mu.size(); ++k) h += tab_mu[k] * q[k];
        return h;
      }
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind) {
      case KernelKind::exponential: return "exponential";
      case KernelKind::sphere_rbf: return "sphere_rbf";
      case KernelKind::polynomial: return "polynomial";
      case KernelKind::tabulated: return "tabulated";
    }
    return "?";
  }
};

/// Gegenbauer coefficients xi_k and masses mu_k = xi_k B_k for k <= K.
struct CoefficientProfile {
  Domain domain{DomainKind::hypercube, 1};
  std::vector<double> xi;
  std::vector<double> mu;
  double h1 = 0.0;  // h(1) = sum over all k of mu_k

  int max_degree() const { return static_cast<int>(mu.size()) - 1; }

  double mass(int k) const {
    if (k < 0 || k > max_degree())
      throw std::out_of_range("profile degree " + std::to_string(k) + " not computed");
    return mu[k];
  }

  /// mu_{>l} = h(1) - sum_{k<=l} mu_k.
  double tail(int ell) const {
    double s = 0.0;
    for (int k = 0; k <= ell; ++k) s += mass(k);
    return h1 - s;
  }

  double min_xi() const {
    double m = xi.empty() ? 0.0 : xi[0];
    for (double v : xi) m = std::min(m, v);
    return m;
  }

  bool psd(double tol = 1e-9) const { return min_xi() >= -tol; }

  /// Hypercube masses mu_{d-k}, k = 0..l (needs K = d).
  std::vector<double> high_frequency_masses(int ell) const {
    if (!domain.is_hypercube() || max_degree() != domain.d)
      throw std::logic_error("high-frequency masses need a hypercube profile with K = d");
    std::vector<double> out;
    for (int k = 0; k <= ell; ++k) out.push_back(mu[domain.d - k]);
    return out;
  }
};

inline CoefficientProfile compute_profile(const KernelSpec& kernel, const Domain& domain,
                                          int max_k,
                                          int quadrature_order = kDefaultQuadratureOrder) {
  if (domain.is_hypercube() && max_k > domain.d)
    throw std::out_of_range("hypercube profile cutoff exceeds d");
  CoefficientProfile p;
  p.domain = domain;
  p.h1 = kernel(1.0);
  p.xi.assign(max_k + 1, 0.0);
  p.mu.assign(max_k + 1, 0.0);
  if (kernel.kind == KernelKind::tabulated) {
    if (!(kernel.tab_eval->domain() == domain))
      throw std::invalid_argument("tabulated kernel belongs to a different domain");
    for (int k = 0; k <= max_k && k < static_cast<int>(kernel.tab_mu.size()); ++k) {
      p.mu[k] = kernel.tab_mu[k];
      p.xi[k] = p.mu[k] / subspace_dim(domain, k);
    }
    return p;
  }
  const MarginalMeasure m = marginal_measure(domain, quadrature_order);
  const GegenbauerEvaluator ev(domain, max_k);
  std::vector<double> q(max_k + 1);
  std::vector<long double> acc(max_k + 1, 0.0L);
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const double t = m.nodes[i];
    const long double wh = static_cast<long double>(m.weights[i]) * kernel(t / domain.d);
    ev.eval_into(t, q);
    for (int k = 0; k <= max_k; ++k) acc[k] += wh * q[k];
  }
  for (int k = 0; k <= max_k; ++k) {
    p.xi[k] = static_cast<double>(acc[k]);
    p.mu[k] = static_cast<double>(acc[k] * static_cast<long double>(ev.dim(k)));
  }
  return p;
}

/// Default cutoff: min(d, l + 6) on the sphere, d on the hypercube.
inline int default_profile_cutoff(const Domain& domain, int ell) {
  return domain.is_hypercube() ? domain.d : std::min(domain.d, ell + 6);
}

inline nlohmann::json profile_to_json(const CoefficientProfile& p) {
  return {{"domain", to_string(p.domain.kind)},
          {"d", p.domain.d},
          {"K", p.max_degree()},
          {"xi", p.xi},
          {"mu", p.mu},
          {"h1", p.h1}};
}

inline CoefficientProfile profile_from_json(const nlohmann::json& j) {
  CoefficientProfile p;
  p.domain = Domain(domain_kind_from_string(j.at("domain").get<std::string>()), j.at("d").get<int>());
  p.xi = j.at("xi").get<std::vector<double>>();
  p.mu = j.at("mu").get<std::vector<double>>();
  p.h1 = j.at("h1").get<double>();
  if (p.xi.size() != p.mu.size() || static_cast<int>(p.mu.size()) != j.at("K").get<int>() + 1)
    throw std::invalid_argument("profile JSON: inconsistent K / xi / mu lengths");
  return p;
}

/// H_ij = h(<x_i, x_j>/d).
inline Eigen::MatrixXd kernel_matrix(const KernelSpec& kernel, const Dataset& ds) {
  const double d = ds.d();
  return map_gram(ds, [&](double t) { return kernel(t / d); });
}

/// h(<a_i, b_j>/d) for two point sets.
inline Eigen::MatrixXd kernel_cross(const KernelSpec& kernel, const Domain& domain,
                                    const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double d = domain.d;
  return map_inner_products(domain, a, b, [&](double t) { return kernel(t / d); });
}

/// Largest absolute eigenvalue of a symmetric matrix.
inline double op_norm_sym(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(m.rows() - 1)));
}

/// sum_{k<=l} mu_k Q_k + mu_{>l} I.
inline Eigen::MatrixXd poly_approx_matrix(const Dataset& ds, int ell,
                                          const CoefficientProfile& profile) {
  if (profile.max_degree() < ell) throw std::out_of_range("profile cutoff below l");
  const GegenbauerEvaluator ev(ds.domain, ell);
  const auto qs = gegenbauer_matrices(ds, ell, ev);
  Eigen::MatrixXd h = profile.tail(ell) * Eigen::MatrixXd::Identity(ds.n(), ds.n());
  for (int k = 0; k <= ell; ++k) h += profile.mu[k] * qs[k];
  return h;
}

/// ||H - Hbar_l||_op.
inline double poly_approx_defect(const KernelSpec& kernel, const Dataset& ds, int ell,
                                 const CoefficientProfile& profile) {
  if (!(profile.domain == ds.domain)) throw std::invalid_argument("profile domain mismatch");
  return op_norm_sym(kernel_matrix(kernel, ds) - poly_approx_matrix(ds, ell, profile));
}

struct EffectiveRegularization {
  double zeta;
  bool self_regularized;  // false when lambda = 0 and mu_{>l} = 0
};

/// zeta = (lambda + mu_{>l}) / mu_l.
inline EffectiveRegularization effective_regularization(const CoefficientProfile& profile,
                                                        int ell, double lambda) {
  const double mu_ell = profile.mass(ell);
  if (!(mu_ell > 0.0))
    throw std::domain_error("mu_l = " + std::to_string(mu_ell) +
                            " is not positive; kernel has no degree-l component");
  double tail = profile.tail(ell);
  if (std::abs(tail) < 1e-12 * std::max(1.0, std::abs(profile.h1))) tail = 0.0;
  const double zeta = (lambda + tail) / mu_ell;
  return {zeta, zeta > 0.0};
}

}  // namespace kmp
