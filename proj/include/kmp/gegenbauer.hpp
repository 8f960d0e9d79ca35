#pragma once

// Normalized Gegenbauer polynomials Q_k^{(d)} on [-d, d] with Q_k(d) = 1.
//
// Sphere: ultraspherical recurrence with parameter (d-2)/2 at s = t/d.
// Hypercube: normalized Krawtchouk polynomials, tabulated exactly on the
// d+1 atoms t = d - 2j with 128-bit integer arithmetic.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kmp/domains.hpp"

namespace kmp {

inline constexpr int kDefaultMaxDegree = 8;

class GegenbauerEvaluator {
 public:
  GegenbauerEvaluator(const Domain& domain, int max_degree = kDefaultMaxDegree)
      : domain_(domain), max_degree_(max_degree) {
    if (max_degree < 0) throw std::invalid_argument("max degree must be nonnegative");
    if (domain.is_hypercube()) {
      if (max_degree > domain.d)
        throw std::out_of_range("hypercube Gegenbauer degree " + std::to_string(max_degree) +
                                " exceeds d = " + std::to_string(domain.d));
      build_atom_table();
    }
    dims_.resize(max_degree + 1);
    for (int k = 0; k <= max_degree; ++k) dims_[k] = subspace_dim(domain, k);
  }

  const Domain& domain() const { return domain_; }
  int max_degree() const { return max_degree_; }
  double dim(int k) const { return dims_.at(k); }

  /// Q_0(t), ..., Q_K(t) into `out` (size >= K+1).
  void eval_into(double t, std::span<double> out) const {
    const int d = domain_.d;
    if (std::abs(t) > d * (1.0 + 1e-12))
      throw std::domain_error("Gegenbauer argument " + std::to_string(t) + " outside [-" +
                              std::to_string(d) + ", " + std::to_string(d) + "]");
    if (domain_.is_hypercube()) {
      const double jd = 0.5 * (d - t);
      const double jr = std::round(jd);
      if (std::abs(jd - jr) < 1e-9) {
        const auto j = static_cast<std::size_t>(jr);
        for (int k = 0; k <= max_degree_; ++k) out[k] = atom_table_[j * stride() + k];
        return;
      }
      recurrence_hypercube(t, out);
      return;
    }
    recurrence_sphere(t, out);
  }

  std::vector<double> eval(double t) const {
    std::vector<double> out(max_degree_ + 1);
    eval_into(t, out);
    return out;
  }

  double eval(int k, double t) const { return eval(t).at(k); }

  /// Q_k(d - 2j) on the hypercube atoms.
  double atom(int j, int k) const { return atom_table_[static_cast<std::size_t>(j) * stride() + k]; }

 private:
  std::size_t stride() const { return static_cast<std::size_t>(max_degree_) + 1; }

  void recurrence_sphere(double t, std::span<double> out) const {
    const double lambda = 0.5 * (domain_.d - 2);
    const double s = t / domain_.d;
    out[0] = 1.0;
    if (max_degree_ == 0) return;
    out[1] = s;
    for (int k = 1; k < max_degree_; ++k)
      out[k + 1] = (2.0 * (k + lambda) * s * out[k] - k * out[k - 1]) / (k + 2.0 * lambda);
  }

  void recurrence_hypercube(double t, std::span<double> out) const {
    const int d = domain_.d;
    out[0] = 1.0;
    if (max_degree_ == 0) return;
    out[1] = t / d;
    for (int k = 1; k < max_degree_; ++k) out[k + 1] = (t * out[k] - k * out[k - 1]) / (d - k);
  }

  void build_atom_table() {
    const int d = domain_.d;
    atom_table_.assign(static_cast<std::size_t>(d + 1) * stride(), 0.0);
    if (d <= 64) {
      for (int j = 0; j <= d; ++j) {
        for (int k = 0; k <= max_degree_; ++k) {
          // K_k(j) = sum_i (-1)^i C(j, i) C(d - j, k - i)
          __int128 kraw = 0;
          for (int i = 0; i <= std::min(j, k); ++i) {
            const __int128 term = binomial_exact(j, i) * binomial_exact(d - j, k - i);
            kraw += (i % 2 == 0) ? term : -term;
          }
          const long double q = static_cast<long double>(kraw) /
                                static_cast<long double>(binomial_exact(d, k));
          atom_table_[static_cast<std::size_t>(j) * stride() + k] = static_cast<double>(q);
        }
      }
      return;
    }
    // Beyond 64 coordinates fall back to the long-double recurrence on the atoms.
    for (int j = 0; j <= d; ++j) {
      const long double t = d - 2.0L * j;
      long double prev = 1.0L, cur = t / d;
      atom_table_[static_cast<std::size_t>(j) * stride()] = 1.0;
      if (max_degree_ >= 1) atom_table_[static_cast<std::size_t>(j) * stride() + 1] =
          static_cast<double>(cur);
      for (int k = 1; k < max_degree_; ++k) {
        const long double next = (t * cur - k * prev) / (d - k);
        prev = cur;
        cur = next;
        atom_table_[static_cast<std::size_t>(j) * stride() + k + 1] = static_cast<double>(cur);
      }
    }
  }

  Domain domain_;
  int max_degree_;
  std::vector<double> dims_;
  std::vector<double> atom_table_;  // (d+1) x (K+1), hypercube only
};

// ---------------------------------------------------------------------------
// Entrywise maps over inner-product matrices

/// M_ij = f(<a_i, b_j>) for points on the same domain. On the hypercube f is
/// evaluated once per atom.
template <class F>
Eigen::MatrixXd map_inner_products(const Domain& domain, const Eigen::MatrixXd& a,
                                   const Eigen::MatrixXd& b, F&& f) {
  Eigen::MatrixXd out(a.rows(), b.rows());
  if (domain.is_hypercube() && domain.d <= 64) {
    std::vector<double> table(domain.d + 1);
    for (int j = 0; j <= domain.d; ++j) table[j] = f(static_cast<double>(domain.d - 2 * j));
    const auto ma = hypercube_masks(a);
    const auto mb = hypercube_masks(b);
    for (Eigen::Index c = 0; c < b.rows(); ++c)
      for (Eigen::Index r = 0; r < a.rows(); ++r) out(r, c) = table[hypercube_atom(ma[r], mb[c])];
    return out;
  }
  const Eigen::MatrixXd g = a * b.transpose();
  const double d = domain.d;
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) out(r, c) = f(std::clamp(g(r, c), -d, d));
  return out;
}

/// Symmetric version over one dataset; the diagonal is evaluated at t = d.
template <class F>
Eigen::MatrixXd map_gram(const Dataset& ds, F&& f) {
  const Eigen::Index n = ds.n();
  if (ds.domain.is_hypercube() && ds.d() <= 64)
    return map_inner_products(ds.domain, ds.points, ds.points, std::forward<F>(f));
  Eigen::MatrixXd out(n, n);
  const Eigen::MatrixXd g = gram(ds);
  const double d = ds.d();
  for (Eigen::Index c = 0; c < n; ++c) {
    out(c, c) = f(d);
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const double v = f(std::clamp(g(r, c), -d, d));
      out(r, c) = v;
      out(c, r) = v;
    }
  }
  return out;
}

/// Q_k applied entrywise to the Gram matrix of `ds`.
inline Eigen::MatrixXd gegenbauer_matrix(const Dataset& ds, int k,
                                         const GegenbauerEvaluator& ev) {
  if (k > ev.max_degree()) throw std::out_of_range("degree exceeds evaluator max degree");
  std::vector<double> buf(ev.max_degree() + 1);
  return map_gram(ds, [&](double t) {
    ev.eval_into(t, buf);
    return buf[k];
  });
}

inline Eigen::MatrixXd gegenbauer_matrix(const Dataset& ds, int k) {
  return gegenbauer_matrix(ds, k, GegenbauerEvaluator(ds.domain, k));
}

/// All of Q_0..Q_K in one pass over the Gram entries.
inline std::vector<Eigen::MatrixXd> gegenbauer_matrices(const Dataset& ds, int max_k,
                                                        const GegenbauerEvaluator& ev) {
  if (max_k > ev.max_degree()) throw std::out_of_range("degree exceeds evaluator max degree");
  const Eigen::Index n = ds.n();
  std::vector<Eigen::MatrixXd> out(max_k + 1, Eigen::MatrixXd(n, n));
  std::vector<double> buf(ev.max_degree() + 1);
  if (ds.domain.is_hypercube() && ds.d() <= 64) {
    const auto m = hypercube_masks(ds.points);
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r) {
        const int j = hypercube_atom(m[r], m[c]);
        for (int k = 0; k <= max_k; ++k) out[k](r, c) = ev.atom(j, k);
      }
    return out;
  }
  const Eigen::MatrixXd g = gram(ds);
  const double d = ds.d();
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = c; r < n; ++r) {
      ev.eval_into(r == c ? d : std::clamp(g(r, c), -d, d), buf);
      for (int k = 0; k <= max_k; ++k) {
        out[k](r, c) = buf[k];
        out[k](c, r) = buf[k];
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Self-tests

/// max_{k,l <= K} |B_k * <Q_k, Q_l>_mu - delta_kl|.
inline double orthonormality_defect(const Domain& domain, int max_k,
                                    int quadrature_order = kDefaultQuadratureOrder) {
  if (domain.is_sphere() && quadrature_order < max_k + 1)
    throw std::invalid_argument("quadrature order must be at least K + 1");
  const MarginalMeasure mu = marginal_measure(domain, quadrature_order);
  const GegenbauerEvaluator ev(domain, max_k);
  Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(max_k + 1, max_k + 1);
  std::vector<double> q(max_k + 1);
  for (std::size_t i = 0; i < mu.nodes.size(); ++i) {
    ev.eval_into(mu.nodes[i], q);
    for (int k = 0; k <= max_k; ++k)
      for (int l = 0; l <= max_k; ++l) inner(k, l) += mu.weights[i] * q[k] * q[l];
  }
  double worst = 0.0;
  for (int k = 0; k <= max_k; ++k)
    for (int l = 0; l <= max_k; ++l)
      worst = std::max(worst, std::abs(ev.dim(k) * inner(k, l) - (k == l ? 1.0 : 0.0)));
  return worst;
}

/// Coefficients (in t, lowest degree first) of Q_0..Q_K.
inline std::vector<std::vector<long double>> gegenbauer_coefficients(const Domain& domain,
                                                                     int max_k) {
  const long double d = domain.d;
  std::vector<std::vector<long double>> c(max_k + 1);
  c[0] = {1.0L};
  if (max_k == 0) return c;
  c[1] = {0.0L, 1.0L / d};
  const long double lambda = 0.5L * (d - 2);
  for (int k = 1; k < max_k; ++k) {
    std::vector<long double> next(k + 2, 0.0L);
    long double a, b;  // Q_{k+1} = a t Q_k - b Q_{k-1}
    if (domain.is_sphere()) {
      a = 2.0L * (k + lambda) / (d * (k + 2.0L * lambda));
      b = k / (k + 2.0L * lambda);
    } else {
      a = 1.0L / (d - k);
      b = k / (d - k);
    }
    for (int m = 0; m <= k; ++m) next[m + 1] += a * c[k][m];
    for (int m = 0; m <= k - 1; ++m) next[m] -= b * c[k - 1][m];
    c[k + 1] = std::move(next);
  }
  return c;
}

/// Max coefficient gap between sqrt(B_k) Q_k(sqrt(d) x) and He_k(x)/sqrt(k!).
inline double hermite_limit_defect(int k, int d, DomainKind kind = DomainKind::sphere) {
  if (k < 0 || k > 6) throw std::invalid_argument("hermite_limit_defect supports 0 <= k <= 6");
  const Domain domain(kind, d);
  if (k == 0) return 0.0;
  const auto q = gegenbauer_coefficients(domain, k)[k];
  // Probabilists' Hermite: He_{m+1} = x He_m - m He_{m-1}.
  std::vector<std::vector<long double>> he(k + 1);
  he[0] = {1.0L};
  he[1] = {0.0L, 1.0L};
  for (int m = 1; m < k; ++m) {
    std::vector<long double> next(m + 2, 0.0L);
    for (int i = 0; i <= m; ++i) next[i + 1] += he[m][i];
    for (int i = 0; i <= m - 1; ++i) next[i] -= m * he[m - 1][i];
    he[m + 1] = std::move(next);
  }
  long double factorial = 1.0L;
  for (int i = 2; i <= k; ++i) factorial *= i;
  const long double root_b = std::sqrt(static_cast<long double>(subspace_dim(domain, k)));
  const long double root_d = std::sqrt(static_cast<long double>(d));
  long double worst = 0.0L, scale = 1.0L;
  for (int m = 0; m <= k; ++m) {
    const long double lhs = root_b * q[m] * scale;
    const long double rhs = he[k][m] / std::sqrt(factorial);
    worst = std::max(worst, std::abs(lhs - rhs));
    scale *= root_d;
  }
  return static_cast<double>(worst);
}

}  // namespace kmp
