#pragma once

// Data domains: the sphere of radius sqrt(d) and the hypercube {-1,+1}^d.
// Sampling, Gram matrices, eigenspace dimensions and the one-dimensional
// marginal of <1, x> used for kernel coefficient quadrature.

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kmp {

enum class DomainKind { sphere, hypercube };

inline std::string to_string(DomainKind kind) {
  return kind == DomainKind::sphere ? "sphere" : "hypercube";
}

inline DomainKind domain_kind_from_string(const std::string& name) {
  if (name == "sphere") return DomainKind::sphere;
  if (name == "hypercube") return DomainKind::hypercube;
  throw std::invalid_argument("unknown domain '" + name + "'");
}

struct Domain {
  DomainKind kind;
  int d;

  Domain(DomainKind k, int dim) : kind(k), d(dim) {
    if (kind == DomainKind::sphere && d < 3)
      throw std::invalid_argument("sphere domain requires d >= 3");
    if (kind == DomainKind::hypercube && d < 1)
      throw std::invalid_argument("hypercube domain requires d >= 1");
  }

  static Domain sphere(int d) { return {DomainKind::sphere, d}; }
  static Domain hypercube(int d) { return {DomainKind::hypercube, d}; }

  bool is_sphere() const { return kind == DomainKind::sphere; }
  bool is_hypercube() const { return kind == DomainKind::hypercube; }

  friend bool operator==(const Domain&, const Domain&) = default;
};

// ---------------------------------------------------------------------------
// Seeds

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based sub-seed: seed for cell `index` of stream `stream` under
/// `master`. Depends only on the three integers, never on evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ (stream * 0xD1B54A32D192ED03ULL)) ^
                    (index + 0x8CB92BA72F3D8DD7ULL));
}

// Stream tags used with derive_seed across the library.
namespace stream {
inline constexpr std::uint64_t covariates = 1;
inline constexpr std::uint64_t target = 2;
inline constexpr std::uint64_t noise = 3;
inline constexpr std::uint64_t test_points = 4;
inline constexpr std::uint64_t gaussian_design = 5;
inline constexpr std::uint64_t trial = 6;
}  // namespace stream

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Combinatorics

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<double>(r < 1e18L ? std::round(r) : r);
}

/// Exact binomial coefficient for n <= 126.
inline __int128 binomial_exact(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  __int128 r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// Dimension B(A_d, k) of the degree-k eigenspace.
inline double subspace_dim(const Domain& domain, int k) {
  if (k < 0) throw std::invalid_argument("degree must be nonnegative");
  const int d = domain.d;
  if (domain.is_hypercube()) {
    if (k > d)
      throw std::out_of_range("hypercube degree " + std::to_string(k) + " exceeds d = " +
                              std::to_string(d));
    return binomial(d, k);
  }
  if (k == 0) return 1.0;
  // (2k + d - 2)/(d - 2) * C(k + d - 3, k)
  long double c = 1.0L;
  for (int i = 1; i <= k; ++i) c = c * (d - 3 + i) / i;
  return static_cast<double>(c * (2.0L * k + d - 2) / (d - 2));
}

/// Sum of subspace dimensions for degrees 0..k.
inline double subspace_dim_upto(const Domain& domain, int k) {
  double total = 0.0;
  for (int j = 0; j <= k; ++j) total += subspace_dim(domain, j);
  return total;
}

// ---------------------------------------------------------------------------
// Datasets

struct Dataset {
  Domain domain;
  Eigen::MatrixXd points;  // n x d
  std::uint64_t seed = 0;

  Eigen::Index n() const { return points.rows(); }
  int d() const { return domain.d; }
};

/// Uniform i.i.d. rows on the domain. Sphere rows are Gaussian vectors
/// rescaled to norm sqrt(d).
inline Dataset sample_dataset(const Domain& domain, Eigen::Index n, std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("sample count must be nonnegative");
  Dataset ds{domain, Eigen::MatrixXd(n, domain.d), seed};
  Rng rng(seed);
  if (domain.is_hypercube()) {
    std::bernoulli_distribution coin(0.5);
    for (Eigen::Index i = 0; i < n; ++i)
      for (int j = 0; j < domain.d; ++j) ds.points(i, j) = coin(rng) ? 1.0 : -1.0;
  } else {
    std::normal_distribution<double> normal;
    const double radius = std::sqrt(static_cast<double>(domain.d));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < domain.d; ++j) ds.points(i, j) = normal(rng);
      ds.points.row(i) *= radius / ds.points.row(i).norm();
    }
  }
  return ds;
}

/// T_ij = <x_i, x_j>.
inline Eigen::MatrixXd gram(const Dataset& ds) {
  Eigen::MatrixXd g = ds.points * ds.points.transpose();
  if (ds.domain.is_hypercube()) g.diagonal().setConstant(ds.d());
  return g;
}

/// Cross inner products <a_i, b_j>.
inline Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a * b.transpose();
}

// Hypercube points as bitmasks: bit i set iff x_i = -1. Requires d <= 64.
inline std::uint64_t hypercube_mask(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  std::uint64_t m = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x(i) < 0) m |= (std::uint64_t{1} << i);
  return m;
}

inline std::vector<std::uint64_t> hypercube_masks(const Eigen::MatrixXd& points) {
  if (points.cols() > 64) throw std::invalid_argument("bitmask representation needs d <= 64");
  std::vector<std::uint64_t> masks(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) masks[i] = hypercube_mask(points.row(i));
  return masks;
}

/// Atom index j with <x, y> = d - 2j.
inline int hypercube_atom(std::uint64_t mx, std::uint64_t my) {
  return std::popcount(mx ^ my);
}

/// Matrix of atom indices (<x_i,x_j> = d - 2*J_ij) for hypercube points.
inline Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> hypercube_atom_matrix(
    const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> j(a.size(), b.size());
  for (std::size_t c = 0; c < b.size(); ++c)
    for (std::size_t r = 0; r < a.size(); ++r)
      j(r, c) = static_cast<std::uint8_t>(hypercube_atom(a[r], b[c]));
  return j;
}

// ---------------------------------------------------------------------------
// Marginal measure of t = <1, x> (hypercube) or t = sqrt(d) x_1 (sphere).

struct MarginalMeasure {
  std::vector<double> nodes;
  std::vector<double> weights;
  bool exact = false;
};

/// Gauss rule for the probability weight proportional to (1 - s^2)^(lambda - 1/2)
/// on [-1, 1] via Golub-Welsch on the orthonormal Gegenbauer Jacobi matrix.
inline MarginalMeasure gauss_gegenbauer_rule(double lambda, int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd off(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) {
    const double kk = k;
    off(k - 1) = std::sqrt(kk * (kk + 2.0 * lambda - 1.0) /
                           (4.0 * (kk + lambda) * (kk + lambda - 1.0)));
  }
  MarginalMeasure rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  if (order == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 1.0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  const Eigen::MatrixXd& v = solver.eigenvectors();
  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    rule.weights[i] = v(0, i) * v(0, i);
    total += rule.weights[i];
  }
  for (double& w : rule.weights) w /= total;
  return rule;
}

inline constexpr int kDefaultQuadratureOrder = 200;

inline MarginalMeasure marginal_measure(const Domain& domain,
                                        int quadrature_order = kDefaultQuadratureOrder) {
  const int d = domain.d;
  if (domain.is_hypercube()) {
    MarginalMeasure m;
    m.exact = true;
    m.nodes.resize(d + 1);
    m.weights.resize(d + 1);
    const long double scale = std::ldexp(1.0L, -d);
    for (int j = 0; j <= d; ++j) {
      m.nodes[j] = d - 2.0 * j;
      m.weights[j] = static_cast<double>(static_cast<long double>(binomial_exact(d, j)) * scale);
    }
    return m;
  }
  // Density of s = t/d is proportional to (1 - s^2)^((d-3)/2): Gegenbauer lambda = (d-2)/2.
  MarginalMeasure m = gauss_gegenbauer_rule(0.5 * (d - 2), quadrature_order);
  for (double& s : m.nodes) s *= d;
  return m;
}

}  // namespace kmp
