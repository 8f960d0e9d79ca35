#pragma once

// Marchenko-Pastur law, its Stieltjes transform at negative arguments, and the
// closed-form bias / variance / risk curves of kernel ridge regression in the
// polynomial regime n ~ psi * B(d, l).

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "kmp/kernels.hpp"

namespace kmp {

namespace detail {

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(name) + " must be positive and finite, got " + std::to_string(v));
}

template <class F>
double gk_integrate(F&& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-11);
}

}  // namespace detail

/// Marchenko-Pastur law with aspect ratio psi: atom (1 - 1/psi)_+ at zero plus
/// a bulk on [(1 - sqrt(psi))^2, (1 + sqrt(psi))^2].
class MPLaw {
 public:
  explicit MPLaw(double psi) : psi_(psi) {
    detail::require_positive(psi, "psi");
    const double s = std::sqrt(psi);
    lo_ = (1.0 - s) * (1.0 - s);
    hi_ = (1.0 + s) * (1.0 + s);
  }

  double psi() const { return psi_; }
  double lower_edge() const { return lo_; }
  double upper_edge() const { return hi_; }
  double atom() const { return psi_ > 1.0 ? 1.0 - 1.0 / psi_ : 0.0; }

  /// Bulk density (the atom is excluded).
  double density(double x) const {
    if (x <= lo_ || x >= hi_ || x <= 0.0) return 0.0;
    return std::sqrt((hi_ - x) * (x - lo_)) / (2.0 * M_PI * psi_ * x);
  }

  double cdf(double x) const {
    if (x < 0.0) return 0.0;
    if (x >= hi_) return 1.0;
    if (x <= lo_) return atom();
    const auto one = [](double) { return 1.0; };
    if (x <= mid()) return atom() + from_left(one, x);
    return 1.0 - from_right(one, x);
  }

  /// Integral of f against the full law (atom included).
  template <class F>
  double integrate(F&& f) const {
    return atom() * (atom() > 0.0 ? f(0.0) : 0.0) + from_left(f, mid()) + from_right(f, mid());
  }

  /// Generalized inverse of the cdf.
  double quantile(double p) const {
    if (p <= atom()) return 0.0;
    if (p >= 1.0) return hi_;
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve([&](double x) { return cdf(x) - p; }, lo_, hi_,
                                                     atom() - p, 1.0 - p, tol, iters);
    return 0.5 * (r.first + r.second);
  }

 private:
  double mid() const { return 0.5 * (lo_ + hi_); }

  // int_{lo}^{x} f dnu with x = lo + u^2 (x <= mid).
  template <class F>
  double from_left(F&& f, double x) const {
    const double w = hi_ - lo_, lo = lo_, c = 1.0 / (M_PI * psi_);
    const auto g = [&](double u) {
      const double u2 = u * u;
      const double ratio = lo > 0.0 ? u2 / (lo + u2) : 1.0;
      return f(lo + u2) * ratio * std::sqrt(std::max(w - u2, 0.0)) * c;
    };
    return detail::gk_integrate(g, 0.0, std::sqrt(std::max(x - lo_, 0.0)));
  }

  // int_{x}^{hi} f dnu with x = hi - v^2 (x >= mid).
  template <class F>
  double from_right(F&& f, double x) const {
    const double w = hi_ - lo_, hi = hi_, c = 1.0 / (M_PI * psi_);
    const auto g = [&](double v) {
      const double v2 = v * v;
      return f(hi - v2) * v2 * std::sqrt(std::max(w - v2, 0.0)) * c / (hi - v2);
    };
    return detail::gk_integrate(g, 0.0, std::sqrt(std::max(hi_ - x, 0.0)));
  }

  double psi_, lo_, hi_;
};

inline double mp_cdf(double psi, double x) { return MPLaw(psi).cdf(x); }

struct StieltjesPair {
  double r;        // r_psi(-zeta) = int (x + zeta)^{-1} dnu
  double r_prime;  // r'_psi(-zeta) = int (x + zeta)^{-2} dnu
};

/// Residual of -zeta psi r^2 + (psi - 1 - zeta) r + 1 = 0.
inline double stieltjes_residual(double psi, double zeta, double r) {
  return -zeta * psi * r * r + (psi - 1.0 - zeta) * r + 1.0;
}

inline StieltjesPair stieltjes_pair(double psi, double zeta) {
  detail::require_positive(psi, "psi");
  detail::require_positive(zeta, "zeta");
  const double s = std::sqrt(psi);
  const double disc = std::sqrt((zeta + (1.0 - s) * (1.0 - s)) * (zeta + (1.0 + s) * (1.0 + s)));
  const double a = 1.0 + zeta - psi;
  // positive root, written in whichever form avoids cancellation
  double r = a >= 0.0 ? 2.0 / (disc + a) : (disc - a) / (2.0 * zeta * psi);
  for (int it = 0; it < 2; ++it) {
    const double f = stieltjes_residual(psi, zeta, r);
    const double df = -2.0 * zeta * psi * r + (psi - 1.0 - zeta);
    if (df == 0.0) break;
    const double step = f / df;
    if (!std::isfinite(step) || std::abs(step) > 0.5 * r) break;
    r -= step;
  }
  const double rp = (r * r + psi * r * r * r) / (zeta * psi * r * r + 1.0);
  return {r, rp};
}

/// Bias curve 1 - psi + psi zeta^2 r'(-zeta).
inline double bias_curve(double psi, double zeta) {
  const auto p = stieltjes_pair(psi, zeta);
  return 1.0 - psi + psi * zeta * zeta * p.r_prime;
}

/// Variance curve psi [r(-zeta) - zeta r'(-zeta)].
inline double variance_curve(double psi, double zeta) {
  const auto p = stieltjes_pair(psi, zeta);
  return psi * (p.r - zeta * p.r_prime);
}

/// Variance curve as psi * d/dzeta [zeta r(-zeta)] by central differences.
inline double variance_curve_fd(double psi, double zeta, double rel_step = 1e-6) {
  const double h = rel_step * zeta;
  const auto g = [&](double z) { return z * stieltjes_pair(psi, z).r; };
  return psi * (g(zeta + h) - g(zeta - h)) / (2.0 * h);
}

struct RiskInputs {
  double psi = 1.0;
  double zeta_star = 1.0;
  double F_ell_sq = 1.0;
  double F_tail_sq = 0.0;
  double sigma_eps_sq = 0.0;
  double lambda = 0.0;
  double mu_ell = 1.0;
};

struct AsymptoticRisk {
  RiskInputs in;
  double r = 0.0;
  double r_prime = 0.0;
  double bias = 0.0;      // B(psi, zeta_*)
  double variance = 0.0;  // V(psi, zeta_*)
  double r_test = 0.0;
  double r_train = 0.0;
  double rkhs_density = 0.0;  // (1/n) a^T H a
};

inline AsymptoticRisk risk_curves(const RiskInputs& in) {
  detail::require_positive(in.mu_ell, "mu_ell");
  if (in.F_ell_sq < 0 || in.F_tail_sq < 0 || in.sigma_eps_sq < 0)
    throw std::invalid_argument("energies and noise variance must be nonnegative");
  AsymptoticRisk out;
  out.in = in;
  const double psi = in.psi, z = in.zeta_star;
  const auto p = stieltjes_pair(psi, z);
  out.r = p.r;
  out.r_prime = p.r_prime;
  out.bias = 1.0 - psi + psi * z * z * p.r_prime;
  out.variance = psi * (p.r - z * p.r_prime);
  const double noise = in.F_tail_sq + in.sigma_eps_sq;
  out.r_test = in.F_ell_sq * out.bias + noise * out.variance + in.F_tail_sq;
  const double lm = in.lambda / in.mu_ell;
  out.r_train = lm * lm * (in.F_ell_sq * (p.r - z * p.r_prime) + noise * p.r_prime);
  out.rkhs_density = in.F_ell_sq / in.mu_ell * (1.0 - z * p.r - lm * (p.r - z * p.r_prime)) +
                     noise / in.mu_ell * (p.r - lm * p.r_prime);
  return out;
}

// ---------------------------------------------------------------------------
// Staircase: n ~ d^kappa.

/// Energy per degree, keyed by degree k >= 0.
using EnergyMap = std::map<int, double>;

/// sum_{k > floor(kappa)} F_k^2.
inline double staircase_plateau(const EnergyMap& F, double kappa) {
  const int fl = static_cast<int>(std::floor(kappa));
  double s = 0.0;
  for (const auto& [k, e] : F)
    if (k > fl) s += e;
  return s;
}

/// Level-l risk at psi: F_l^2 B + (F_{>l}^2 + sigma^2) V + F_{>l}^2.
inline AsymptoticRisk level_risk(const EnergyMap& F, const CoefficientProfile& profile, int ell,
                                 double lambda, double sigma_sq, double psi) {
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

struct StaircaseOptions {
  double window = 0.25;     // half-width of the inset around each integer l >= 1
  double log_scale = 0.0;   // psi = exp((kappa - l) * log_scale); 0 means log(d)
  double sigma_sq = 0.0;
};

struct StaircaseRow {
  double kappa;
  double r_test;
  double plateau;  // sum_{k > floor(kappa)} F_k^2
  int level;       // integer l of the inset, or -1 on a plateau
  double psi;      // NaN on a plateau
};

inline std::vector<StaircaseRow> staircase_curve(const EnergyMap& F, const CoefficientProfile& profile,
                                                 double lambda, const std::vector<double>& kappas,
                                                 StaircaseOptions opt = {}) {
  const double scale = opt.log_scale > 0.0 ? opt.log_scale : std::log(static_cast<double>(profile.domain.d));
  std::vector<StaircaseRow> rows;
  rows.reserve(kappas.size());
  for (double kappa : kappas) {
    detail::require_positive(kappa, "kappa");
    StaircaseRow row{kappa, 0.0, staircase_plateau(F, kappa), -1,
                     std::numeric_limits<double>::quiet_NaN()};
    const int ell = static_cast<int>(std::lround(kappa));
    if (ell >= 1 && std::abs(kappa - ell) < opt.window && ell <= profile.max_degree()) {
      row.level = ell;
      row.psi = std::exp((kappa - ell) * scale);
      row.r_test = level_risk(F, profile, ell, lambda, opt.sigma_sq, row.psi).r_test;
    } else {
      row.r_test = row.plateau;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace kmp
