#pragma once

// Experiment configuration: a flat JSON object. Every key is optional and has
// an explicit default; unknown keys and ill-typed values are rejected with the
// offending key in the message. to_json writes every field, so a sidecar alone
// replays a run.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmp/gauss_equiv.hpp"
#include "kmp/kernels.hpp"
#include "kmp/mp_asymptotics.hpp"

namespace kmp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { spectrum, krr, asymptotics, staircase, gauss };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::spectrum: return "spectrum";
    case Experiment::krr: return "krr";
    case Experiment::asymptotics: return "asymptotics";
    case Experiment::staircase: return "staircase";
    case Experiment::gauss: return "gauss";
  }
  return "?";
}

inline Experiment experiment_from_string(const std::string& s) {
  for (auto e : {Experiment::spectrum, Experiment::krr, Experiment::asymptotics, Experiment::staircase, Experiment::gauss})
    if (to_string(e) == s) return e;
  throw ConfigError("experiment: unknown value '" + s + "'");
}

/// points values from min to max, log-spaced if log is set. Endpoints included.
struct Grid {
  double min = 0.0, max = 0.0;
  int points = 0;
  bool log = false;

  std::vector<double> values() const {
    if (points < 1) throw ConfigError("grid needs at least one point");
    if (log && !(min > 0.0 && max > 0.0)) throw ConfigError("log grid needs positive endpoints");
    std::vector<double> v;
    for (int i = 0; i < points; ++i) {
      const double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
      v.push_back(log ? std::exp(std::log(min) + t * (std::log(max) - std::log(min))) : min + t * (max - min));
    }
    v.front() = min;
    if (points > 1) v.back() = max;
    return v;
  }
};

struct ExperimentConfig {
  Experiment experiment = Experiment::krr;
  DomainKind domain = DomainKind::hypercube;
  int d = 24;
  int ell = 2;

  std::string kernel = "exponential";  // exponential | sphere_rbf | polynomial | tabulated
  double kernel_rate = 1.0;
  double kernel_gamma = 1.0;
  double kernel_a = 1.0;
  double kernel_b = 0.0;
  int kernel_power = 2;
  std::vector<double> kernel_mu;

  double lambda = 1e-8;
  EnergyMap F{{2, 1.0}, {3, 0.1}};
  double sigma_sq = 0.3;

  std::vector<double> psi{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
  std::optional<Grid> psi_grid;  // overrides psi
  std::vector<std::int64_t> n;   // overrides psi for sample sizes when nonempty
  int trials = 20;
  std::uint64_t seed = 0;

  bool exact_risk = true;
  std::int64_t n_test = 20000;

  std::vector<double> zeta{0.05, 0.2, 1.0};

  std::vector<double> kappa;
  std::optional<Grid> kappa_grid;  // overrides kappa
  double window = 0.25;
  double log_scale = 0.0;
  std::vector<double> empirical_kappa;

  std::string tail = "fold_into_ridge";
  int K = -1;
  double p_tail_factor = 10.0;

  std::string output = "out";

  Domain make_domain() const { return Domain(domain, d); }

  KernelSpec make_kernel() const {
    if (kernel == "exponential") return KernelSpec::exponential(kernel_rate);
    if (kernel == "sphere_rbf") return KernelSpec::sphere_rbf(kernel_gamma);
    if (kernel == "polynomial") return KernelSpec::polynomial(kernel_a, kernel_b, kernel_power);
    if (kernel == "tabulated") return KernelSpec::tabulated(make_domain(), kernel_mu);
    throw ConfigError("kernel: unknown value '" + kernel + "'");
  }

  TailHandling tail_handling() const {
    if (tail == "fold_into_ridge") return TailHandling::fold_into_ridge;
    if (tail == "explicit_block") return TailHandling::explicit_block;
    throw ConfigError("tail: unknown value '" + tail + "'");
  }

  std::vector<double> psi_values() const { return psi_grid ? psi_grid->values() : psi; }
  std::vector<double> kappa_values() const { return kappa_grid ? kappa_grid->values() : kappa; }

  /// Sample sizes: n when given, else round(psi * B(d, l)).
  std::vector<Eigen::Index> sample_sizes() const {
    if (!n.empty()) return {n.begin(), n.end()};
    return n_grid_from_psi(make_domain(), ell, psi_values());
  }

  void validate() const {
    if (d < 1) throw ConfigError("d: must be >= 1");
    if (domain == DomainKind::hypercube && d > 64) throw ConfigError("d: hypercube supports d <= 64");
    if (domain == DomainKind::sphere && d < 2) throw ConfigError("d: sphere needs d >= 2");
    if (ell < 0 || ell > d) throw ConfigError("ell: must lie in [0, d]");
    if (!(lambda >= 0.0)) throw ConfigError("lambda: must be >= 0");
    if (!(sigma_sq >= 0.0)) throw ConfigError("sigma_sq: must be >= 0");
    if (trials < 1) throw ConfigError("trials: must be >= 1");
    if (n_test < 100) throw ConfigError("n_test: must be >= 100");
    for (const auto& [k, e] : F)
      if (k < 0 || !(e >= 0.0)) throw ConfigError("F: degrees and energies must be nonnegative");
    for (auto v : n)
      if (v < 1) throw ConfigError("n: sample sizes must be >= 1");
    for (double p : psi_values())
      if (!(p > 0.0)) throw ConfigError("psi: values must be positive");
    for (double z : zeta)
      if (!(z > 0.0)) throw ConfigError("zeta: values must be positive");
    if (kernel == "tabulated" && kernel_mu.empty()) throw ConfigError("kernel_mu: tabulated kernel needs masses");
    make_kernel();
    tail_handling();
  }
};

namespace detail {

template <class T>
T config_get(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(key + ": wrong type (" + std::string(j.type_name()) + ")");
  }
}

inline nlohmann::json grid_to_json(const Grid& g) {
  return {{"min", g.min}, {"max", g.max}, {"points", g.points}, {"log", g.log}};
}

inline Grid grid_from_json(const nlohmann::json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key + ": expected an object {min, max, points, log}");
  Grid g;
  for (const auto& [k, v] : j.items()) {
    const std::string name = key + "." + k;
    if (k == "min") g.min = config_get<double>(v, name);
    else if (k == "max") g.max = config_get<double>(v, name);
    else if (k == "points") g.points = config_get<int>(v, name);
    else if (k == "log") g.log = config_get<bool>(v, name);
    else throw ConfigError("unknown config key '" + name + "'");
  }
  return g;
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json F = nlohmann::json::object();
  for (const auto& [k, e] : c.F) F[std::to_string(k)] = e;
  nlohmann::json j = {{"experiment", to_string(c.experiment)},
                      {"domain", to_string(c.domain)},
                      {"d", c.d},
                      {"ell", c.ell},
                      {"kernel", c.kernel},
                      {"kernel_rate", c.kernel_rate},
                      {"kernel_gamma", c.kernel_gamma},
                      {"kernel_a", c.kernel_a},
                      {"kernel_b", c.kernel_b},
                      {"kernel_power", c.kernel_power},
                      {"kernel_mu", c.kernel_mu},
                      {"lambda", c.lambda},
                      {"F", F},
                      {"sigma_sq", c.sigma_sq},
                      {"psi", c.psi},
                      {"n", c.n},
                      {"trials", c.trials},
                      {"seed", c.seed},
                      {"exact_risk", c.exact_risk},
                      {"n_test", c.n_test},
                      {"zeta", c.zeta},
                      {"kappa", c.kappa},
                      {"window", c.window},
                      {"log_scale", c.log_scale},
                      {"empirical_kappa", c.empirical_kappa},
                      {"tail", c.tail},
                      {"K", c.K},
                      {"p_tail_factor", c.p_tail_factor},
                      {"output", c.output}};
  j["psi_grid"] = c.psi_grid ? detail::grid_to_json(*c.psi_grid) : nlohmann::json(nullptr);
  j["kappa_grid"] = c.kappa_grid ? detail::grid_to_json(*c.kappa_grid) : nlohmann::json(nullptr);
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::config_get;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "experiment") c.experiment = experiment_from_string(config_get<std::string>(v, key));
    else if (key == "domain") {
      try {
        c.domain = domain_kind_from_string(config_get<std::string>(v, key));
      } catch (const std::invalid_argument&) {
        throw ConfigError("domain: unknown value '" + v.get<std::string>() + "'");
      }
    }
    else if (key == "d") c.d = config_get<int>(v, key);
    else if (key == "ell") c.ell = config_get<int>(v, key);
    else if (key == "kernel") c.kernel = config_get<std::string>(v, key);
    else if (key == "kernel_rate") c.kernel_rate = config_get<double>(v, key);
    else if (key == "kernel_gamma") c.kernel_gamma = config_get<double>(v, key);
    else if (key == "kernel_a") c.kernel_a = config_get<double>(v, key);
    else if (key == "kernel_b") c.kernel_b = config_get<double>(v, key);
    else if (key == "kernel_power") c.kernel_power = config_get<int>(v, key);
    else if (key == "kernel_mu") c.kernel_mu = config_get<std::vector<double>>(v, key);
    else if (key == "lambda") c.lambda = config_get<double>(v, key);
    else if (key == "F") {
      if (!v.is_object()) throw ConfigError("F: expected an object mapping degree to energy");
      c.F.clear();
      for (const auto& [deg, e] : v.items()) {
        std::size_t pos = 0;
        int k = -1;
        try {
          k = std::stoi(deg, &pos);
        } catch (const std::exception&) {
          pos = 0;
        }
        if (pos != deg.size() || pos == 0) throw ConfigError("F: degree key '" + deg + "' is not an integer");
        c.F[k] = config_get<double>(e, "F." + deg);
      }
    }
    else if (key == "sigma_sq") c.sigma_sq = config_get<double>(v, key);
    else if (key == "psi") c.psi = config_get<std::vector<double>>(v, key);
    else if (key == "psi_grid") c.psi_grid = v.is_null() ? std::nullopt : std::optional(detail::grid_from_json(v, key));
    else if (key == "n") c.n = config_get<std::vector<std::int64_t>>(v, key);
    else if (key == "trials") c.trials = config_get<int>(v, key);
    else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
      c.seed = v.get<std::uint64_t>();
    }
    else if (key == "exact_risk") c.exact_risk = config_get<bool>(v, key);
    else if (key == "n_test") c.n_test = config_get<std::int64_t>(v, key);
    else if (key == "zeta") c.zeta = config_get<std::vector<double>>(v, key);
    else if (key == "kappa") c.kappa = config_get<std::vector<double>>(v, key);
    else if (key == "kappa_grid") c.kappa_grid = v.is_null() ? std::nullopt : std::optional(detail::grid_from_json(v, key));
    else if (key == "window") c.window = config_get<double>(v, key);
    else if (key == "log_scale") c.log_scale = config_get<double>(v, key);
    else if (key == "empirical_kappa") c.empirical_kappa = config_get<std::vector<double>>(v, key);
    else if (key == "tail") c.tail = config_get<std::string>(v, key);
    else if (key == "K") c.K = config_get<int>(v, key);
    else if (key == "p_tail_factor") c.p_tail_factor = config_get<double>(v, key);
    else if (key == "output") c.output = config_get<std::string>(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

inline ExperimentConfig config_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace kmp
