#pragma once

// Experiment runners: each turns a config into one output table. Rows are
// assembled in grid order after all cells finish, so the table does not depend
// on the thread count.

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmp/config.hpp"
#include "kmp/gauss_equiv.hpp"
#include "kmp/io.hpp"
#include "kmp/krr_engine.hpp"
#include "kmp/mp_asymptotics.hpp"
#include "kmp/parallel.hpp"
#include "kmp/spectrum_lab.hpp"

namespace kmp {

struct RunResult {
  Table table;
  nlohmann::json columns;  // column name -> meaning
};

inline RunResult run_spectrum(const ExperimentConfig& cfg, unsigned threads) {
  const Domain dom = cfg.make_domain();
  const auto ns = cfg.sample_sizes();
  const std::size_t cells = ns.size() * static_cast<std::size_t>(cfg.trials);
  std::vector<SpectrumReport> reports(cells);
  parallel_for(cells, threads, [&](std::size_t c) {
    const std::size_t g = c / cfg.trials;
    const int t = static_cast<int>(c % cfg.trials);
    reports[c] = spectrum_report(sample_dataset(dom, ns[g], cell_seed(cfg.seed, stream::covariates, g, t)), cfg.ell);
  });
  RunResult r{Table({"n", "psi_hat", "trial", "ks", "trace_mean", "index", "eigenvalue"}),
              {{"n", "sample size"},
               {"psi_hat", "n / B(d, l)"},
               {"trial", "trial index within the grid point"},
               {"ks", "Kolmogorov-Smirnov distance of the trial's spectrum to Marchenko-Pastur(psi_hat)"},
               {"trace_mean", "(1/n) Tr Q_l"},
               {"index", "eigenvalue rank, ascending"},
               {"eigenvalue", "eigenvalue of the Gegenbauer matrix Q_l"}}};
  for (std::size_t c = 0; c < cells; ++c) {
    const auto& rep = reports[c];
    const int t = static_cast<int>(c % cfg.trials);
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i)
      r.table.add(rep.n, rep.psi_hat, t, rep.ks, rep.trace_mean, i, rep.eigenvalues[i]);
  }
  return r;
}

inline RunResult run_krr(const ExperimentConfig& cfg, unsigned threads) {
  DescentConfig dc;
  dc.domain = cfg.make_domain();
  dc.kernel = cfg.make_kernel();
  dc.ell = cfg.ell;
  dc.F = cfg.F;
  dc.sigma_sq = cfg.sigma_sq;
  dc.lambda = cfg.lambda;
  dc.n_grid = cfg.sample_sizes();
  dc.trials = cfg.trials;
  dc.seed = cfg.seed;
  dc.exact_risk = cfg.exact_risk;
  dc.n_test = static_cast<std::size_t>(cfg.n_test);
  dc.threads = threads;
  RunResult r{Table({"n", "psi_hat", "test_mean", "test_se", "train_mean", "train_se", "rkhs_mean", "rkhs_se",
                     "theory_test", "theory_train", "theory_rkhs"}),
              {{"n", "sample size"},
               {"psi_hat", "n / B(d, l)"},
               {"test_mean", "mean test error over trials"},
               {"test_se", "standard error of test_mean"},
               {"train_mean", "mean training error lambda^2 ||a||^2 / n"},
               {"train_se", "standard error of train_mean"},
               {"rkhs_mean", "mean of a^T H a / n"},
               {"rkhs_se", "standard error of rkhs_mean"},
               {"theory_test", "closed-form test error at psi_hat"},
               {"theory_train", "closed-form training error at psi_hat"},
               {"theory_rkhs", "closed-form RKHS norm / n at psi_hat"}}};
  for (const auto& row : descent_sweep(dc))
    r.table.add(row.n, row.psi_hat, row.test_mean, row.test_se, row.train_mean, row.train_se, row.rkhs_mean,
                row.rkhs_se, row.theory_test, row.theory_train, row.theory_rkhs);
  return r;
}

inline RunResult run_asymptotics(const ExperimentConfig& cfg) {
  RunResult r{Table({"zeta", "psi", "r", "r_prime", "bias", "variance", "r_test"}),
              {{"zeta", "effective regularization"},
               {"psi", "sample ratio n / B(d, l)"},
               {"r", "Stieltjes transform of Marchenko-Pastur at -zeta"},
               {"r_prime", "its derivative at -zeta"},
               {"bias", "bias curve"},
               {"variance", "variance curve"},
               {"r_test", "F_l^2 bias + (F_tail^2 + sigma^2) variance + F_tail^2"}}};
  const double f_ell = cfg.F.count(cfg.ell) ? cfg.F.at(cfg.ell) : 0.0;
  const double f_tail = staircase_plateau(cfg.F, cfg.ell);
  for (double zeta : cfg.zeta)
    for (double psi : cfg.psi_values()) {
      RiskInputs in;
      in.psi = psi;
      in.zeta_star = zeta;
      in.F_ell_sq = f_ell;
      in.F_tail_sq = f_tail;
      in.sigma_eps_sq = cfg.sigma_sq;
      const auto a = risk_curves(in);
      r.table.add(zeta, psi, a.r, a.r_prime, a.bias, a.variance, a.r_test);
    }
  return r;
}

inline RunResult run_staircase(const ExperimentConfig& cfg, unsigned threads) {
  const Domain dom = cfg.make_domain();
  const KernelSpec kernel = cfg.make_kernel();
  double top = 0.0;
  for (double k : cfg.kappa_values()) top = std::max(top, k);
  const int cutoff = dom.is_hypercube() ? dom.d : std::min(dom.d, static_cast<int>(std::ceil(top)) + 6);
  const auto profile = compute_profile(kernel, dom, cutoff);
  StaircaseOptions opt;
  opt.window = cfg.window;
  opt.log_scale = cfg.log_scale;
  opt.sigma_sq = cfg.sigma_sq;
  RunResult r{Table({"kind", "kappa", "n", "level", "psi", "plateau", "r_test", "se"}),
              {{"kind", "theory (closed form) or empirical (KRR trials at n = round(d^kappa))"},
               {"kappa", "log n / log d"},
               {"n", "sample size (empirical rows; 0 for theory rows)"},
               {"level", "integer l of the inset window, -1 on a plateau"},
               {"psi", "d^(kappa - l) inside a window, nan on a plateau"},
               {"plateau", "sum of F_k^2 over k > floor(kappa)"},
               {"r_test", "closed-form or mean empirical test error"},
               {"se", "standard error of the empirical mean (0 for theory rows)"}}};
  for (const auto& row : staircase_curve(cfg.F, profile, cfg.lambda, cfg.kappa_values(), opt))
    r.table.add("theory", row.kappa, 0, row.level, row.psi, row.plateau, row.r_test, 0.0);
  for (std::size_t i = 0; i < cfg.empirical_kappa.size(); ++i) {
    const double kappa = cfg.empirical_kappa[i];
    const auto n = static_cast<Eigen::Index>(std::llround(std::pow(static_cast<double>(dom.d), kappa)));
    const auto m = risk_trials(dom, kernel, cfg.F, cfg.sigma_sq, cfg.lambda, n, cfg.trials,
                               derive_seed(cfg.seed, stream::trial, i), threads);
    r.table.add("empirical", kappa, n, -1, std::nan(""), staircase_plateau(cfg.F, kappa), m.estimate,
                m.standard_error);
  }
  return r;
}

inline RunResult run_gauss(const ExperimentConfig& cfg, unsigned threads) {
  EquivalenceConfig ec;
  ec.domain = cfg.make_domain();
  ec.kernel = cfg.make_kernel();
  ec.ell = cfg.ell;
  ec.K = cfg.K;
  ec.F = cfg.F;
  ec.sigma_sq = cfg.sigma_sq;
  ec.lambda = cfg.lambda;
  ec.n_grid = cfg.sample_sizes();
  ec.trials = cfg.trials;
  ec.seed = cfg.seed;
  ec.tail = cfg.tail_handling();
  ec.p_tail_factor = cfg.p_tail_factor;
  ec.threads = threads;
  RunResult r{Table({"n", "psi_hat", "model", "mean", "se", "theory"}),
              {{"n", "sample size"},
               {"psi_hat", "n / B(d, l)"},
               {"model", "krr (kernel ridge regression, exact risk) or gauss (Gaussian-design ridge)"},
               {"mean", "mean test error over trials"},
               {"se", "standard error of mean"},
               {"theory", "closed-form test error at psi_hat"}}};
  for (const auto& row : equivalence_report(ec)) {
    r.table.add(row.n, row.psi_hat, "krr", row.krr_mean, row.krr_se, row.theory);
    r.table.add(row.n, row.psi_hat, "gauss", row.gauss_mean, row.gauss_se, row.theory);
  }
  return r;
}

inline RunResult run_experiment(const ExperimentConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  switch (cfg.experiment) {
    case Experiment::spectrum: return run_spectrum(cfg, threads);
    case Experiment::krr: return run_krr(cfg, threads);
    case Experiment::asymptotics: return run_asymptotics(cfg);
    case Experiment::staircase: return run_staircase(cfg, threads);
    case Experiment::gauss: return run_gauss(cfg, threads);
  }
  throw ConfigError("experiment: unsupported");
}

/// Runs cfg and writes {cfg.output}.csv and {cfg.output}.meta.json.
inline OutputPaths run_and_write(const ExperimentConfig& cfg, unsigned threads = 1) {
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = run_experiment(cfg, threads);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  nlohmann::json meta = {{"config", to_json(cfg)},
                         {"master_seed", cfg.seed},
                         {"version", kVersion},
                         {"threads", threads},
                         {"wall_time_s", wall},
                         {"column_meaning", r.columns}};
  return write_table(cfg.output, r.table, meta);
}

}  // namespace kmp
