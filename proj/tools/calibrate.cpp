// Pre-build oracle run: writes the calibrated thresholds and regression values
// used by the tests and the acceptance binary.
//
//   kmp_calibrate <output.json>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "kmp/krr_engine.hpp"
#include "kmp/spectrum_lab.hpp"

using namespace kmp;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

// Largest median KS distance at d = 30 over independent batches of 5 seeds.
nlohmann::json calibrate_ks() {
  constexpr int kBatches = 20;
  constexpr std::uint64_t kBase = 1000;
  nlohmann::json out = {{"d", 30}, {"ell", 2}, {"batches", kBatches}, {"seeds_per_batch", 5},
                        {"seed_rule", "derive_seed(1000 + batch, d, s)"}};
  const Domain dom = Domain::hypercube(30);
  for (double psi : {0.5, 1.0, 2.0}) {
    const auto n = static_cast<Eigen::Index>(std::llround(psi * subspace_dim(dom, 2)));
    double worst = 0.0;
    for (int b = 0; b < kBatches; ++b) {
      std::vector<double> ks;
      for (std::uint64_t s = 0; s < 5; ++s)
        ks.push_back(spectrum_report(sample_dataset(dom, n, derive_seed(kBase + b, 30, s)), 2).ks);
      worst = std::max(worst, median(ks));
    }
    out["threshold"][std::to_string(psi).substr(0, 3)] = worst;
    std::cerr << "ks psi=" << psi << " threshold " << worst << "\n";
  }
  return out;
}

// Largest share of the risk in degrees 0..1 (bias or variance) at psi = 1.
double calibrate_table1() {
  const auto dom = Domain::hypercube(24);
  const auto kernel = KernelSpec::exponential();
  const auto prof = compute_profile(kernel, dom, 24);
  double worst = 0.0;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto t = draw_target(dom, {{2, 1.0}, {3, 0.1}}, derive_seed(seed, stream::target, 24), std::sqrt(0.3));
    const auto ds = sample_dataset(dom, 276, derive_seed(seed, stream::covariates, 24));
    const auto bv = bias_variance_split(ds, kernel, prof, 1e-8, t);
    const double total = bv.bias_total + bv.variance_total;
    worst = std::max({worst, (bv.bias[0] + bv.bias[1]) / total, (bv.variance[0] + bv.variance[1]) / total});
  }
  std::cerr << "table1 threshold " << worst << "\n";
  return worst;
}

nlohmann::json calibrate_descent() {
  DescentConfig cfg;
  cfg.trials = 20;
  cfg.seed = 2024;
  const std::vector<double> psis{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
  cfg.n_grid = n_grid_from_psi(cfg.domain, 2, psis);
  const auto rows = descent_sweep(cfg);
  nlohmann::json out = {{"d", 24}, {"trials", cfg.trials}, {"seed", cfg.seed}, {"psi", psis}};
  for (const auto& r : rows) {
    out["n"].push_back(r.n);
    out["test_mean"].push_back(r.test_mean);
    out["test_se"].push_back(r.test_se);
    out["theory_test"].push_back(r.theory_test);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: kmp_calibrate <output.json>\n";
    return 2;
  }
  nlohmann::json out;
  out["ks"] = calibrate_ks();
  out["table1_low_degree_threshold"] = calibrate_table1();
  out["table1_seeds"] = "derive_seed(s, stream, 24) for s in 100..119";
  out["descent"] = calibrate_descent();
  std::ofstream(argv[1]) << out.dump(2) << "\n";
  return 0;
}
