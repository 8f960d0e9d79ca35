// kmp <spectrum|krr|asymptotics|staircase|gauss> [--config FILE] [--seed N] [--out STEM] [--threads N]

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kmp/runner.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  unsigned threads = 1;
};

int run(kmp::Experiment experiment, const Options& opt) {
  nlohmann::json j = nlohmann::json::object();
  if (!opt.config.empty()) {
    try {
      j = nlohmann::json::parse(kmp::read_file(opt.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw kmp::ConfigError(opt.config + ": not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw kmp::ConfigError(opt.config + ": config must be a JSON object");
  }
  if (j.contains("experiment") && j["experiment"] != kmp::to_string(experiment))
    throw kmp::ConfigError("experiment: config says '" + j["experiment"].dump() + "' but the subcommand is '" +
                           kmp::to_string(experiment) + "'");
  j["experiment"] = kmp::to_string(experiment);
  if (opt.seed) j["seed"] = *opt.seed;
  if (opt.out) j["output"] = *opt.out;
  const auto cfg = kmp::config_from_json(j);
  const auto paths = kmp::run_and_write(cfg, opt.threads);
  std::cout << paths.csv << "\n" << paths.meta << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel ridge regression in the polynomial regime: spectra, risk curves and experiments"};
  app.require_subcommand(1);
  Options opt;
  std::optional<kmp::Experiment> chosen;
  for (auto e : {kmp::Experiment::spectrum, kmp::Experiment::krr, kmp::Experiment::asymptotics,
                 kmp::Experiment::staircase, kmp::Experiment::gauss}) {
    auto* sub = app.add_subcommand(kmp::to_string(e));
    sub->add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
    sub->add_option("--out", opt.out, "output stem; writes STEM.csv and STEM.meta.json");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->callback([&chosen, e] { chosen = e; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    return run(*chosen, opt);
  } catch (const kmp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
