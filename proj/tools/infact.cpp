#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "infact/experiment.hpp"

namespace {

struct Flags {
  std::string prior;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> iterations;
  std::optional<long> burn_in;
  std::optional<int> chains;
  std::string out;
  std::string design;
  std::string data;
  std::string resume;
  std::vector<std::string> sets;
  std::optional<long> stop_after;
};

void add_common(CLI::App& app, Flags& f) {
  app.add_option("--prior", f.prior, "mgp, cusp or ibp")->check(CLI::IsMember({"mgp", "cusp", "ibp"}));
  app.add_option("--config", f.config, "key = value configuration file (or a run manifest)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--iterations", f.iterations, "Gibbs iterations per chain");
  app.add_option("--burn-in", f.burn_in, "iterations discarded as burn-in");
  app.add_option("--chains", f.chains, "independent chains (fit)");
  app.add_option("--out", f.out, "output directory");
  app.add_option("--set", f.sets, "extra key=value overrides, repeatable");
  app.add_option("--resume", f.resume, "continue the run stored in this output directory")
      ->check(CLI::ExistingDirectory);
  app.add_option("--stop-after", f.stop_after, "stop every chain after N iterations")
      ->group("");  // hidden, used by the checkpoint tests
}

infact::ConfigEntries overrides_from(const Flags& f, const std::string& mode) {
  infact::ConfigEntries e{{"mode", mode}};
  if (!f.prior.empty()) e.emplace_back("prior", f.prior);
  if (f.seed) e.emplace_back("seed", std::to_string(*f.seed));
  if (f.iterations) e.emplace_back("iterations", std::to_string(*f.iterations));
  if (f.burn_in) e.emplace_back("burn_in", std::to_string(*f.burn_in));
  if (f.chains) e.emplace_back("chains", std::to_string(*f.chains));
  if (!f.out.empty()) e.emplace_back("out", f.out);
  if (!f.design.empty()) e.emplace_back("designs", f.design);
  if (!f.data.empty()) e.emplace_back("data", f.data);
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw infact::ConfigError("--set expects key=value, got '" + s + "'", {s});
    e.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return e;
}

int run(const Flags& f, const std::string& mode) {
  infact::RunOptions options;
  options.workers = infact::workers_from_env();
  options.stop_after = f.stop_after;
  infact::RunConfig config;
  if (!f.resume.empty()) {
    // The stored configuration is authoritative; only the location changes.
    config = infact::parse_config((std::filesystem::path(f.resume) / "config.txt").string(),
                                  {{"out", f.resume}});
    options.resume = true;
  } else {
    config = infact::parse_config(f.config, overrides_from(f, mode));
  }
  return infact::run_experiment(config, options);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Gibbs samplers for infinite factor models"};
  app.set_version_flag("--version", infact::kVersion);
  app.require_subcommand(1);

  Flags fit_flags;
  auto* fit = app.add_subcommand("fit", "fit one dataset");
  add_common(*fit, fit_flags);
  fit->add_option("--data", fit_flags.data, "dataset (CSV, or binary IFDS)");

  Flags bench_flags;
  auto* bench = app.add_subcommand("bench", "run the synthetic design grid");
  add_common(*bench, bench_flags);
  bench->add_option("--design", bench_flags.design, "design list, e.g. 6x2,10x3");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (fit->parsed()) {
      if (fit_flags.data.empty() && fit_flags.resume.empty() && fit_flags.config.empty()) {
        std::cerr << "fit: --data is required\n";
        return infact::kExitUsage;
      }
      return run(fit_flags, "fit");
    }
    return run(bench_flags, "bench");
  } catch (const infact::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return infact::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return infact::kExitFailures;
  }
}
