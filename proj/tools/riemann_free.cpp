// Command-line experiment runner: sweeps optimizer/parameter grids on the
// built-in problems and writes trace + summary artifacts, or runs the
// geometry/optimizer verification suites.

#include "rfree/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Learning-rate-free Riemannian optimization experiment runner"};

  std::string config_path;
  std::string experiment;
  std::vector<std::string> optimizers;
  std::vector<double> eps_grid;
  std::vector<double> lr_grid;
  int T = -1;
  int reps = -1;
  std::string seed_str;
  std::string out_dir;
  int record_every = -1;
  int workers = -1;
  std::string dowg_form;
  bool burn_in = false;
  bool verify = false;
  std::uint64_t verify_seed = 1234;

  app.add_option("--config", config_path, "JSON config file (flags override it)");
  app.add_option("--experiment", experiment, "rayleigh | pca | embed");
  app.add_option("--optimizer", optimizers, "optimizer key (repeatable)");
  app.add_option("--eps", eps_grid, "initial distance estimate grid (repeatable)");
  app.add_option("--lr", lr_grid, "learning-rate grid (repeatable)");
  app.add_option("--T", T, "iteration count");
  app.add_option("--reps", reps, "replications per cell");
  app.add_option("--seed", seed_str, "master seed (fallback: RIEMANN_FREE_SEED)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--record-every", record_every, "trace thinning stride");
  app.add_option("--workers", workers, "worker threads (0 = all cores)");
  app.add_option("--dowg-form", dowg_form, "canonical | maintext");
  app.add_flag("--burn-in", burn_in, "enable the burn-in block for lr-dependent optimizers");
  app.add_flag("--verify", verify, "run the verification suites and exit");
  app.add_option("--verify-seed", verify_seed, "seed for the verification suites");

  CLI11_PARSE(app, argc, argv);

  if (verify) {
    const rfree::VerifyReport report = rfree::verify_suite(verify_seed);
    rfree::json out = rfree::json::array();
    for (const auto& c : report.checks) {
      out.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
      std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    }
    std::cout << out.dump(2) << std::endl;
    if (!report.all_passed()) {
      for (const auto& c : report.checks)
        if (!c.passed) std::cerr << "verification failed: " << c.name << "\n";
      return 1;
    }
    return 0;
  }

  try {
    rfree::RunConfig cfg;
    if (!config_path.empty()) cfg = rfree::parse_config_file(config_path);

    if (!experiment.empty()) cfg.experiment = experiment;
    if (!optimizers.empty()) cfg.optimizers = optimizers;
    if (!eps_grid.empty()) cfg.eps_grid = eps_grid;
    if (!lr_grid.empty()) cfg.lr_grid = lr_grid;
    if (T > 0) cfg.T = T;
    if (reps > 0) cfg.reps = reps;
    if (!seed_str.empty()) {
      cfg.seed = std::stoull(seed_str);
    } else if (config_path.empty()) {
      if (const char* env = std::getenv("RIEMANN_FREE_SEED")) cfg.seed = std::stoull(env);
    }
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (record_every > 0) cfg.record_every = record_every;
    if (workers >= 0) cfg.workers = workers;
    if (!dowg_form.empty()) cfg.dowg_form = dowg_form;
    if (burn_in) cfg.burn_in.enabled = true;

    cfg.validate();
    return rfree::run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
