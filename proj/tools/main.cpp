#include <cstdio>
#include <exception>
#include <iostream>
#include <new>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "kgl/config.hpp"
#include "kgl/errors.hpp"
#include "kgl/experiments.hpp"

namespace {

struct Verb {
  const char* name;
  const char* help;
  kgl::ExperimentKind kind;
};

const Verb kVerbs[] = {
    {"soliton", "Solve the dNLS pulse profile and report mass/energy", kgl::ExperimentKind::SolveSoliton},
    {"power-curve", "Continue the pulse over an Omega_tilde grid", kgl::ExperimentKind::PowerCurve},
    {"breather", "Solve the time-periodic lattice breather at fixed eps", kgl::ExperimentKind::SolveBreather},
    {"bounds", "Small-coupling error sweep against the dNLS profile", kgl::ExperimentKind::BoundSweep},
    {"spectrum", "dNLS and Floquet spectra with the eigenvalue scaling sweep", kgl::ExperimentKind::SpectrumSweep},
    {"normal-form", "Resonant normal form, coefficient tables and budgets", kgl::ExperimentKind::NormalForm},
    {"stability", "Perturbed long-time integration around a breather", kgl::ExperimentKind::StabilityRun},
    {"validate", "Check a configuration against all preconditions (no writes)", kgl::ExperimentKind::Validate},
};

int dispatch(const CLI::App& app, const std::string& config_path, const std::string& out_dir,
             unsigned long long seed, int threads) {
  const CLI::App* sub = app.get_subcommands().front();
  kgl::ExperimentKind kind = kgl::ExperimentKind::SolveSoliton;
  for (const Verb& v : kVerbs)
    if (sub->get_name() == v.name) kind = v.kind;

  kgl::ConfigMap cm;
  if (!config_path.empty()) cm = kgl::ConfigMap::from_file(config_path);
  kgl::ExperimentConfig cfg = kgl::ExperimentConfig::parse(cm, kind);
  if (sub->count("--out") > 0) cfg.out_dir = out_dir;
  if (sub->count("--seed") > 0) cfg.seed = seed;
  if (sub->count("--threads") > 0) cfg.threads = threads;

  kgl::RunOutcome rc = kgl::run_experiment(cfg);

  if (kind == kgl::ExperimentKind::Validate) {
    if (rc.violations.empty()) {
      std::cout << "config ok\n";
    } else {
      for (const std::string& v : rc.violations) std::cout << v << "\n";
    }
    return rc.exit_code;
  }

  if (rc.exit_code == 0) {
    std::cout << rc.message << "\n";
    std::cout << "artifacts in " << cfg.out_dir << "\n";
  } else {
    for (const std::string& v : rc.violations) std::cerr << v << "\n";
    std::cerr << "error[" << rc.error_kind << "]: " << rc.message << "\n";
  }
  return rc.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgl: discrete Klein-Gordon breathers in the small-coupling (dNLS) regime"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  unsigned long long seed = 0;
  int threads = 1;
  for (const Verb& v : kVerbs) {
    CLI::App* sub = app.add_subcommand(v.name, v.help);
    sub->add_option("--config", config_path, "Configuration file (INI-style sections)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides run.out_dir)");
    sub->add_option("--seed", seed, "Random seed (overrides run.seed)");
    sub->add_option("--threads", threads, "Worker thread budget, recorded in the manifest");
  }

  try {
    app.parse(argc, argv);
    return dispatch(app, config_path, out_dir, seed, threads);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the parse diagnostic
    return rc == 0 ? kgl::kExitOk : kgl::kExitConfigInvalid;
  } catch (const kgl::Error& e) {
    std::cerr << "error[" << e.kind << "]: " << e.what() << "\n";
    return e.exit_code;
  } catch (const std::bad_alloc&) {
    std::cerr << "error[OutOfMemory]: allocation failed\n";
    return kgl::kExitResourceCap;
  } catch (const std::exception& e) {
    std::cerr << "error[Internal]: " << e.what() << "\n";
    return kgl::kExitSolverFailure;
  }
}
