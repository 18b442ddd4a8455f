#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgl/lattice.hpp"

namespace kgl {

// Flat key-value view of an INI-style file: [section] headers prefix keys as
// "section.key"; '#' and ';' start comments; later duplicates win.
class ConfigMap {
 public:
  static ConfigMap from_file(const std::string& path);
  static ConfigMap from_string(const std::string& text);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  long long get_long(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& fallback) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

enum class ExperimentKind {
  SolveSoliton,
  PowerCurve,
  SolveBreather,
  BoundSweep,
  SpectrumSweep,
  NormalForm,
  StabilityRun,
  Validate,
};

std::string to_string(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::SolveSoliton;

  // lattice
  int dim = 1;
  int radius = 20;
  Boundary boundary = Boundary::Dirichlet;

  // model
  int p = 1;
  double omega_tilde = 5.0;
  bool omega_given = false;  // a literal model.omega overrides -4d - omega_tilde
  double omega_raw = 0.0;
  std::string profile = "single";  // anticontinuum seed shape: single | twisted

  // breather / sweeps
  double eps = 0.05;
  std::vector<double> eps_list;
  int harmonics = 0;  // 0: module default 2p+6
  double newton_tol = 1e-12;
  bool fix_period = false;  // continue at fixed period instead of fixed Omega

  // dNLS power curve
  double ot_begin = 2.0;
  double ot_end = 10.0;
  int ot_count = 9;

  // spectrum
  int spectral_harmonics = 8;
  int eig_count = 40;
  double monodromy_step_fraction = 5e-5;  // RK4 step as a fraction of the period

  // normal form
  int order = 3;
  double ball_radius = 0.25;
  double shrink = 0.25;
  bool rational = false;
  int degree_cap = 0;
  long long term_cap = 4000000;

  // dynamics
  double step_fraction = 5e-4;  // integrator step as a fraction of the period
  double T_final = 1e5;
  double delta = 1e-3;
  int sample_count = 2000;

  // run
  unsigned long long seed = 12345;
  int threads = 1;
  std::string out_dir = "out";

  double omega(int effective_dim) const {
    return omega_given ? omega_raw : -4.0 * effective_dim - omega_tilde;
  }
  double omega() const { return omega(dim); }
  int harmonics_or_default() const { return harmonics > 0 ? harmonics : 2 * p + 6; }
  LatticeGrid make_grid() const { return LatticeGrid(dim, radius, boundary); }

  static ExperimentConfig parse(const ConfigMap& m, ExperimentKind kind);
  // human-readable precondition violations; empty means dispatchable
  std::vector<std::string> validate() const;
  // canonical INI echo used in run manifests
  std::string to_ini() const;
};

}  // namespace kgl
