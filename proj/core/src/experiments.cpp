#include "kgl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgl/breather.hpp"
#include "kgl/dnls.hpp"
#include "kgl/errors.hpp"
#include "kgl/field_io.hpp"
#include "kgl/fit.hpp"
#include "kgl/kg_spectrum.hpp"
#include "kgl/normal_form.hpp"
#include "kgl/stability.hpp"

namespace kgl {

namespace {

using nlohmann::json;  // std::map-backed: keys serialize sorted, runs reproduce bytes

struct Artifacts {
  std::string dir;
  std::vector<std::string> files;

  void write(const std::string& name, const std::string& content) {
    atomic_write_text(dir + "/" + name, content);
    files.push_back(name);
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
};

void write_manifest(Artifacts& art, const ExperimentConfig& cfg) {
  art.write("config.ini", cfg.to_ini());
  std::sort(art.files.begin(), art.files.end());
  json man;
  man["config"] = "config.ini";
  man["experiment"] = to_string(cfg.experiment);
  man["outputs"] = art.files;
  man["seed"] = cfg.seed;
  man["status"] = "ok";
  man["threads"] = cfg.threads;
  atomic_write_text(art.dir + "/manifest.json", man.dump(2) + "\n");
}

// The pulse branch the config points at.  A literal omega below the band is
// reached through the staggered positive frame (exact on Dirichlet grids);
// omega above the band goes to a plain Newton solve, where the anticontinuum
// limit only supports the trivial profile and the result reports whatever the
// iteration finds.
SolitonBranch solve_branch(const ExperimentConfig& cfg) {
  LatticeGrid grid = cfg.make_grid();
  const bool twisted = cfg.profile == "twisted";
  if (!cfg.omega_given)
    return twisted ? solve_twisted_pulse(grid, cfg.p, cfg.omega_tilde, cfg.newton_tol)
                   : solve_single_pulse(grid, cfg.p, cfg.omega_tilde, cfg.newton_tol);
  const double fourd = 4.0 * cfg.dim;
  if (cfg.omega_raw < -fourd) {
    const double ot = -fourd - cfg.omega_raw;
    return twisted ? solve_twisted_pulse(grid, cfg.p, ot, cfg.newton_tol)
                   : solve_single_pulse(grid, cfg.p, ot, cfg.newton_tol);
  }
  if (twisted) throw ConfigInvalid("twisted profile needs Omega below -4d");
  DnlsParams prm(cfg.p, cfg.omega_raw);
  RealField seed = anticontinuum_seed(grid, cfg.p, std::abs(cfg.omega_raw));
  return solve_soliton(prm, grid, seed, cfg.newton_tol);
}

BreatherSolution solve_breather_from(const SolitonBranch& branch, const ExperimentConfig& cfg,
                                     double eps) {
  BreatherSolution seed = seed_from_soliton(branch, eps, cfg.harmonics_or_default());
  BreatherMode mode = cfg.fix_period ? BreatherMode::FixPeriod : BreatherMode::FixFrequencyParam;
  return solve_breather(seed, cfg.newton_tol, mode);
}

std::string run_soliton(const ExperimentConfig& cfg, Artifacts& art) {
  SolitonBranch b = solve_branch(cfg);
  art.write("amplitude.csv", field_to_csv(b.amplitude));
  json j;
  j["boundary_shell_norm"] = boundary_shell_norm(b.amplitude);
  j["energy"] = b.energy;
  j["gamma"] = b.params.gamma;
  j["jacobian_min_singular_value"] = b.jacobian_min_singular_value;
  j["l2_norm"] = l2_norm(b.amplitude);
  j["mass"] = b.mass;
  j["omega"] = b.params.omega;
  j["p"] = b.params.p;
  j["residual_norm"] = b.residual_norm;
  art.write_json("soliton.json", j);
  return "soliton at Omega=" + format_full(b.params.omega) + ": mass=" + format_full(b.mass) +
         " energy=" + format_full(b.energy);
}

std::string run_power_curve(const ExperimentConfig& cfg, Artifacts& art) {
  LatticeGrid grid = cfg.make_grid();
  auto points = power_curve(grid, cfg.p, cfg.ot_begin, cfg.ot_end, cfg.ot_count, cfg.newton_tol);
  std::string csv = "omega_tilde,omega,mass,energy,residual_norm\n";
  for (const auto& pt : points) {
    csv += format_full(pt.omega_tilde) + "," + format_full(pt.omega) + "," +
           format_full(pt.mass) + "," + format_full(pt.energy) + "," +
           format_full(pt.residual_norm) + "\n";
  }
  art.write("power_curve.csv", csv);
  return "power curve: " + std::to_string(points.size()) + " points over Omega_tilde [" +
         format_full(cfg.ot_begin) + ", " + format_full(cfg.ot_end) + "]";
}

std::string run_breather(const ExperimentConfig& cfg, Artifacts& art) {
  SolitonBranch branch = solve_branch(cfg);
  BreatherSolution B = solve_breather_from(branch, cfg, cfg.eps);
  for (int m = 0; m <= B.harmonic_count(); ++m)
    art.write("harmonic_" + std::to_string(m) + ".csv",
              field_to_csv(RealField(B.grid, B.harmonics[m])));
  const double td_err = time_domain_check(B, cfg.step_fraction);
  json j;
  j["eps"] = B.eps;
  j["harmonic_count"] = B.harmonic_count();
  j["newton_iterations"] = B.newton_iterations;
  j["omega"] = B.omega;
  j["omega_param"] = branch.params.omega;
  j["p"] = B.params.p;
  j["period"] = B.period();
  j["residual_norm"] = B.residual_norm;
  j["step_fraction"] = cfg.step_fraction;
  j["tail_ratio"] = B.tail_ratio();
  j["time_domain_error"] = td_err;
  art.write_json("breather.json", j);
  return "breather at eps=" + format_full(B.eps) + ": omega=" + format_full(B.omega) +
         " return-map error=" + format_full(td_err);
}

std::string run_bounds(const ExperimentConfig& cfg, Artifacts& art) {
  SolitonBranch branch = solve_branch(cfg);
  BoundReport rep = verify_bounds(branch, cfg.eps_list, cfg.newton_tol, cfg.harmonics);
  std::string csv = "eps,omega_err,profile_err,tail_err,converged\n";
  for (std::size_t i = 0; i < rep.eps_list.size(); ++i) {
    csv += format_full(rep.eps_list[i]) + "," + format_full(rep.omega_err[i]) + "," +
           format_full(rep.profile_err[i]) + "," + format_full(rep.tail_err[i]) + "," +
           (rep.converged[i] ? "1" : "0") + "\n";
  }
  art.write("bounds.csv", csv);
  json j;
  j["omega"] = branch.params.omega;
  j["omega_slope"] = rep.omega_slope;
  j["p"] = branch.params.p;
  j["profile_slope"] = rep.profile_slope;
  j["tail_slope"] = rep.tail_slope;
  art.write_json("bounds.json", j);
  return "bound sweep: omega slope " + format_full(rep.omega_slope) + ", profile slope " +
         format_full(rep.profile_slope);
}

std::string run_spectrum(const ExperimentConfig& cfg, Artifacts& art) {
  SolitonBranch branch = solve_branch(cfg);

  auto spec = dnls_spectrum(branch);
  std::string csv = "re_lambda,im_lambda,krein_value,krein_sign,in_band,residual,cluster_size\n";
  for (const auto& pr : spec) {
    csv += format_full(pr.lambda.real()) + "," + format_full(pr.lambda.imag()) + "," +
           format_full(pr.krein_value) + "," + std::to_string(pr.krein_sign) + "," +
           (pr.in_band ? "1" : "0") + "," + format_full(pr.residual) + "," +
           std::to_string(pr.cluster_size) + "\n";
  }
  art.write("dnls_spectrum.csv", csv);

  // fail on a missing reference eigenvalue before the Hill sweep burns minutes
  DnlsSpectralPair target = pick_reference_eigenvalue(spec);

  for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
    BreatherSolution B = solve_breather_from(branch, cfg, cfg.eps_list[i]);
    HillProblem prob = hill_assemble(B, cfg.spectral_harmonics);
    auto pairs = eigen_near_zero(prob, cfg.eig_count);
    std::string kgcsv = "re_lambda,im_lambda,krein,re_mu,im_mu,residual,near_band\n";
    for (const auto& pr : pairs) {
      kgcsv += format_full(pr.lambda.real()) + "," + format_full(pr.lambda.imag()) + "," +
               format_full(pr.krein) + "," + format_full(pr.floquet.real()) + "," +
               format_full(pr.floquet.imag()) + "," + format_full(pr.residual) + "," +
               (pr.near_band ? "1" : "0") + "\n";
    }
    art.write("kg_spectrum_" + std::to_string(i) + ".csv", kgcsv);
  }

  SpectralScalingReport rep =
      verify_spectral_bounds(branch, target, cfg.eps_list, cfg.harmonics_or_default(),
                             cfg.spectral_harmonics, cfg.newton_tol);
  std::string scsv = "eps,re_lambda,im_lambda,lambda_err,vector_err,krein\n";
  for (std::size_t i = 0; i < rep.eps_list.size(); ++i) {
    scsv += format_full(rep.eps_list[i]) + "," + format_full(rep.lambda_list[i].real()) + "," +
            format_full(rep.lambda_list[i].imag()) + "," + format_full(rep.lambda_err[i]) + "," +
            format_full(rep.vector_err[i]) + "," + format_full(rep.krein_list[i]) + "\n";
  }
  art.write("scaling.csv", scsv);

  json j;
  j["krein_sign_constant"] = rep.krein_sign_constant;
  j["lambda_slope"] = rep.lambda_slope;
  j["max_re_lambda"] = rep.max_re_lambda;
  j["reference_im_lambda"] = rep.reference.lambda.imag();
  j["reference_krein_sign"] = rep.reference.krein_sign;
  j["reference_krein_value"] = rep.reference.krein_value;
  j["reference_re_lambda"] = rep.reference.lambda.real();
  j["spectral_harmonics"] = cfg.spectral_harmonics;
  j["vector_slope"] = rep.vector_slope;
  art.write_json("spectrum.json", j);
  return "spectral sweep: lambda slope " + format_full(rep.lambda_slope) + ", vector slope " +
         format_full(rep.vector_slope);
}

json budget_json(const nf::NormalFormBudget& b) {
  json j;
  j["E"] = b.E;
  j["M1"] = b.M1;
  j["M2"] = b.M2;
  j["M2_recorded"] = b.M2_recorded;
  j["ball_radius"] = b.ball_radius;
  j["chi_norm"] = b.chi_norm;
  j["chi_vnorm"] = b.chi_vnorm;
  j["degree_cap"] = b.degree_cap;
  j["eps"] = b.eps;
  j["f_norm"] = b.f_norm;
  j["f_vnorm"] = b.f_vnorm;
  j["nf_mu"] = b.nf_mu;
  j["norm_bound"] = b.norm_bound;
  j["omega1"] = b.omega1;
  j["order"] = b.order;
  j["phi"] = b.phi;
  j["phi_recorded"] = b.phi_recorded;
  j["r_opt"] = b.r_opt;
  j["remainder_norm"] = b.remainder_norm;
  j["remainder_vnorm"] = b.remainder_vnorm;
  j["shrink"] = b.shrink;
  j["term_cap"] = b.term_cap;
  j["z_norm"] = b.z_norm;
  j["z_vnorm"] = b.z_vnorm;
  return j;
}

nf::NormalFormBudget budget_from(const ExperimentConfig& cfg) {
  nf::NormalFormBudget budget;
  budget.order = cfg.order;
  budget.ball_radius = cfg.ball_radius;
  budget.shrink = cfg.shrink;
  budget.eps = cfg.eps;
  budget.degree_cap = cfg.degree_cap;
  budget.term_cap = static_cast<std::size_t>(cfg.term_cap);
  return budget;
}

std::string run_normal_form(const ExperimentConfig& cfg, Artifacts& art) {
  LatticeGrid grid = cfg.make_grid();
  json coef;
  coef["order"] = cfg.order;
  coef["p"] = cfg.p;
  coef["rational"] = cfg.rational;
  std::string summary;

  if (cfg.rational) {
    auto R = nf::lie_transform_normal_form<nf::RationalComplex>(grid, cfg.p, budget_from(cfg));
    std::string ztext, chitext;
    bool hom_zero = true;
    nf::PolyQ ztot;
    for (int s = 0; s < cfg.order; ++s) {
      ztext += R.Z[s].to_text();
      chitext += R.chi[s].to_text();
      nf::PolyQ resid = nf::poisson(R.G, R.chi[s]) + R.Z[s] - R.Psi[s];
      hom_zero = hom_zero && resid.empty();
      ztot += R.Z[s];
    }
    art.write("z_terms.txt", ztext);
    art.write("chi_terms.txt", chitext);
    nf::RationalComplex gamma = nf::extract_effective_coupling(R);
    coef["gamma_effective"] = nf::to_complex(gamma).real();
    coef["gamma_effective_exact"] = nf::CoefTraits<nf::RationalComplex>::str(gamma);
    coef["homological_residual_zero"] = hom_zero;
    coef["z_commutes_with_G"] = nf::poisson(R.G, ztot).empty();
    art.write_json("budget.json", budget_json(R.budget));
    summary = "normal form (rational) r=" + std::to_string(cfg.order) +
              ": Gamma=" + nf::CoefTraits<nf::RationalComplex>::str(gamma) +
              (hom_zero ? ", homological residuals exactly zero" : ", NONZERO residual");
  } else {
    auto R = nf::lie_transform_normal_form<std::complex<double>>(grid, cfg.p, budget_from(cfg));
    std::string ztext, chitext;
    double hom_res = 0.0;
    nf::PolyD ztot;
    for (int s = 0; s < cfg.order; ++s) {
      ztext += R.Z[s].to_text();
      chitext += R.chi[s].to_text();
      nf::PolyD resid = nf::poisson(R.G, R.chi[s]) + R.Z[s] - R.Psi[s];
      hom_res = std::max(hom_res, resid.l1_norm(1.0, 1.0));
      ztot += R.Z[s];
    }
    art.write("z_terms.txt", ztext);
    art.write("chi_terms.txt", chitext);
    std::complex<double> gamma = nf::extract_effective_coupling(R);
    coef["gamma_effective"] = gamma.real();
    coef["homological_residual_l1"] = hom_res;
    coef["z_commutes_with_G_l1"] = nf::poisson(R.G, ztot).l1_norm(1.0, 1.0);
    art.write_json("budget.json", budget_json(R.budget));

    SolitonBranch branch = solve_branch(cfg);
    auto gs = nf::solve_generalized_soliton(R, branch, cfg.eps, cfg.newton_tol);
    art.write("generalized_soliton.csv", field_to_csv(gs.profile));
    const double gap = (gs.profile.values - branch.amplitude.values).norm();
    coef["soliton_gap"] = gap;
    coef["soliton_gap_over_eps"] = gap / cfg.eps;
    coef["soliton_iterations"] = gs.iterations;
    coef["soliton_residual_norm"] = gs.residual_norm;
    summary = "normal form r=" + std::to_string(cfg.order) + ": Gamma=" +
              format_full(gamma.real()) + ", soliton gap/eps=" + format_full(gap / cfg.eps);
  }
  art.write_json("coefficients.json", coef);
  return summary;
}

std::string run_stability(const ExperimentConfig& cfg, Artifacts& art) {
  SolitonBranch branch = solve_branch(cfg);
  BreatherSolution B = solve_breather_from(branch, cfg, cfg.eps);
  const double h = cfg.step_fraction * B.period();
  StabilityTrace tr =
      orbital_stability_run(B, cfg.delta, cfg.T_final, h, cfg.seed, cfg.sample_count);

  std::string csv = "t,H,G,distance\n";
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    csv += format_full(tr.times[i]) + "," + format_full(tr.H_values[i]) + "," +
           format_full(tr.G_values[i]) + "," + format_full(tr.orbital_distance[i]) + "\n";
  }
  art.write("trace.csv", csv);

  PhaseState st = B.initial_state();
  const double bnorm = std::sqrt(st.u.values.squaredNorm() + st.v.values.squaredNorm());
  const double H0 = tr.H_values.front();
  const double G0 = tr.G_values.front();
  double max_dist = 0.0, max_gdrift = 0.0, max_hosc = 0.0;
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    max_dist = std::max(max_dist, tr.orbital_distance[i]);
    max_gdrift = std::max(max_gdrift, std::abs(tr.G_values[i] - G0));
    max_hosc = std::max(max_hosc, std::abs(tr.H_values[i] - H0));
  }
  LineFit hfit = fit_line(tr.times, tr.H_values);

  json j;
  j["G0"] = G0;
  j["G_drift_bound"] = 0.2 * cfg.eps * G0;
  j["H0"] = H0;
  j["H_max_rel_oscillation"] = max_hosc / std::abs(H0);
  j["H_secular_rel_drift"] = hfit.slope * cfg.T_final / std::abs(H0);
  j["T_final"] = cfg.T_final;
  j["breather_norm"] = bnorm;
  j["delta"] = tr.delta;
  j["distance_bound"] = 10.0 * cfg.delta * (1.0 + bnorm);
  j["eps"] = cfg.eps;
  j["max_G_drift"] = max_gdrift;
  j["max_distance"] = max_dist;
  j["omega"] = B.omega;
  j["period"] = B.period();
  j["sample_count"] = cfg.sample_count;
  j["seed"] = tr.seed;
  j["step"] = h;
  art.write_json("stability.json", j);
  return "stability run to T=" + format_full(cfg.T_final) + ": max distance " +
         format_full(max_dist) + " (bound " + format_full(10.0 * cfg.delta * (1.0 + bnorm)) + ")";
}

}  // namespace

std::string error_record_json(const std::string& kind, int exit_code, const std::string& message) {
  json j;
  j["exit_code"] = exit_code;
  j["kind"] = kind;
  j["message"] = message;
  return j.dump(2) + "\n";
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  RunOutcome out;
  std::vector<std::string> violations = cfg.validate();

  if (cfg.experiment == ExperimentKind::Validate) {
    out.violations = violations;
    out.exit_code = violations.empty() ? kExitOk : kExitConfigInvalid;
    out.message = violations.empty() ? "config ok"
                                     : std::to_string(violations.size()) + " violation(s)";
    return out;
  }

  if (!violations.empty()) {
    out.violations = violations;
    out.exit_code = kExitConfigInvalid;
    out.error_kind = "ConfigInvalid";
    out.message = violations.front();
    return out;
  }

  Artifacts art{cfg.out_dir, {}};
  try {
    switch (cfg.experiment) {
      case ExperimentKind::SolveSoliton:
        out.message = run_soliton(cfg, art);
        break;
      case ExperimentKind::PowerCurve:
        out.message = run_power_curve(cfg, art);
        break;
      case ExperimentKind::SolveBreather:
        out.message = run_breather(cfg, art);
        break;
      case ExperimentKind::BoundSweep:
        out.message = run_bounds(cfg, art);
        break;
      case ExperimentKind::SpectrumSweep:
        out.message = run_spectrum(cfg, art);
        break;
      case ExperimentKind::NormalForm:
        out.message = run_normal_form(cfg, art);
        break;
      case ExperimentKind::StabilityRun:
        out.message = run_stability(cfg, art);
        break;
      case ExperimentKind::Validate:
        break;
    }
    write_manifest(art, cfg);
    out.outputs = art.files;
  } catch (const Error& e) {
    out.exit_code = e.exit_code;
    out.error_kind = e.kind;
    out.message = e.what();
    try {
      atomic_write_text(art.dir + "/error.json", error_record_json(e.kind, e.exit_code, e.what()));
    } catch (...) {
      // the record is best-effort; the outcome already carries the error
    }
  }
  return out;
}

}  // namespace kgl
