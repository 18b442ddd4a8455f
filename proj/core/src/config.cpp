#include "kgl/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <sstream>

#include "kgl/errors.hpp"
#include "kgl/field_io.hpp"

namespace kgl {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0')
    throw ConfigInvalid("config key '" + key + "' is not a number: '" + t + "'");
  return v;
}

}  // namespace

ConfigMap ConfigMap::from_string(const std::string& text) {
  ConfigMap m;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigInvalid("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigInvalid("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigInvalid("config line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    m.values_[key] = value;
  }
  return m;
}

ConfigMap ConfigMap::from_file(const std::string& path) {
  return from_string(read_text(path));
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string ConfigMap::require_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigInvalid("missing required config key '" + key + "'");
  return it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(key, it->second);
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw ConfigInvalid("config key '" + key + "' must be an integer");
  return i;
}

long long ConfigMap::get_long(const std::string& key, long long fallback) const {
  const double v = get_double(key, static_cast<double>(fallback));
  const long long i = static_cast<long long>(v);
  if (static_cast<double>(i) != v)
    throw ConfigInvalid("config key '" + key + "' must be an integer");
  return i;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::string v = trim(it->second);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigInvalid("config key '" + key + "' is not a boolean: '" + it->second + "'");
}

std::vector<double> ConfigMap::get_double_list(const std::string& key,
                                               const std::vector<double>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  std::string item;
  std::istringstream in(it->second);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigInvalid("config key '" + key + "' holds an empty list");
  return out;
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::SolveSoliton: return "SolveSoliton";
    case ExperimentKind::PowerCurve: return "PowerCurve";
    case ExperimentKind::SolveBreather: return "SolveBreather";
    case ExperimentKind::BoundSweep: return "BoundSweep";
    case ExperimentKind::SpectrumSweep: return "SpectrumSweep";
    case ExperimentKind::NormalForm: return "NormalForm";
    case ExperimentKind::StabilityRun: return "StabilityRun";
    case ExperimentKind::Validate: return "Validate";
  }
  return "Unknown";
}

ExperimentConfig ExperimentConfig::parse(const ConfigMap& m, ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;

  c.dim = m.get_int("lattice.dim", c.dim);
  c.radius = m.get_int("lattice.radius", c.radius);
  c.boundary = boundary_from_string(m.get_string("lattice.boundary", "dirichlet"));

  c.p = m.get_int("model.p", c.p);
  c.omega_tilde = m.get_double("model.omega_tilde", c.omega_tilde);
  if (m.has("model.omega")) {
    c.omega_given = true;
    c.omega_raw = m.get_double("model.omega", 0.0);
  }
  c.profile = m.get_string("model.profile", c.profile);

  c.eps = m.get_double("breather.eps", c.eps);
  c.eps_list = m.get_double_list("sweep.eps_list", c.eps_list);
  c.harmonics = m.get_int("breather.harmonics", c.harmonics);
  c.newton_tol = m.get_double("breather.newton_tol", c.newton_tol);
  c.fix_period = m.get_bool("breather.fix_period", c.fix_period);

  c.ot_begin = m.get_double("sweep.omega_tilde_begin", c.ot_begin);
  c.ot_end = m.get_double("sweep.omega_tilde_end", c.ot_end);
  c.ot_count = m.get_int("sweep.count", c.ot_count);

  c.spectral_harmonics = m.get_int("spectrum.harmonics", c.spectral_harmonics);
  c.eig_count = m.get_int("spectrum.eig_count", c.eig_count);
  c.monodromy_step_fraction =
      m.get_double("spectrum.monodromy_step_fraction", c.monodromy_step_fraction);

  c.order = m.get_int("normal_form.order", c.order);
  c.ball_radius = m.get_double("normal_form.ball_radius", c.ball_radius);
  c.shrink = m.get_double("normal_form.shrink", c.shrink);
  c.rational = m.get_bool("normal_form.rational", c.rational);
  c.degree_cap = m.get_int("normal_form.degree_cap", c.degree_cap);
  c.term_cap = m.get_long("normal_form.term_cap", c.term_cap);

  c.step_fraction = m.get_double("stability.step_fraction", c.step_fraction);
  c.T_final = m.get_double("stability.T_final", c.T_final);
  c.delta = m.get_double("stability.delta", c.delta);
  c.sample_count = m.get_int("stability.sample_count", c.sample_count);

  c.seed = static_cast<unsigned long long>(m.get_long("run.seed", 12345));
  c.threads = m.get_int("run.threads", c.threads);
  c.out_dir = m.get_string("run.out_dir", c.out_dir);
  return c;
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> bad;
  const auto k = experiment;

  if (dim < 1 || dim > 4) bad.push_back("lattice.dim must be between 1 and 4");
  if (radius < 1) bad.push_back("lattice.radius must be at least 1");
  if (p < 1) bad.push_back("model.p must be at least 1");
  if (p > 12) bad.push_back("model.p above 12 overflows the coupling coefficient");
  if (profile != "single" && profile != "twisted")
    bad.push_back("model.profile must be single or twisted");
  if (threads < 1) bad.push_back("run.threads must be positive");
  if (newton_tol <= 0) bad.push_back("breather.newton_tol must be positive");

  const double om = omega();
  if (om >= -4.0 * dim && om <= 0.0)
    bad.push_back("frequency parameter Omega = " + format_full(om) +
                  " lies in the excluded band [-4d, 0]");

  const bool needs_eps = k == ExperimentKind::SolveBreather ||
                         k == ExperimentKind::StabilityRun ||
                         k == ExperimentKind::NormalForm;
  if (needs_eps) {
    if (!(eps > 0)) bad.push_back("breather.eps must be positive");
    if (1.0 - eps * om <= 0.0)
      bad.push_back("InvalidFrequency precondition: 1 - eps*Omega = " +
                    format_full(1.0 - eps * om) + " must be positive");
  }

  if (k == ExperimentKind::BoundSweep || k == ExperimentKind::SpectrumSweep) {
    if (eps_list.size() < 2) {
      bad.push_back("sweep.eps_list needs at least two entries");
    } else {
      for (double e : eps_list)
        if (!(e > 0.0 && e < 0.1)) {
          bad.push_back("sweep.eps_list entries must lie in (0, 0.1)");
          break;
        }
      for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) {
          bad.push_back("sweep.eps_list must be strictly decreasing");
          break;
        }
      for (double e : eps_list)
        if (1.0 - e * om <= 0.0) {
          bad.push_back("InvalidFrequency precondition: 1 - eps*Omega must stay positive "
                        "over the sweep");
          break;
        }
    }
  }

  if (k == ExperimentKind::SolveBreather || k == ExperimentKind::BoundSweep ||
      k == ExperimentKind::SpectrumSweep) {
    if (harmonics != 0 && harmonics < 3)
      bad.push_back("breather.harmonics must be at least 3 (or 0 for the default)");
  }

  if (k == ExperimentKind::SpectrumSweep) {
    if (spectral_harmonics < 1) bad.push_back("spectrum.harmonics must be at least 1");
    if (eig_count < 1) bad.push_back("spectrum.eig_count must be positive");
    if (!(monodromy_step_fraction > 0) || monodromy_step_fraction > 0.01)
      bad.push_back("spectrum.monodromy_step_fraction must lie in (0, 0.01]");
  }

  if (k == ExperimentKind::PowerCurve) {
    if (!(ot_begin > 0)) bad.push_back("sweep.omega_tilde_begin must be positive");
    if (!(ot_end > ot_begin)) bad.push_back("sweep.omega_tilde_end must exceed the begin value");
    if (ot_count < 2) bad.push_back("sweep.count must be at least 2");
  }

  if (k == ExperimentKind::NormalForm) {
    if (order < 1) bad.push_back("normal_form.order must be at least 1");
    if (!(ball_radius > 0)) bad.push_back("normal_form.ball_radius must be positive");
    if (!(shrink > 0) || shrink > 0.25)
      bad.push_back("normal-form shrink out of range (must be in (0, 1/4])");
    if (term_cap < 1) bad.push_back("normal_form.term_cap must be positive");
    if (rational && (order > 4 || dim != 1 || radius > 10 || p != 1))
      bad.push_back("rational mode supports d=1, N <= 10, r <= 4, p = 1");
  }

  if (k == ExperimentKind::StabilityRun) {
    if (!(delta > 0)) bad.push_back("stability.delta must be positive");
    if (!(T_final > 0)) bad.push_back("stability.T_final must be positive");
    if (!(step_fraction > 0) || step_fraction > 0.01)
      bad.push_back("stability.step_fraction must lie in (0, 0.01]");
    if (sample_count < 2) bad.push_back("stability.sample_count must be at least 2");
  }

  return bad;
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream out;
  out << "# canonical configuration echo\n";
  out << "[lattice]\n";
  out << "dim = " << dim << "\n";
  out << "radius = " << radius << "\n";
  out << "boundary = " << to_string(boundary) << "\n";
  out << "\n[model]\n";
  out << "p = " << p << "\n";
  if (omega_given)
    out << "omega = " << format_full(omega_raw) << "\n";
  else
    out << "omega_tilde = " << format_full(omega_tilde) << "\n";
  out << "profile = " << profile << "\n";
  out << "\n[breather]\n";
  out << "eps = " << format_full(eps) << "\n";
  out << "harmonics = " << harmonics << "\n";
  out << "newton_tol = " << format_full(newton_tol) << "\n";
  out << "fix_period = " << (fix_period ? "true" : "false") << "\n";
  out << "\n[sweep]\n";
  if (!eps_list.empty()) {
    out << "eps_list = ";
    for (std::size_t i = 0; i < eps_list.size(); ++i)
      out << (i ? ", " : "") << format_full(eps_list[i]);
    out << "\n";
  }
  out << "omega_tilde_begin = " << format_full(ot_begin) << "\n";
  out << "omega_tilde_end = " << format_full(ot_end) << "\n";
  out << "count = " << ot_count << "\n";
  out << "\n[spectrum]\n";
  out << "harmonics = " << spectral_harmonics << "\n";
  out << "eig_count = " << eig_count << "\n";
  out << "monodromy_step_fraction = " << format_full(monodromy_step_fraction) << "\n";
  out << "\n[normal_form]\n";
  out << "order = " << order << "\n";
  out << "ball_radius = " << format_full(ball_radius) << "\n";
  out << "shrink = " << format_full(shrink) << "\n";
  out << "rational = " << (rational ? "true" : "false") << "\n";
  out << "degree_cap = " << degree_cap << "\n";
  out << "term_cap = " << term_cap << "\n";
  out << "\n[stability]\n";
  out << "step_fraction = " << format_full(step_fraction) << "\n";
  out << "T_final = " << format_full(T_final) << "\n";
  out << "delta = " << format_full(delta) << "\n";
  out << "sample_count = " << sample_count << "\n";
  out << "\n[run]\n";
  out << "seed = " << seed << "\n";
  out << "threads = " << threads << "\n";
  out << "out_dir = " << out_dir << "\n";
  return out.str();
}

}  // namespace kgl
