#pragma once

// Experiment configuration: plain-text "key = value" lines with dotted keys,
// '#' comments, comma-separated lists.

#include "mfie/core.hpp"
#include "mfie/formulations.hpp"
#include "mfie/mesh.hpp"
#include "mfie/operators.hpp"
#include "mfie/rcs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace mfie {

enum class GeometryKind { sphere, cuboid, file };
enum class ReferenceKind { mie, efie_fine, none };

inline std::string to_string(GeometryKind g) {
  switch (g) {
    case GeometryKind::sphere: return "sphere";
    case GeometryKind::cuboid: return "cuboid";
    case GeometryKind::file: return "file";
  }
  return "?";
}

inline std::string to_string(ReferenceKind r) {
  switch (r) {
    case ReferenceKind::mie: return "mie";
    case ReferenceKind::efie_fine: return "efie-fine";
    case ReferenceKind::none: return "none";
  }
  return "?";
}

struct ExperimentConfig {
  GeometryKind geometry = GeometryKind::cuboid;
  double size_wl = 0.5;  // sphere radius or cuboid edge, in wavelengths
  std::string mesh_file;
  double wavelength = 1.0;  // m
  Vec3 direction = -Vec3::UnitZ();
  CVec3 polarization = CVec3(1.0, 0.0, 0.0);
  std::vector<Formulation> formulations = {Formulation::efie, Formulation::mfie, Formulation::wf_mfie};
  std::vector<BasisOrder> orders = {BasisOrder::lo};
  double wf_weight_lo = 0.5;
  double wf_weight_ho = 0.2;
  std::vector<int> levels = {1};
  ReferenceKind reference = ReferenceKind::efie_fine;
  int reference_levels_above = 2;
  AssemblyOptions quad;
  double grid_step_deg = 5.0;
  std::string output_dir = "out";
  int threads = 0;
  bool dump_matrices = false;

  double k() const { return 2.0 * kPi / wavelength; }
  double weight(BasisOrder o) const { return o == BasisOrder::lo ? wf_weight_lo : wf_weight_ho; }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string unquote(const std::string& v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
  return v;
}

[[noreturn]] inline void config_fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    config_fail(key, "expected a number, got '" + v + "'");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return static_cast<int>(x);
  } catch (const std::exception&) {
    config_fail(key, "expected an integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  config_fail(key, "expected true or false, got '" + v + "'");
}

inline Vec3 parse_vec3(const std::string& key, const std::string& v) {
  const auto parts = split_list(v);
  if (parts.size() != 3) config_fail(key, "expected three comma-separated numbers, got '" + v + "'");
  return {parse_real(key, parts[0]), parse_real(key, parts[1]), parse_real(key, parts[2])};
}

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) config_fail(key, what);
}

}  // namespace detail

/// Parse, default and validate a config text. Errors name the offending key.
inline ExperimentConfig validate_config(const std::string& text) {
  using namespace detail;
  std::map<std::string, std::string> raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = unquote(trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (raw.count(key)) config_fail(key, "duplicate key");
    raw[key] = value;
  }

  ExperimentConfig c;
  Vec3 pol_re(1, 0, 0), pol_im(0, 0, 0);
  std::optional<double> wavelength, frequency;
  std::optional<double> weight_all, weight_lo, weight_ho;
  std::optional<ReferenceKind> reference;
  bool size_set = false;

  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> handlers = {
      {"geometry.kind",
       [&](const std::string& k, const std::string& v) {
         if (v == "sphere") c.geometry = GeometryKind::sphere;
         else if (v == "cuboid") c.geometry = GeometryKind::cuboid;
         else if (v == "file") c.geometry = GeometryKind::file;
         else config_fail(k, "expected sphere, cuboid or file, got '" + v + "'");
       }},
      {"geometry.size",
       [&](const std::string& k, const std::string& v) {
         c.size_wl = parse_real(k, v);
         size_set = true;
         require(c.size_wl > 0.0, k, "must be positive");
       }},
      {"geometry.file", [&](const std::string&, const std::string& v) { c.mesh_file = v; }},
      {"wavelength", [&](const std::string& k, const std::string& v) { wavelength = parse_real(k, v); }},
      {"frequency", [&](const std::string& k, const std::string& v) { frequency = parse_real(k, v); }},
      {"incidence.direction", [&](const std::string& k, const std::string& v) { c.direction = parse_vec3(k, v); }},
      {"incidence.polarization", [&](const std::string& k, const std::string& v) { pol_re = parse_vec3(k, v); }},
      {"incidence.polarization_imag", [&](const std::string& k, const std::string& v) { pol_im = parse_vec3(k, v); }},
      {"formulations",
       [&](const std::string& k, const std::string& v) {
         c.formulations.clear();
         for (const std::string& f : split_list(v)) {
           try {
             const Formulation x = parse_formulation(f);
             if (std::find(c.formulations.begin(), c.formulations.end(), x) == c.formulations.end()) {
               c.formulations.push_back(x);
             }
           } catch (const DomainError& e) {
             config_fail(k, e.what());
           }
         }
       }},
      {"orders",
       [&](const std::string& k, const std::string& v) {
         c.orders.clear();
         for (const std::string& o : split_list(v)) {
           BasisOrder x;
           if (o == "lo") x = BasisOrder::lo;
           else if (o == "ho" || o == "full-first") x = BasisOrder::full_first;
           else config_fail(k, "unknown order '" + o + "' (expected lo or ho)");
           if (std::find(c.orders.begin(), c.orders.end(), x) == c.orders.end()) c.orders.push_back(x);
         }
       }},
      {"wf.weight", [&](const std::string& k, const std::string& v) { weight_all = parse_real(k, v); }},
      {"wf.weight.lo", [&](const std::string& k, const std::string& v) { weight_lo = parse_real(k, v); }},
      {"wf.weight.ho", [&](const std::string& k, const std::string& v) { weight_ho = parse_real(k, v); }},
      {"levels",
       [&](const std::string& k, const std::string& v) {
         c.levels.clear();
         for (const std::string& l : split_list(v)) c.levels.push_back(parse_int(k, l));
       }},
      {"reference",
       [&](const std::string& k, const std::string& v) {
         if (v == "mie") reference = ReferenceKind::mie;
         else if (v == "efie-fine") reference = ReferenceKind::efie_fine;
         else if (v == "none") reference = ReferenceKind::none;
         else if (v != "auto") config_fail(k, "expected auto, mie, efie-fine or none, got '" + v + "'");
       }},
      {"reference.levels_above",
       [&](const std::string& k, const std::string& v) { c.reference_levels_above = parse_int(k, v); }},
      {"quad.smooth_degree", [&](const std::string& k, const std::string& v) { c.quad.smooth_degree = parse_int(k, v); }},
      {"quad.near_degree", [&](const std::string& k, const std::string& v) { c.quad.near_degree = parse_int(k, v); }},
      {"quad.gram_degree", [&](const std::string& k, const std::string& v) { c.quad.gram_degree = parse_int(k, v); }},
      {"quad.rhs_degree", [&](const std::string& k, const std::string& v) { c.quad.rhs_degree = parse_int(k, v); }},
      {"quad.touching.along", [&](const std::string& k, const std::string& v) { c.quad.touching.along = parse_int(k, v); }},
      {"quad.touching.across",
       [&](const std::string& k, const std::string& v) { c.quad.touching.across = parse_int(k, v); }},
      {"quad.touching.power", [&](const std::string& k, const std::string& v) { c.quad.touching.power = parse_int(k, v); }},
      {"quad.singular.angular",
       [&](const std::string& k, const std::string& v) { c.quad.singular.angular = parse_int(k, v); }},
      {"quad.singular.radial",
       [&](const std::string& k, const std::string& v) { c.quad.singular.radial = parse_int(k, v); }},
      {"quad.polar_radius", [&](const std::string& k, const std::string& v) { c.quad.polar_radius = parse_real(k, v); }},
      {"operator.near_threshold",
       [&](const std::string& k, const std::string& v) { c.quad.near_threshold = parse_real(k, v); }},
      {"grid.step_deg", [&](const std::string& k, const std::string& v) { c.grid_step_deg = parse_real(k, v); }},
      {"output.dir", [&](const std::string&, const std::string& v) { c.output_dir = v; }},
      {"output.dump_matrices", [&](const std::string& k, const std::string& v) { c.dump_matrices = parse_bool(k, v); }},
      {"threads", [&](const std::string& k, const std::string& v) { c.threads = parse_int(k, v); }},
  };

  for (const auto& [key, value] : raw) {
    const auto h = handlers.find(key);
    if (h == handlers.end()) config_fail(key, "unknown key");
    h->second(key, value);
  }

  // geometry
  if (c.geometry == GeometryKind::file) {
    require(!c.mesh_file.empty(), "geometry.file", "required when geometry.kind = file");
  } else {
    require(c.mesh_file.empty(), "geometry.file", "only valid with geometry.kind = file");
    if (!size_set) c.size_wl = c.geometry == GeometryKind::sphere ? 0.3 : 0.5;
  }

  // frequency
  require(!(wavelength && frequency), "frequency", "give either wavelength or frequency, not both");
  require(wavelength || frequency, "wavelength", "required (or give frequency)");
  if (wavelength) {
    require(*wavelength > 0.0, "wavelength", "must be positive");
    c.wavelength = *wavelength;
  } else {
    require(*frequency > 0.0, "frequency", "must be positive");
    c.wavelength = kSpeedOfLight / *frequency;
  }

  // incidence
  require(c.direction.norm() > 0.0, "incidence.direction", "must be non-zero");
  if (std::abs(c.direction.norm() - 1.0) > 1e-15) c.direction.normalize();
  const CVec3 pol = pol_re.cast<Complex>() + Complex(0.0, 1.0) * pol_im.cast<Complex>();
  require(pol.norm() > 0.0, "incidence.polarization", "must be non-zero");
  c.polarization = std::abs(pol.norm() - 1.0) > 1e-15 ? CVec3(pol / pol.norm()) : pol;
  require(std::abs(c.polarization.dot(c.direction.cast<Complex>())) < 1e-12, "incidence.polarization",
          "must be perpendicular to incidence.direction");

  require(!c.formulations.empty(), "formulations", "at least one formulation is required");
  require(!c.orders.empty(), "orders", "at least one order is required");
  require(!c.levels.empty(), "levels", "at least one refinement level is required");
  for (int l : c.levels) {
    require(l >= 0 && l <= 8, "levels", "each level must be in 0..8");
    if (c.geometry == GeometryKind::cuboid) require(l >= 1, "levels", "cuboid levels start at 1");
  }
  std::sort(c.levels.begin(), c.levels.end());
  c.levels.erase(std::unique(c.levels.begin(), c.levels.end()), c.levels.end());

  // weights: wf.weight sets both, the per-order keys override it
  if (weight_all) c.wf_weight_lo = c.wf_weight_ho = *weight_all;
  if (weight_lo) c.wf_weight_lo = *weight_lo;
  if (weight_ho) c.wf_weight_ho = *weight_ho;
  require(c.wf_weight_lo >= 0.0 && c.wf_weight_lo <= 1.0, weight_lo || !weight_all ? "wf.weight.lo" : "wf.weight",
          "must be in [0, 1]");
  require(c.wf_weight_ho >= 0.0 && c.wf_weight_ho <= 1.0, weight_ho || !weight_all ? "wf.weight.ho" : "wf.weight",
          "must be in [0, 1]");

  // reference
  if (reference) {
    c.reference = *reference;
  } else {
    c.reference = c.geometry == GeometryKind::sphere ? ReferenceKind::mie : ReferenceKind::efie_fine;
  }
  require(c.reference != ReferenceKind::mie || c.geometry == GeometryKind::sphere, "reference",
          "mie reference requires geometry.kind = sphere");
  require(c.reference_levels_above >= 1 && c.reference_levels_above <= 4, "reference.levels_above", "must be in 1..4");

  try {
    c.quad.validate();
  } catch (const DomainError& e) {
    config_fail("quad", e.what());
  }
  try {
    (void)make_angular_grid(c.grid_step_deg);
  } catch (const DomainError& e) {
    config_fail("grid.step_deg", e.what());
  }
  require(c.threads >= 0, "threads", "must be non-negative");
  c.quad.threads = c.threads;
  require(!c.output_dir.empty(), "output.dir", "must not be empty");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return validate_config(ss.str());
}

/// Fully defaulted config in the input syntax; validate_config(to_text(c)) reproduces c.
inline std::string to_text(const ExperimentConfig& c) {
  std::ostringstream o;
  o << std::setprecision(17);
  auto vec = [&](const Vec3& v) { o << v.x() << ", " << v.y() << ", " << v.z() << '\n'; };
  o << "geometry.kind = " << to_string(c.geometry) << '\n';
  if (c.geometry == GeometryKind::file) {
    o << "geometry.file = " << c.mesh_file << '\n';
  } else {
    o << "geometry.size = " << c.size_wl << '\n';
  }
  o << "wavelength = " << c.wavelength << '\n';
  o << "incidence.direction = ";
  vec(c.direction);
  o << "incidence.polarization = ";
  vec(c.polarization.real());
  o << "incidence.polarization_imag = ";
  vec(c.polarization.imag());
  o << "formulations = ";
  for (std::size_t i = 0; i < c.formulations.size(); ++i) o << (i ? ", " : "") << to_string(c.formulations[i]);
  o << "\norders = ";
  for (std::size_t i = 0; i < c.orders.size(); ++i) o << (i ? ", " : "") << to_string(c.orders[i]);
  o << "\nwf.weight.lo = " << c.wf_weight_lo << "\nwf.weight.ho = " << c.wf_weight_ho << "\nlevels = ";
  for (std::size_t i = 0; i < c.levels.size(); ++i) o << (i ? ", " : "") << c.levels[i];
  o << "\nreference = " << to_string(c.reference) << "\nreference.levels_above = " << c.reference_levels_above << '\n';
  o << "quad.smooth_degree = " << c.quad.smooth_degree << "\nquad.near_degree = " << c.quad.near_degree
    << "\nquad.gram_degree = " << c.quad.gram_degree << "\nquad.rhs_degree = " << c.quad.rhs_degree
    << "\nquad.touching.along = " << c.quad.touching.along << "\nquad.touching.across = " << c.quad.touching.across
    << "\nquad.touching.power = " << c.quad.touching.power << "\nquad.singular.angular = " << c.quad.singular.angular
    << "\nquad.singular.radial = " << c.quad.singular.radial << "\nquad.polar_radius = " << c.quad.polar_radius
    << "\noperator.near_threshold = " << c.quad.near_threshold << "\ngrid.step_deg = " << c.grid_step_deg
    << "\noutput.dir = " << c.output_dir << "\noutput.dump_matrices = " << (c.dump_matrices ? "true" : "false")
    << "\nthreads = " << c.threads << '\n';
  return o.str();
}

}  // namespace mfie
