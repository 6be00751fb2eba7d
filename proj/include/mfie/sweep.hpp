#pragma once

// Mesh-refinement sweeps: per level, assemble once, solve every
// (formulation, order) point, compare RCS curves with a reference.

#include "mfie/basis.hpp"
#include "mfie/config.hpp"
#include "mfie/formulations.hpp"
#include "mfie/mesh.hpp"
#include "mfie/mie.hpp"
#include "mfie/operators.hpp"
#include "mfie/postproc.hpp"
#include "mfie/rcs.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace mfie {

/// Operator matrices and right-hand sides of one mesh level.
struct LevelSystem {
  BasisSet basis;
  ComplexDenseMatrix G, A, K, T;  // K / T empty when not requested
  ComplexVector h, e;
  double assembly_s = 0.0;

  /// The LO system on the same mesh: leading RWG blocks of a FULL_FIRST system.
  LevelSystem lo_slice() const {
    if (basis.order() == BasisOrder::lo) return *this;
    const int n = basis.num_lo();
    LevelSystem s{build_basis(basis.mesh_ptr(), BasisOrder::lo), G.topLeftCorner(n, n), A.topLeftCorner(n, n),
                  K.size() ? ComplexDenseMatrix(K.topLeftCorner(n, n)) : ComplexDenseMatrix(),
                  T.size() ? ComplexDenseMatrix(T.topLeftCorner(n, n)) : ComplexDenseMatrix(),
                  h.head(n), e.head(n), assembly_s};
    return s;
  }
};

inline LevelSystem assemble_system(std::shared_ptr<const TriangleMesh> mesh, BasisOrder order, const PlaneWave& pw,
                                   bool want_k, bool want_t, const AssemblyOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  LevelSystem s{build_basis(std::move(mesh), order), {}, {}, {}, {}, {}, {}, 0.0};
  s.G = assemble_gram_bb(s.basis, opts);
  s.A = assemble_gram_ab(s.basis, opts);
  if (want_k || want_t) {
    OperatorAssembler(s.basis, opts).assemble(pw.k, pw.eta, want_k ? &s.K : nullptr, want_t ? &s.T : nullptr);
  }
  if (want_k) s.h = assemble_rhs_mfie(s.basis, pw, opts);
  if (want_t) s.e = assemble_rhs_efie(s.basis, pw, opts);
  s.assembly_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

/// Solve one formulation on an assembled system; the WF mode follows the basis order.
inline SolveReport solve_formulation(const LevelSystem& s, Formulation f, double w) {
  SolveReport r;
  switch (f) {
    case Formulation::efie:
      if (!s.T.size()) throw DomainError("efie requested but T was not assembled");
      r = solve_efie(s.T, s.e);
      break;
    case Formulation::mfie:
      if (!s.K.size()) throw DomainError("mfie requested but K was not assembled");
      r = solve_mfie_classical(s.G, s.K, s.h);
      break;
    case Formulation::wf_mfie:
      if (!s.K.size()) throw DomainError("wf-mfie requested but K was not assembled");
      r = solve_mfie_wf(s.G, s.A, s.K, s.h, w, s.basis.order() == BasisOrder::lo ? WfMode::lo : WfMode::full_first);
      break;
  }
  r.assembly_s = s.assembly_s;
  return r;
}

/// Mesh of a configured refinement level: icosphere level for spheres,
/// 2 * level divisions per edge for cuboids, `level` midpoint refinements of a file mesh.
inline TriangleMesh make_level_mesh(const ExperimentConfig& c, int level) {
  switch (c.geometry) {
    case GeometryKind::sphere: return make_sphere(c.size_wl * c.wavelength, level);
    case GeometryKind::cuboid: return make_cuboid(c.size_wl * c.wavelength, 2 * level);
    case GeometryKind::file: {
      TriangleMesh m = load_mesh(c.mesh_file);
      for (int i = 0; i < level; ++i) m = refine(m);
      return m;
    }
  }
  throw DomainError("unknown geometry");
}

inline PlaneWave config_wave(const ExperimentConfig& c) {
  PlaneWave pw;
  pw.direction = c.direction;
  pw.polarization = c.polarization;
  pw.k = c.k();
  return pw;
}

/// Interior probes for the extinction check (sphere and cuboid only).
inline std::vector<Vec3> interior_probes(const ExperimentConfig& c) {
  if (c.geometry == GeometryKind::file) return {};
  // inscribed radius of the body
  const double r = (c.geometry == GeometryKind::sphere ? 1.0 : 0.5) * c.size_wl * c.wavelength;
  return {Vec3::Zero(), Vec3(0.35 * r, 0, 0), Vec3(0, -0.4 * r, 0.15 * r), Vec3(0, 0, 0.5 * r),
          Vec3(-0.25 * r, 0.3 * r, -0.2 * r)};
}

struct SweepPoint {
  Formulation formulation = Formulation::efie;
  BasisOrder order = BasisOrder::lo;
  int level = 0;
  int unknowns = 0;
  double h_over_lambda = 0.0;
  double error = std::numeric_limits<double>::quiet_NaN();
  double condition = std::numeric_limits<double>::quiet_NaN();
  double assembly_s = 0.0;
  double solve_s = 0.0;
  double interior = std::numeric_limits<double>::quiet_NaN();
  std::string status = "ok";
  std::string message;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::string reference_status = "ok";
  std::filesystem::path output_dir;
};

/// Output directory from the config, overridden by MFIE_OUTPUT_DIR when set.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& c) {
  if (const char* env = std::getenv("MFIE_OUTPUT_DIR"); env && *env) return env;
  return c.output_dir;
}

inline const char* kResultsHeader =
    "formulation,order,level,N_unknowns,mesh_h_over_lambda,avg_rcs_error,cond_estimate,assembly_s,solve_s,"
    "interior_residual,status,message";

namespace detail {
inline std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

inline void write_results_row(std::ostream& o, const SweepPoint& p) {
  o << to_string(p.formulation) << ',' << to_string(p.order) << ',' << p.level << ',' << p.unknowns << ','
    << p.h_over_lambda << ',' << p.error << ',' << p.condition << ',' << p.assembly_s << ',' << p.solve_s << ','
    << p.interior << ',' << p.status << ',' << csv_quote(p.message) << '\n';
}

inline void write_matrix(const std::filesystem::path& path, const ComplexDenseMatrix& Z) {
  std::ofstream out(path, std::ios::binary);
  const std::int64_t rows = Z.rows(), cols = Z.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(Z.data()), static_cast<std::streamsize>(sizeof(Complex) * Z.size()));
}

inline std::string point_tag(Formulation f, BasisOrder o, int level) {
  return to_string(f) + "_" + to_string(o) + "_L" + std::to_string(level);
}
}  // namespace detail

/// gnuplot script: error against lambda / h on log-log axes, one curve per
/// (formulation, order), reading only the documented results.csv columns.
inline void write_plot_script(std::ostream& o, const ExperimentConfig& c) {
  o << "# run with: gnuplot plot.gp\n"
    << "set datafile separator ','\n"
    << "set logscale xy\n"
    << "set xlabel 'lambda / h'\n"
    << "set ylabel 'averaged RCS error'\n"
    << "set key top right\n"
    << "set grid\n"
    << "set terminal pngcairo size 900,600\n"
    << "set output 'convergence.png'\n"
    << "plot \\\n";
  bool first = true;
  for (BasisOrder ord : c.orders) {
    for (Formulation f : c.formulations) {
      if (!first) o << ", \\\n";
      first = false;
      o << "  'results.csv' every ::1 using (strcol(1) eq '" << to_string(f) << "' && strcol(2) eq '" << to_string(ord)
        << "' ? 1.0/$5 : NaN):6 with linespoints title '" << to_string(f) << " " << to_string(ord) << "'";
    }
  }
  o << "\n";
}

/// Run every (formulation, order, level) point, writing results.csv, one RCS
/// CSV per successful point, the reference curve and plot.gp into the output
/// directory. Failed points are recorded and the sweep continues.
inline SweepResult run_sweep(const ExperimentConfig& c, std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  SweepResult res;
  res.output_dir = resolve_output_dir(c);
  fs::create_directories(res.output_dir);
  if (c.dump_matrices) fs::create_directories(res.output_dir / "matrices");
  const PlaneWave pw = config_wave(c);
  const AngularGrid grid = make_angular_grid(c.grid_step_deg);
  const double k = c.k();
  auto say = [&](const std::string& s) {
    if (log) *log << s << std::endl;
  };

  // reference curve
  RcsCurve reference;
  bool have_reference = false;
  try {
    if (c.reference == ReferenceKind::mie) {
      const MieSolution s = mie_pec_coefficients(k * c.size_wl * c.wavelength);
      reference = mie_bistatic_rcs(s, k, grid, pw.direction, pw.polarization);
      have_reference = true;
    } else if (c.reference == ReferenceKind::efie_fine) {
      const int level = c.levels.back() + c.reference_levels_above;
      say("reference: full-first EFIE at level " + std::to_string(level));
      const auto mesh = std::make_shared<const TriangleMesh>(make_level_mesh(c, level));
      const LevelSystem s = assemble_system(mesh, BasisOrder::full_first, pw, false, true, c.quad);
      reference = bistatic_rcs(solve_efie(s.T, s.e).coefficients, s.basis, k, pw, grid);
      have_reference = true;
    } else {
      res.reference_status = "none";
    }
  } catch (const std::exception& e) {
    res.reference_status = std::string("error: ") + e.what();
    say("reference failed: " + std::string(e.what()));
  }
  if (have_reference) {
    std::ofstream out(res.output_dir / "rcs_reference.csv");
    write_rcs_csv(out, reference);
  }

  const bool want_k = std::any_of(c.formulations.begin(), c.formulations.end(),
                                  [](Formulation f) { return f != Formulation::efie; });
  const bool want_t =
      std::find(c.formulations.begin(), c.formulations.end(), Formulation::efie) != c.formulations.end();
  const bool want_ho = std::find(c.orders.begin(), c.orders.end(), BasisOrder::full_first) != c.orders.end();
  const std::vector<Vec3> probes = interior_probes(c);

  for (int level : c.levels) {
    std::vector<LevelSystem> systems;  // one per configured order
    std::string level_error;
    double h = 0.0;
    try {
      const auto mesh = std::make_shared<const TriangleMesh>(make_level_mesh(c, level));
      h = mesh->mean_edge_length() / c.wavelength;
      // LO matrices are slices of the FULL_FIRST ones when both orders run
      say("level " + std::to_string(level) + ": " + std::to_string(mesh->num_triangles()) + " triangles");
      const LevelSystem full =
          assemble_system(mesh, want_ho ? BasisOrder::full_first : BasisOrder::lo, pw, want_k, want_t, c.quad);
      for (BasisOrder o : c.orders) systems.push_back(o == full.basis.order() ? full : full.lo_slice());
    } catch (const std::exception& e) {
      level_error = e.what();
      say("level " + std::to_string(level) + " failed: " + level_error);
    }
    for (std::size_t oi = 0; oi < c.orders.size(); ++oi) {
      for (Formulation f : c.formulations) {
        SweepPoint p;
        p.formulation = f;
        p.order = c.orders[oi];
        p.level = level;
        p.h_over_lambda = h;
        if (!level_error.empty()) {
          p.status = "error";
          p.message = "level " + std::to_string(level) + ": " + level_error;
          res.points.push_back(p);
          continue;
        }
        const LevelSystem& s = systems[oi];
        p.unknowns = s.basis.size();
        p.assembly_s = s.assembly_s;
        try {
          const SolveReport r = solve_formulation(s, f, c.weight(p.order));
          p.condition = r.condition;
          p.solve_s = r.solve_s;
          p.message = r.warning;
          const RcsCurve curve = bistatic_rcs(r.coefficients, s.basis, k, pw, grid);
          {
            std::ofstream out(res.output_dir / ("rcs_" + detail::point_tag(f, p.order, level) + ".csv"));
            write_rcs_csv(out, curve);
          }
          if (have_reference) {
            p.error = averaged_rcs_error(curve, reference);
          } else if (c.reference != ReferenceKind::none) {
            p.message = "reference unavailable";
          }
          if (!probes.empty()) {
            try {
              p.interior = interior_field_check(r.coefficients, s.basis, k, pw, probes);
            } catch (const DomainError& e) {
              p.message += std::string(p.message.empty() ? "" : "; ") + "interior check skipped: " + e.what();
            }
          }
          if (c.dump_matrices) {
            ComplexDenseMatrix Z;
            if (f == Formulation::efie) Z = s.T;
            else if (f == Formulation::mfie) Z = mfie_classical_matrix(s.G, s.K);
            else Z = mfie_wf_matrix(s.G, s.A, s.K, c.weight(p.order),
                                    p.order == BasisOrder::lo ? WfMode::lo : WfMode::full_first);
            detail::write_matrix(res.output_dir / "matrices" / ("Z_" + detail::point_tag(f, p.order, level) + ".bin"), Z);
          }
        } catch (const std::exception& e) {
          p.status = "error";
          p.message = e.what();
        }
        say(to_string(f) + " " + to_string(p.order) + " level " + std::to_string(level) + ": " + p.status +
            (p.status == "ok" ? "" : " (" + p.message + ")"));
        res.points.push_back(p);
      }
    }
  }

  std::ofstream csv(res.output_dir / "results.csv");
  csv << kResultsHeader << '\n' << std::setprecision(10);
  for (const SweepPoint& p : res.points) detail::write_results_row(csv, p);
  std::ofstream plot(res.output_dir / "plot.gp");
  write_plot_script(plot, c);
  return res;
}

/// Human-readable summary table of a sweep.
inline void print_summary(std::ostream& o, const SweepResult& r) {
  o << std::left << std::setw(8) << "form" << std::setw(4) << "ord" << std::setw(6) << "level" << std::setw(8) << "N"
    << std::setw(10) << "h/lambda" << std::setw(12) << "rcs_error" << std::setw(12) << "cond" << std::setw(10)
    << "interior" << "status\n";
  for (const SweepPoint& p : r.points) {
    o << std::left << std::setw(8) << to_string(p.formulation) << std::setw(4) << to_string(p.order) << std::setw(6)
      << p.level << std::setw(8) << p.unknowns << std::setw(10) << std::setprecision(4) << p.h_over_lambda
      << std::setw(12) << p.error << std::setw(12) << p.condition << std::setw(10) << p.interior << p.status
      << (p.message.empty() ? "" : " " + p.message) << '\n';
  }
  o << "reference: " << r.reference_status << "\noutput: " << r.output_dir.string() << '\n';
}

}  // namespace mfie
