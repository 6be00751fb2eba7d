#include "mfie/mfie.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace mfie;

namespace {

int cmd_run(const std::string& path) {
  const ExperimentConfig c = load_config(path);
#ifdef _OPENMP
  if (c.threads > 0) omp_set_num_threads(c.threads);
#endif
  const SweepResult r = run_sweep(c, &std::cerr);
  print_summary(std::cout, r);
  for (const SweepPoint& p : r.points) {
    if (p.status != "ok") return 3;
  }
  return 0;
}

int cmd_validate(const std::string& path) {
  std::cout << to_text(load_config(path));
  return 0;
}

int cmd_mie(double ka, double step, double wavelength, const std::string& output) {
  const double k = 2.0 * kPi / wavelength;
  const MieSolution s = mie_pec_coefficients(ka);
  const RcsCurve c = mie_bistatic_rcs(s, k, make_angular_grid(step), -Vec3::UnitZ(), CVec3(1, 0, 0));
  if (output.empty()) {
    write_rcs_csv(std::cout, c);
  } else {
    std::ofstream out(output);
    if (!out) throw Error("cannot write " + output);
    write_rcs_csv(out, c);
  }
  std::cerr << "ka = " << ka << ", L = " << s.order << ", radius = " << ka / k << " m, Q_sca = "
            << mie_scattering_cross_section(s, k) << " m^2\n";
  return 0;
}

int cmd_mesh_info(const std::string& path) {
  const TriangleMesh m = load_mesh(path);
  double min_area = m.area(0), max_area = m.area(0);
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    min_area = std::min(min_area, m.area(static_cast<int>(t)));
    max_area = std::max(max_area, m.area(static_cast<int>(t)));
  }
  std::cout << std::setprecision(8) << "vertices: " << m.num_vertices() << "\nedges: " << m.num_edges()
            << "\ntriangles: " << m.num_triangles() << "\neuler_characteristic: " << m.euler_characteristic()
            << "\nsurface_area: " << m.total_area() << "\nvolume: " << m.signed_volume()
            << "\nmean_edge_length: " << m.mean_edge_length() << "\nbounding_box_diagonal: "
            << m.bounding_box_diagonal() << "\ntriangle_area_range: " << min_area << " .. " << max_area
            << "\nrwg_unknowns: " << m.num_edges() << "\nfull_first_unknowns: " << 2 * m.num_edges() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MoM solver for PEC plane-wave scattering (EFIE, MFIE, weak-form MFIE)"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run the refinement sweep described by a config file");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  auto* validate = app.add_subcommand("validate", "parse a config and print it with all defaults");
  validate->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);

  double ka = 0.0, step = 5.0, wavelength = 1.0;
  std::string output;
  auto* mie = app.add_subcommand("mie", "Mie-series bistatic RCS of a PEC sphere as CSV (incidence -z, x-polarized)");
  mie->add_option("ka", ka, "size parameter k a")->required()->check(CLI::PositiveNumber);
  mie->add_option("grid", step, "angular step in degrees (divides 180)")->required()->check(CLI::PositiveNumber);
  mie->add_option("--wavelength", wavelength, "wavelength in m")->check(CLI::PositiveNumber);
  mie->add_option("-o,--output", output, "write the CSV here instead of stdout");

  std::string mesh_path;
  auto* info = app.add_subcommand("mesh-info", "load a mesh (.off or .msh) and print topology and size");
  info->add_option("file", mesh_path, "mesh file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config_path);
    if (*validate) return cmd_validate(config_path);
    if (*mie) return cmd_mie(ka, step, wavelength, output);
    if (*info) return cmd_mesh_info(mesh_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
