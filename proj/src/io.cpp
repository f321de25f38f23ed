#include "contopt/io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>

namespace contopt {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

void write_arrays(std::ostream& out, const std::vector<VtkData>& data, std::size_t count) {
  for (const auto& d : data) {
    if (d.components != 1 && d.components != 2) throw IoError("VTK data '" + d.name + "': 1 or 2 components");
    if (d.values.size() != count * d.components) throw IoError("VTK data '" + d.name + "': wrong size");
    if (d.components == 1) {
      out << "SCALARS " << d.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : d.values) out << v << '\n';
    } else {
      out << "VECTORS " << d.name << " double\n";
      for (std::size_t i = 0; i < count; ++i) out << d.values[2 * i] << ' ' << d.values[2 * i + 1] << " 0\n";
    }
  }
}

}  // namespace

VtkData vertex_data(const std::string& name, const FeField& field) {
  const int nv = field.mesh().num_vertices();
  const int c = field.components();
  VtkData d{name, c, std::vector<double>(static_cast<std::size_t>(nv) * c)};
  for (int i = 0; i < nv; ++i) {
    for (int k = 0; k < c; ++k) d.values[i * c + k] = field.at(i, k);
  }
  return d;
}

VtkData vertex_data(const std::string& name, const std::vector<double>& values, int components) {
  return {name, components, values};
}

void write_vtk_mesh(const std::filesystem::path& path, const TriMesh& mesh, const std::vector<VtkData>& point_data,
                    const std::vector<VtkData>& cell_data) {
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\ncontopt mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices()) out << v.x << ' ' << v.y << " 0\n";
  const int nt = mesh.num_triangles();
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (int t = 0; t < nt; ++t) out << "5\n";
  if (!point_data.empty()) {
    out << "POINT_DATA " << mesh.num_vertices() << '\n';
    write_arrays(out, point_data, mesh.num_vertices());
  }
  if (!cell_data.empty()) {
    out << "CELL_DATA " << nt << '\n';
    write_arrays(out, cell_data, nt);
  }
  if (!out) throw IoError("write failed: '" + path.string() + "'");
}

void write_vtk_facets(const std::filesystem::path& path, const TriMesh& mesh) {
  auto out = open_out(path);
  const auto& facets = mesh.facets();
  out << "# vtk DataFile Version 3.0\ncontopt boundary\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& v : mesh.vertices()) out << v.x << ' ' << v.y << " 0\n";
  out << "LINES " << facets.size() << ' ' << 3 * facets.size() << '\n';
  for (const auto& f : facets) out << "2 " << f.a << ' ' << f.b << '\n';
  out << "CELL_DATA " << facets.size() << "\nSCALARS tag int 1\nLOOKUP_TABLE default\n";
  for (const auto& f : facets) out << static_cast<int>(f.tag) << '\n';
  out << "SCALARS interface int 1\nLOOKUP_TABLE default\n";
  for (const auto& f : facets) out << (f.interface ? 1 : 0) << '\n';
  if (!out) throw IoError("write failed: '" + path.string() + "'");
}

void write_vtk_grid(const std::filesystem::path& path, const ScalarGrid& grid, const std::string& name) {
  auto out = open_out(path);
  const auto& s = grid.spec();
  out << "# vtk DataFile Version 3.0\ncontopt grid\nASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << s.nx << ' ' << s.ny << " 1\n";
  out << "ORIGIN " << s.origin.x << ' ' << s.origin.y << " 0\n";
  out << "SPACING " << s.dx << ' ' << s.dx << " 1\n";
  out << "POINT_DATA " << s.size() << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
  for (double v : grid.values()) out << v << '\n';
  if (!out) throw IoError("write failed: '" + path.string() + "'");
}

void write_zero_set_csv(const std::filesystem::path& path, const TriMesh& omega) {
  auto out = open_out(path);
  out << "x0,y0,x1,y1\n";
  for (const auto& f : omega.facets()) {
    if (!f.interface) continue;
    const Vec2 a = omega.vertices()[f.a], b = omega.vertices()[f.b];
    out << a.x << ',' << a.y << ',' << b.x << ',' << b.y << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const OptTrace& trace) {
  auto out = open_out(path);
  out << "iteration,attempt,J,compliance,volume,accepted,step,theta_bound,dJ,newton_iterations,outer_iterations,"
         "weak_contact_share,weak_sticking_share,note\n";
  for (const auto& r : trace.records) {
    std::string note = r.note;
    for (char& ch : note) {
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    }
    out << r.iteration << ',' << r.attempt << ',' << r.J << ',' << r.compliance << ',' << r.volume << ','
        << (r.accepted ? 1 : 0) << ',' << r.step << ',' << r.theta_bound << ',' << r.dJ << ',' << r.newton_iterations
        << ',' << r.outer_iterations << ',' << r.weak_contact_share << ',' << r.weak_sticking_share << ',' << note
        << '\n';
  }
}

void write_residuals_csv(const std::filesystem::path& path, const std::vector<double>& history) {
  auto out = open_out(path);
  out << "iteration,relative_residual\n";
  for (std::size_t i = 0; i < history.size(); ++i) out << i << ',' << history[i] << '\n';
}

}  // namespace contopt
