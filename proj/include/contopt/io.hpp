#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "contopt/fem.hpp"
#include "contopt/levelset.hpp"
#include "contopt/mesh.hpp"
#include "contopt/optimizer.hpp"

namespace contopt {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Point or cell data for VTK output; components is 1 or 2 (2 is padded to a
// 3-vector).
struct VtkData {
  std::string name;
  int components = 1;
  std::vector<double> values;
};

// Vertex values of a field (P2 nodes are laid out vertices first).
VtkData vertex_data(const std::string& name, const FeField& field);
VtkData vertex_data(const std::string& name, const std::vector<double>& values, int components = 1);

// Legacy ASCII UNSTRUCTURED_GRID of the triangles.
void write_vtk_mesh(const std::filesystem::path& path, const TriMesh& mesh,
                    const std::vector<VtkData>& point_data = {}, const std::vector<VtkData>& cell_data = {});

// Legacy ASCII POLYDATA of the boundary facets with their tag (integer) and
// interface flag.
void write_vtk_facets(const std::filesystem::path& path, const TriMesh& mesh);

// Legacy ASCII STRUCTURED_POINTS.
void write_vtk_grid(const std::filesystem::path& path, const ScalarGrid& grid, const std::string& name = "phi");

// Interface segments of Omega_h as CSV (x0,y0,x1,y1).
void write_zero_set_csv(const std::filesystem::path& path, const TriMesh& omega);

// One row per attempt.
void write_trace_csv(const std::filesystem::path& path, const OptTrace& trace);

// Residual history of the last contact solve.
void write_residuals_csv(const std::filesystem::path& path, const std::vector<double>& history);

}  // namespace contopt
