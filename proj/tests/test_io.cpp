#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "contopt/io.hpp"

using namespace contopt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path = fs::temp_directory_path() / "contopt_test_io";
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

bool has_line(const std::vector<std::string>& lines, const std::string& s) {
  return std::find(lines.begin(), lines.end(), s) != lines.end();
}

}  // namespace

TEST_CASE("VTK mesh with point and cell data") {
  TempDir dir;
  auto m = std::make_shared<const TriMesh>(build_rect_mesh(1, 1, 2, 2));
  const auto u = FeField::interpolate(m, 2, [](const Vec2& p) { return p.x + 2 * p.y; });
  const auto path = dir.path / "m.vtk";
  write_vtk_mesh(path, *m, {vertex_data("u", u)}, {vertex_data("area", std::vector<double>(m->num_triangles(), 0.5))});
  const auto lines = lines_of(path);
  REQUIRE(lines.size() > 5);
  CHECK(lines[0] == "# vtk DataFile Version 3.0");
  CHECK(has_line(lines, "DATASET UNSTRUCTURED_GRID"));
  CHECK(has_line(lines, "POINTS 9 double"));
  CHECK(has_line(lines, "CELLS 8 32"));
  CHECK(has_line(lines, "POINT_DATA 9"));
  CHECK(has_line(lines, "CELL_DATA 8"));
  CHECK(has_line(lines, "SCALARS u double 1"));
  // last vertex is (1, 1): u = 3
  CHECK(has_line(lines, "3"));

  CHECK_THROWS_AS(write_vtk_mesh(path, *m, {vertex_data("bad", std::vector<double>(3, 0.0))}), IoError);
  CHECK_THROWS_AS(write_vtk_mesh(path, *m, {vertex_data("bad", std::vector<double>(27, 0.0), 3)}), IoError);
  CHECK_THROWS_AS(write_vtk_mesh(dir.path / "no" / "such" / "m.vtk", *m), IoError);
}

TEST_CASE("facets, grid and zero set") {
  TempDir dir;
  const GridSpec spec = GridSpec::covering({0, 0}, {1, 1}, 0.25);
  const auto ls = signed_distance_init([](const Vec2& p) { return p.x - 0.4; }, spec);
  write_vtk_grid(dir.path / "g.vtk", ls.phi);
  auto g = lines_of(dir.path / "g.vtk");
  CHECK(has_line(g, "DATASET STRUCTURED_POINTS"));
  CHECK(has_line(g, "DIMENSIONS 5 5 1"));

  auto bg = std::make_shared<const TriMesh>(build_rect_mesh(1, 1, 4, 4));
  const auto cut = cut_mesh(FeField::interpolate(bg, 2, [](const Vec2& p) { return p.x - 0.4; }), 1, 0.0);
  write_vtk_facets(dir.path / "f.vtk", *cut.omega);
  CHECK(has_line(lines_of(dir.path / "f.vtk"), "DATASET POLYDATA"));
  write_zero_set_csv(dir.path / "z.csv", *cut.omega);
  const auto z = lines_of(dir.path / "z.csv");
  REQUIRE(z.size() == 9);  // two triangles per row
  CHECK(z[0] == "x0,y0,x1,y1");
  for (std::size_t i = 1; i < z.size(); ++i) CHECK(z[i].rfind("0.40000000000000002,", 0) == 0);
}

TEST_CASE("trace and residual CSV") {
  TempDir dir;
  OptTrace tr;
  IterationRecord r;
  r.iteration = 3;
  r.attempt = 1;
  r.J = 0.5;
  r.note = "J increased, step \"halved\"";
  tr.records.push_back(r);
  write_trace_csv(dir.path / "t.csv", tr);
  const auto t = lines_of(dir.path / "t.csv");
  REQUIRE(t.size() == 2);
  CHECK(t[0].rfind("iteration,attempt,J,", 0) == 0);
  const auto cols = [](const std::string& s) { return std::count(s.begin(), s.end(), ','); };
  CHECK(cols(t[1]) == cols(t[0]));
  CHECK(t[1].rfind("3,1,0.5,", 0) == 0);

  write_residuals_csv(dir.path / "r.csv", {1.0, 1e-3, 1e-9});
  const auto res = lines_of(dir.path / "r.csv");
  REQUIRE(res.size() == 4);
  CHECK(res[0] == "iteration,relative_residual");
  CHECK(res[3] == "2,1.0000000000000001e-09");
}
