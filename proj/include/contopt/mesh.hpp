#pragma once

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "contopt/geometry.hpp"

namespace contopt {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Boundary condition carried by a boundary facet. Roller constrains the
// displacement component normal to an axis-aligned facet (u.n = 0).
enum class BoundaryTag { Free, Dirichlet, Neumann, Contact, Roller };

std::string_view to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(std::string_view name);

using Triangle = std::array<int, 3>;
using Edge = std::array<int, 2>;  // always stored as (min, max)

// Boundary facet, oriented so that the owning triangle lies on its left.
struct Facet {
  int a = -1;
  int b = -1;
  BoundaryTag tag = BoundaryTag::Free;
  int tri = -1;            // owning triangle
  bool interface = false;  // facet lies inside the design box (created by a cut)
};

using FacetPredicate = std::function<bool(const Vec2& midpoint)>;

// Unstructured, conforming triangle mesh. Immutable once built: every
// operation that changes topology or tags returns a new mesh.
class TriMesh {
 public:
  TriMesh() = default;

  // Validates orientation and conformity. Boundary facets are discovered from
  // the triangles; tags are copied from `tagged` (matched by vertex pair),
  // everything else is Free.
  TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
          const std::vector<Facet>& tagged = {});

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Facet>& facets() const { return facets_; }
  const std::vector<Edge>& edges() const { return edges_; }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  // Local edge k of triangle t joins local vertices (k, k+1 mod 3).
  int triangle_edge(int t, int k) const { return tri_edges_[t][k]; }
  const std::array<int, 2>& edge_triangles(int e) const { return edge_tris_[e]; }
  int find_edge(int a, int b) const;  // -1 when absent

  // P2 layout: vertices first, then one mid-edge node per edge in edge order.
  int num_p2_nodes() const { return num_vertices() + num_edges(); }
  std::array<int, 6> p2_nodes(int t) const;
  Vec2 p2_node_position(int node) const;

  double area(int t) const;
  double total_area() const;
  double diameter() const;  // bounding-box diagonal
  std::array<Vec2, 2> bounding_box() const { return {lo_, hi_}; }
  Vec2 centroid(int t) const;

  double facet_length(const Facet& f) const;
  double boundary_length(BoundaryTag tag) const;
  Vec2 facet_outward_normal(const Facet& f) const;

  // Re-tags every boundary facet whose midpoint satisfies `region`.
  TriMesh tag_boundary(const FacetPredicate& region, BoundaryTag tag) const;
  TriMesh with_facets(std::vector<Facet> facets) const;

 private:
  void build_topology();

  std::vector<Vec2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Facet> facets_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> tri_edges_;
  std::vector<std::array<int, 2>> edge_tris_;
  Vec2 lo_{}, hi_{};
};

// Structured triangulation of [0,width]x[0,height] with 2*nx*ny triangles.
// Cell diagonals alternate in a checkerboard so the mesh is symmetric.
TriMesh build_rect_mesh(double width, double height, int nx, int ny);
TriMesh build_rect_mesh(Vec2 origin, double width, double height, int nx, int ny);

// Midpoint predicate matching facets on the segment [p, q], tolerance
// 1e-9 times `scale` (use the domain diagonal).
FacetPredicate on_segment(Vec2 p, Vec2 q, double scale);

// Extracts the triangles listed in `tris` into a compact mesh. Parent boundary
// tags are inherited; new boundary facets are Free and flagged as interface.
// `vertex_map` receives new -> parent vertex indices.
TriMesh extract_submesh(const TriMesh& parent, const std::vector<int>& tris,
                        std::vector<int>* vertex_map = nullptr);

// Exhaustive conformity scan: no vertex may lie strictly inside an edge.
bool is_conforming(const TriMesh& mesh, double tol = 1e-12);

// Barycentric coordinates of p in triangle t.
std::array<double, 3> barycentric(const TriMesh& mesh, int t, const Vec2& p);

// Bucket grid over triangle bounding boxes for point location.
class TriangleLocator {
 public:
  explicit TriangleLocator(const TriMesh& mesh);

  struct Hit {
    int tri = -1;
    std::array<double, 3> bary{};
    bool inside = false;  // false: nearest triangle, extrapolated
  };

  // Triangle containing p (barycentric tolerance `tol`); nullopt if none.
  std::optional<Hit> locate(const Vec2& p, double tol = 1e-10) const;
  // Containing triangle, or the nearest one when p is outside the mesh.
  Hit locate_or_nearest(const Vec2& p) const;

 private:
  std::array<int, 2> cell_of(const Vec2& p) const;

  const TriMesh* mesh_;
  Vec2 lo_{};
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace contopt
