#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "contopt/fem.hpp"
#include "contopt/mesh.hpp"

namespace contopt {

class CutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parametric roots in (0,1) of the edge interpolant. Degree 1 reads the two
// endpoint values (a, b) or ignores the middle of (a, m, b); degree 2 reads
// (a, m, b) with m the value at the edge midpoint. Roots within snap_tol of
// an endpoint are dropped (they belong to the vertex).
std::vector<double> edge_roots(std::span<const double> values, int degree, double snap_tol = 0.0);

// Where a vertex of the cut mesh comes from: a background vertex, or a root
// at parameter t along background edge `edge` (oriented min -> max index).
struct VertexOrigin {
  int parent_vertex = -1;
  int edge = -1;
  double t = 0.0;
};

struct CutResult {
  std::shared_ptr<const TriMesh> full_mesh;  // conforming refinement of D_h
  std::shared_ptr<const TriMesh> omega;      // phi_h <= 0 part
  std::vector<int> full_parent;              // full triangle -> D_h triangle
  std::vector<int> omega_parent;             // omega triangle -> D_h triangle
  std::vector<int> omega_vertices;           // omega vertex -> full vertex
  std::vector<VertexOrigin> provenance;      // full vertex -> origin
  std::vector<Facet> interface_facets;       // omega facets inside D
  FeField phi;                               // phi_h after snapping, on D_h
  int added_vertices = 0;
  double snap_tol = 0.0;                     // value actually used
};

// Cuts D_h along {phi_h = 0}. phi_h is a scalar P2 field on D_h; degree 1
// replaces its midpoint values by endpoint averages first.
CutResult cut_mesh(const FeField& phi_h, int degree = 2, double snap_tol = 0.05);

enum class ContactMode { Pinned, Free };

// Omega with interface facets tagged Free (pinned) or Contact (free); facets
// on the box boundary keep their background tags. Throws CutError when the
// shape is not admissible.
TriMesh inherit_tags(const CutResult& cut, ContactMode mode);

}  // namespace contopt
