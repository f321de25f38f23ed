#pragma once

#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "contopt/mesh.hpp"

namespace contopt {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

class FemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Lame {
  double lambda = 0.0;
  double mu = 0.0;
};

// Plane formulae; nu must lie in (-1, 0.5).
Lame lame_from(double E, double nu);

struct Material {
  double E = 1.0;
  double nu = 0.3;
  Lame lame() const { return lame_from(E, nu); }
};

struct Loads {
  Vec2 body{};      // f, per unit area
  Vec2 traction{};  // tau, on Neumann facets
};

// Rows are the gradients of the two components: g[i] = grad u_i.
using Grad2 = std::array<Vec2, 2>;

inline Grad2 sym(const Grad2& g) {
  const double off = 0.5 * (g[0].y + g[1].x);
  return {Vec2{g[0].x, off}, Vec2{off, g[1].y}};
}

// A:eps(u):eps(v) for the isotropic Hooke tensor.
double hooke_product(const Lame& lame, const Grad2& gu, const Grad2& gv);
// sigma(u) as a symmetric 2x2, rows.
Grad2 stress(const Lame& lame, const Grad2& gu);

struct ElementGeometry {
  std::array<Vec2, 3> grad_l;  // gradients of barycentric coordinates
  double area = 0.0;
  static ElementGeometry of(const TriMesh& mesh, int t);
};

// Local node order (v0, v1, v2, m01, m12, m20).
std::array<double, 6> p2_shape(const std::array<double, 3>& l);
std::array<Vec2, 6> p2_shape_grad(const std::array<double, 3>& l, const ElementGeometry& g);

// Shape values along a facet a->b at parameter s: (a, b, midpoint).
std::array<double, 3> p2_edge_shape(double s);
// P2 nodes (a, b, midpoint) of a boundary facet.
std::array<int, 3> facet_p2_nodes(const TriMesh& mesh, const Facet& f);

// Lagrange field of degree 1 or 2 with 1 or 2 components. Values are
// interleaved: value(node, c) = values[node * components + c].
class FeField {
 public:
  FeField() = default;
  FeField(std::shared_ptr<const TriMesh> mesh, int degree, int components);
  FeField(std::shared_ptr<const TriMesh> mesh, int degree, int components, Vector values);

  // Nodal interpolation of a scalar function.
  static FeField interpolate(std::shared_ptr<const TriMesh> mesh, int degree,
                             const std::function<double(const Vec2&)>& fn);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  int components() const { return components_; }
  int num_nodes() const;
  Vec2 node_position(int node) const;

  const Vector& values() const { return values_; }
  Vector& values() { return values_; }
  double at(int node, int c = 0) const { return values_[node * components_ + c]; }

  int nodes_per_element() const { return degree_ == 1 ? 3 : 6; }
  std::array<int, 6> element_nodes(int t) const;

  double value(int t, const std::array<double, 3>& l, int c = 0) const;
  Vec2 vector_value(int t, const std::array<double, 3>& l) const;
  Vec2 gradient(int t, const std::array<double, 3>& l, int c = 0) const;
  Grad2 vector_gradient(int t, const std::array<double, 3>& l) const;

 private:
  std::shared_ptr<const TriMesh> mesh_;
  int degree_ = 2;
  int components_ = 1;
  Vector values_;
};

// Constrained displacement dofs (P2, two components) and the renumbering of
// the free ones. Dirichlet facets fix both components; Roller facets fix the
// normal component of an axis-aligned facet. Nodes touched only by triangles
// flagged in `resting` are fixed too.
class DofMap {
 public:
  DofMap() = default;
  explicit DofMap(const TriMesh& mesh, const std::vector<char>& resting = {});

  int num_full() const { return static_cast<int>(reduced_.size()); }
  int num_free() const { return static_cast<int>(free_.size()); }
  int reduced(int full) const { return reduced_[full]; }
  bool has_constraints() const { return num_free() < num_full(); }

  Vector restrict(const Vector& full) const;
  Vector expand(const Vector& red) const;
  SparseMatrix restrict(const SparseMatrix& full) const;
  // Keeps triplets on free dofs and renumbers them.
  Triplets restrict(const Triplets& full) const;

 private:
  std::vector<int> reduced_;
  std::vector<int> free_;
};

// Full-size (2 * P2 nodes) elasticity matrix, no constraints applied.
// Triangles flagged in `skip` contribute nothing.
SparseMatrix assemble_elasticity(const TriMesh& mesh, const Material& mat, const std::vector<char>& skip = {});
// Full-size load vector: body force plus traction on Neumann facets.
Vector assemble_load(const TriMesh& mesh, const Loads& loads);

// Scalar matrices: P1 (grad.grad + alpha mass) and the P1/P2 mass matrix.
SparseMatrix assemble_p1_helmholtz(const TriMesh& mesh, double alpha);
SparseMatrix assemble_mass(const TriMesh& mesh, int degree);

// Direct sparse factorization kept for reuse: LDL^T for symmetric matrices,
// SparseLU (COLAMD) otherwise.
class LinearSolver {
 public:
  LinearSolver() = default;
  explicit LinearSolver(const SparseMatrix& A);
  LinearSolver(const LinearSolver&) = delete;
  LinearSolver& operator=(const LinearSolver&) = delete;
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;
  ~LinearSolver();

  void factorize(const SparseMatrix& A);
  bool factorized() const { return lu_ != nullptr; }
  int size() const { return static_cast<int>(A_.rows()); }
  const SparseMatrix& matrix() const { return A_; }
  // Solves with up to three steps of iterative refinement.
  Vector solve(const Vector& b) const;
  double last_relative_residual() const { return last_residual_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> lu_;
  SparseMatrix A_;
  mutable double last_residual_ = 0.0;
};

Vector solve_sparse(const SparseMatrix& A, const Vector& b);

void export_matrix_market(const SparseMatrix& A, const std::string& path);

}  // namespace contopt
