#pragma once

#include <functional>
#include <memory>

#include "contopt/adjoint.hpp"
#include "contopt/contact.hpp"
#include "contopt/levelset.hpp"

namespace contopt {

// One Simpson node on a boundary facet of Omega_h.
struct DensityPoint {
  int facet = -1;
  Vec2 x;
  Vec2 normal;  // outward normal of Omega (level-set normal on the interface)
  double kappa = 0.0;
  double weight = 0.0;  // includes the facet length
  BoundaryTag tag = BoundaryTag::Free;
  bool moving = false;  // interface facet: moves with the zero level set
  double value = 0.0;
};

struct BoundaryDensity {
  std::vector<DensityPoint> points;
};

// Quadrature nodes on all boundary facets of omega. Interface facets take
// normal and curvature from the level-set geometry when given; facets on the
// box boundary use the facet normal and kappa = 0.
BoundaryDensity boundary_points(const TriMesh& omega, const LevelSetGeometry* geometry);

struct DensityInputs {
  const ContactProblem* problem = nullptr;
  CostSpec cost;
  const LevelSetGeometry* geometry = nullptr;
  double delta = 0.0;  // offset of the one-sided normal derivative (h/2)
};

BoundaryDensity density_penalty(const ContactSolution& u, const FeField& p, const DensityInputs& in);
BoundaryDensity density_alm(const ContactSolution& u, const FeField& p, const DensityInputs& in);
BoundaryDensity shape_density(const ContactSolution& u, const FeField& p, const DensityInputs& in);

// Boundary quadrature of g * theta over the moving points.
double dJ_of_theta(const BoundaryDensity& density, const FeField& theta);

struct DescentField {
  FeField theta;  // P1 scalar on D_h
  double bound = 0.0;
};

// (grad theta, grad v) + alpha (theta, v) = -int g v over the moving part of
// the boundary, theta = 0 at vertices of Dirichlet/Neumann facets of D_h.
// The factorization is reused across calls.
class DescentSolver {
 public:
  DescentSolver(std::shared_ptr<const TriMesh> background, double alpha);
  DescentField solve(const BoundaryDensity& density) const;
  double alpha() const { return alpha_; }

 private:
  std::shared_ptr<const TriMesh> mesh_;
  double alpha_;
  std::vector<int> reduced_;
  int num_free_ = 0;
  std::shared_ptr<LinearSolver> solver_;
  SparseMatrix matrix_;
};

DescentField descent_solve(std::shared_ptr<const TriMesh> background, const BoundaryDensity& density, double alpha);

// P1 interpolation of theta evaluated at x (located in the background mesh).
double evaluate_at(const FeField& field, const TriangleLocator& locator, const Vec2& x);

}  // namespace contopt
