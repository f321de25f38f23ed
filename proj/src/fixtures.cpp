#include "contopt/fixtures.hpp"

#include <cmath>

namespace contopt {

namespace {

TriMesh tagged_square(int n, BoundaryTag left, BoundaryTag right) {
  TriMesh m = build_rect_mesh(1.0, 1.0, n, n);
  const double d = std::sqrt(2.0);
  m = m.tag_boundary(on_segment({0, 0}, {0, 1}, d), left);
  m = m.tag_boundary(on_segment({1, 0}, {1, 1}, d), right);
  m = m.tag_boundary(on_segment({0, 0}, {1, 0}, d), BoundaryTag::Contact);
  return m.tag_boundary(on_segment({0, 1}, {1, 1}, d), BoundaryTag::Neumann);
}

}  // namespace

ContactProblem uniaxial_patch(int n, double q, double rho) {
  ContactProblem p;
  p.mesh = std::make_shared<const TriMesh>(tagged_square(n, BoundaryTag::Roller, BoundaryTag::Roller));
  p.loads.traction = {0.0, -q};
  p.body = RigidBody(HalfPlane{{0.0, 0.0}, {0.0, 1.0}});
  p.params.rho = rho;
  p.params.frictionless = true;
  return p;
}

ContactProblem tresca_block(int n, double p_shear, double q) {
  ContactProblem p;
  p.mesh = std::make_shared<const TriMesh>(tagged_square(n, BoundaryTag::Roller, BoundaryTag::Free));
  p.loads.traction = {p_shear, -q};
  p.body = RigidBody(HalfPlane{{0.0, 0.0}, {0.0, 1.0}});
  p.params.rho = 1e5;
  return p;
}

}  // namespace contopt
