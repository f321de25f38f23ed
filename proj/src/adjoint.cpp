#include "contopt/adjoint.hpp"

namespace contopt {

void CostSpec::validate() const {
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) throw FemError("cost weights alpha1, alpha2 must be non-negative");
}

Vector assemble_Ladj(const TriMesh& mesh, const CostSpec& cost, const Loads& loads) {
  cost.validate();
  if (cost.alpha1 == 0.0) return Vector::Zero(2 * mesh.num_p2_nodes());
  return -cost.alpha1 * assemble_load(mesh, loads);
}

AdjointResult solve_adjoint(const ContactSolution& sol, const CostSpec& cost, const Loads& loads) {
  if (!sol.system) throw ContactError("adjoint: primal solution carries no linearized system");
  const auto& sys = *sol.system;
  const auto& mesh = sol.u.mesh_ptr();
  const Vector rhs = sys.dofs.restrict(assemble_Ladj(*mesh, cost, loads));
  std::shared_ptr<const LinearSolver> solver = sys.solver;
  if (!solver) solver = std::make_shared<LinearSolver>(sys.matrix);
  // Symmetric Jacobian: the transpose solve is the plain solve.
  const Vector p = solver->solve(rhs);
  AdjointResult res;
  res.p = FeField(mesh, 2, 2, sys.dofs.expand(p));
  res.solver = solver.get();
  res.relative_residual = solver->last_relative_residual();
  return res;
}

}  // namespace contopt
