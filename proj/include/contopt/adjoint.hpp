#pragma once

#include "contopt/contact.hpp"

namespace contopt {

// J = int alpha1 f.y + alpha2 + int_{Gamma_N} alpha1 tau.y
struct CostSpec {
  double alpha1 = 1.0;
  double alpha2 = 0.0;
  void validate() const;
};

// v -> -int j'(y).v - int_{Gamma_N} k'(y).v on the full P2 vector space.
// For this cost family j', k' do not depend on y: L_adj = -alpha1 L.
Vector assemble_Ladj(const TriMesh& mesh, const CostSpec& cost, const Loads& loads);

struct AdjointResult {
  FeField p;
  const LinearSolver* solver = nullptr;  // factorization actually used
  double relative_residual = 0.0;
};

// Solves with the final generalized Jacobian of the primal solve (the same
// factorization object). Works for both formulations.
AdjointResult solve_adjoint(const ContactSolution& sol, const CostSpec& cost, const Loads& loads);

}  // namespace contopt
