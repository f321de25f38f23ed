#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "contopt/adjoint.hpp"
#include "contopt/fixtures.hpp"
#include "contopt/optimizer.hpp"

using namespace contopt;

namespace {

// clamped on the left, loaded on top, obstacle out of reach
ContactProblem inactive_patch() {
  auto prob = uniaxial_patch(4, 0.0, 1e5);
  TriMesh m = prob.mesh->tag_boundary(on_segment({0, 0}, {0, 1}, 2), BoundaryTag::Dirichlet);
  prob.mesh = std::make_shared<const TriMesh>(m);
  prob.body = RigidBody(HalfPlane{{0, -1}, {0, 1}});
  prob.loads.traction = {0.0, -0.01};
  return prob;
}

double inf_norm(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("inactive contact: p = -alpha1 u") {
  for (double a1 : {1.0, 25.0}) {
    const CostSpec cost{a1, 0.01};
    auto prob = inactive_patch();
    for (auto sol : {solve_penalty(prob), solve_alm(prob)}) {
      const auto adj = solve_adjoint(sol, cost, prob.loads);
      CHECK(inf_norm(adj.p.values() + a1 * sol.u.values()) <= 1e-8 * std::max(1.0, inf_norm(sol.u.values())));
      CHECK(adj.relative_residual <= 1e-10);
    }
  }
}

TEST_CASE("zero compliance weight gives a zero adjoint") {
  auto prob = uniaxial_patch(4, 0.01, 1e5);
  const auto sol = solve_penalty(prob);
  const auto adj = solve_adjoint(sol, CostSpec{0.0, 1.0}, prob.loads);
  CHECK(adj.p.values().isZero(0.0));
}

TEST_CASE("adjoint reuses the primal factorization") {
  auto prob = uniaxial_patch(4, 0.01, 1e5);
  for (auto sol : {solve_penalty(prob), solve_alm(prob)}) {
    REQUIRE(sol.system);
    const auto adj = solve_adjoint(sol, CostSpec{}, prob.loads);
    CHECK(adj.solver == sol.system->solver.get());
  }
}

TEST_CASE("adjoint load is minus the derivative of J") {
  auto prob = uniaxial_patch(3, 0.01, 1e5);
  prob.loads.body = {0.2, -0.3};
  const CostSpec cost{3.0, 0.5};
  const Vector L = assemble_Ladj(*prob.mesh, cost, prob.loads);
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  const int n = 2 * prob.mesh->num_p2_nodes();
  Vector y(n), v(n);
  for (int i = 0; i < n; ++i) y[i] = nd(rng), v[i] = nd(rng);
  const double eps = 1e-4;
  auto J = [&](const Vector& w) { return evaluate_cost(*prob.mesh, FeField(prob.mesh, 2, 2, w), cost, prob.loads).J; };
  const double fd = (J(y + eps * v) - J(y - eps * v)) / (2 * eps);
  CHECK(-L.dot(v) == doctest::Approx(fd).epsilon(1e-8));
  CHECK_THROWS_AS(assemble_Ladj(*prob.mesh, CostSpec{-1.0, 0.0}, prob.loads), FemError);
}

TEST_CASE("adjoint solves the final Jacobian system") {
  auto prob = tresca_block(4, 0.01, 0.01);
  prob.params.frictionless = false;
  for (auto sol : {solve_penalty(prob), solve_alm(prob)}) {
    const CostSpec cost{2.0, 0.0};
    const auto adj = solve_adjoint(sol, cost, prob.loads);
    const auto& sys = *sol.system;
    const Vector r = sys.matrix * sys.dofs.restrict(adj.p.values()) - sys.dofs.restrict(assemble_Ladj(*prob.mesh, cost, prob.loads));
    CHECK(inf_norm(r) <= 1e-9 * inf_norm(sys.dofs.restrict(assemble_Ladj(*prob.mesh, cost, prob.loads))));
  }
}

TEST_CASE("missing linearization is an error") {
  ContactSolution empty;
  CHECK_THROWS_AS(solve_adjoint(empty, CostSpec{}, Loads{}), ContactError);
}
