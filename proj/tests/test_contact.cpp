#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "contopt/contact.hpp"
#include "contopt/fixtures.hpp"

using namespace contopt;

namespace {

double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("gap to disk and half-plane") {
  RigidBody disk(Disk{{1, -8}, 8});
  auto g = disk.gap({1, 0});
  CHECK(std::abs(g.g) <= 1e-14);
  CHECK(g.normal.x == doctest::Approx(0.0));
  CHECK(g.normal.y == doctest::Approx(1.0));
  g = disk.gap({0, 0});
  CHECK(g.g == doctest::Approx(std::sqrt(65.0) - 8).epsilon(1e-12));
  CHECK(g.normal.x == doctest::Approx(-1 / std::sqrt(65.0)));
  CHECK(g.normal.y == doctest::Approx(8 / std::sqrt(65.0)));
  CHECK(g.g == doctest::Approx(0.06226).epsilon(1e-3));
  CHECK_THROWS_AS(disk.gap({1, -8}), ContactError);

  RigidBody hp(HalfPlane{{0, 0}, {0, 1}});
  CHECK(hp.gap({3, 0.5}).g == doctest::Approx(0.5));
  const auto fr = contact_frame(hp, {3, 0.5});
  CHECK(fr.n.y == doctest::Approx(-1.0));
  CHECK(fr.t.x == doctest::Approx(1.0));
  CHECK_THROWS_AS(RigidBody(Disk{{0, 0}, 0.0}), ContactError);
}

TEST_CASE("projections and generalized derivatives") {
  CHECK(proj_max(-2) == 0.0);
  CHECK(proj_max(3) == 3.0);
  const Vec2 q = proj_q(2.0, Vec2{3, 4});
  CHECK(q.x == doctest::Approx(1.2));
  CHECK(q.y == doctest::Approx(1.6));
  CHECK(proj_q(1.0, 0.5) == 0.5);
  CHECK(proj_q(1.0, -3.0) == -1.0);
  CHECK(gderiv_plus(0.0) == 0.0);
  CHECK(gderiv_plus(1e-300) == 1.0);
  CHECK(gderiv_s(1.0, 2.0) == 0.0);
  CHECK(gderiv_s(1.0, 0.5) == 1.0);
  const auto G = gderiv_s(2.0, Vec2{3, 4});
  CHECK(G[0][0] == doctest::Approx(0.256));
  CHECK(G[0][1] == doctest::Approx(-0.192));
  CHECK(G[1][0] == doctest::Approx(-0.192));
  CHECK(G[1][1] == doctest::Approx(0.144));
}

TEST_CASE("projections are idempotent and non-expansive") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> z(-10, 10), a(0, 5);
  for (int i = 0; i < 2000; ++i) {
    const double t = z(rng), s = z(rng), al = a(rng);
    CHECK(proj_max(proj_max(t)) == proj_max(t));
    CHECK(std::abs(proj_max(t) - proj_max(s)) <= std::abs(t - s) + 1e-12);
    CHECK(proj_q(al, proj_q(al, t)) == proj_q(al, t));
    CHECK(std::abs(proj_q(al, t) - proj_q(al, s)) <= std::abs(t - s) + 1e-12);
    const Vec2 u{z(rng), z(rng)}, v{z(rng), z(rng)};
    CHECK(norm(proj_q(al, proj_q(al, u)) - proj_q(al, u)) <= 1e-12);
    CHECK(norm(proj_q(al, u) - proj_q(al, v)) <= norm(u - v) + 1e-12);
  }
}

TEST_CASE("contact points integrate the contact length") {
  auto prob = uniaxial_patch(4, 0.01, 1e5);
  const auto pts = contact_points(*prob.mesh, prob.body);
  CHECK(pts.size() == 12);
  double len = 0;
  for (const auto& p : pts) len += p.weight;
  CHECK(len == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("uniaxial patch, penalty") {
  const double q = 0.01;
  for (double rho : {1e3, 1e4, 1e5, 1e8}) {
    auto prob = uniaxial_patch(4, q, rho);
    auto sol = solve_penalty(prob);
    const auto l = prob.material.lame();
    const double c = l.lambda + 2 * l.mu;
    const auto& m = *prob.mesh;
    for (int i = 0; i < m.num_p2_nodes(); ++i) {
      const Vec2 x = m.p2_node_position(i);
      CHECK(std::abs(sol.u.values()[2 * i]) <= 1e-12);
      CHECK(sol.u.values()[2 * i + 1] == doctest::Approx(-q / rho - q * x.y / c).epsilon(1e-8));
    }
    for (const auto& p : sol.points) {
      CHECK(normal_gap_residual(sol, p) == doctest::Approx(q / rho).epsilon(0.05));
    }
    for (double lam : sol.lambda) CHECK(lam == doctest::Approx(q).epsilon(1e-6));
    const auto gu = sol.u.vector_gradient(3, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    const auto sig = stress(l, gu);
    CHECK(std::abs(sig[1].y + q) <= 1e-6 * q);
    CHECK(sol.final_residual <= 1e-8);
  }
}

TEST_CASE("uniaxial patch, ALM") {
  const double q = 0.01;
  auto prob = uniaxial_patch(4, q, 1e8);
  prob.params.gamma1 = prob.params.gamma2 = 1000;
  auto sol = solve_alm(prob);
  for (std::size_t k = 0; k < sol.points.size(); ++k) {
    CHECK(sol.lambda[k] == doctest::Approx(q).epsilon(1e-6));
    CHECK(std::abs(normal_gap_residual(sol, sol.points[k])) <= 1e-8);
    CHECK(std::abs(sol.lambda[k] * normal_gap_residual(sol, sol.points[k])) <= 1e-8);
    CHECK(sol.mu[k] == 0.0);
  }
  CHECK(sol.outer_iterations >= 2);
  const auto rep = detect_weak_sets(sol, prob.params, 1e-8);
  CHECK(rep.weak_contact_points == 0);
  CHECK(rep.contact_length == doctest::Approx(1.0));

  // penalty consistency: ||u_rho - u_alm|| = q/rho exactly on this patch
  std::vector<double> err;
  for (double rho : {1e3, 1e4, 1e5}) {
    auto pp = uniaxial_patch(4, q, rho);
    err.push_back(max_abs_diff(solve_penalty(pp).u.values(), sol.u.values()));
  }
  const double slope = (std::log(err[2]) - std::log(err[0])) / (std::log(1e5) - std::log(1e3));
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.15));
}

TEST_CASE("inactive contact equals elasticity") {
  auto prob = uniaxial_patch(4, 0.0, 1e8);
  TriMesh m = prob.mesh->tag_boundary(on_segment({0, 0}, {0, 1}, 2), BoundaryTag::Dirichlet);
  prob.mesh = std::make_shared<const TriMesh>(m);
  prob.body = RigidBody(HalfPlane{{0, -1}, {0, 1}});
  prob.loads.traction = {0.0, -0.01};
  auto pen = solve_penalty(prob);
  auto alm = solve_alm(prob);
  const DofMap dofs(*prob.mesh);
  const SparseMatrix K = dofs.restrict(assemble_elasticity(*prob.mesh, prob.material));
  const Vector u = dofs.expand(solve_sparse(K, dofs.restrict(assemble_load(*prob.mesh, prob.loads))));
  CHECK(max_abs_diff(pen.u.values(), u) <= 1e-10);
  CHECK(max_abs_diff(alm.u.values(), u) <= 1e-10);
  for (double l : alm.lambda) CHECK(l == 0.0);
  for (double v : alm.mu) CHECK(v == 0.0);
  for (double l : pen.lambda) CHECK(l == 0.0);
  const auto rep = detect_weak_sets(alm, prob.params, 1e-8);
  CHECK(rep.weak_contact_points == 0);
  CHECK(rep.weak_sticking_points == 0);
}

TEST_CASE("frictionless equals zero friction coefficient") {
  auto a = tresca_block(4, 0.0, 0.01);
  a.params.frictionless = true;
  auto b = tresca_block(4, 0.0, 0.01);
  b.params.friction = 0.0;
  CHECK(max_abs_diff(solve_penalty(a).u.values(), solve_penalty(b).u.values()) == 0.0);
}

TEST_CASE("Tresca stick regime") {
  auto prob = tresca_block(6, 1e-4, 1e-3);
  const double alpha = prob.params.threshold();
  auto alm = solve_alm(prob);
  for (std::size_t k = 0; k < alm.points.size(); ++k) {
    CHECK(std::abs(alm.mu[k]) < alpha);
    CHECK(std::abs(tangential_displacement(alm, alm.points[k])) <= 1e-9);
  }
  auto pen = solve_penalty(prob);
  for (const auto& p : pen.points) {
    CHECK(std::abs(tangential_displacement(pen, p)) <= alpha / prob.params.rho * (1 + 1e-8));
  }
}

TEST_CASE("Tresca slip regime") {
  auto prob = tresca_block(6, 0.05, 0.01);
  const double alpha = prob.params.threshold();
  auto alm = solve_alm(prob);
  int sliding = 0;
  for (std::size_t k = 0; k < alm.points.size(); ++k) {
    const double ut = tangential_displacement(alm, alm.points[k]);
    CHECK(std::abs(alm.mu[k]) <= alpha + 1e-10);
    if (std::abs(ut) > 1e-9) {
      ++sliding;
      CHECK(std::abs(alm.mu[k] - alpha * (ut > 0 ? 1 : -1)) <= 1e-6);
    }
  }
  CHECK(sliding >= 3);
  CHECK(alm.lambda_prev.size() == alm.points.size());
}

TEST_CASE("weak sets flag grazing contact") {
  // zero load, zero gap: every point sits at the kink of max
  auto prob = uniaxial_patch(4, 0.0, 1e5);
  auto sol = solve_penalty(prob);
  const auto rep = detect_weak_sets(sol, prob.params, 1e-12);
  CHECK(rep.weak_contact_points == static_cast<int>(sol.points.size()));
  CHECK(rep.weak_contact_share() == doctest::Approx(1.0));
}

TEST_CASE("adjoint matrix is the final Jacobian with G+(0) = 0") {
  auto prob = uniaxial_patch(4, 0.0, 1e5);
  auto sol = solve_penalty(prob);
  // all points at t = 0 are inactive: the matrix is the rollers-only stiffness
  const SparseMatrix K = sol.system->dofs.restrict(assemble_elasticity(*prob.mesh, prob.material));
  CHECK((sol.system->matrix - K).norm() <= 1e-12 * K.norm());
  auto loaded = solve_penalty(uniaxial_patch(4, 0.01, 1e5));
  CHECK((loaded.system->matrix - K).norm() > 1.0);
}

TEST_CASE("errors") {
  auto prob = uniaxial_patch(2, 0.01, 1e5);
  prob.params.rho = -1;
  CHECK_THROWS_AS(solve_penalty(prob), ContactError);
  auto free = uniaxial_patch(2, 0.01, 1e5);
  free.mesh = std::make_shared<const TriMesh>(build_rect_mesh(1, 1, 2, 2));
  CHECK_THROWS_AS(solve_penalty(free), ContactError);
  auto few = tresca_block(4, 0.01, 0.01);
  CHECK_THROWS_AS(solve_alm(few, AlmOptions{1e-10, 2}), ContactError);
}

TEST_CASE("nodal average of constant values") {
  auto prob = uniaxial_patch(4, 0.01, 1e5);
  auto sol = solve_penalty(prob);
  const auto avg = nodal_average(*prob.mesh, sol.points, sol.lambda);
  for (int v = 0; v < prob.mesh->num_vertices(); ++v) {
    if (prob.mesh->vertices()[v].y == 0.0) CHECK(avg[v] == doctest::Approx(0.01).epsilon(1e-6));
  }
}
