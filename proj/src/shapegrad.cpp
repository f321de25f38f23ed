#include "contopt/shapegrad.hpp"

#include <cmath>

#include "contopt/quadrature.hpp"

namespace contopt {

BoundaryDensity boundary_points(const TriMesh& omega, const LevelSetGeometry* geometry) {
  BoundaryDensity d;
  const auto& rule = simpson_rule();
  const auto& facets = omega.facets();
  d.points.reserve(3 * facets.size());
  for (int fi = 0; fi < static_cast<int>(facets.size()); ++fi) {
    const auto& f = facets[fi];
    const Vec2 a = omega.vertices()[f.a], b = omega.vertices()[f.b];
    const double len = omega.facet_length(f);
    const Vec2 fn = omega.facet_outward_normal(f);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      DensityPoint p;
      p.facet = fi;
      p.x = lerp(a, b, rule.points[q]);
      p.weight = rule.weights[q] * len;
      p.tag = f.tag;
      p.moving = f.interface;
      p.normal = fn;
      if (f.interface && geometry) {
        try {
          const auto nc = geometry->at(p.x);
          p.normal = nc.normal;
          p.kappa = nc.curvature;
        } catch (const LevelSetError&) {
          // flat gradient: keep the facet normal
        }
      }
      d.points.push_back(p);
    }
  }
  return d;
}

namespace {

// Field evaluation on Omega at arbitrary points (nearest triangle outside).
class Probe {
 public:
  Probe(const FeField& u, const FeField& p) : u_(u), p_(p), loc_(u.mesh()) {}

  std::array<Vec2, 2> at(const Vec2& x) const {
    const auto hit = loc_.locate_or_nearest(x);
    return {u_.vector_value(hit.tri, hit.bary), p_.vector_value(hit.tri, hit.bary)};
  }

 private:
  const FeField& u_;
  const FeField& p_;
  TriangleLocator loc_;
};

struct Law {
  // Contact integrand h(x) whose (kappa + d_n) enters the density.
  std::function<double(int point, const Vec2& x, const Vec2& u, const Vec2& p)> contact;
};

BoundaryDensity density_impl(const ContactSolution& sol, const FeField& p, const DensityInputs& in,
                             const Law& law) {
  if (!in.problem) throw ContactError("density: missing problem");
  if (p.mesh_ptr() != sol.u.mesh_ptr()) throw ContactError("density: adjoint lives on another mesh");
  if (!(in.delta > 0.0)) throw ContactError("density: normal-derivative offset must be positive");
  const auto& mesh = sol.u.mesh();
  const auto& prob = *in.problem;
  const Lame lame = prob.material.lame();
  const Vec2 f = prob.loads.body, tau = prob.loads.traction;
  const double a1 = in.cost.alpha1, a2 = in.cost.alpha2;
  BoundaryDensity d = boundary_points(mesh, in.geometry);
  const Probe probe(sol.u, p);

  // contact nodes are laid out facet by facet, three per Contact facet
  std::vector<int> first_point(mesh.facets().size(), -1);
  for (int k = 0; k < static_cast<int>(sol.points.size()); k += 3) first_point[sol.points[k].facet] = k;

  const auto& rule = simpson_rule();
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    auto& dp = d.points[i];
    if (dp.tag == BoundaryTag::Dirichlet) continue;
    const Facet& fac = mesh.facets()[dp.facet];
    const auto l = barycentric(mesh, fac.tri, dp.x);
    const Vec2 u = sol.u.vector_value(fac.tri, l), pv = p.vector_value(fac.tri, l);
    double g = a1 * dot(f, u) + a2 + hooke_product(lame, sol.u.vector_gradient(fac.tri, l), p.vector_gradient(fac.tri, l)) -
               dot(f, pv);
    const Vec2 inner = dp.x - in.delta * dp.normal;
    if (dp.tag == BoundaryTag::Neumann) {
      const auto up = probe.at(inner);
      const double h0 = a1 * dot(tau, u) - dot(tau, pv);
      const double h1 = a1 * dot(tau, up[0]) - dot(tau, up[1]);
      g += dp.kappa * h0 + (h0 - h1) / in.delta;
    } else if (dp.tag == BoundaryTag::Contact) {
      const int k0 = first_point[dp.facet];
      if (k0 < 0) throw ContactError("density: contact facet without contact nodes");
      const int k = k0 + static_cast<int>(i % rule.points.size());
      const auto up = probe.at(inner);
      const double h0 = law.contact(k, dp.x, u, pv);
      const double h1 = law.contact(k, inner, up[0], up[1]);
      g += dp.kappa * h0 + (h0 - h1) / in.delta;
    }
    dp.value = g;
  }
  return d;
}

}  // namespace

BoundaryDensity density_penalty(const ContactSolution& sol, const FeField& p, const DensityInputs& in) {
  const auto& prm = in.problem->params;
  const double alpha = prm.threshold(), rho = prm.rho, ks = prm.tangential_stabilization;
  const RigidBody& body = in.problem->body;
  Law law{[&](int, const Vec2& x, const Vec2& u, const Vec2& pv) {
    const auto fr = contact_frame(body, x);
    const double ut = dot(u, fr.t);
    double h = rho * proj_max(dot(u, fr.n) - fr.g) * dot(pv, fr.n) + ks * ut * dot(pv, fr.t);
    if (alpha > 0.0) h += proj_q(alpha, rho * ut) * dot(pv, fr.t);
    return h;
  }};
  return density_impl(sol, p, in, law);
}

BoundaryDensity density_alm(const ContactSolution& sol, const FeField& p, const DensityInputs& in) {
  const auto& prm = in.problem->params;
  const double ks = prm.tangential_stabilization;
  const RigidBody& body = in.problem->body;
  Law law{[&](int k, const Vec2& x, const Vec2& u, const Vec2& pv) {
    const auto fr = contact_frame(body, x);
    return sol.lambda[k] * dot(pv, fr.n) + sol.mu[k] * dot(pv, fr.t) + ks * dot(u, fr.t) * dot(pv, fr.t);
  }};
  return density_impl(sol, p, in, law);
}

BoundaryDensity shape_density(const ContactSolution& sol, const FeField& p, const DensityInputs& in) {
  return sol.formulation == Formulation::Penalty ? density_penalty(sol, p, in) : density_alm(sol, p, in);
}

double evaluate_at(const FeField& field, const TriangleLocator& locator, const Vec2& x) {
  const auto hit = locator.locate_or_nearest(x);
  return field.value(hit.tri, hit.bary);
}

double dJ_of_theta(const BoundaryDensity& density, const FeField& theta) {
  const TriangleLocator loc(theta.mesh());
  double s = 0.0;
  for (const auto& p : density.points) {
    if (p.moving) s += p.weight * p.value * evaluate_at(theta, loc, p.x);
  }
  return s;
}

DescentSolver::DescentSolver(std::shared_ptr<const TriMesh> background, double alpha)
    : mesh_(std::move(background)), alpha_(alpha) {
  if (!(alpha > 0.0)) throw FemError("descent regularization alpha must be positive");
  const int nv = mesh_->num_vertices();
  std::vector<char> pinned(nv, 0);
  for (const auto& f : mesh_->facets()) {
    if (f.tag == BoundaryTag::Dirichlet || f.tag == BoundaryTag::Neumann) pinned[f.a] = pinned[f.b] = 1;
  }
  reduced_.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (!pinned[v]) reduced_[v] = num_free_++;
  }
  const SparseMatrix A = assemble_p1_helmholtz(*mesh_, alpha);
  Triplets trip;
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      const int r = reduced_[it.row()], c = reduced_[it.col()];
      if (r >= 0 && c >= 0) trip.emplace_back(r, c, it.value());
    }
  }
  matrix_.resize(num_free_, num_free_);
  matrix_.setFromTriplets(trip.begin(), trip.end());
  solver_ = std::make_shared<LinearSolver>(matrix_);
}

DescentField DescentSolver::solve(const BoundaryDensity& density) const {
  const TriangleLocator loc(*mesh_);
  Vector b = Vector::Zero(num_free_);
  for (const auto& p : density.points) {
    if (!p.moving || p.value == 0.0) continue;
    const auto hit = loc.locate_or_nearest(p.x);
    const auto& t = mesh_->triangles()[hit.tri];
    for (int i = 0; i < 3; ++i) {
      const int r = reduced_[t[i]];
      if (r >= 0) b[r] -= p.weight * p.value * hit.bary[i];
    }
  }
  Vector full = Vector::Zero(mesh_->num_vertices());
  if (b.squaredNorm() > 0.0) {
    const Vector x = solver_->solve(b);
    for (int v = 0; v < mesh_->num_vertices(); ++v) {
      if (reduced_[v] >= 0) full[v] = x[reduced_[v]];
    }
  }
  DescentField out;
  out.bound = full.size() ? full.cwiseAbs().maxCoeff() : 0.0;
  out.theta = FeField(mesh_, 1, 1, std::move(full));
  return out;
}

DescentField descent_solve(std::shared_ptr<const TriMesh> background, const BoundaryDensity& density, double alpha) {
  return DescentSolver(std::move(background), alpha).solve(density);
}

}  // namespace contopt
