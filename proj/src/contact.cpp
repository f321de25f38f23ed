#include "contopt/contact.hpp"

#include <algorithm>
#include <tuple>
#include <cmath>

#include "contopt/quadrature.hpp"

namespace contopt {

RigidBody::RigidBody(HalfPlane hp) : shape_(hp) {
  const double n = norm(hp.normal);
  if (!(n > 0.0)) throw ContactError("half-plane normal must be nonzero");
  std::get<HalfPlane>(shape_).normal = (1.0 / n) * hp.normal;
}

RigidBody::RigidBody(Disk disk) : shape_(disk) {
  if (!(disk.radius > 0.0)) throw ContactError("disk radius must be positive");
}

GapInfo RigidBody::gap(const Vec2& x) const {
  if (const auto* hp = std::get_if<HalfPlane>(&shape_)) {
    return {dot(x - hp->point, hp->normal), hp->normal};
  }
  const auto& d = std::get<Disk>(shape_);
  const Vec2 r = x - d.center;
  const double len = norm(r);
  if (!(len > 0.0)) throw ContactError("gap undefined at the disk centre");
  return {len - d.radius, (1.0 / len) * r};
}

ContactFrame contact_frame(const RigidBody& body, const Vec2& x) {
  const GapInfo gi = body.gap(x);
  const Vec2 n = -gi.normal;
  return {gi.g, n, perp(n)};
}

double proj_max(double t) { return std::max(0.0, t); }

double proj_q(double alpha, double z) {
  return std::abs(z) <= alpha ? z : alpha * (z > 0 ? 1.0 : -1.0);
}

Vec2 proj_q(double alpha, const Vec2& z) {
  const double n = norm(z);
  return n <= alpha ? z : (alpha / n) * z;
}

double gderiv_plus(double t) { return t <= 0.0 ? 0.0 : 1.0; }

double gderiv_s(double alpha, double z) { return std::abs(z) <= alpha ? 1.0 : 0.0; }

std::array<std::array<double, 2>, 2> gderiv_s(double alpha, const Vec2& z) {
  const double n = norm(z);
  if (n <= alpha) return {{{1.0, 0.0}, {0.0, 1.0}}};
  const double f = alpha / n, n2 = n * n;
  return {{{f * (1.0 - z.x * z.x / n2), -f * z.x * z.y / n2},
           {-f * z.x * z.y / n2, f * (1.0 - z.y * z.y / n2)}}};
}

void ContactParams::validate() const {
  if (!(rho > 0.0)) throw ContactError("penalty stiffness rho must be positive");
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) throw ContactError("gamma1 and gamma2 must be positive");
  if (!(s > 0.0)) throw ContactError("Tresca threshold s must be positive");
  if (friction < 0.0) throw ContactError("friction coefficient must be non-negative");
  if (tangential_stabilization < 0.0) throw ContactError("tangential stabilization must be non-negative");
}

std::vector<ContactPoint> contact_points(const TriMesh& mesh, const RigidBody& body) {
  std::vector<ContactPoint> pts;
  // Lobatto nodes sit on the P2 trace nodes: one multiplier per trace dof.
  const auto& rule = simpson_rule();
  const auto& facets = mesh.facets();
  for (int fi = 0; fi < static_cast<int>(facets.size()); ++fi) {
    const auto& f = facets[fi];
    if (f.tag != BoundaryTag::Contact) continue;
    const auto nodes = facet_p2_nodes(mesh, f);
    const double len = mesh.facet_length(f);
    const Vec2 a = mesh.vertices()[f.a], b = mesh.vertices()[f.b];
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      ContactPoint cp;
      cp.facet = fi;
      cp.nodes = nodes;
      cp.shape = p2_edge_shape(rule.points[q]);
      cp.weight = rule.weights[q] * len;
      cp.x = lerp(a, b, rule.points[q]);
      cp.frame = contact_frame(body, cp.x);
      pts.push_back(cp);
    }
  }
  return pts;
}

namespace {

Vec2 point_displacement(const Vector& u_full, const ContactPoint& cp) {
  Vec2 v{};
  for (int i = 0; i < 3; ++i) {
    v.x += cp.shape[i] * u_full[2 * cp.nodes[i]];
    v.y += cp.shape[i] * u_full[2 * cp.nodes[i] + 1];
  }
  return v;
}

// Pointwise contact law: T_n = max(base_n + kn u_n), T_t = q(alpha, base_t + kt u_t).
struct PointLaw {
  double base_n = 0.0, kn = 0.0;
  double base_t = 0.0, kt = 0.0;
};

struct Assembler {
  const ContactProblem& prob;
  const std::vector<ContactPoint>& pts;
  const DofMap& dofs;
  double alpha;
  double stab;

  struct State {
    Vector residual;
    double energy = 0.0;      // convex potential whose gradient is the residual
    std::vector<char> flags;  // bit 0: normal active, bit 1: stick
    std::vector<double> secant;  // kt alpha / |arg| at sliding points, else 0
  };

  // Residual on free dofs; flags with the Newton (t >= 0 active) or the
  // strict convention (t > 0 active).
  State evaluate(const SparseMatrix& Kr, const Vector& Fr, const Vector& ur,
                 const std::vector<PointLaw>& law, bool strict) const {
    State st;
    const Vector Ku = Kr * ur;
    st.residual = Ku - Fr;
    st.energy = 0.5 * ur.dot(Ku) - Fr.dot(ur);
    st.flags.assign(pts.size(), 0);
    st.secant.assign(pts.size(), 0.0);
    const Vector uf = dofs.expand(ur);
    Vector cf = Vector::Zero(dofs.num_full());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto& cp = pts[k];
      const Vec2 u = point_displacement(uf, cp);
      const double an = law[k].base_n + law[k].kn * dot(u, cp.frame.n);
      const double Tn = proj_max(an);
      const bool nactive = strict ? an > 0.0 : an >= 0.0;
      double Tt = 0.0;
      bool stick = false;
      const double ut = dot(u, cp.frame.t);
      double e = 0.5 * Tn * Tn / law[k].kn + 0.5 * stab * ut * ut;
      if (alpha > 0.0) {
        const double at = law[k].base_t + law[k].kt * ut;
        Tt = proj_q(alpha, at);
        stick = std::abs(at) <= alpha;
        if (!stick) st.secant[k] = law[k].kt * alpha / std::abs(at);
        e += (stick ? 0.5 * at * at : alpha * std::abs(at) - 0.5 * alpha * alpha) / law[k].kt;
      }
      st.energy += cp.weight * e;
      Tt += stab * ut;
      st.flags[k] = static_cast<char>((nactive ? 1 : 0) | (stick ? 2 : 0));
      const Vec2 trac = Tn * cp.frame.n + Tt * cp.frame.t;
      for (int i = 0; i < 3; ++i) {
        cf[2 * cp.nodes[i]] += cp.weight * cp.shape[i] * trac.x;
        cf[2 * cp.nodes[i] + 1] += cp.weight * cp.shape[i] * trac.y;
      }
    }
    st.residual += dofs.restrict(cf);
    return st;
  }

  // Generalized derivative; with `secant`, sliding points get the secant
  // stiffness of the friction law instead of zero.
  SparseMatrix jacobian(const SparseMatrix& Kr, const std::vector<PointLaw>& law,
                        const std::vector<char>& flags, const std::vector<double>* secant = nullptr) const {
    Triplets trip;
    trip.reserve(pts.size() * 36);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto& cp = pts[k];
      const double dn = (flags[k] & 1) ? law[k].kn : 0.0;
      double dt = ((alpha > 0.0 && (flags[k] & 2)) ? law[k].kt : 0.0) + stab;
      if (secant) dt += (*secant)[k];
      const Vec2 n = cp.frame.n, t = cp.frame.t;
      const double M[2][2] = {{dn * n.x * n.x + dt * t.x * t.x, dn * n.x * n.y + dt * t.x * t.y},
                              {dn * n.y * n.x + dt * t.y * t.x, dn * n.y * n.y + dt * t.y * t.y}};
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double w = cp.weight * cp.shape[i] * cp.shape[j];
          for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
              const int r = dofs.reduced(2 * cp.nodes[i] + a), c = dofs.reduced(2 * cp.nodes[j] + b);
              if (r >= 0 && c >= 0) trip.emplace_back(r, c, w * M[a][b]);
            }
          }
        }
      }
    }
    SparseMatrix C(Kr.rows(), Kr.cols());
    C.setFromTriplets(trip.begin(), trip.end());
    return Kr + C;
  }
};

struct NewtonResult {
  Vector ur;
  std::shared_ptr<const LinearizedSystem> system;
  int iterations = 0;
  double residual = 0.0;
};

NewtonResult newton_solve(const Assembler& as, const SparseMatrix& Kr, const Vector& Fr, Vector ur,
                          const std::vector<PointLaw>& law, const NewtonOptions& opt,
                          std::vector<double>& history) {
  auto st = as.evaluate(Kr, Fr, ur, law, false);
  double scale = Fr.norm();
  if (scale == 0.0) scale = st.residual.norm();
  if (scale == 0.0) scale = 1.0;
  std::shared_ptr<LinearSolver> solver;
  SparseMatrix J;
  std::vector<char> factor_flags;
  bool secant_factor = false;
  int it = 0;
  double rn = st.residual.norm();
  history.push_back(rn / scale);
  // round-off in K u grows with the stiffness of cut slivers: compare against
  // the cancellation-free product |K| |u|
  const SparseMatrix Kabs = Kr.cwiseAbs();
  auto floor_scale = [&] { return std::max(scale, 1e-3 * (Kabs * ur.cwiseAbs()).norm()); };
  bool converged = rn <= opt.tol * floor_scale();
  for (; !converged && it < opt.max_iter; ++it) {
    J = as.jacobian(Kr, law, st.flags);
    solver = std::make_shared<LinearSolver>(J);
    factor_flags = st.flags;
    secant_factor = false;
    // Armijo backtracking on the convex potential
    auto line_search = [&](const Vector& du) {
      const double slope = st.residual.dot(du);
      double step = 1.0;
      Vector trial = ur + du;
      auto trial_st = as.evaluate(Kr, Fr, trial, law, false);
      // energy differences below round-off carry no information
      const bool resolvable = -slope > 1e-12 * (std::abs(st.energy) + 1e-300);
      for (int h = 0; h < opt.max_halvings && resolvable && slope < 0.0 &&
                      trial_st.energy > st.energy + 1e-4 * step * slope;
           ++h) {
        step *= 0.5;
        trial = ur + step * du;
        trial_st = as.evaluate(Kr, Fr, trial, law, false);
      }
      return std::tuple{step, std::move(trial), std::move(trial_st), du.norm()};
    };
    auto [step, trial, trial_st, dunorm] = line_search(solver->solve(-st.residual));
    const bool sliding = std::any_of(st.secant.begin(), st.secant.end(), [](double v) { return v > 0.0; });
    if (step < 1.0 && sliding) {
      // Sliding points have zero tangential stiffness and the Newton step
      // overshoots; the secant model of the friction law is a safer direction.
      const SparseMatrix Js = as.jacobian(Kr, law, st.flags, &st.secant);
      auto alt_solver = std::make_shared<LinearSolver>(Js);
      auto alt = line_search(alt_solver->solve(-st.residual));
      if (std::get<2>(alt).energy < trial_st.energy) {
        std::tie(step, trial, trial_st, dunorm) = std::move(alt);
        J = Js;
        solver = std::move(alt_solver);
        secant_factor = true;
      }
    }
    ur = std::move(trial);
    st = std::move(trial_st);
    rn = st.residual.norm();
    history.push_back(rn / scale);
    // Piecewise-linear laws: a full step with a stable active set is exact up
    // to round-off, which may sit above tol for very stiff penalties.
    const bool tiny_step = step == 1.0 && dunorm <= 1e-10 * std::max(ur.norm(), 1e-300);
    converged = rn <= opt.tol * floor_scale() || (tiny_step && st.flags == factor_flags);
  }
  if (!converged) {
    throw ContactError("semi-smooth Newton did not converge in " + std::to_string(opt.max_iter) +
                       " iterations (relative residual " + std::to_string(rn / scale) + ")");
  }
  // Adjoint matrix: generalized derivative at the solution, strict convention (G+(0) = 0).
  const auto strict_eval = as.evaluate(Kr, Fr, ur, law, true);
  auto sys = std::make_shared<LinearizedSystem>();
  sys->dofs = as.dofs;
  if (solver && !secant_factor && strict_eval.flags == factor_flags) {
    sys->matrix = std::move(J);
    sys->solver = solver;
  } else {
    sys->matrix = as.jacobian(Kr, law, strict_eval.flags);
    sys->solver = std::make_shared<LinearSolver>(sys->matrix);
  }
  return {std::move(ur), std::move(sys), it, rn / scale};
}

Vector initial_guess(const ContactProblem& prob, const DofMap& dofs) {
  const FeField& w = prob.warm_start;
  if (!w.mesh_ptr()) return Vector::Zero(dofs.num_free());
  if (w.components() != 2) throw ContactError("warm start must be a vector field");
  const TriMesh& m = *prob.mesh;
  const TriangleLocator loc(w.mesh());
  Vector full(2 * m.num_p2_nodes());
  for (int i = 0; i < m.num_p2_nodes(); ++i) {
    const auto hit = loc.locate_or_nearest(m.p2_node_position(i));
    const Vec2 v = w.vector_value(hit.tri, hit.bary);
    full[2 * i] = v.x;
    full[2 * i + 1] = v.y;
  }
  return dofs.restrict(full);
}

struct Setup {
  DofMap dofs;
  SparseMatrix Kr;
  Vector F;
  Vector Fr;
  std::vector<ContactPoint> pts;
};

Setup setup(const ContactProblem& prob) {
  if (!prob.mesh) throw ContactError("contact problem without mesh");
  prob.params.validate();
  Setup s;
  s.dofs = DofMap(*prob.mesh, prob.resting);
  s.pts = contact_points(*prob.mesh, prob.body);
  if (!s.dofs.has_constraints() && s.pts.empty()) {
    throw ContactError("inadmissible problem: no Dirichlet and no contact boundary");
  }
  s.Kr = s.dofs.restrict(assemble_elasticity(*prob.mesh, prob.material, prob.resting));
  s.F = assemble_load(*prob.mesh, prob.loads);
  s.Fr = s.dofs.restrict(s.F);
  return s;
}

double weighted_norm(const std::vector<ContactPoint>& pts, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) s += pts[k].weight * v[k] * v[k];
  return std::sqrt(s);
}

}  // namespace

namespace {

ContactSolution penalty_impl(const ContactProblem& prob, const NewtonOptions& newton) {
  Setup s = setup(prob);
  const auto& p = prob.params;
  Assembler as{prob, s.pts, s.dofs, p.threshold(), p.tangential_stabilization};
  std::vector<PointLaw> law(s.pts.size());
  for (std::size_t k = 0; k < s.pts.size(); ++k) {
    law[k] = {-p.rho * s.pts[k].frame.g, p.rho, 0.0, p.rho};
  }
  ContactSolution sol;
  sol.formulation = Formulation::Penalty;
  auto nr = newton_solve(as, s.Kr, s.Fr, initial_guess(prob, s.dofs), law, newton, sol.residual_history);
  sol.u = FeField(prob.mesh, 2, 2, s.dofs.expand(nr.ur));
  sol.points = std::move(s.pts);
  sol.system = std::move(nr.system);
  sol.load = std::move(s.F);
  sol.newton_iterations = nr.iterations;
  sol.outer_iterations = 1;
  sol.final_residual = nr.residual;
  sol.lambda.resize(sol.points.size());
  sol.mu.resize(sol.points.size());
  for (std::size_t k = 0; k < sol.points.size(); ++k) {
    sol.lambda[k] = p.rho * proj_max(normal_gap_residual(sol, sol.points[k]));
    sol.mu[k] = p.threshold() > 0.0 ? proj_q(p.threshold(), p.rho * tangential_displacement(sol, sol.points[k])) : 0.0;
  }
  return sol;
}

ContactSolution alm_impl(const ContactProblem& prob, const AlmOptions& outer, const NewtonOptions& newton,
                         const std::vector<double>* lambda0, const std::vector<double>* mu0) {
  if (outer.max_outer < 1) throw ContactError("max_outer must be at least 1");
  Setup s = setup(prob);
  const auto& p = prob.params;
  const double alpha = p.threshold();
  Assembler as{prob, s.pts, s.dofs, alpha, p.tangential_stabilization};
  const std::size_t np = s.pts.size();
  std::vector<double> lam(np, 0.0), mu(np, 0.0);
  if (lambda0) {
    if (lambda0->size() != np) throw ContactError("initial lambda size mismatch");
    lam = *lambda0;
  }
  if (mu0) {
    if (mu0->size() != np) throw ContactError("initial mu size mismatch");
    mu = *mu0;
  }
  ContactSolution sol;
  sol.formulation = Formulation::Alm;
  Vector ur = initial_guess(prob, s.dofs);
  bool converged = false;
  std::vector<PointLaw> law(np);
  for (int k = 0; k < outer.max_outer && !converged; ++k) {
    for (std::size_t i = 0; i < np; ++i) {
      law[i] = {lam[i] - p.gamma1 * s.pts[i].frame.g, p.gamma1, mu[i], p.gamma2};
    }
    auto nr = newton_solve(as, s.Kr, s.Fr, ur, law, newton, sol.residual_history);
    ur = std::move(nr.ur);
    sol.system = std::move(nr.system);
    sol.newton_iterations += nr.iterations;
    sol.final_residual = nr.residual;
    sol.outer_iterations = k + 1;
    const Vector uf = s.dofs.expand(ur);
    std::vector<double> lam_new(np), mu_new(np), dl(np), dm(np);
    for (std::size_t i = 0; i < np; ++i) {
      const Vec2 u = point_displacement(uf, s.pts[i]);
      lam_new[i] = proj_max(lam[i] + p.gamma1 * (dot(u, s.pts[i].frame.n) - s.pts[i].frame.g));
      mu_new[i] = alpha > 0.0 ? proj_q(alpha, mu[i] + p.gamma2 * dot(u, s.pts[i].frame.t)) : 0.0;
      dl[i] = lam_new[i] - lam[i];
      dm[i] = mu_new[i] - mu[i];
    }
    const double change = weighted_norm(s.pts, dl) + weighted_norm(s.pts, dm);
    const double size = 1.0 + weighted_norm(s.pts, lam_new) + weighted_norm(s.pts, mu_new);
    converged = change <= outer.tol * size;
    sol.lambda_prev = std::move(lam);
    sol.mu_prev = std::move(mu);
    lam = std::move(lam_new);
    mu = std::move(mu_new);
  }
  if (!converged && outer.max_outer > 1) {
    throw ContactError("augmented Lagrangian did not converge in " + std::to_string(outer.max_outer) +
                       " outer iterations");
  }
  sol.u = FeField(prob.mesh, 2, 2, s.dofs.expand(ur));
  sol.points = std::move(s.pts);
  sol.lambda = std::move(lam);
  sol.mu = std::move(mu);
  sol.load = std::move(s.F);
  return sol;
}

// A warm start interpolated from another shape can leave every contact
// point separated, which makes the first Newton matrix singular for bodies
// held only by contact. Retry from zero.
template <class F>
ContactSolution with_cold_retry(const ContactProblem& prob, F&& run) {
  if (!prob.warm_start.mesh_ptr()) return run(prob);
  try {
    return run(prob);
  } catch (const std::runtime_error&) {
    ContactProblem cold = prob;
    cold.warm_start = FeField();
    return run(cold);
  }
}

}  // namespace

ContactSolution solve_penalty(const ContactProblem& prob, const NewtonOptions& newton) {
  return with_cold_retry(prob, [&](const ContactProblem& p) { return penalty_impl(p, newton); });
}

ContactSolution solve_alm(const ContactProblem& prob, const AlmOptions& outer, const NewtonOptions& newton,
                          const std::vector<double>* lambda0, const std::vector<double>* mu0) {
  return with_cold_retry(prob, [&](const ContactProblem& p) { return alm_impl(p, outer, newton, lambda0, mu0); });
}

ContactSolution solve(const ContactProblem& prob, Formulation form, const NewtonOptions& newton,
                      const AlmOptions& outer) {
  return form == Formulation::Penalty ? solve_penalty(prob, newton) : solve_alm(prob, outer, newton);
}

double normal_gap_residual(const ContactSolution& sol, const ContactPoint& cp) {
  return dot(point_displacement(sol.u.values(), cp), cp.frame.n) - cp.frame.g;
}

double tangential_displacement(const ContactSolution& sol, const ContactPoint& cp) {
  return dot(point_displacement(sol.u.values(), cp), cp.frame.t);
}

WeakSetReport detect_weak_sets(const ContactSolution& sol, const ContactParams& params, double kink_tol) {
  WeakSetReport rep;
  const double alpha = params.threshold();
  for (std::size_t k = 0; k < sol.points.size(); ++k) {
    const auto& cp = sol.points[k];
    rep.contact_length += cp.weight;
    double an, at, at_kink;
    if (sol.formulation == Formulation::Penalty) {
      an = normal_gap_residual(sol, cp);
      at = tangential_displacement(sol, cp);
      at_kink = alpha / params.rho;
    } else {
      an = sol.lambda_prev[k] / params.gamma1 + normal_gap_residual(sol, cp);
      at = sol.mu_prev[k] / params.gamma2 + tangential_displacement(sol, cp);
      at_kink = alpha / params.gamma2;
    }
    if (std::abs(an) <= kink_tol) {
      ++rep.weak_contact_points;
      rep.weak_contact_measure += cp.weight;
    }
    if (alpha > 0.0 && std::abs(std::abs(at) - at_kink) <= kink_tol) {
      ++rep.weak_sticking_points;
      rep.weak_sticking_measure += cp.weight;
    }
  }
  return rep;
}

TriMesh limit_contact_zone(const TriMesh& mesh, const RigidBody& body, double band) {
  std::vector<Facet> facets = mesh.facets();
  bool changed = false;
  for (auto& f : facets) {
    if (f.tag != BoundaryTag::Contact) continue;
    const Vec2 mid = 0.5 * (mesh.vertices()[f.a] + mesh.vertices()[f.b]);
    if (body.gap(mid).g > band) {
      f.tag = BoundaryTag::Free;
      changed = true;
    }
  }
  return changed ? mesh.with_facets(std::move(facets)) : mesh;
}

std::vector<double> nodal_average(const TriMesh& mesh, const std::vector<ContactPoint>& points,
                                  const std::vector<double>& values) {
  std::vector<double> sum(mesh.num_vertices(), 0.0), wsum(mesh.num_vertices(), 0.0);
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& cp = points[k];
    // Linear hat weights along the facet.
    const double s = cp.shape[1] + 0.5 * cp.shape[2];
    const double wa = cp.weight * (1.0 - s), wb = cp.weight * s;
    sum[cp.nodes[0]] += wa * values[k];
    wsum[cp.nodes[0]] += wa;
    sum[cp.nodes[1]] += wb * values[k];
    wsum[cp.nodes[1]] += wb;
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (wsum[v] > 0.0) sum[v] /= wsum[v];
  }
  return sum;
}

}  // namespace contopt
