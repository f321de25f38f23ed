#include "contopt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace contopt {

std::vector<Hole> InitialShape::all_holes(const DomainSpec& d) const {
  std::vector<Hole> out = holes;
  for (int j = 0; j < hole_rows; ++j) {
    for (int i = 0; i < hole_cols; ++i) {
      out.push_back({{d.origin.x + (i + 0.5) * d.width / hole_cols, d.origin.y + (j + 0.5) * d.height / hole_rows},
                     hole_radius});
    }
  }
  return out;
}

void RunConfig::validate() const {
  const auto& d = domain;
  if (!(d.width > 0.0) || !(d.height > 0.0)) throw ConfigError("domain width and height must be positive");
  if (d.nx < 1 || d.ny < 1) throw ConfigError("domain nx, ny must be at least 1");
  if (init.kind == InitialShape::Kind::Disk && !(init.radius > 0.0)) throw ConfigError("initial disk radius must be positive");
  if (init.kind == InitialShape::Kind::HalfPlane && !(norm(init.normal) > 0.0)) {
    throw ConfigError("initial half-plane normal must be nonzero");
  }
  if ((init.hole_cols > 0 || init.hole_rows > 0) && !(init.hole_radius > 0.0)) {
    throw ConfigError("hole grid needs a positive hole radius");
  }
  for (const auto& h : init.holes) {
    if (!(h.radius > 0.0)) throw ConfigError("hole radius must be positive");
  }
  try {
    material.lame();
    params.validate();
    cost.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const auto& l = loop;
  if (l.max_iter < 0) throw ConfigError("max_iter must be non-negative");
  if (!(l.beta >= 1.0)) throw ConfigError("beta must be at least 1");
  if (!(l.c_step > 0.0 && l.c_step <= 1.0)) throw ConfigError("c_step must lie in (0, 1]");
  if (!(l.c_growth >= 1.0)) throw ConfigError("c_growth must be at least 1");
  if (l.max_halvings < 0 || l.warmup < 0 || l.tol_window < 1) throw ConfigError("invalid loop counters");
  if (!(l.tol_J >= 0.0)) throw ConfigError("tol_J must be non-negative");
  if (!(l.grid_refine > 0.0)) throw ConfigError("grid_refine must be positive");
  if (l.cut_degree != 1 && l.cut_degree != 2) throw ConfigError("cut_degree must be 1 or 2");
  if (!(l.snap_tol >= 0.0 && l.snap_tol <= 0.2)) throw ConfigError("snap_tol must lie in [0, 0.2]");
  if (!(l.alpha_reg >= 0.0)) throw ConfigError("alpha_reg must be non-negative");
  if (!(l.cfl > 0.0 && l.cfl <= 1.0)) throw ConfigError("cfl must lie in (0, 1]");
  if (l.reinit_every < 1 || l.reinit_steps < 0) throw ConfigError("invalid reinitialization cadence");
  if (!(contact_band > 0.0)) throw ConfigError("contact_band must be positive");
  if (newton.max_iter < 1 || alm.max_outer < 1) throw ConfigError("solver iteration limits must be positive");
}

CostValue evaluate_cost(const TriMesh& omega, const FeField& y, const CostSpec& cost, const Loads& loads) {
  CostValue c;
  c.volume = omega.total_area();
  c.compliance = assemble_load(omega, loads).dot(y.values());
  c.J = cost.alpha1 * c.compliance + cost.alpha2 * c.volume;
  return c;
}

std::vector<IterationRecord> OptTrace::accepted() const {
  std::vector<IterationRecord> out;
  for (const auto& r : records) {
    if (r.accepted) out.push_back(r);
  }
  return out;
}

double OptTrace::final_J() const {
  const auto acc = accepted();
  return acc.empty() ? std::numeric_limits<double>::quiet_NaN() : acc.back().J;
}

namespace {

TriMesh tagged_background(const RunConfig& cfg) {
  const auto& d = cfg.domain;
  TriMesh m = build_rect_mesh(d.origin, d.width, d.height, d.nx, d.ny);
  const double diag = std::hypot(d.width, d.height);
  for (const auto& r : d.regions) {
    BoundaryTag tag = r.tag;
    if (tag == BoundaryTag::Contact && !cfg.contact) tag = BoundaryTag::Free;
    m = m.tag_boundary(on_segment(r.a, r.b, diag), tag);
  }
  return m;
}

LevelSet initial_level_set(const RunConfig& cfg, const GridSpec& spec) {
  const auto holes = cfg.init.all_holes(cfg.domain);
  if (cfg.init.kind != InitialShape::Kind::Box) {
    const Vec2 c = cfg.init.center;
    const double r = cfg.init.radius;
    const Vec2 n = (1.0 / norm(cfg.init.normal)) * cfg.init.normal;
    const bool disk = cfg.init.kind == InitialShape::Kind::Disk;
    return signed_distance_init(
        [&](const Vec2& x) {
          double v = disk ? norm(x - c) - r : dot(x - c, n);
          for (const auto& h : holes) v = std::max(v, h.radius - norm(x - h.center));
          return v;
        },
        spec);
  }
  if (holes.empty()) {
    // full box: no zero set on the grid
    const double big = std::hypot(cfg.domain.width, cfg.domain.height);
    return LevelSet{ScalarGrid(spec, -big), 0};
  }
  return signed_distance_init(
      [&](const Vec2& x) {
        double v = -std::numeric_limits<double>::infinity();
        for (const auto& h : holes) v = std::max(v, h.radius - norm(x - h.center));
        return v;
      },
      spec);
}

double tagged_length(const TriMesh& mesh, BoundaryTag tag) {
  double len = 0.0;
  for (const auto& f : mesh.facets()) {
    if (f.tag == tag) len += mesh.facet_length(f);
  }
  return len;
}

// Edge-connected parts (a single shared vertex is a hinge, not a joint).
// An unloaded part without Dirichlet support is held at rest: u = 0 solves it
// but its stiffness matrix is singular once contact separates. A loaded part
// must reach the clamp when the problem has one (otherwise a hinge plus a
// frictionless disk can pass for support), else touch some Roller or Contact
// facet.
std::vector<char> resting_parts(const TriMesh& mesh, const Loads& loads, bool clamped) {
  const int nt = mesh.num_triangles();
  std::vector<int> parent(nt);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int t) {
    while (parent[t] != t) t = parent[t] = parent[parent[t]];
    return t;
  };
  auto key = [](int a, int b) { return std::pair{std::min(a, b), std::max(a, b)}; };
  std::map<std::pair<int, int>, int> owner;
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles()[t];
    for (int e = 0; e < 3; ++e) {
      auto [it, fresh] = owner.emplace(key(tri[e], tri[(e + 1) % 3]), t);
      if (!fresh) parent[find(t)] = find(it->second);
    }
  }
  const bool body_loaded = loads.body.x != 0.0 || loads.body.y != 0.0;
  std::vector<char> fixed(nt, 0), supported(nt, 0), loaded(nt, body_loaded ? 1 : 0);
  for (const auto& f : mesh.facets()) {
    const auto it = owner.find(key(f.a, f.b));
    if (it == owner.end()) continue;
    const int r = find(it->second);
    if (f.tag == BoundaryTag::Dirichlet) fixed[r] = 1;
    if (f.tag == BoundaryTag::Dirichlet || f.tag == BoundaryTag::Roller || f.tag == BoundaryTag::Contact) supported[r] = 1;
    if (f.tag == BoundaryTag::Neumann) loaded[r] = 1;
  }
  std::vector<char> resting(nt, 0);
  bool any_free = false;
  for (int t = 0; t < nt; ++t) {
    const int r = find(t);
    if (loaded[r] && !(clamped ? fixed[r] : supported[r])) throw CutError("inadmissible shape: loaded part not supported");
    resting[t] = !fixed[r] && !loaded[r];
    any_free = any_free || !resting[t];
  }
  if (!any_free) throw CutError("inadmissible shape: no loaded or clamped material");
  if (std::none_of(resting.begin(), resting.end(), [](char c) { return c != 0; })) return {};
  return resting;
}

}  // namespace

Optimizer::Optimizer(RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  background_ = std::make_shared<const TriMesh>(tagged_background(cfg_));
  load_length_ = tagged_length(*background_, BoundaryTag::Neumann);
  clamped_ = std::any_of(background_->facets().begin(), background_->facets().end(),
                         [](const Facet& f) { return f.tag == BoundaryTag::Dirichlet; });
  const auto& d = cfg_.domain;
  grid_ = GridSpec::covering(d.origin, d.origin + Vec2{d.width, d.height}, h() / cfg_.loop.grid_refine);
  projector_ = std::make_shared<GridProjector>(background_);
  const double alpha = cfg_.loop.alpha_reg > 0.0 ? cfg_.loop.alpha_reg : h();
  descent_ = std::make_shared<DescentSolver>(background_, alpha);
  c_ = cfg_.loop.c_step;
  state_ = std::make_shared<const ShapeState>(evaluate(initial_level_set(cfg_, grid_)));
}

ShapeState Optimizer::evaluate(const LevelSet& ls) const {
  return evaluate_phi(ls, projector_->project(ls.phi), cfg_.loop.snap_tol);
}

ShapeState Optimizer::evaluate_phi(LevelSet ls, FeField phi_h, double snap_tol) const {
  ShapeState s;
  s.ls = std::move(ls);
  s.phi_h = std::move(phi_h);
  s.cut = cut_mesh(s.phi_h, cfg_.loop.cut_degree, snap_tol);
  const ContactMode mode = cfg_.contact ? cfg_.contact_mode : ContactMode::Pinned;
  TriMesh om = inherit_tags(s.cut, mode);
  if (cfg_.contact && mode == ContactMode::Free && std::isfinite(cfg_.contact_band)) {
    om = limit_contact_zone(om, cfg_.body, cfg_.contact_band);
  }
  // the load must stay fully applied; losing part of Gamma_N would shrink
  // the compliance for free
  if (tagged_length(om, BoundaryTag::Neumann) < (1.0 - 1e-9) * load_length_) {
    throw CutError("inadmissible shape: load region not fully inside the shape");
  }
  s.omega = std::make_shared<const TriMesh>(std::move(om));
  s.problem = ContactProblem{s.omega, cfg_.material, cfg_.loads, cfg_.body, cfg_.params, {}, {}};
  s.problem.resting = resting_parts(*s.omega, cfg_.loads, clamped_);
  if (state_) s.problem.warm_start = state_->solution.u;
  s.solution = cfg_.formulation == Formulation::Penalty ? solve_penalty(s.problem, cfg_.newton)
                                                         : solve_alm(s.problem, cfg_.alm, cfg_.newton);
  s.cost = evaluate_cost(*s.omega, s.solution.u, cfg_.cost, cfg_.loads);
  return s;
}

Direction Optimizer::direction(const ShapeState& s) const {
  Direction d;
  d.adjoint = solve_adjoint(s.solution, cfg_.cost, cfg_.loads);
  const LevelSetGeometry geo(s.ls.phi);
  DensityInputs in{&s.problem, cfg_.cost, &geo, 0.5 * h()};
  d.density = shape_density(s.solution, d.adjoint.p, in);
  d.descent = descent_->solve(d.density);
  d.dJ = dJ_of_theta(d.density, d.descent.theta);
  return d;
}

IterationRecord Optimizer::record_of(const ShapeState& s, int iteration) const {
  IterationRecord r;
  r.iteration = iteration;
  r.J = s.cost.J;
  r.compliance = s.cost.compliance;
  r.volume = s.cost.volume;
  r.newton_iterations = s.solution.newton_iterations;
  r.outer_iterations = s.solution.outer_iterations;
  const auto weak = detect_weak_sets(s.solution, cfg_.params, cfg_.loop.kink_tol);
  r.weak_contact_share = weak.weak_contact_share();
  r.weak_sticking_share = weak.weak_sticking_share();
  return r;
}

std::vector<IterationRecord> Optimizer::step(int iteration) {
  std::vector<IterationRecord> out;
  if (stop_) return out;
  const ShapeState& cur = *state_;
  const Direction dir = direction(cur);
  if (!(dir.descent.bound > 0.0) || !(dir.dJ < 0.0)) {
    stop_ = true;
    stop_reason_ = "no descent direction";
    return out;
  }
  const ScalarGrid theta = fe_to_grid(dir.descent.theta, grid_);
  const double beta = iteration <= cfg_.loop.warmup ? cfg_.loop.beta : 1.0;
  AdvectOptions aopt{cfg_.loop.cfl, cfg_.loop.reinit_every, cfg_.loop.reinit_steps};
  for (int attempt = 0; attempt <= cfg_.loop.max_halvings; ++attempt) {
    const double T = c_ * h() / dir.descent.bound;
    IterationRecord rec;
    std::shared_ptr<const ShapeState> trial;
    try {
      trial = std::make_shared<const ShapeState>(evaluate(advect(cur.ls, theta, T, aopt)));
      rec = record_of(*trial, iteration);
      rec.accepted = trial->cost.J < beta * cur.cost.J;
      if (!rec.accepted) rec.note = "J increased";
    } catch (const std::exception& e) {
      rec.iteration = iteration;
      rec.J = rec.compliance = rec.volume = std::numeric_limits<double>::quiet_NaN();
      rec.note = e.what();
    }
    rec.attempt = attempt;
    rec.step = c_;
    rec.theta_bound = dir.descent.bound;
    rec.dJ = dir.dJ;
    out.push_back(rec);
    if (rec.accepted) {
      state_ = std::move(trial);
      c_ = std::min(c_ * cfg_.loop.c_growth, cfg_.loop.c_step);
      return out;
    }
    c_ *= 0.5;
  }
  stop_ = true;
  stop_reason_ = "no acceptable step after " + std::to_string(cfg_.loop.max_halvings) + " halvings";
  return out;
}

OptTrace Optimizer::run(const Observer& observer) {
  OptTrace trace;
  IterationRecord r0 = record_of(*state_, 0);
  r0.accepted = true;
  r0.step = c_;
  trace.records.push_back(r0);
  if (observer) observer(r0, *state_);
  std::vector<double> history{state_->cost.J};
  for (int it = 1; it <= cfg_.loop.max_iter; ++it) {
    const auto recs = step(it);
    for (const auto& r : recs) {
      trace.records.push_back(r);
      if (observer) observer(r, *state_);
    }
    if (stop_) {
      trace.stopped = true;
      trace.stop_reason = stop_reason_;
      break;
    }
    history.push_back(state_->cost.J);
    const int w = cfg_.loop.tol_window;
    if (static_cast<int>(history.size()) > w) {
      bool flat = true;
      for (std::size_t k = history.size() - w; k < history.size(); ++k) {
        if (std::abs(history[k] - history[k - 1]) > cfg_.loop.tol_J * std::abs(history[k - 1])) flat = false;
      }
      if (flat) {
        trace.converged = true;
        break;
      }
    }
  }
  // a vanishing descent direction is a stationary point
  if (trace.stopped && stop_reason_ == "no descent direction") trace.converged = true;
  return trace;
}

GradientCheck check_gradient(const Optimizer& opt, const std::vector<double>& ladder) {
  const ShapeState& st = opt.state();
  // a tiny snap keeps slivers solvable; J jumps by O(snap h^2) at most
  constexpr double snap = 1e-6;
  const ShapeState base = opt.evaluate_phi(st.ls, st.phi_h, snap);
  const Direction dir = opt.direction(base);
  GradientCheck gc;
  gc.analytic = dir.dJ;
  if (!(dir.descent.bound > 0.0)) throw ContactError("gradient check: zero descent direction");

  // theta |grad phi_h| at the P2 nodes of D_h (element gradients averaged)
  const FeField& phi = base.phi_h;
  const auto& mesh = phi.mesh();
  const int nn = phi.num_nodes();
  Vector speed = Vector::Zero(nn), count = Vector::Zero(nn);
  const std::array<std::array<double, 3>, 6> local = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5, 0.5, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}}};
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto nodes = phi.element_nodes(t);
    for (int k = 0; k < 6; ++k) {
      speed[nodes[k]] += dir.descent.theta.value(t, local[k]) * norm(phi.gradient(t, local[k]));
      count[nodes[k]] += 1.0;
    }
  }
  speed = speed.cwiseQuotient(count);

  for (double s : ladder) {
    const double t = s * opt.h() / dir.descent.bound;
    FeField plus = phi, minus = phi;
    plus.values() -= t * speed;
    minus.values() += t * speed;
    const double Jp = opt.evaluate_phi(base.ls, plus, snap).cost.J;
    const double Jm = opt.evaluate_phi(base.ls, minus, snap).cost.J;
    const double fd = (Jp - Jm) / (2 * t);
    gc.steps.push_back(s);
    gc.fd.push_back(fd);
    gc.rel_error.push_back(std::abs(fd - gc.analytic) / std::abs(gc.analytic));
  }
  gc.best_error = *std::min_element(gc.rel_error.begin(), gc.rel_error.end());
  for (std::size_t k = 1; k < gc.rel_error.size(); ++k) {
    if (gc.rel_error[k] > gc.rel_error[k - 1] * 1.5 && gc.rel_error[k] > 1e-3) gc.breakdown = true;
  }
  return gc;
}

RunConfig bridge_config(Formulation form, bool friction) {
  RunConfig c;
  c.name = std::string("bridge2d_") + (form == Formulation::Penalty ? "penalty" : "alm") + (friction ? "_friction" : "_sliding");
  c.domain.width = c.domain.height = 1.0;
  c.domain.nx = c.domain.ny = 40;
  c.domain.regions = {{{0.4375, 0}, {0.5625, 0}, BoundaryTag::Neumann},
                      {{0.0625, 0}, {0.1875, 0}, BoundaryTag::Contact},
                      {{0.8125, 0}, {0.9375, 0}, BoundaryTag::Contact}};
  c.init.hole_cols = 4;
  c.init.hole_rows = 4;
  c.init.hole_radius = 0.07;
  c.loads.traction = {0.0, -0.01};
  c.contact_mode = ContactMode::Pinned;
  c.body = RigidBody(HalfPlane{{0, 0}, {0, 1}});
  c.formulation = form;
  c.params.rho = 1e8;
  c.params.gamma1 = c.params.gamma2 = 1000;
  c.params.s = 1e-2;
  c.params.friction = 0.2;
  c.params.frictionless = !friction;
  c.params.tangential_stabilization = 1e-4;
  c.cost = {25.0, 0.01};
  return c;
}

RunConfig cantilever_config(Formulation form, bool friction, bool contact) {
  RunConfig c;
  c.name = contact ? std::string("cantilever2d_") + (form == Formulation::Penalty ? "penalty" : "alm") +
                         (friction ? "_friction" : "_sliding")
                   : "cantilever2d_nocontact";
  c.domain.width = 2.0;
  c.domain.height = 1.0;
  c.domain.nx = 100;
  c.domain.ny = 50;
  c.domain.regions = {{{0, 0}, {0, 1}, BoundaryTag::Dirichlet},
                      {{2, 0.4}, {2, 0.6}, BoundaryTag::Neumann},
                      {{0, 0}, {2, 0}, BoundaryTag::Contact}};
  c.init.hole_cols = 8;
  c.init.hole_rows = 4;
  c.init.hole_radius = 0.07;
  c.loads.traction = {0.0, -0.01};
  c.contact = contact;
  c.contact_mode = ContactMode::Free;
  c.contact_band = 0.2;
  c.body = RigidBody(Disk{{1, -8}, 8});
  c.formulation = form;
  c.params.rho = 1e5;
  c.params.gamma1 = c.params.gamma2 = 100;
  c.params.s = 1e-2;
  c.params.friction = 0.2;
  c.params.frictionless = !friction;
  c.cost = {15.0, 0.01};
  return c;
}

RunConfig patch_config(Formulation form, bool inactive) {
  RunConfig c;
  c.name = inactive ? "patch_inactive" : std::string("patch_uniaxial_") + (form == Formulation::Penalty ? "penalty" : "alm");
  c.domain.nx = c.domain.ny = 8;
  if (inactive) {
    // clamped on the left, obstacle far below: no contact
    c.domain.regions = {{{0, 0}, {0, 1}, BoundaryTag::Dirichlet},
                        {{0, 1}, {1, 1}, BoundaryTag::Neumann},
                        {{0, 0}, {1, 0}, BoundaryTag::Contact}};
    c.body = RigidBody(HalfPlane{{0, -0.5}, {0, 1}});
  } else {
    c.domain.regions = {{{0, 0}, {0, 1}, BoundaryTag::Roller},
                        {{1, 0}, {1, 1}, BoundaryTag::Roller},
                        {{0, 1}, {1, 1}, BoundaryTag::Neumann},
                        {{0, 0}, {1, 0}, BoundaryTag::Contact}};
    c.body = RigidBody(HalfPlane{{0, 0}, {0, 1}});
  }
  c.loads.traction = {0.0, -0.01};
  c.formulation = form;
  c.params.rho = 1e4;
  c.params.gamma1 = c.params.gamma2 = 1e4;
  c.params.frictionless = true;
  c.cost = {1.0, 0.0};
  c.loop.max_iter = 0;
  return c;
}

RunConfig flat_volume_config() {
  RunConfig c;
  c.name = "gradcheck_volume_flat";
  c.domain.nx = c.domain.ny = 40;
  c.domain.regions = {{{0, 0}, {0, 1}, BoundaryTag::Dirichlet}, {{1, 0.1}, {1, 0.3}, BoundaryTag::Neumann}};
  c.init.kind = InitialShape::Kind::HalfPlane;
  c.init.center = {0.5, 0.62};
  c.init.normal = {0.3, 1.0};
  c.loads.traction = {0.0, -0.01};
  c.contact = false;
  c.cost = {0.0, 1.0};
  return c;
}

}  // namespace contopt
