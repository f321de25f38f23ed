#include "contopt/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "contopt/quadrature.hpp"

namespace contopt {

GridSpec GridSpec::covering(Vec2 lo, Vec2 hi, double dx) {
  if (!(dx > 0.0)) throw LevelSetError("grid spacing must be positive");
  GridSpec s;
  s.origin = lo;
  s.dx = dx;
  s.nx = std::max(2, static_cast<int>(std::ceil((hi.x - lo.x) / dx - 1e-9)) + 1);
  s.ny = std::max(2, static_cast<int>(std::ceil((hi.y - lo.y) / dx - 1e-9)) + 1);
  return s;
}

ScalarGrid::ScalarGrid(GridSpec spec, double fill)
    : spec_(spec), values_(static_cast<std::size_t>(spec.size()), fill) {
  if (spec.nx < 2 || spec.ny < 2) throw LevelSetError("grid needs at least 2 nodes per axis");
}

ScalarGrid::ScalarGrid(GridSpec spec, std::vector<double> values) : ScalarGrid(spec) {
  if (values.size() != values_.size()) throw LevelSetError("grid value count mismatch");
  for (double v : values) {
    if (!std::isfinite(v)) throw LevelSetError("grid values must be finite");
  }
  values_ = std::move(values);
}

double ScalarGrid::clamped(int i, int j) const {
  return (*this)(std::clamp(i, 0, spec_.nx - 1), std::clamp(j, 0, spec_.ny - 1));
}

double ScalarGrid::sample(const Vec2& p) const {
  const double fx = std::clamp((p.x - spec_.origin.x) / spec_.dx, 0.0, spec_.nx - 1.0);
  const double fy = std::clamp((p.y - spec_.origin.y) / spec_.dx, 0.0, spec_.ny - 1.0);
  const int i = std::min(static_cast<int>(fx), spec_.nx - 2);
  const int j = std::min(static_cast<int>(fy), spec_.ny - 2);
  const double s = fx - i, t = fy - j;
  return (1 - s) * (1 - t) * (*this)(i, j) + s * (1 - t) * (*this)(i + 1, j) +
         (1 - s) * t * (*this)(i, j + 1) + s * t * (*this)(i + 1, j + 1);
}

double ScalarGrid::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

namespace {

// One-sided differences with constant extrapolation at the grid boundary.
struct Diffs {
  double xm, xp, ym, yp;
};

Diffs diffs(const ScalarGrid& g, int i, int j) {
  const double c = g(i, j), h = g.dx();
  return {(c - g.clamped(i - 1, j)) / h, (g.clamped(i + 1, j) - c) / h,
          (c - g.clamped(i, j - 1)) / h, (g.clamped(i, j + 1) - c) / h};
}

double sq(double v) { return v * v; }

// Godunov |grad phi| for a front moving outward (+) or inward (-).
double grad_plus(const Diffs& d) {
  return std::sqrt(sq(std::max(d.xm, 0.0)) + sq(std::min(d.xp, 0.0)) + sq(std::max(d.ym, 0.0)) +
                   sq(std::min(d.yp, 0.0)));
}
double grad_minus(const Diffs& d) {
  return std::sqrt(sq(std::min(d.xm, 0.0)) + sq(std::max(d.xp, 0.0)) + sq(std::min(d.ym, 0.0)) +
                   sq(std::max(d.yp, 0.0)));
}

void check_two_signed(const ScalarGrid& g) {
  bool neg = false, pos = false;
  for (double v : g.values()) {
    neg = neg || v < 0.0;
    pos = pos || v > 0.0;
  }
  if (!neg) throw LevelSetError("level set has no interior (empty shape)");
  if (!pos) throw LevelSetError("level set has no exterior (shape fills the grid)");
}

}  // namespace

LevelSet reinitialize(const LevelSet& ls, int n_steps) {
  if (n_steps < 1) throw LevelSetError("reinitialize needs at least one step");
  const ScalarGrid& phi0 = ls.phi;
  const double h = phi0.dx();
  const double dt = 0.5 * h;
  const int nx = phi0.nx(), ny = phi0.ny();
  std::vector<double> sgn(phi0.values().size());
  // Nodes next to the zero set are pulled towards their subcell distance
  // (Russo-Smereka) so the interface does not drift.
  std::vector<double> anchor(phi0.values().size(), std::numeric_limits<double>::quiet_NaN());
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double v = phi0(i, j);
      sgn[j * nx + i] = v / std::sqrt(v * v + h * h);
      const double xl = phi0.clamped(i - 1, j), xr = phi0.clamped(i + 1, j);
      const double yl = phi0.clamped(i, j - 1), yr = phi0.clamped(i, j + 1);
      const bool near = v * xl < 0 || v * xr < 0 || v * yl < 0 || v * yr < 0 || v == 0.0;
      if (!near) continue;
      const double ax = std::max({std::abs(xr - xl) / 2, std::abs(xr - v), std::abs(v - xl)});
      const double ay = std::max({std::abs(yr - yl) / 2, std::abs(yr - v), std::abs(v - yl)});
      const double g = std::max(std::hypot(ax, ay), 1e-12 * h);
      anchor[j * nx + i] = h * v / g;
    }
  }
  ScalarGrid cur = phi0, next = phi0;
  for (int step = 0; step < n_steps; ++step) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int k = j * nx + i;
        const double s = sgn[k];
        if (!std::isnan(anchor[k])) {
          const double sg = phi0(i, j) > 0 ? 1.0 : (phi0(i, j) < 0 ? -1.0 : 0.0);
          next(i, j) = cur(i, j) - (dt / h) * (sg * std::abs(cur(i, j)) - anchor[k]);
          continue;
        }
        const Diffs d = diffs(cur, i, j);
        const double g = s > 0.0 ? grad_plus(d) : grad_minus(d);
        next(i, j) = cur(i, j) - dt * s * (g - 1.0);
      }
    }
    std::swap(cur, next);
  }
  return {std::move(cur), 0};
}

LevelSet signed_distance_init(const std::function<double(const Vec2&)>& shape,
                              const GridSpec& spec, int reinit_steps) {
  ScalarGrid g(spec);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) g(i, j) = shape(spec.node(i, j));
  }
  check_two_signed(g);
  if (reinit_steps < 0) reinit_steps = 2 * (spec.nx + spec.ny);
  return reinitialize(LevelSet{std::move(g), 0}, reinit_steps);
}

LevelSet advect(const LevelSet& ls, const ScalarGrid& theta, double T, const AdvectOptions& opt) {
  if (T < 0.0) throw LevelSetError("advection time must be non-negative");
  if (!(opt.cfl > 0.0) || opt.cfl > 1.0) throw LevelSetError("cfl must lie in (0, 1]");
  const auto& s = ls.phi.spec();
  const auto& ts = theta.spec();
  if (s.nx != ts.nx || s.ny != ts.ny) throw LevelSetError("velocity grid does not match");
  const double vmax = theta.max_abs();
  if (vmax == 0.0 || T == 0.0) return ls;
  const double h = ls.phi.dx();
  const int n = static_cast<int>(std::ceil(T * vmax / (opt.cfl * h) - 1e-12));
  const double dt = T / n;
  LevelSet cur = ls;
  ScalarGrid next = cur.phi;
  for (int step = 0; step < n; ++step) {
    for (int j = 0; j < s.ny; ++j) {
      for (int i = 0; i < s.nx; ++i) {
        const double v = theta(i, j);
        const Diffs d = diffs(cur.phi, i, j);
        next(i, j) = cur.phi(i, j) - dt * (std::max(v, 0.0) * grad_plus(d) +
                                           std::min(v, 0.0) * grad_minus(d));
      }
    }
    std::swap(cur.phi, next);
    if (++cur.steps_since_reinit >= opt.reinit_every && step + 1 < n) {
      cur = reinitialize(cur, opt.reinit_steps);
    }
  }
  return reinitialize(cur, opt.reinit_steps);
}

LevelSetGeometry::LevelSetGeometry(const ScalarGrid& phi)
    : gx_(phi.spec()), gy_(phi.spec()), kappa_(phi.spec()) {
  const double h = phi.dx();
  const int nx = phi.nx(), ny = phi.ny();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      // Central differences in the interior, one-sided at the border.
      const int il = std::max(i - 1, 0), ir = std::min(i + 1, nx - 1);
      const int jl = std::max(j - 1, 0), jr = std::min(j + 1, ny - 1);
      gx_(i, j) = (phi(ir, j) - phi(il, j)) / ((ir - il) * h);
      gy_(i, j) = (phi(i, jr) - phi(i, jl)) / ((jr - jl) * h);
    }
  }
  const double kmax = 1.0 / h;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int il = std::max(i - 1, 0), ir = std::min(i + 1, nx - 1);
      const int jl = std::max(j - 1, 0), jr = std::min(j + 1, ny - 1);
      auto nxf = [&](int a, int b) {
        const double g = std::hypot(gx_(a, b), gy_(a, b));
        return g > 1e-12 ? gx_(a, b) / g : 0.0;
      };
      auto nyf = [&](int a, int b) {
        const double g = std::hypot(gx_(a, b), gy_(a, b));
        return g > 1e-12 ? gy_(a, b) / g : 0.0;
      };
      const double k = (nxf(ir, j) - nxf(il, j)) / ((ir - il) * h) +
                       (nyf(i, jr) - nyf(i, jl)) / ((jr - jl) * h);
      kappa_(i, j) = std::clamp(k, -kmax, kmax);
    }
  }
}

NormalCurvature LevelSetGeometry::at(const Vec2& x) const {
  const Vec2 g{gx_.sample(x), gy_.sample(x)};
  const double len = norm(g);
  if (!(len > 1e-8)) {
    throw LevelSetError("degenerate level-set gradient; reinitialization needed");
  }
  return {(1.0 / len) * g, kappa_.sample(x)};
}

NormalCurvature normal_and_curvature(const LevelSet& ls, const Vec2& x) {
  return LevelSetGeometry(ls.phi).at(x);
}

ScalarGrid fe_to_grid(const FeField& field, const GridSpec& spec, int* extrapolated) {
  if (field.components() != 1) throw LevelSetError("fe_to_grid expects a scalar field");
  TriangleLocator locator(field.mesh());
  ScalarGrid g(spec);
  int outside = 0;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const auto hit = locator.locate_or_nearest(spec.node(i, j));
      if (!hit.inside) ++outside;
      g(i, j) = field.value(hit.tri, hit.bary);
    }
  }
  if (extrapolated) *extrapolated = outside;
  return g;
}

GridProjector::GridProjector(std::shared_ptr<const TriMesh> mesh)
    : mesh_(std::move(mesh)),
      mass_(std::make_shared<LinearSolver>(assemble_mass(*mesh_, 2))) {}

FeField GridProjector::project(const ScalarGrid& grid) const {
  const auto& rule = triangle_rule(5);
  Vector b = Vector::Zero(mesh_->num_p2_nodes());
  const auto& verts = mesh_->vertices();
  for (int t = 0; t < mesh_->num_triangles(); ++t) {
    const auto& tri = mesh_->triangles()[t];
    const auto nodes = mesh_->p2_nodes(t);
    const double area = mesh_->area(t);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& l = rule.points[q];
      const Vec2 x = l[0] * verts[tri[0]] + l[1] * verts[tri[1]] + l[2] * verts[tri[2]];
      const double v = grid.sample(x) * rule.weights[q] * area;
      const auto N = p2_shape(l);
      for (int i = 0; i < 6; ++i) b[nodes[i]] += v * N[i];
    }
  }
  return FeField(mesh_, 2, 1, mass_->solve(b));
}

FeField grid_to_fe(const LevelSet& ls, std::shared_ptr<const TriMesh> mesh, int degree) {
  if (degree != 2) throw LevelSetError("grid_to_fe projects onto P2 only");
  return GridProjector(std::move(mesh)).project(ls.phi);
}

std::vector<std::array<Vec2, 2>> zero_segments(const ScalarGrid& g) {
  std::vector<std::array<Vec2, 2>> segs;
  const auto& s = g.spec();
  for (int j = 0; j + 1 < s.ny; ++j) {
    for (int i = 0; i + 1 < s.nx; ++i) {
      const std::array<Vec2, 4> p = {s.node(i, j), s.node(i + 1, j), s.node(i + 1, j + 1),
                                     s.node(i, j + 1)};
      const std::array<double, 4> v = {g(i, j), g(i + 1, j), g(i + 1, j + 1), g(i, j + 1)};
      std::vector<Vec2> cuts;
      for (int k = 0; k < 4; ++k) {
        const double a = v[k], b = v[(k + 1) % 4];
        if ((a < 0.0) != (b < 0.0)) cuts.push_back(lerp(p[k], p[(k + 1) % 4], a / (a - b)));
      }
      if (cuts.size() == 2) {
        segs.push_back({cuts[0], cuts[1]});
      } else if (cuts.size() == 4) {
        // Saddle: resolve with the cell-centre value.
        const double c = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        if ((c < 0.0) == (v[0] < 0.0)) {
          segs.push_back({cuts[0], cuts[1]});
          segs.push_back({cuts[2], cuts[3]});
        } else {
          segs.push_back({cuts[3], cuts[0]});
          segs.push_back({cuts[1], cuts[2]});
        }
      }
    }
  }
  return segs;
}

std::array<double, 2> gradient_norm_range(const ScalarGrid& g, double band) {
  const int nx = g.nx(), ny = g.ny();
  // Distance-field kinks (skeleton): the slope changes sign along an axis.
  std::vector<char> kink(static_cast<std::size_t>(nx) * ny, 0);
  for (int j = 1; j + 1 < ny; ++j) {
    for (int i = 1; i + 1 < nx; ++i) {
      const Diffs d = diffs(g, i, j);
      if (d.xm * d.xp < 0.0 || d.ym * d.yp < 0.0) kink[j * nx + i] = 1;
    }
  }
  auto near_kink = [&](int i, int j) {
    for (int b = std::max(j - 1, 0); b <= std::min(j + 1, ny - 1); ++b) {
      for (int a = std::max(i - 1, 0); a <= std::min(i + 1, nx - 1); ++a) {
        if (kink[b * nx + a]) return true;
      }
    }
    return false;
  };
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (std::abs(g(i, j)) <= band || near_kink(i, j)) continue;
      const Diffs d = diffs(g, i, j);
      const double gx = i == 0 ? d.xp : (i == nx - 1 ? d.xm : 0.5 * (d.xm + d.xp));
      const double gy = j == 0 ? d.yp : (j == ny - 1 ? d.ym : 0.5 * (d.ym + d.yp));
      const double n = std::hypot(gx, gy);
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
  }
  return {lo, hi};
}

}  // namespace contopt
