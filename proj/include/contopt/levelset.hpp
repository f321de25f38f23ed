#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "contopt/fem.hpp"
#include "contopt/geometry.hpp"
#include "contopt/mesh.hpp"

namespace contopt {

class LevelSetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridSpec {
  Vec2 origin{};
  double dx = 1.0;
  int nx = 2, ny = 2;  // node counts

  // Smallest grid with spacing dx whose box contains [lo, hi].
  static GridSpec covering(Vec2 lo, Vec2 hi, double dx);
  Vec2 node(int i, int j) const { return {origin.x + i * dx, origin.y + j * dx}; }
  int size() const { return nx * ny; }
  Vec2 upper() const { return node(nx - 1, ny - 1); }
};

class ScalarGrid {
 public:
  ScalarGrid() = default;
  explicit ScalarGrid(GridSpec spec, double fill = 0.0);
  ScalarGrid(GridSpec spec, std::vector<double> values);

  const GridSpec& spec() const { return spec_; }
  double dx() const { return spec_.dx; }
  int nx() const { return spec_.nx; }
  int ny() const { return spec_.ny; }

  double& operator()(int i, int j) { return values_[j * spec_.nx + i]; }
  double operator()(int i, int j) const { return values_[j * spec_.nx + i]; }
  // Clamped access: constant extrapolation outside the grid.
  double clamped(int i, int j) const;
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // Bilinear interpolation; points outside the box are clamped onto it.
  double sample(const Vec2& p) const;
  double max_abs() const;

 private:
  GridSpec spec_;
  std::vector<double> values_;
};

// phi < 0 inside the shape.
struct LevelSet {
  ScalarGrid phi;
  int steps_since_reinit = 0;
};

// Builds a distance-like level set from any function whose sign marks the
// shape (negative inside). The raw values are reinitialized.
LevelSet signed_distance_init(const std::function<double(const Vec2&)>& shape,
                              const GridSpec& spec, int reinit_steps = -1);

struct AdvectOptions {
  double cfl = 0.5;
  int reinit_every = 5;  // advection sub-steps between reinitializations
  int reinit_steps = 5;  // pseudo-time steps per reinitialization
};

// phi_t + theta |grad phi| = 0 over pseudo-time T (first-order Godunov).
LevelSet advect(const LevelSet& ls, const ScalarGrid& theta, double T,
                const AdvectOptions& opt = {});

// psi_t + sgn(phi)(|grad psi| - 1) = 0 with smeared sign phi/sqrt(phi^2+dx^2).
LevelSet reinitialize(const LevelSet& ls, int n_steps);

struct NormalCurvature {
  Vec2 normal;
  double curvature = 0.0;
};

// Normal and curvature fields precomputed once on the grid nodes.
class LevelSetGeometry {
 public:
  explicit LevelSetGeometry(const ScalarGrid& phi);
  NormalCurvature at(const Vec2& x) const;

 private:
  ScalarGrid gx_, gy_, kappa_;
};

NormalCurvature normal_and_curvature(const LevelSet& ls, const Vec2& x);

// Point evaluation of a scalar FE field at the grid nodes. Nodes outside the
// mesh use the nearest triangle and are counted in `extrapolated`.
ScalarGrid fe_to_grid(const FeField& field, const GridSpec& spec, int* extrapolated = nullptr);

// L2 projection of the bilinear grid interpolant onto P2 on a fixed mesh; the
// mass matrix factorization is kept.
class GridProjector {
 public:
  explicit GridProjector(std::shared_ptr<const TriMesh> mesh);
  FeField project(const ScalarGrid& grid) const;

 private:
  std::shared_ptr<const TriMesh> mesh_;
  std::shared_ptr<LinearSolver> mass_;
};

FeField grid_to_fe(const LevelSet& ls, std::shared_ptr<const TriMesh> mesh, int degree = 2);

// Marching-squares segments of the zero set.
std::vector<std::array<Vec2, 2>> zero_segments(const ScalarGrid& grid);

// Range {min, max} of the central-difference |grad phi|, ignoring nodes with
// |phi| <= band and nodes next to the distance skeleton (slope sign change
// along an axis).
std::array<double, 2> gradient_norm_range(const ScalarGrid& grid, double band);

}  // namespace contopt
