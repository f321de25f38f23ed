#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "contopt/levelset.hpp"

using namespace contopt;

namespace {

GridSpec unit_grid(double dx) { return GridSpec::covering({0, 0}, {1, 1}, dx); }

double disk(const Vec2& p, Vec2 c, double r) { return norm(p - c) - r; }

// Mean and extreme radius of the zero set around c.
std::array<double, 3> zero_radius(const ScalarGrid& g, Vec2 c) {
  double lo = 1e9, hi = 0, sum = 0;
  int n = 0;
  for (const auto& s : zero_segments(g)) {
    for (const auto& p : s) {
      const double r = norm(p - c);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      sum += r;
      ++n;
    }
  }
  return {lo, hi, sum / n};
}

}  // namespace

TEST_CASE("signed distance init") {
  const double dx = 0.02;
  auto ls = signed_distance_init([](const Vec2& p) { return disk(p, {0.5, 0.5}, 0.3); }, unit_grid(dx));
  CHECK(std::abs(ls.phi.sample({0.5, 0.5}) + 0.3) <= 2 * dx);
  CHECK(std::abs(ls.phi.sample({0.5, 0.8})) <= dx);

  auto half = signed_distance_init([](const Vec2& p) { return p.x < 0.5 ? -1.0 : 1.0; }, unit_grid(dx));
  for (double x : {0.1, 0.33, 0.5, 0.71, 0.95}) {
    CHECK(std::abs(half.phi.sample({x, 0.4}) - (x - 0.5)) <= dx);
  }
  CHECK_THROWS_AS(signed_distance_init([](const Vec2&) { return -1.0; }, unit_grid(dx)), LevelSetError);
  CHECK_THROWS_AS(signed_distance_init([](const Vec2&) { return 1.0; }, unit_grid(dx)), LevelSetError);
}

TEST_CASE("binary field converges to a distance field") {
  const double dx = 0.02;
  auto ls = signed_distance_init([](const Vec2& p) { return disk(p, {0.5, 0.5}, 0.3) < 0 ? -0.5 : 0.5; },
                                 unit_grid(dx));
  double err = 0;
  for (int j = 0; j < ls.phi.ny(); ++j) {
    for (int i = 0; i < ls.phi.nx(); ++i) {
      err = std::max(err, std::abs(ls.phi(i, j) - disk(ls.phi.spec().node(i, j), {0.5, 0.5}, 0.3)));
    }
  }
  CHECK(err <= 2 * dx);
  auto range = gradient_norm_range(ls.phi, 2 * dx);
  CHECK(range[0] >= 0.8);
  CHECK(range[1] <= 1.2);
}

TEST_CASE("advection of a disk") {
  const double dx = 0.01;
  const Vec2 c{0.5, 0.5};
  auto ls = signed_distance_init([&](const Vec2& p) { return disk(p, c, 0.3); }, unit_grid(dx));
  ScalarGrid zero(ls.phi.spec(), 0.0);
  auto same = advect(ls, zero, 0.3);
  CHECK(same.phi.values() == ls.phi.values());

  for (double v : {1.0, -1.0}) {
    ScalarGrid theta(ls.phi.spec(), v);
    auto moved = advect(ls, theta, 0.1);
    auto r = zero_radius(moved.phi, c);
    CHECK(std::abs(r[0] - (0.3 + 0.1 * v)) <= 2 * dx);
    CHECK(std::abs(r[1] - (0.3 + 0.1 * v)) <= 2 * dx);
  }
  CHECK_THROWS_AS(advect(ls, zero, -1.0), LevelSetError);
}

TEST_CASE("reinitialization") {
  const double dx = 0.02;
  const Vec2 c{0.5, 0.5};
  GridSpec spec = unit_grid(dx);
  ScalarGrid g(spec);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) g(i, j) = 2.0 * disk(spec.node(i, j), c, 0.3);
  }
  auto re = reinitialize(LevelSet{g, 0}, 50);
  auto range = gradient_norm_range(re.phi, 2 * dx);
  CHECK(range[0] >= 0.8);
  CHECK(range[1] <= 1.2);
  auto r = zero_radius(re.phi, c);
  CHECK(std::abs(r[0] - 0.3) <= dx);
  CHECK(std::abs(r[1] - 0.3) <= dx);

  ScalarGrid d(spec);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) d(i, j) = disk(spec.node(i, j), c, 0.3);
  }
  auto fixed = reinitialize(LevelSet{d, 0}, 20);
  double change = 0;
  for (std::size_t k = 0; k < d.values().size(); ++k) {
    change = std::max(change, std::abs(fixed.phi.values()[k] - d.values()[k]));
  }
  CHECK(change <= dx);
}

TEST_CASE("normal and curvature") {
  GridSpec spec = GridSpec::covering({-0.5, -0.5}, {1.5, 1.5}, 0.01);
  auto big = signed_distance_init([](const Vec2& p) { return disk(p, {0.5, 0.5}, 0.5); }, spec);
  auto nc = normal_and_curvature(big, {1.0, 0.5});
  CHECK(std::abs(nc.normal.x - 1.0) <= 0.05);
  CHECK(std::abs(nc.normal.y) <= 0.05);
  CHECK(std::abs(nc.curvature - 2.0) <= 0.2);

  auto small = signed_distance_init([](const Vec2& p) { return disk(p, {0.5, 0.5}, 0.25); }, spec);
  LevelSetGeometry geo(small.phi);
  for (double a = 0; a < 6.28; a += 0.7) {
    auto k = geo.at({0.5 + 0.25 * std::cos(a), 0.5 + 0.25 * std::sin(a)});
    CHECK(std::abs(k.curvature - 4.0) <= 0.4);
  }
  auto half = signed_distance_init([](const Vec2& p) { return p.x - 0.5; }, spec);
  for (double y : {0.1, 0.5, 0.9}) {
    auto k = normal_and_curvature(half, {0.5, y});
    CHECK(std::abs(k.curvature) <= 0.05);
    CHECK(k.normal.x == doctest::Approx(1.0).epsilon(0.01));
  }
  ScalarGrid flat(spec, 1.0);
  CHECK_THROWS_AS(normal_and_curvature(LevelSet{flat, 0}, {0.5, 0.5}), LevelSetError);
}

TEST_CASE("fe <-> grid transfer") {
  auto mesh = std::make_shared<const TriMesh>(build_rect_mesh(1, 1, 8, 8));
  GridSpec spec = unit_grid(1.0 / 16);
  auto c = FeField::interpolate(mesh, 1, [](const Vec2&) { return 2.5; });
  for (double v : fe_to_grid(c, spec).values()) CHECK(v == doctest::Approx(2.5));
  auto lin = FeField::interpolate(mesh, 1, [](const Vec2& p) { return p.x; });
  auto gl = fe_to_grid(lin, spec);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) CHECK(std::abs(gl(i, j) - spec.node(i, j).x) <= 1e-12);
  }
  auto quad = FeField::interpolate(mesh, 2, [](const Vec2& p) { return p.x * p.x; });
  int outside = -1;
  auto gq = fe_to_grid(quad, spec, &outside);
  CHECK(outside == 0);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      CHECK(std::abs(gq(i, j) - std::pow(spec.node(i, j).x, 2)) <= 1e-12);
    }
  }

  ScalarGrid cg(spec, -0.7);
  auto pc = grid_to_fe(LevelSet{cg, 0}, mesh);
  for (int n = 0; n < pc.num_nodes(); ++n) CHECK(std::abs(pc.at(n) + 0.7) <= 1e-10);
  ScalarGrid xg(spec);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) xg(i, j) = spec.node(i, j).x;
  }
  auto px = grid_to_fe(LevelSet{xg, 0}, mesh);
  for (int n = 0; n < px.num_nodes(); ++n) CHECK(std::abs(px.at(n) - px.node_position(n).x) <= 1e-10);

  // Distance to a circle: zero set of the projection close to the circle.
  const double h = 1.0 / 8, dx = 1.0 / 64;
  GridSpec fine = unit_grid(dx);
  auto ls = signed_distance_init([](const Vec2& p) { return disk(p, {0.5, 0.5}, 0.3); }, fine);
  auto phi_h = grid_to_fe(ls, mesh);
  for (int n = 0; n < phi_h.num_nodes(); ++n) {
    const double exact = disk(phi_h.node_position(n), {0.5, 0.5}, 0.3);
    if (std::abs(exact) < 0.1) CHECK(std::abs(phi_h.at(n) - exact) <= dx + h * h);
  }
}
