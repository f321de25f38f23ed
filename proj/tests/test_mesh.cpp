#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "contopt/mesh.hpp"

using namespace contopt;

TEST_CASE("rect mesh counts and area") {
  auto m1 = build_rect_mesh(1, 1, 1, 1);
  CHECK(m1.num_vertices() == 4);
  CHECK(m1.num_triangles() == 2);
  CHECK(m1.total_area() == doctest::Approx(1.0).epsilon(1e-14));

  auto m2 = build_rect_mesh(2, 1, 2, 1);
  CHECK(m2.num_vertices() == 6);
  CHECK(m2.num_triangles() == 4);
  CHECK(m2.total_area() == doctest::Approx(2.0).epsilon(1e-14));

  auto m3 = build_rect_mesh(1, 1, 10, 10);
  CHECK(std::abs(m3.total_area() - 1.0) <= 1e-12);
  CHECK(m3.num_triangles() == 200);
  CHECK(m3.num_vertices() == 121);
  CHECK(m3.num_edges() == 320);
  CHECK(m3.num_p2_nodes() == 441);
  CHECK(m3.num_vertices() - m3.num_edges() + m3.num_triangles() == 1);
  CHECK(is_conforming(m3));
  for (int t = 0; t < m3.num_triangles(); ++t) CHECK(m3.area(t) > 0.0);
}

TEST_CASE("zero counts rejected") {
  CHECK_THROWS_AS(build_rect_mesh(1, 1, 0, 1), MeshError);
  CHECK_THROWS_AS(build_rect_mesh(1, 1, 1, 0), MeshError);
}

TEST_CASE("p2 layout") {
  auto sq = build_rect_mesh(1, 1, 1, 1);
  CHECK(sq.num_p2_nodes() == 9);
  TriMesh single({{0, 0}, {1, 0}, {0, 1}}, {Triangle{0, 1, 2}});
  CHECK(single.num_p2_nodes() == 6);
  const auto nodes = single.p2_nodes(0);
  CHECK(single.p2_node_position(nodes[3]) == Vec2{0.5, 0.0});
  CHECK(single.p2_node_position(nodes[4]) == Vec2{0.5, 0.5});
  CHECK(single.p2_node_position(nodes[5]) == Vec2{0.0, 0.5});
  // Edges sorted by (min, max).
  for (int e = 1; e < sq.num_edges(); ++e) CHECK(sq.edges()[e - 1] < sq.edges()[e]);
}

TEST_CASE("boundary facets are closed loops oriented counter-clockwise") {
  auto m = build_rect_mesh(2, 1, 4, 3);
  CHECK(m.facets().size() == 14);
  std::vector<int> out(m.num_vertices(), 0), in(m.num_vertices(), 0);
  double len = 0;
  for (const auto& f : m.facets()) {
    ++out[f.a];
    ++in[f.b];
    len += m.facet_length(f);
    const Vec2 mid = 0.5 * (m.vertices()[f.a] + m.vertices()[f.b]);
    const Vec2 n = m.facet_outward_normal(f);
    // Outward normal points away from the box centre.
    CHECK(dot(n, mid - Vec2{1.0, 0.5}) > 0.0);
  }
  CHECK(in == out);
  CHECK(len == doctest::Approx(6.0));
}

TEST_CASE("tag_boundary") {
  auto m = build_rect_mesh(1, 1, 16, 16);
  const double diag = m.diameter();
  auto bridge = m.tag_boundary(on_segment({0.4375, 0}, {0.5625, 0}, diag), BoundaryTag::Neumann)
                    .tag_boundary(on_segment({0.0625, 0}, {0.1875, 0}, diag), BoundaryTag::Contact)
                    .tag_boundary(on_segment({0.8125, 0}, {0.9375, 0}, diag), BoundaryTag::Contact);
  CHECK(bridge.boundary_length(BoundaryTag::Neumann) == doctest::Approx(0.125));
  CHECK(bridge.boundary_length(BoundaryTag::Contact) == doctest::Approx(0.25));
  CHECK(bridge.boundary_length(BoundaryTag::Free) == doctest::Approx(4.0 - 0.375));

  auto same = m.tag_boundary([](const Vec2&) { return false; }, BoundaryTag::Dirichlet);
  for (std::size_t i = 0; i < m.facets().size(); ++i) {
    CHECK(same.facets()[i].tag == m.facets()[i].tag);
  }
  // Partition: lengths of all tags add up to the perimeter.
  double total = 0;
  for (auto tag : {BoundaryTag::Free, BoundaryTag::Dirichlet, BoundaryTag::Neumann,
                   BoundaryTag::Contact, BoundaryTag::Roller}) {
    total += bridge.boundary_length(tag);
  }
  CHECK(total == doctest::Approx(4.0));
}

TEST_CASE("cantilever tagging") {
  auto m = build_rect_mesh(2, 1, 20, 10);
  const double diag = m.diameter();
  auto c = m.tag_boundary(on_segment({0, 0}, {0, 1}, diag), BoundaryTag::Dirichlet)
               .tag_boundary(on_segment({2, 0.4}, {2, 0.6}, diag), BoundaryTag::Neumann);
  CHECK(c.boundary_length(BoundaryTag::Dirichlet) == doctest::Approx(1.0));
  CHECK(c.boundary_length(BoundaryTag::Neumann) == doctest::Approx(0.2));
}

TEST_CASE("invalid meshes rejected") {
  CHECK_THROWS_AS(TriMesh({{0, 0}, {1, 0}, {0, 1}}, {Triangle{0, 2, 1}}), MeshError);
  CHECK_THROWS_AS(TriMesh({{0, 0}, {1, 0}, {2, 0}}, {Triangle{0, 1, 2}}), MeshError);
  CHECK_THROWS_AS(TriMesh({{0, 0}, {1, 0}}, {Triangle{0, 1, 5}}), MeshError);
}

TEST_CASE("hanging node detected") {
  // Two triangles on one side, one on the other: vertex 4 hangs on edge 1-2.
  TriMesh m({{0, 0}, {1, 0}, {1, 1}, {2, 0.5}, {1, 0.5}},
            {Triangle{0, 1, 2}, Triangle{1, 3, 4}, Triangle{4, 3, 2}});
  CHECK_FALSE(is_conforming(m));
}

TEST_CASE("submesh extraction") {
  auto m = build_rect_mesh(1, 1, 4, 4).tag_boundary(on_segment({0, 0}, {1, 0}, 2),
                                                     BoundaryTag::Contact);
  std::vector<int> lower;
  for (int t = 0; t < m.num_triangles(); ++t) {
    if (m.centroid(t).y < 0.5) lower.push_back(t);
  }
  std::vector<int> vmap;
  auto sub = extract_submesh(m, lower, &vmap);
  CHECK(sub.total_area() == doctest::Approx(0.5));
  CHECK(sub.boundary_length(BoundaryTag::Contact) == doctest::Approx(1.0));
  double interface_len = 0;
  for (const auto& f : sub.facets()) {
    if (f.interface) interface_len += sub.facet_length(f);
  }
  CHECK(interface_len == doctest::Approx(1.0));
  for (int v = 0; v < sub.num_vertices(); ++v) CHECK(m.vertices()[vmap[v]] == sub.vertices()[v]);
}

TEST_CASE("triangle locator") {
  auto m = build_rect_mesh(2, 1, 8, 4);
  TriangleLocator loc(m);
  for (double x : {0.01, 0.3, 1.7, 1.99}) {
    for (double y : {0.02, 0.5, 0.98}) {
      auto hit = loc.locate({x, y});
      REQUIRE(hit);
      const auto& tri = m.triangles()[hit->tri];
      Vec2 p{};
      for (int k = 0; k < 3; ++k) p += hit->bary[k] * m.vertices()[tri[k]];
      CHECK(p.x == doctest::Approx(x));
      CHECK(p.y == doctest::Approx(y));
    }
  }
  CHECK_FALSE(loc.locate({3.0, 0.5}));
  auto near = loc.locate_or_nearest({2.5, 0.5});
  CHECK_FALSE(near.inside);
  CHECK(m.centroid(near.tri).x > 1.7);
}
