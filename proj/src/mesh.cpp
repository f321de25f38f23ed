#include "contopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

namespace contopt {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

std::string_view to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Free: return "free";
    case BoundaryTag::Dirichlet: return "dirichlet";
    case BoundaryTag::Neumann: return "neumann";
    case BoundaryTag::Contact: return "contact";
    case BoundaryTag::Roller: return "roller";
  }
  return "free";
}

BoundaryTag boundary_tag_from_string(std::string_view name) {
  for (auto tag : {BoundaryTag::Free, BoundaryTag::Dirichlet, BoundaryTag::Neumann,
                   BoundaryTag::Contact, BoundaryTag::Roller}) {
    if (to_string(tag) == name) return tag;
  }
  throw MeshError("unknown boundary tag '" + std::string(name) + "'");
}

TriMesh::TriMesh(std::vector<Vec2> vertices, std::vector<Triangle> triangles,
                 const std::vector<Facet>& tagged)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  build_topology();
  if (!tagged.empty()) {
    std::unordered_map<std::uint64_t, const Facet*> lookup;
    lookup.reserve(tagged.size());
    for (const auto& f : tagged) lookup.emplace(edge_key(f.a, f.b), &f);
    for (auto& f : facets_) {
      auto it = lookup.find(edge_key(f.a, f.b));
      if (it != lookup.end()) {
        f.tag = it->second->tag;
        f.interface = it->second->interface;
      }
    }
  }
}

void TriMesh::build_topology() {
  const int nv = num_vertices();
  if (nv == 0 || triangles_.empty()) throw MeshError("empty mesh");

  lo_ = hi_ = vertices_.front();
  for (const auto& v : vertices_) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw MeshError("non-finite vertex");
    lo_ = {std::min(lo_.x, v.x), std::min(lo_.y, v.y)};
    hi_ = {std::max(hi_.x, v.x), std::max(hi_.y, v.y)};
  }

  struct HalfEdge {
    std::uint64_t key;
    int tri;
    int local;
  };
  std::vector<HalfEdge> half;
  half.reserve(3 * triangles_.size());
  for (int t = 0; t < num_triangles(); ++t) {
    const auto& tri = triangles_[t];
    for (int k = 0; k < 3; ++k) {
      if (tri[k] < 0 || tri[k] >= nv) throw MeshError("triangle references missing vertex");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw MeshError("degenerate triangle " + std::to_string(t));
    }
    if (!(area(t) > 0.0)) {
      throw MeshError("triangle " + std::to_string(t) + " has non-positive signed area");
    }
    for (int k = 0; k < 3; ++k) half.push_back({edge_key(tri[k], tri[(k + 1) % 3]), t, k});
  }
  std::sort(half.begin(), half.end(), [](const HalfEdge& a, const HalfEdge& b) {
    return a.key != b.key ? a.key < b.key : a.tri < b.tri;
  });

  tri_edges_.assign(triangles_.size(), {-1, -1, -1});
  edges_.clear();
  edge_tris_.clear();
  facets_.clear();
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i;
    while (j < half.size() && half[j].key == half[i].key) ++j;
    if (j - i > 2) throw MeshError("edge shared by more than two triangles");
    const int e = static_cast<int>(edges_.size());
    edges_.push_back({static_cast<int>(half[i].key >> 32),
                      static_cast<int>(half[i].key & 0xffffffffu)});
    std::array<int, 2> adj{half[i].tri, -1};
    tri_edges_[half[i].tri][half[i].local] = e;
    if (j - i == 2) {
      adj[1] = half[i + 1].tri;
      tri_edges_[half[i + 1].tri][half[i + 1].local] = e;
      // Both triangles are positively oriented, so a shared edge must be
      // traversed in opposite directions.
      const auto& t0 = triangles_[half[i].tri];
      const auto& t1 = triangles_[half[i + 1].tri];
      if (t0[half[i].local] == t1[half[i + 1].local]) {
        throw MeshError("inconsistent orientation across an edge");
      }
    } else {
      const auto& tri = triangles_[half[i].tri];
      Facet f;
      f.a = tri[half[i].local];
      f.b = tri[(half[i].local + 1) % 3];
      f.tri = half[i].tri;
      facets_.push_back(f);
    }
    edge_tris_.push_back(adj);
    i = j;
  }
}

int TriMesh::find_edge(int a, int b) const {
  Edge key{std::min(a, b), std::max(a, b)};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) return -1;
  return static_cast<int>(it - edges_.begin());
}

std::array<int, 6> TriMesh::p2_nodes(int t) const {
  const auto& tri = triangles_[t];
  const int nv = num_vertices();
  return {tri[0], tri[1], tri[2], nv + tri_edges_[t][0], nv + tri_edges_[t][1],
          nv + tri_edges_[t][2]};
}

Vec2 TriMesh::p2_node_position(int node) const {
  const int nv = num_vertices();
  if (node < nv) return vertices_[node];
  const auto& e = edges_[node - nv];
  return 0.5 * (vertices_[e[0]] + vertices_[e[1]]);
}

double TriMesh::area(int t) const {
  const auto& tri = triangles_[t];
  return signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (int t = 0; t < num_triangles(); ++t) s += area(t);
  return s;
}

double TriMesh::diameter() const { return norm(hi_ - lo_); }

Vec2 TriMesh::centroid(int t) const {
  const auto& tri = triangles_[t];
  return (1.0 / 3.0) * (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]);
}

double TriMesh::facet_length(const Facet& f) const {
  return norm(vertices_[f.b] - vertices_[f.a]);
}

double TriMesh::boundary_length(BoundaryTag tag) const {
  double s = 0.0;
  for (const auto& f : facets_) {
    if (f.tag == tag) s += facet_length(f);
  }
  return s;
}

Vec2 TriMesh::facet_outward_normal(const Facet& f) const {
  // Interior is on the left of a -> b, so the outward normal points right.
  const Vec2 d = vertices_[f.b] - vertices_[f.a];
  const double len = norm(d);
  return {d.y / len, -d.x / len};
}

TriMesh TriMesh::tag_boundary(const FacetPredicate& region, BoundaryTag tag) const {
  TriMesh out = *this;
  for (auto& f : out.facets_) {
    if (region(0.5 * (vertices_[f.a] + vertices_[f.b]))) f.tag = tag;
  }
  return out;
}

TriMesh TriMesh::with_facets(std::vector<Facet> facets) const {
  if (facets.size() != facets_.size()) throw MeshError("facet list size mismatch");
  TriMesh out = *this;
  for (std::size_t i = 0; i < facets.size(); ++i) {
    if (edge_key(facets[i].a, facets[i].b) != edge_key(facets_[i].a, facets_[i].b)) {
      throw MeshError("facet list does not match mesh boundary");
    }
    out.facets_[i].tag = facets[i].tag;
    out.facets_[i].interface = facets[i].interface;
  }
  return out;
}

TriMesh build_rect_mesh(double width, double height, int nx, int ny) {
  return build_rect_mesh({0.0, 0.0}, width, height, nx, ny);
}

TriMesh build_rect_mesh(Vec2 origin, double width, double height, int nx, int ny) {
  if (nx < 1 || ny < 1) throw MeshError("build_rect_mesh: cell counts must be >= 1");
  if (!(width > 0.0) || !(height > 0.0)) throw MeshError("build_rect_mesh: empty box");
  std::vector<Vec2> verts;
  verts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      verts.push_back({origin.x + width * i / nx, origin.y + height * j / ny});
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Triangle> tris;
  tris.reserve(2 * static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1), v11 = id(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        tris.push_back({v00, v10, v11});
        tris.push_back({v00, v11, v01});
      } else {
        tris.push_back({v00, v10, v01});
        tris.push_back({v10, v11, v01});
      }
    }
  }
  return TriMesh(std::move(verts), std::move(tris));
}

FacetPredicate on_segment(Vec2 p, Vec2 q, double scale) {
  const double tol = 1e-9 * scale;
  return [p, q, tol](const Vec2& m) {
    const Vec2 d = q - p;
    const double len2 = dot(d, d);
    double s = len2 > 0.0 ? dot(m - p, d) / len2 : 0.0;
    if (s < -tol / std::sqrt(std::max(len2, 1e-300)) ||
        s > 1.0 + tol / std::sqrt(std::max(len2, 1e-300))) {
      return false;
    }
    s = std::clamp(s, 0.0, 1.0);
    return norm(m - (p + s * d)) <= tol;
  };
}

TriMesh extract_submesh(const TriMesh& parent, const std::vector<int>& tris,
                        std::vector<int>* vertex_map) {
  std::vector<int> new_id(parent.num_vertices(), -1);
  std::vector<Vec2> verts;
  std::vector<int> back;
  std::vector<Triangle> out_tris;
  out_tris.reserve(tris.size());
  for (int t : tris) {
    Triangle nt{};
    for (int k = 0; k < 3; ++k) {
      const int v = parent.triangles()[t][k];
      if (new_id[v] < 0) {
        new_id[v] = static_cast<int>(verts.size());
        verts.push_back(parent.vertices()[v]);
        back.push_back(v);
      }
      nt[k] = new_id[v];
    }
    out_tris.push_back(nt);
  }
  // Parent boundary facets keep their tags; every other new boundary edge is
  // an interface facet.
  std::vector<Facet> tagged;
  for (const auto& f : parent.facets()) {
    if (new_id[f.a] >= 0 && new_id[f.b] >= 0) {
      Facet nf = f;
      nf.a = new_id[f.a];
      nf.b = new_id[f.b];
      tagged.push_back(nf);
    }
  }
  TriMesh sub(std::move(verts), std::move(out_tris));
  std::unordered_map<std::uint64_t, const Facet*> lookup;
  for (const auto& f : tagged) lookup.emplace(edge_key(f.a, f.b), &f);
  std::vector<Facet> facets = sub.facets();
  for (auto& f : facets) {
    auto it = lookup.find(edge_key(f.a, f.b));
    if (it != lookup.end()) {
      f.tag = it->second->tag;
      f.interface = it->second->interface;
    } else {
      f.tag = BoundaryTag::Free;
      f.interface = true;
    }
  }
  if (vertex_map) *vertex_map = std::move(back);
  return sub.with_facets(std::move(facets));
}

bool is_conforming(const TriMesh& mesh, double tol) {
  const auto& v = mesh.vertices();
  for (const auto& e : mesh.edges()) {
    const Vec2 a = v[e[0]], b = v[e[1]];
    const Vec2 d = b - a;
    const double len2 = dot(d, d);
    for (int i = 0; i < mesh.num_vertices(); ++i) {
      if (i == e[0] || i == e[1]) continue;
      const double s = dot(v[i] - a, d) / len2;
      if (s <= tol || s >= 1.0 - tol) continue;
      if (std::abs(cross(d, v[i] - a)) <= tol * len2) return false;
    }
  }
  return true;
}

std::array<double, 3> barycentric(const TriMesh& mesh, int t, const Vec2& p) {
  const auto& tri = mesh.triangles()[t];
  const Vec2 a = mesh.vertices()[tri[0]], b = mesh.vertices()[tri[1]],
             c = mesh.vertices()[tri[2]];
  const double det = cross(b - a, c - a);
  const double l1 = cross(p - a, c - a) / det;
  const double l2 = cross(b - a, p - a) / det;
  return {1.0 - l1 - l2, l1, l2};
}

TriangleLocator::TriangleLocator(const TriMesh& mesh) : mesh_(&mesh) {
  auto [lo, hi] = mesh.bounding_box();
  const double w = std::max(hi.x - lo.x, 1e-300);
  const double h = std::max(hi.y - lo.y, 1e-300);
  const double target = std::sqrt(static_cast<double>(std::max(1, mesh.num_triangles())));
  cell_ = std::max(w, h) / std::max(1.0, target);
  nx_ = std::max(1, static_cast<int>(std::ceil(w / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil(h / cell_)));
  lo_ = lo;
  buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    Vec2 tlo = mesh.vertices()[tri[0]], thi = tlo;
    for (int k = 1; k < 3; ++k) {
      const Vec2 p = mesh.vertices()[tri[k]];
      tlo = {std::min(tlo.x, p.x), std::min(tlo.y, p.y)};
      thi = {std::max(thi.x, p.x), std::max(thi.y, p.y)};
    }
    auto c0 = cell_of(tlo), c1 = cell_of(thi);
    for (int j = c0[1]; j <= c1[1]; ++j) {
      for (int i = c0[0]; i <= c1[0]; ++i) buckets_[j * nx_ + i].push_back(t);
    }
  }
}

std::array<int, 2> TriangleLocator::cell_of(const Vec2& p) const {
  const int i = std::clamp(static_cast<int>(std::floor((p.x - lo_.x) / cell_)), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor((p.y - lo_.y) / cell_)), 0, ny_ - 1);
  return {i, j};
}

std::optional<TriangleLocator::Hit> TriangleLocator::locate(const Vec2& p, double tol) const {
  const auto c = cell_of(p);
  std::optional<Hit> best;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int t : buckets_[c[1] * nx_ + c[0]]) {
    const auto l = barycentric(*mesh_, t, p);
    const double m = std::min({l[0], l[1], l[2]});
    if (m >= -tol && m > best_min) {
      best_min = m;
      best = Hit{t, l, true};
      if (m >= 0.0) break;
    }
  }
  return best;
}

TriangleLocator::Hit TriangleLocator::locate_or_nearest(const Vec2& p) const {
  if (auto hit = locate(p)) return *hit;
  // Nearest triangle by distance to its closest point.
  double best = std::numeric_limits<double>::infinity();
  Hit out;
  const auto& v = mesh_->vertices();
  for (int t = 0; t < mesh_->num_triangles(); ++t) {
    const auto& tri = mesh_->triangles()[t];
    double d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = v[tri[k]], b = v[tri[(k + 1) % 3]];
      const Vec2 ab = b - a;
      const double s = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
      d = std::min(d, norm(p - (a + s * ab)));
    }
    if (d < best) {
      best = d;
      out.tri = t;
    }
  }
  out.bary = barycentric(*mesh_, out.tri, p);
  out.inside = false;
  return out;
}

}  // namespace contopt
